//! Lightweight H.264 Annex-B syntax extraction.
//!
//! Only parameter sets and slice headers are parsed; nothing below the slice
//! header is touched, so macroblock-level statistics (skip ratio, motion
//! vectors, per-MB QP) are left absent on the produced [`FrameRecord`]s and
//! per-picture QP is the mean slice QP.

mod annexb;
mod bits;
mod params;
mod slice;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

pub use annexb::{
    split_annexb, unescape, NalUnit, NAL_AUD, NAL_IDR_SLICE, NAL_PPS, NAL_SEI, NAL_SLICE, NAL_SPS,
};
pub use bits::BitReader;
pub use params::{parse_pps, parse_sps, PpsInfo, SpsInfo};
pub use slice::{parse_slice_header, SliceHeader};

use crate::error::{Error, Result};
use crate::features::{FrameRecord, FrameType};

/// Sidecar describing a parsed stream.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamMetadata {
    pub width_px: u32,
    pub height_px: u32,
    pub profile_idc: u32,
    pub level_idc: u32,
    pub frame_count: usize,
    pub total_bytes: usize,
    /// Bytes taken by start codes and leading zeros.
    pub start_code_bytes: usize,
    pub nal_counts: BTreeMap<u8, usize>,
    /// Number of times a changed SPS after the first slice forced the frame
    /// list to restart.
    pub sps_restarts: usize,
}

/// Parses a complete stream into per-access-unit frame records.
pub fn extract_frames(bytes: &[u8]) -> Result<(Vec<FrameRecord>, SpsInfo)> {
    let (frames, sps, _) = extract_with_metadata(bytes)?;
    Ok((frames, sps))
}

struct AccessUnit {
    size_bytes: u64,
    qp_sum: i64,
    slices: u32,
    has_b: bool,
    has_p: bool,
    all_intra: bool,
    frame_num: u32,
    idr: bool,
    bottom_field: bool,
}

impl AccessUnit {
    fn new(hdr: &SliceHeader) -> Self {
        Self {
            size_bytes: 0,
            qp_sum: 0,
            slices: 0,
            has_b: false,
            has_p: false,
            all_intra: true,
            frame_num: hdr.frame_num,
            idr: hdr.idr,
            bottom_field: hdr.bottom_field,
        }
    }

    fn add_slice(&mut self, hdr: &SliceHeader, qp: i32, bytes: u64) {
        self.size_bytes += bytes;
        self.qp_sum += i64::from(qp);
        self.slices += 1;
        match hdr.frame_type() {
            FrameType::B => {
                self.has_b = true;
                self.all_intra = false;
            }
            FrameType::P => {
                self.has_p = true;
                self.all_intra = false;
            }
            FrameType::I => {}
            FrameType::Unknown => self.all_intra = false,
        }
    }

    fn starts_new(&self, hdr: &SliceHeader) -> bool {
        hdr.first_mb_in_slice == 0
            || hdr.frame_num != self.frame_num
            || hdr.idr != self.idr
            || hdr.bottom_field != self.bottom_field
    }

    fn into_record(self, index: u64) -> FrameRecord {
        let frame_type = if self.has_b {
            FrameType::B
        } else if self.has_p {
            FrameType::P
        } else if self.all_intra {
            FrameType::I
        } else {
            FrameType::Unknown
        };
        FrameRecord::new(
            index,
            frame_type,
            self.size_bytes,
            self.qp_sum as f64 / f64::from(self.slices),
        )
    }
}

/// Like [`extract_frames`] but also returns the metadata sidecar.
pub fn extract_with_metadata(bytes: &[u8]) -> Result<(Vec<FrameRecord>, SpsInfo, StreamMetadata)> {
    let nals = split_annexb(bytes)?;

    let mut sps_map: HashMap<u32, SpsInfo> = HashMap::new();
    let mut pps_map: HashMap<u32, PpsInfo> = HashMap::new();
    let mut nal_counts: BTreeMap<u8, usize> = BTreeMap::new();
    let mut frames: Vec<FrameRecord> = Vec::new();
    let mut current: Option<AccessUnit> = None;
    let mut active_sps: Option<SpsInfo> = None;
    let mut pending_bytes = 0u64;
    let mut sps_restarts = 0;

    for nal in &nals {
        *nal_counts.entry(nal.nal_type).or_default() += 1;
        match nal.nal_type {
            NAL_SPS => {
                let sps = parse_sps(nal)?;
                let changed = sps_map.get(&sps.sps_id).is_some_and(|old| *old != sps);
                if changed && (current.is_some() || !frames.is_empty()) {
                    log::warn!(
                        "SPS {} changed mid-stream at offset {}; restarting frame aggregation",
                        sps.sps_id,
                        nal.offset
                    );
                    frames.clear();
                    current = None;
                    active_sps = None;
                    pending_bytes = 0;
                    sps_restarts += 1;
                }
                sps_map.insert(sps.sps_id, sps);
                pending_bytes += nal.raw_len as u64;
            }
            NAL_PPS => {
                let pps = parse_pps(nal)?;
                if !sps_map.contains_key(&pps.sps_id) {
                    return Err(Error::MalformedStream(format!(
                        "PPS {} references unknown SPS {}",
                        pps.pps_id, pps.sps_id
                    )));
                }
                pps_map.insert(pps.pps_id, pps);
                pending_bytes += nal.raw_len as u64;
            }
            2..=4 => {
                return Err(Error::Unsupported("slice data partitioning".into()));
            }
            _ if nal.is_vcl_slice() => {
                let pps_id = slice::peek_pps_id(nal)?;
                let pps = pps_map.get(&pps_id).ok_or_else(|| {
                    Error::MalformedStream(format!(
                        "slice at offset {} references unknown PPS {pps_id}",
                        nal.offset
                    ))
                })?;
                let sps = sps_map
                    .get(&pps.sps_id)
                    .ok_or_else(|| Error::MalformedStream(format!("PPS {pps_id} has no SPS")))?;
                let hdr = parse_slice_header(nal, sps, pps)?;
                let qp = hdr.qp(pps);
                if !(0..=51).contains(&qp) {
                    return Err(Error::MalformedStream(format!(
                        "slice QP {qp} outside [0, 51] at offset {}",
                        nal.offset
                    )));
                }
                if active_sps.is_none() {
                    active_sps = Some(sps.clone());
                }

                let new_au = current.as_ref().is_none_or(|au| au.starts_new(&hdr));
                if new_au {
                    if let Some(done) = current.take() {
                        let idx = frames.len() as u64;
                        frames.push(done.into_record(idx));
                    }
                    current = Some(AccessUnit::new(&hdr));
                }
                let au = current.as_mut().expect("access unit just ensured");
                au.add_slice(&hdr, qp, nal.raw_len as u64 + pending_bytes);
                pending_bytes = 0;
            }
            _ => pending_bytes += nal.raw_len as u64,
        }
    }

    let Some(mut last) = current else {
        if sps_map.is_empty() || pps_map.is_empty() {
            return Err(Error::Precondition("stream has no SPS/PPS".into()));
        }
        return Err(Error::Precondition("stream contains no slices".into()));
    };
    last.size_bytes += pending_bytes;
    let idx = frames.len() as u64;
    frames.push(last.into_record(idx));
    let sps = active_sps.expect("set with the first slice");

    let metadata = StreamMetadata {
        width_px: sps.width_px,
        height_px: sps.height_px,
        profile_idc: sps.profile_idc,
        level_idc: sps.level_idc,
        frame_count: frames.len(),
        total_bytes: bytes.len(),
        start_code_bytes: nals.iter().map(|n| n.prefix_len).sum(),
        nal_counts,
        sps_restarts,
    };
    Ok((frames, sps, metadata))
}
