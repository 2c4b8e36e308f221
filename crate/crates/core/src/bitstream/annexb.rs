use serde::Serialize;

use crate::error::{Error, Result};

pub const NAL_SLICE: u8 = 1;
pub const NAL_IDR_SLICE: u8 = 5;
pub const NAL_SEI: u8 = 6;
pub const NAL_SPS: u8 = 7;
pub const NAL_PPS: u8 = 8;
pub const NAL_AUD: u8 = 9;

/// A NAL unit located inside an Annex-B byte stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NalUnit {
    pub nal_type: u8,
    pub nal_ref_idc: u8,
    /// Byte position of the NAL header in the stream.
    pub offset: usize,
    /// Length of the NAL as it appears in the stream (escaped, header included).
    pub raw_len: usize,
    /// Zero bytes plus start code preceding this NAL.
    pub prefix_len: usize,
    /// RBSP after the header byte with emulation-prevention bytes removed.
    #[serde(skip)]
    pub payload: Vec<u8>,
}

impl NalUnit {
    pub fn is_vcl_slice(&self) -> bool {
        matches!(self.nal_type, NAL_SLICE | NAL_IDR_SLICE)
    }
}

/// Splits an Annex-B byte stream into NAL units.
///
/// Any run of zero bytes followed by `00 00 01` is treated as the start
/// prefix of the next NAL, so `prefix_len + raw_len` over all units adds up
/// to the input length for streams that begin with a start code.
pub fn split_annexb(bytes: &[u8]) -> Result<Vec<NalUnit>> {
    let starts = find_start_codes(bytes);
    if starts.is_empty() {
        return Err(Error::MalformedStream("no start code found".into()));
    }
    if starts[0].0 != 0 {
        return Err(Error::MalformedStream(format!(
            "{} bytes of garbage before the first start code",
            starts[0].0
        )));
    }

    let mut nals = Vec::with_capacity(starts.len());
    for (i, &(prefix_start, nal_start)) in starts.iter().enumerate() {
        let nal_end = starts.get(i + 1).map_or(bytes.len(), |&(next, _)| next);
        if nal_start >= nal_end {
            return Err(Error::MalformedStream(format!(
                "empty NAL unit at offset {nal_start}"
            )));
        }
        let header = bytes[nal_start];
        if header & 0x80 != 0 {
            return Err(Error::MalformedStream(format!(
                "forbidden_zero_bit set at offset {nal_start}"
            )));
        }
        nals.push(NalUnit {
            nal_type: header & 0x1f,
            nal_ref_idc: (header >> 5) & 0x3,
            offset: nal_start,
            raw_len: nal_end - nal_start,
            prefix_len: nal_start - prefix_start,
            payload: unescape(&bytes[nal_start + 1..nal_end]),
        });
    }
    Ok(nals)
}

/// Returns (prefix start, NAL start) for every start code, where the prefix
/// absorbs any zero bytes before `00 00 01`.
fn find_start_codes(bytes: &[u8]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i + 2 < bytes.len() {
        if bytes[i] == 0 && bytes[i + 1] == 0 && bytes[i + 2] == 1 {
            let mut prefix = i;
            let floor = out.last().map_or(0, |&(_, nal_start)| nal_start);
            while prefix > floor && bytes[prefix - 1] == 0 {
                prefix -= 1;
            }
            out.push((prefix, i + 3));
            i += 3;
        } else {
            i += 1;
        }
    }
    out
}

/// Removes emulation-prevention bytes: `00 00 03 xx` → `00 00 xx`.
pub fn unescape(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len());
    let mut zeros = 0;
    for &b in data {
        if zeros >= 2 && b == 0x03 {
            zeros = 0;
            continue;
        }
        zeros = if b == 0 { zeros + 1 } else { 0 };
        out.push(b);
    }
    out
}
