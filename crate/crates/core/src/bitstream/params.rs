//! Sequence and picture parameter sets.

use serde::Serialize;

use super::annexb::{NalUnit, NAL_PPS, NAL_SPS};
use super::bits::BitReader;
use crate::error::{Error, Result};

/// Profiles whose SPS carries chroma format, bit depth and scaling lists.
const HIGH_PROFILES: [u32; 12] = [100, 110, 122, 244, 44, 83, 86, 118, 128, 138, 139, 134];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpsInfo {
    pub sps_id: u32,
    pub profile_idc: u32,
    pub level_idc: u32,
    pub chroma_format_idc: u32,
    /// Cropped picture size.
    pub width_px: u32,
    pub height_px: u32,
    pub log2_max_frame_num: u32,
    pub pic_order_cnt_type: u32,
    pub log2_max_poc_lsb: u32,
    pub delta_pic_order_always_zero: bool,
    pub frame_mbs_only: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PpsInfo {
    pub pps_id: u32,
    pub sps_id: u32,
    pub entropy_coding_mode: bool,
    pub bottom_field_pic_order_in_frame_present: bool,
    pub num_ref_idx_l0_default_active: u32,
    pub num_ref_idx_l1_default_active: u32,
    pub weighted_pred: bool,
    pub weighted_bipred_idc: u32,
    pub pic_init_qp_minus26: i32,
    pub redundant_pic_cnt_present: bool,
}

pub fn parse_sps(nal: &NalUnit) -> Result<SpsInfo> {
    if nal.nal_type != NAL_SPS {
        return Err(Error::Precondition(format!(
            "expected SPS (NAL type 7), got type {}",
            nal.nal_type
        )));
    }
    let mut r = BitReader::new(&nal.payload);
    let profile_idc = r.read_bits(8)?;
    r.skip_bits(8)?; // constraint flags + reserved
    let level_idc = r.read_bits(8)?;
    let sps_id = r.read_ue()?;
    if sps_id > 31 {
        return Err(Error::MalformedStream(format!("sps id {sps_id} > 31")));
    }

    let mut chroma_format_idc = 1;
    if HIGH_PROFILES.contains(&profile_idc) || profile_idc == 135 {
        chroma_format_idc = r.read_ue()?;
        if chroma_format_idc == 3 {
            return Err(Error::Unsupported("4:4:4 chroma format".into()));
        }
        if chroma_format_idc > 3 {
            return Err(Error::MalformedStream(format!(
                "chroma_format_idc {chroma_format_idc}"
            )));
        }
        let bit_depth_luma = r.read_ue()? + 8;
        let bit_depth_chroma = r.read_ue()? + 8;
        if bit_depth_luma != 8 || bit_depth_chroma != 8 {
            return Err(Error::Unsupported(format!(
                "bit depth {bit_depth_luma}/{bit_depth_chroma} (only 8-bit is handled)"
            )));
        }
        r.skip_bits(1)?; // qpprime_y_zero_transform_bypass_flag
        if r.read_flag()? {
            for i in 0..8 {
                if r.read_flag()? {
                    skip_scaling_list(&mut r, if i < 6 { 16 } else { 64 })?;
                }
            }
        }
    }

    let log2_max_frame_num = r.read_ue()? + 4;
    if log2_max_frame_num > 16 {
        return Err(Error::MalformedStream("log2_max_frame_num > 16".into()));
    }
    let pic_order_cnt_type = r.read_ue()?;
    let mut log2_max_poc_lsb = 0;
    let mut delta_pic_order_always_zero = false;
    match pic_order_cnt_type {
        0 => {
            log2_max_poc_lsb = r.read_ue()? + 4;
            if log2_max_poc_lsb > 16 {
                return Err(Error::MalformedStream("log2_max_poc_lsb > 16".into()));
            }
        }
        1 => {
            delta_pic_order_always_zero = r.read_flag()?;
            r.read_se()?; // offset_for_non_ref_pic
            r.read_se()?; // offset_for_top_to_bottom_field
            let cycle = r.read_ue()?;
            if cycle > 255 {
                return Err(Error::MalformedStream("poc cycle > 255".into()));
            }
            for _ in 0..cycle {
                r.read_se()?;
            }
        }
        2 => {}
        other => {
            return Err(Error::MalformedStream(format!(
                "pic_order_cnt_type {other}"
            )))
        }
    }
    r.read_ue()?; // max_num_ref_frames
    r.skip_bits(1)?; // gaps_in_frame_num_value_allowed_flag
    let width_mbs = r.read_ue()? + 1;
    let height_map_units = r.read_ue()? + 1;
    let frame_mbs_only = r.read_flag()?;
    if !frame_mbs_only {
        r.skip_bits(1)?; // mb_adaptive_frame_field_flag
    }
    r.skip_bits(1)?; // direct_8x8_inference_flag
    let (mut crop_left, mut crop_right, mut crop_top, mut crop_bottom) = (0, 0, 0, 0);
    if r.read_flag()? {
        crop_left = r.read_ue()?;
        crop_right = r.read_ue()?;
        crop_top = r.read_ue()?;
        crop_bottom = r.read_ue()?;
    }
    // VUI is not needed.

    let frame_height_factor = if frame_mbs_only { 1 } else { 2 };
    let (sub_width, sub_height) = match chroma_format_idc {
        1 => (2, 2),
        2 => (2, 1),
        _ => (1, 1),
    };
    let (crop_unit_x, crop_unit_y) = if chroma_format_idc == 0 {
        (1, frame_height_factor)
    } else {
        (sub_width, sub_height * frame_height_factor)
    };
    let coded_width = width_mbs * 16;
    let coded_height = height_map_units * 16 * frame_height_factor;
    let crop_x = crop_unit_x * (crop_left + crop_right);
    let crop_y = crop_unit_y * (crop_top + crop_bottom);
    if crop_x >= coded_width || crop_y >= coded_height {
        return Err(Error::MalformedStream(format!(
            "cropping {crop_x}x{crop_y} exceeds coded size {coded_width}x{coded_height}"
        )));
    }

    Ok(SpsInfo {
        sps_id,
        profile_idc,
        level_idc,
        chroma_format_idc,
        width_px: coded_width - crop_x,
        height_px: coded_height - crop_y,
        log2_max_frame_num,
        pic_order_cnt_type,
        log2_max_poc_lsb,
        delta_pic_order_always_zero,
        frame_mbs_only,
    })
}

fn skip_scaling_list(r: &mut BitReader<'_>, size: usize) -> Result<()> {
    let mut last = 8i32;
    let mut next = 8i32;
    for _ in 0..size {
        if next != 0 {
            let delta = r.read_se()?;
            next = (last + delta + 256).rem_euclid(256);
        }
        if next != 0 {
            last = next;
        }
    }
    Ok(())
}

pub fn parse_pps(nal: &NalUnit) -> Result<PpsInfo> {
    if nal.nal_type != NAL_PPS {
        return Err(Error::Precondition(format!(
            "expected PPS (NAL type 8), got type {}",
            nal.nal_type
        )));
    }
    let mut r = BitReader::new(&nal.payload);
    let pps_id = r.read_ue()?;
    if pps_id > 255 {
        return Err(Error::MalformedStream(format!("pps id {pps_id} > 255")));
    }
    let sps_id = r.read_ue()?;
    let entropy_coding_mode = r.read_flag()?;
    let bottom_field_pic_order_in_frame_present = r.read_flag()?;
    let num_slice_groups = r.read_ue()? + 1;
    if num_slice_groups > 1 {
        return Err(Error::Unsupported("flexible macroblock ordering".into()));
    }
    let num_ref_idx_l0_default_active = r.read_ue()? + 1;
    let num_ref_idx_l1_default_active = r.read_ue()? + 1;
    let weighted_pred = r.read_flag()?;
    let weighted_bipred_idc = r.read_bits(2)?;
    let pic_init_qp_minus26 = r.read_se()?;
    r.read_se()?; // pic_init_qs_minus26
    r.read_se()?; // chroma_qp_index_offset
    r.skip_bits(2)?; // deblocking_filter_control_present, constrained_intra_pred
    let redundant_pic_cnt_present = r.read_flag()?;
    Ok(PpsInfo {
        pps_id,
        sps_id,
        entropy_coding_mode,
        bottom_field_pic_order_in_frame_present,
        num_ref_idx_l0_default_active,
        num_ref_idx_l1_default_active,
        weighted_pred,
        weighted_bipred_idc,
        pic_init_qp_minus26,
        redundant_pic_cnt_present,
    })
}
