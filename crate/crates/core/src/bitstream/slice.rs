use super::annexb::{NalUnit, NAL_IDR_SLICE};
use super::bits::BitReader;
use super::params::{PpsInfo, SpsInfo};
use crate::error::{Error, Result};
use crate::features::FrameType;

/// The slice-header fields needed for frame aggregation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceHeader {
    pub first_mb_in_slice: u32,
    pub slice_type: u32,
    pub pps_id: u32,
    pub frame_num: u32,
    pub field_pic: bool,
    pub bottom_field: bool,
    pub idr: bool,
    pub slice_qp_delta: i32,
}

impl SliceHeader {
    pub fn frame_type(&self) -> FrameType {
        match self.slice_type % 5 {
            0 | 3 => FrameType::P,
            1 => FrameType::B,
            2 | 4 => FrameType::I,
            _ => FrameType::Unknown,
        }
    }

    fn is_b(&self) -> bool {
        self.slice_type % 5 == 1
    }

    fn is_intra(&self) -> bool {
        matches!(self.slice_type % 5, 2 | 4)
    }

    /// SliceQPY = 26 + pic_init_qp_minus26 + slice_qp_delta.
    pub fn qp(&self, pps: &PpsInfo) -> i32 {
        26 + pps.pic_init_qp_minus26 + self.slice_qp_delta
    }
}

/// Reads just `pps_id` so the caller can look up the parameter sets.
pub fn peek_pps_id(nal: &NalUnit) -> Result<u32> {
    let mut r = BitReader::new(&nal.payload);
    r.read_ue()?;
    r.read_ue()?;
    r.read_ue()
}

pub fn parse_slice_header(nal: &NalUnit, sps: &SpsInfo, pps: &PpsInfo) -> Result<SliceHeader> {
    let mut r = BitReader::new(&nal.payload);
    let first_mb_in_slice = r.read_ue()?;
    let slice_type = r.read_ue()?;
    if slice_type > 9 {
        return Err(Error::MalformedStream(format!("slice_type {slice_type}")));
    }
    let pps_id = r.read_ue()?;
    let frame_num = r.read_bits(sps.log2_max_frame_num)?;
    let mut field_pic = false;
    let mut bottom_field = false;
    if !sps.frame_mbs_only {
        field_pic = r.read_flag()?;
        if field_pic {
            bottom_field = r.read_flag()?;
        }
    }
    let idr = nal.nal_type == NAL_IDR_SLICE;
    let mut hdr = SliceHeader {
        first_mb_in_slice,
        slice_type,
        pps_id,
        frame_num,
        field_pic,
        bottom_field,
        idr,
        slice_qp_delta: 0,
    };

    if idr {
        r.read_ue()?; // idr_pic_id
    }
    if sps.pic_order_cnt_type == 0 {
        r.skip_bits(sps.log2_max_poc_lsb as usize)?;
        if pps.bottom_field_pic_order_in_frame_present && !field_pic {
            r.read_se()?;
        }
    }
    if sps.pic_order_cnt_type == 1 && !sps.delta_pic_order_always_zero {
        r.read_se()?;
        if pps.bottom_field_pic_order_in_frame_present && !field_pic {
            r.read_se()?;
        }
    }
    if pps.redundant_pic_cnt_present {
        r.read_ue()?;
    }
    if hdr.is_b() {
        r.skip_bits(1)?; // direct_spatial_mv_pred_flag
    }

    let mut num_ref_l0 = pps.num_ref_idx_l0_default_active;
    let mut num_ref_l1 = pps.num_ref_idx_l1_default_active;
    if !hdr.is_intra() {
        if r.read_flag()? {
            num_ref_l0 = r.read_ue()? + 1;
            if hdr.is_b() {
                num_ref_l1 = r.read_ue()? + 1;
            }
        }
        if num_ref_l0 > 32 || num_ref_l1 > 32 {
            return Err(Error::MalformedStream("num_ref_idx_active > 32".into()));
        }
        skip_ref_pic_list_modification(&mut r)?;
        if hdr.is_b() {
            skip_ref_pic_list_modification(&mut r)?;
        }
    }

    let p_like = matches!(slice_type % 5, 0 | 3);
    if (pps.weighted_pred && p_like) || (pps.weighted_bipred_idc == 1 && hdr.is_b()) {
        skip_pred_weight_table(&mut r, sps, num_ref_l0, num_ref_l1, hdr.is_b())?;
    }
    if nal.nal_ref_idc != 0 {
        skip_dec_ref_pic_marking(&mut r, idr)?;
    }
    if pps.entropy_coding_mode && !hdr.is_intra() {
        r.read_ue()?; // cabac_init_idc
    }
    hdr.slice_qp_delta = r.read_se()?;
    Ok(hdr)
}

fn skip_ref_pic_list_modification(r: &mut BitReader<'_>) -> Result<()> {
    if !r.read_flag()? {
        return Ok(());
    }
    for _ in 0..=64 {
        match r.read_ue()? {
            3 => return Ok(()),
            0..=2 => {
                r.read_ue()?;
            }
            idc => {
                return Err(Error::MalformedStream(format!(
                    "modification_of_pic_nums_idc {idc}"
                )))
            }
        }
    }
    Err(Error::MalformedStream(
        "unterminated ref_pic_list_modification".into(),
    ))
}

fn skip_pred_weight_table(
    r: &mut BitReader<'_>,
    sps: &SpsInfo,
    num_ref_l0: u32,
    num_ref_l1: u32,
    bipred: bool,
) -> Result<()> {
    r.read_ue()?; // luma_log2_weight_denom
    let chroma = sps.chroma_format_idc != 0;
    if chroma {
        r.read_ue()?;
    }
    let lists = if bipred {
        vec![num_ref_l0, num_ref_l1]
    } else {
        vec![num_ref_l0]
    };
    for n in lists {
        for _ in 0..n {
            if r.read_flag()? {
                r.read_se()?;
                r.read_se()?;
            }
            if chroma && r.read_flag()? {
                for _ in 0..4 {
                    r.read_se()?;
                }
            }
        }
    }
    Ok(())
}

fn skip_dec_ref_pic_marking(r: &mut BitReader<'_>, idr: bool) -> Result<()> {
    if idr {
        r.skip_bits(2)?; // no_output_of_prior_pics, long_term_reference_flag
        return Ok(());
    }
    if !r.read_flag()? {
        return Ok(());
    }
    for _ in 0..=66 {
        let op = r.read_ue()?;
        match op {
            0 => return Ok(()),
            1 | 2 | 4 | 6 => {
                r.read_ue()?;
            }
            3 => {
                r.read_ue()?;
                r.read_ue()?;
            }
            5 => {}
            other => {
                return Err(Error::MalformedStream(format!(
                    "memory_management_control_operation {other}"
                )))
            }
        }
    }
    Err(Error::MalformedStream(
        "unterminated dec_ref_pic_marking".into(),
    ))
}
