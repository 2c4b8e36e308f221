//! Shared data model and the per-frame → per-sequence aggregation step.
//!
//! Every quality model in [`crate::models`] consumes a [`StreamFeatures`]
//! value. It is produced either by [`aggregate_features`] from a list of
//! [`FrameRecord`]s (parsed from a bitstream or read from a frame-stats CSV)
//! or directly from a dataset row.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Highest H.264 quantisation parameter for 8-bit video.
pub const MAX_QP: f64 = 51.0;

/// Default QP jump that flags a picture as an intra flicker.
pub const IFLICKER_THRESHOLD: f64 = 5.0;

/// Default relative I-frame size deviation that opens a new scene.
pub const SCENE_THRESHOLD: f64 = 0.2;

/// Weight carried by the scene with the smallest mean I-frame size.
pub const LOWEST_SCENE_WEIGHT: f64 = 16.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameType {
    I,
    P,
    B,
    #[serde(rename = "unknown")]
    Unknown,
}

/// Per-picture bitstream statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u64,
    pub frame_type: FrameType,
    pub size_bytes: u64,
    /// Averaged macroblock (or slice) QP of the picture.
    pub avg_qp: f64,
    pub skip_ratio: Option<f64>,
    /// Mean of |mv_x| + |mv_y| over the picture's macroblocks.
    pub avg_mv: Option<f64>,
}

impl FrameRecord {
    pub fn new(index: u64, frame_type: FrameType, size_bytes: u64, avg_qp: f64) -> Self {
        Self {
            index,
            frame_type,
            size_bytes,
            avg_qp,
            skip_ratio: None,
            avg_mv: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.avg_qp.is_finite() || !(0.0..=MAX_QP).contains(&self.avg_qp) {
            return Err(Error::InvalidInput(format!(
                "frame {}: avg_qp {} outside [0, 51]",
                self.index, self.avg_qp
            )));
        }
        if let Some(s) = self.skip_ratio {
            if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidInput(format!(
                    "frame {}: skip_ratio {s} outside [0, 1]",
                    self.index
                )));
            }
        }
        if let Some(mv) = self.avg_mv {
            if !mv.is_finite() || mv < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "frame {}: avg_mv {mv} must be finite and non-negative",
                    self.index
                )));
            }
        }
        Ok(())
    }
}

/// One detected (or externally supplied) scene of a sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneStats {
    pub gop_count: u32,
    pub avg_iframe_bytes: f64,
    pub weight: f64,
}

/// Which optional inputs were not measured and were filled with defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputedFields {
    #[serde(default)]
    pub skip_ratio_imputed: bool,
    #[serde(default)]
    pub avg_mv_imputed: bool,
    #[serde(default)]
    pub sad_imputed: bool,
    #[serde(default)]
    pub avg_bytes_per_iframe_imputed: bool,
    #[serde(default)]
    pub gop_distance_imputed: bool,
}

/// Sequence-level features consumed by every model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamFeatures {
    pub bitrate_kbps: f64,
    pub framerate_fps: f64,
    pub width_px: u32,
    pub height_px: u32,
    pub avg_bytes_per_iframe: f64,
    pub avg_qp: f64,
    pub max_qp: f64,
    pub min_qp: f64,
    pub iflicker_count: u32,
    pub skip_ratio: f64,
    pub avg_mv: f64,
    pub key_frame_rate: f64,
    pub gop_distance: f64,
    pub sad_per_pixel: Option<f64>,
    pub content_class: Option<u8>,
    pub scenes: Vec<SceneStats>,
    pub quant: f64,
    #[serde(flatten)]
    pub imputed: ImputedFields,
}

impl StreamFeatures {
    pub fn num_pixels(&self) -> f64 {
        f64::from(self.width_px) * f64::from(self.height_px)
    }

    /// Checks the cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("bitrate_kbps", self.bitrate_kbps),
            ("framerate_fps", self.framerate_fps),
            ("avg_bytes_per_iframe", self.avg_bytes_per_iframe),
            ("avg_qp", self.avg_qp),
            ("max_qp", self.max_qp),
            ("min_qp", self.min_qp),
            ("skip_ratio", self.skip_ratio),
            ("avg_mv", self.avg_mv),
            ("key_frame_rate", self.key_frame_rate),
            ("gop_distance", self.gop_distance),
            ("quant", self.quant),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} is not finite")));
            }
        }
        if self.bitrate_kbps <= 0.0 || self.framerate_fps <= 0.0 {
            return Err(Error::InvalidInput(
                "bitrate and framerate must be positive".into(),
            ));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidInput("resolution must be positive".into()));
        }
        if !(self.min_qp <= self.avg_qp && self.avg_qp <= self.max_qp) {
            return Err(Error::InvalidInput(format!(
                "expected min_qp <= avg_qp <= max_qp, got {} / {} / {}",
                self.min_qp, self.avg_qp, self.max_qp
            )));
        }
        for (name, v) in [
            ("avg_qp", self.avg_qp),
            ("max_qp", self.max_qp),
            ("min_qp", self.min_qp),
        ] {
            if !(0.0..=MAX_QP).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} {v} outside [0, 51]")));
            }
        }
        if !(0.0..=1.0).contains(&self.skip_ratio) {
            return Err(Error::InvalidInput("skip_ratio outside [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.quant) {
            return Err(Error::InvalidInput("quant outside [0, 1]".into()));
        }
        if self.avg_mv < 0.0 {
            return Err(Error::InvalidInput("avg_mv must be non-negative".into()));
        }
        if self.gop_distance <= 0.0 {
            return Err(Error::InvalidInput("gop_distance must be positive".into()));
        }
        let kfr = self.framerate_fps / self.gop_distance;
        if (kfr - self.key_frame_rate).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "key_frame_rate {} does not equal framerate / gop_distance = {kfr}",
                self.key_frame_rate
            )));
        }
        if let Some(sad) = self.sad_per_pixel {
            if !sad.is_finite() || sad < 0.0 {
                return Err(Error::InvalidInput("sad_per_pixel must be >= 0".into()));
            }
        }
        if let Some(c) = self.content_class {
            if c > 4 {
                return Err(Error::InvalidInput(format!(
                    "content_class {c} outside 0..=4"
                )));
            }
        }
        if !self.scenes.is_empty() {
            let heavy = self
                .scenes
                .iter()
                .filter(|s| s.weight == LOWEST_SCENE_WEIGHT)
                .count();
            if heavy != 1 {
                return Err(Error::InvalidInput(format!(
                    "exactly one scene must carry weight 16, found {heavy}"
                )));
            }
        }
        Ok(())
    }
}

/// Terminal / display context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceType {
    #[default]
    Tv,
    Handheld,
}

impl std::str::FromStr for DeviceType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tv" => Ok(DeviceType::Tv),
            "handheld" => Ok(DeviceType::Handheld),
            other => Err(Error::InvalidInput(format!(
                "unknown device type `{other}` (expected tv or handheld)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplayParams {
    pub screen_size_inches: f64,
    pub display_width_px: u32,
    pub display_height_px: u32,
    pub device_type: DeviceType,
}

impl DisplayParams {
    pub fn num_pixels(&self) -> f64 {
        f64::from(self.display_width_px) * f64::from(self.display_height_px)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.screen_size_inches.is_finite() && self.screen_size_inches > 0.0) {
            return Err(Error::InvalidInput("screen size must be positive".into()));
        }
        if self.display_width_px == 0 || self.display_height_px == 0 {
            return Err(Error::InvalidInput(
                "display resolution must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Subjective label of one test sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectiveRecord {
    pub sequence_id: String,
    pub source_id: String,
    pub mos: f64,
    pub ci95_halfwidth: Option<f64>,
}

/// Counts interior pictures whose averaged QP differs from *both* neighbours
/// by strictly more than `threshold`.
pub fn detect_iflicker(per_picture_avg_qp: &[f64], threshold: f64) -> u32 {
    per_picture_avg_qp
        .windows(3)
        .filter(|w| (w[1] - w[0]).abs() > threshold && (w[1] - w[2]).abs() > threshold)
        .count() as u32
}

/// Groups GOPs into scenes.
///
/// A GOP starts at every I frame; frames preceding the first I frame belong
/// to no GOP. `boundaries` are GOP ordinals at which a new scene starts and
/// must be strictly increasing within `1..gop_count`. Without boundaries a
/// GOP opens a new scene when its I-frame size deviates from the running mean
/// of the current scene by more than `relative_threshold`.
pub fn segment_scenes(
    frames: &[FrameRecord],
    boundaries: Option<&[usize]>,
    relative_threshold: f64,
) -> Result<Vec<SceneStats>> {
    let iframe_sizes: Vec<f64> = frames
        .iter()
        .filter(|f| f.frame_type == FrameType::I)
        .map(|f| f.size_bytes as f64)
        .collect();
    if iframe_sizes.is_empty() {
        return Err(Error::Precondition(
            "scene segmentation needs at least one I frame".into(),
        ));
    }

    let groups: Vec<&[f64]> = match boundaries {
        Some(bounds) => split_at_boundaries(&iframe_sizes, bounds)?,
        None => split_by_running_mean(&iframe_sizes, relative_threshold),
    };

    let mut scenes: Vec<SceneStats> = groups
        .iter()
        .map(|g| SceneStats {
            gop_count: g.len() as u32,
            avg_iframe_bytes: g.iter().sum::<f64>() / g.len() as f64,
            weight: 1.0,
        })
        .collect();

    let lowest = scenes.iter().enumerate().fold(0, |best, (i, s)| {
        if s.avg_iframe_bytes < scenes[best].avg_iframe_bytes {
            i
        } else {
            best
        }
    });
    scenes[lowest].weight = LOWEST_SCENE_WEIGHT;
    Ok(scenes)
}

fn split_at_boundaries<'a>(sizes: &'a [f64], bounds: &[usize]) -> Result<Vec<&'a [f64]>> {
    let mut groups = Vec::with_capacity(bounds.len() + 1);
    let mut start = 0;
    for &b in bounds {
        if b <= start || b >= sizes.len() {
            return Err(Error::InvalidInput(format!(
                "scene boundary {b} out of range or not increasing (gop count {})",
                sizes.len()
            )));
        }
        groups.push(&sizes[start..b]);
        start = b;
    }
    groups.push(&sizes[start..]);
    Ok(groups)
}

fn split_by_running_mean(sizes: &[f64], threshold: f64) -> Vec<&[f64]> {
    let mut groups = Vec::new();
    let mut start = 0;
    let mut sum = 0.0;
    for (i, &s) in sizes.iter().enumerate() {
        let count = (i - start) as f64;
        if count > 0.0 {
            let mean = sum / count;
            if mean > 0.0 && ((s - mean) / mean).abs() > threshold {
                groups.push(&sizes[start..i]);
                start = i;
                sum = 0.0;
            }
        }
        sum += s;
    }
    groups.push(&sizes[start..]);
    groups
}

/// Builds sequence-level features from per-frame records.
///
/// `quant` is a proxy for the P.1203 Annex D value: the mean per-picture QP
/// over non-I frames divided by 51, or the overall mean when every frame is
/// intra. Optional per-frame fields that are absent everywhere default to 0
/// and are flagged in [`ImputedFields`].
pub fn aggregate_features(
    frames: &[FrameRecord],
    framerate_fps: f64,
    bitrate_kbps: f64,
    width_px: u32,
    height_px: u32,
) -> Result<StreamFeatures> {
    if frames.is_empty() {
        return Err(Error::Precondition("empty frame list".into()));
    }
    if !(framerate_fps.is_finite() && framerate_fps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "framerate must be finite and positive, got {framerate_fps}"
        )));
    }
    if !(bitrate_kbps.is_finite() && bitrate_kbps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "bitrate must be finite and positive, got {bitrate_kbps}"
        )));
    }
    if width_px == 0 || height_px == 0 {
        return Err(Error::InvalidInput("resolution must be positive".into()));
    }
    for f in frames {
        f.validate()?;
    }
    if let Some(w) = frames.windows(2).find(|w| w[1].index <= w[0].index) {
        return Err(Error::InvalidInput(format!(
            "frame indices not strictly increasing at {} -> {}",
            w[0].index, w[1].index
        )));
    }

    let iframe_positions: Vec<usize> = frames
        .iter()
        .enumerate()
        .filter(|(_, f)| f.frame_type == FrameType::I)
        .map(|(i, _)| i)
        .collect();
    if iframe_positions.is_empty() {
        return Err(Error::Precondition(
            "no I frame: average I-frame size is undefined".into(),
        ));
    }

    let avg_bytes_per_iframe = iframe_positions
        .iter()
        .map(|&i| frames[i].size_bytes as f64)
        .sum::<f64>()
        / iframe_positions.len() as f64;

    let qps: Vec<f64> = frames.iter().map(|f| f.avg_qp).collect();
    let avg_qp = mean(&qps);
    let max_qp = qps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_qp = qps.iter().copied().fold(f64::INFINITY, f64::min);

    let gop_distance = match (iframe_positions.first(), iframe_positions.last()) {
        (Some(&first), Some(&last)) if iframe_positions.len() > 1 => {
            (last - first) as f64 / (iframe_positions.len() - 1) as f64
        }
        _ => frames.len() as f64,
    };

    let non_intra: Vec<f64> = frames
        .iter()
        .filter(|f| f.frame_type != FrameType::I)
        .map(|f| f.avg_qp)
        .collect();
    let quant = if non_intra.is_empty() {
        avg_qp / MAX_QP
    } else {
        mean(&non_intra) / MAX_QP
    };

    let skips: Vec<f64> = frames.iter().filter_map(|f| f.skip_ratio).collect();
    let mvs: Vec<f64> = frames.iter().filter_map(|f| f.avg_mv).collect();

    let features = StreamFeatures {
        bitrate_kbps,
        framerate_fps,
        width_px,
        height_px,
        avg_bytes_per_iframe,
        avg_qp,
        max_qp,
        min_qp,
        iflicker_count: detect_iflicker(&qps, IFLICKER_THRESHOLD),
        skip_ratio: if skips.is_empty() { 0.0 } else { mean(&skips) },
        avg_mv: if mvs.is_empty() { 0.0 } else { mean(&mvs) },
        key_frame_rate: framerate_fps / gop_distance,
        gop_distance,
        sad_per_pixel: None,
        content_class: None,
        scenes: segment_scenes(frames, None, SCENE_THRESHOLD)?,
        quant: quant.clamp(0.0, 1.0),
        imputed: ImputedFields {
            skip_ratio_imputed: skips.is_empty(),
            avg_mv_imputed: mvs.is_empty(),
            sad_imputed: true,
            avg_bytes_per_iframe_imputed: false,
            gop_distance_imputed: false,
        },
    };
    features.validate()?;
    Ok(features)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Column order of the frame-stats CSV.
pub const FRAME_CSV_HEADER: [&str; 6] = [
    "index",
    "frame_type",
    "size_bytes",
    "avg_qp",
    "skip_ratio",
    "avg_mv",
];

/// Reads a frame-stats CSV. The header row is mandatory.
pub fn read_frame_csv<R: Read>(reader: R) -> Result<Vec<FrameRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    for expected in FRAME_CSV_HEADER {
        if !headers.iter().any(|h| h == expected) {
            return Err(Error::Schema {
                row: 1,
                column: expected.to_string(),
                detail: "missing column in header".into(),
            });
        }
    }
    let mut frames = Vec::new();
    for (i, rec) in rdr.deserialize::<FrameRecord>().enumerate() {
        let row = i + 2;
        let frame = rec.map_err(|e| csv_schema_error(row, &e))?;
        frame.validate().map_err(|e| Error::Schema {
            row,
            column: String::new(),
            detail: e.to_string(),
        })?;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn write_frame_csv<W: Write>(writer: W, frames: &[FrameRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for f in frames {
        wtr.serialize(f)?;
    }
    wtr.flush()?;
    Ok(())
}

pub(crate) fn csv_schema_error(row: usize, e: &csv::Error) -> Error {
    let column = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err
            .field()
            .map(|f| format!("#{}", f + 1))
            .unwrap_or_default(),
        _ => String::new(),
    };
    Error::Schema {
        row,
        column,
        detail: e.to_string(),
    }
}
