//! Labelled sequences: features, display context and subjective score.
//!
//! The CSV form carries one sequence per row:
//!
//! ```text
//! sequence_id,source_id,mos,ci95,bitrate_kbps,framerate_fps,width,height,
//! avg_bytes_per_iframe,avg_qp,max_qp,min_qp,iflicker,skip_ratio,avg_mv,kfr,
//! sad,content_class,screen_inches,display_width,display_height,device_type
//! ```
//!
//! Optional columns (blank when unknown): `ci95`, `avg_bytes_per_iframe`,
//! `skip_ratio`, `avg_mv`, `kfr`, `sad`, `content_class`, `device_type`.
//! Fields the CSV cannot carry are derived: `gop_distance = fr / kfr`
//! (one I frame per second when `kfr` is blank), `quant = avg_qp / 51`, and
//! a single scene built from the average I-frame size.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    csv_schema_error, DeviceType, DisplayParams, ImputedFields, SceneStats, StreamFeatures,
    SubjectiveRecord, LOWEST_SCENE_WEIGHT, MAX_QP,
};

pub const DATASET_CSV_HEADER: [&str; 22] = [
    "sequence_id",
    "source_id",
    "mos",
    "ci95",
    "bitrate_kbps",
    "framerate_fps",
    "width",
    "height",
    "avg_bytes_per_iframe",
    "avg_qp",
    "max_qp",
    "min_qp",
    "iflicker",
    "skip_ratio",
    "avg_mv",
    "kfr",
    "sad",
    "content_class",
    "screen_inches",
    "display_width",
    "display_height",
    "device_type",
];

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRow {
    pub features: StreamFeatures,
    pub display: DisplayParams,
    pub subjective: SubjectiveRecord,
}

impl DatasetRow {
    pub fn sequence_id(&self) -> &str {
        &self.subjective.sequence_id
    }

    pub fn mos(&self) -> f64 {
        self.subjective.mos
    }
}

/// Rows with unique sequence ids and MOS on the 1–5 scale.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    rows: Vec<DatasetRow>,
}

impl Dataset {
    pub fn new(rows: Vec<DatasetRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, row) in rows.iter().enumerate() {
            if !seen.insert(row.sequence_id().to_string()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate sequence id `{}` at row {}",
                    row.sequence_id(),
                    i + 1
                )));
            }
            let mos = row.mos();
            if !(1.0..=5.0).contains(&mos) {
                return Err(Error::InvalidInput(format!(
                    "MOS {mos} of `{}` outside [1, 5]",
                    row.sequence_id()
                )));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[DatasetRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows whose positions are listed, in the given order.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        Dataset {
            rows: positions.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn mos(&self) -> Vec<f64> {
        self.rows.iter().map(DatasetRow::mos).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    sequence_id: String,
    source_id: String,
    mos: f64,
    ci95: Option<f64>,
    bitrate_kbps: f64,
    framerate_fps: f64,
    width: u32,
    height: u32,
    avg_bytes_per_iframe: Option<f64>,
    avg_qp: f64,
    max_qp: f64,
    min_qp: f64,
    iflicker: u32,
    skip_ratio: Option<f64>,
    avg_mv: Option<f64>,
    kfr: Option<f64>,
    sad: Option<f64>,
    content_class: Option<u8>,
    screen_inches: f64,
    display_width: u32,
    display_height: u32,
    device_type: Option<DeviceType>,
}

fn schema(row: usize, column: &str, detail: impl Into<String>) -> Error {
    Error::Schema {
        row,
        column: column.to_string(),
        detail: detail.into(),
    }
}

impl CsvRow {
    fn into_row(self, line: usize) -> Result<DatasetRow> {
        if !(self.framerate_fps.is_finite() && self.framerate_fps > 0.0) {
            return Err(schema(line, "framerate_fps", "must be positive"));
        }
        let (kfr, gop_distance_imputed) = match self.kfr {
            Some(k) if k.is_finite() && k > 0.0 => (k, false),
            Some(_) => return Err(schema(line, "kfr", "must be positive")),
            None => (1.0, true),
        };
        let gop_distance = self.framerate_fps / kfr;
        let (avg_bytes, bytes_imputed) = match self.avg_bytes_per_iframe {
            Some(b) if b.is_finite() && b > 0.0 => (b, false),
            Some(_) => return Err(schema(line, "avg_bytes_per_iframe", "must be positive")),
            None => (0.0, true),
        };
        let scenes = if bytes_imputed {
            Vec::new()
        } else {
            vec![SceneStats {
                gop_count: 1,
                avg_iframe_bytes: avg_bytes,
                weight: LOWEST_SCENE_WEIGHT,
            }]
        };
        let features = StreamFeatures {
            bitrate_kbps: self.bitrate_kbps,
            framerate_fps: self.framerate_fps,
            width_px: self.width,
            height_px: self.height,
            avg_bytes_per_iframe: avg_bytes,
            avg_qp: self.avg_qp,
            max_qp: self.max_qp,
            min_qp: self.min_qp,
            iflicker_count: self.iflicker,
            skip_ratio: self.skip_ratio.unwrap_or(0.0),
            avg_mv: self.avg_mv.unwrap_or(0.0),
            key_frame_rate: self.framerate_fps / gop_distance,
            gop_distance,
            sad_per_pixel: self.sad,
            content_class: self.content_class,
            scenes,
            quant: (self.avg_qp / MAX_QP).clamp(0.0, 1.0),
            imputed: ImputedFields {
                skip_ratio_imputed: self.skip_ratio.is_none(),
                avg_mv_imputed: self.avg_mv.is_none(),
                sad_imputed: self.sad.is_none(),
                avg_bytes_per_iframe_imputed: bytes_imputed,
                gop_distance_imputed,
            },
        };
        features
            .validate()
            .map_err(|e| schema(line, "", e.to_string()))?;
        let display = DisplayParams {
            screen_size_inches: self.screen_inches,
            display_width_px: self.display_width,
            display_height_px: self.display_height,
            device_type: self.device_type.unwrap_or_default(),
        };
        display
            .validate()
            .map_err(|e| schema(line, "screen_inches", e.to_string()))?;
        if let Some(ci) = self.ci95 {
            if !(ci.is_finite() && ci >= 0.0) {
                return Err(schema(line, "ci95", "must be non-negative"));
            }
        }
        if !(1.0..=5.0).contains(&self.mos) {
            return Err(schema(line, "mos", format!("{} outside [1, 5]", self.mos)));
        }
        Ok(DatasetRow {
            features,
            display,
            subjective: SubjectiveRecord {
                sequence_id: self.sequence_id,
                source_id: self.source_id,
                mos: self.mos,
                ci95_halfwidth: self.ci95,
            },
        })
    }

    fn from_row(row: &DatasetRow) -> Self {
        let f = &row.features;
        let imp = &f.imputed;
        Self {
            sequence_id: row.subjective.sequence_id.clone(),
            source_id: row.subjective.source_id.clone(),
            mos: row.subjective.mos,
            ci95: row.subjective.ci95_halfwidth,
            bitrate_kbps: f.bitrate_kbps,
            framerate_fps: f.framerate_fps,
            width: f.width_px,
            height: f.height_px,
            avg_bytes_per_iframe: (!imp.avg_bytes_per_iframe_imputed)
                .then_some(f.avg_bytes_per_iframe),
            avg_qp: f.avg_qp,
            max_qp: f.max_qp,
            min_qp: f.min_qp,
            iflicker: f.iflicker_count,
            skip_ratio: (!imp.skip_ratio_imputed).then_some(f.skip_ratio),
            avg_mv: (!imp.avg_mv_imputed).then_some(f.avg_mv),
            kfr: (!imp.gop_distance_imputed).then_some(f.key_frame_rate),
            sad: f.sad_per_pixel,
            content_class: f.content_class,
            screen_inches: row.display.screen_size_inches,
            display_width: row.display.display_width_px,
            display_height: row.display.display_height_px,
            device_type: Some(row.display.device_type),
        }
    }
}

pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    for expected in DATASET_CSV_HEADER {
        if !headers.iter().any(|h| h == expected) {
            return Err(schema(1, expected, "missing column in header"));
        }
    }
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in rdr.deserialize::<CsvRow>().enumerate() {
        let line = i + 2;
        let raw = rec.map_err(|e| {
            let mut err = csv_schema_error(line, &e);
            if let Error::Schema { column, .. } = &mut err {
                if let Some(idx) = column
                    .strip_prefix('#')
                    .and_then(|n| n.parse::<usize>().ok())
                {
                    if let Some(name) = headers.get(idx - 1) {
                        *column = name.to_string();
                    }
                }
            }
            err
        })?;
        if !seen.insert(raw.sequence_id.clone()) {
            return Err(schema(line, "sequence_id", "duplicate sequence id"));
        }
        rows.push(raw.into_row(line)?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::new(rows)
}

pub fn write_dataset_csv<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in dataset.rows() {
        wtr.serialize(CsvRow::from_row(row))?;
    }
    wtr.flush()?;
    Ok(())
}
