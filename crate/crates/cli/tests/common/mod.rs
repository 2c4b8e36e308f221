//! Synthetic labelled datasets shared by the integration tests.

#![allow(dead_code)]

use bsvqa::features::{ImputedFields, SceneStats, LOWEST_SCENE_WEIGHT, MAX_QP};
use bsvqa::{
    predict, read_dataset_csv, write_dataset_csv, CoefficientSet, Dataset, DatasetRow, DeviceType,
    DisplayParams, StreamFeatures, SubjectiveRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const RESOLUTIONS: [(u32, u32); 4] = [(640, 360), (960, 540), (1280, 720), (1920, 1080)];
const SCREENS: [f64; 5] = [5.5, 10.1, 24.0, 42.0, 55.0];

/// Random but plausible stream features and viewing context.
pub fn random_row(rng: &mut ChaCha8Rng, id: usize, sources: usize) -> DatasetRow {
    let br = (rng.random_range(150f64.ln()..12000f64.ln())).exp();
    let fr = rng.random_range(8.0..30.0);
    let (w, h) = RESOLUTIONS[rng.random_range(0..RESOLUTIONS.len())];
    let avg_qp: f64 = rng.random_range(18.0..46.0);
    let min_qp = avg_qp - rng.random_range(0.0..6.0);
    let max_qp = (avg_qp + rng.random_range(0.0..6.0)).min(MAX_QP);
    let scene_count = rng.random_range(1..=3);
    let mut scenes: Vec<SceneStats> = (0..scene_count)
        .map(|_| SceneStats {
            gop_count: rng.random_range(1..=12),
            avg_iframe_bytes: rng.random_range(4000f64.ln()..400000f64.ln()).exp(),
            weight: 1.0,
        })
        .collect();
    let lowest = scenes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.avg_iframe_bytes.total_cmp(&b.1.avg_iframe_bytes))
        .map(|(i, _)| i)
        .unwrap();
    scenes[lowest].weight = LOWEST_SCENE_WEIGHT;
    let gops: f64 = scenes.iter().map(|s| f64::from(s.gop_count)).sum();
    let avg_bytes = scenes
        .iter()
        .map(|s| s.avg_iframe_bytes * f64::from(s.gop_count))
        .sum::<f64>()
        / gops;
    let kfr = rng.random_range(0.3..2.0);
    let screen = SCREENS[rng.random_range(0..SCREENS.len())];
    let features = StreamFeatures {
        bitrate_kbps: br,
        framerate_fps: fr,
        width_px: w,
        height_px: h,
        avg_bytes_per_iframe: avg_bytes,
        avg_qp,
        max_qp,
        min_qp,
        iflicker_count: rng.random_range(0..6),
        skip_ratio: rng.random_range(0.0..0.6),
        avg_mv: rng.random_range(0.0..12.0),
        key_frame_rate: kfr,
        gop_distance: fr / kfr,
        sad_per_pixel: Some(rng.random_range(0.5..25.0)),
        content_class: Some(rng.random_range(0..5)),
        scenes,
        quant: avg_qp / MAX_QP,
        imputed: ImputedFields::default(),
    };
    DatasetRow {
        features,
        display: DisplayParams {
            screen_size_inches: screen,
            display_width_px: 1920,
            display_height_px: 1080,
            device_type: if screen < 11.0 {
                DeviceType::Handheld
            } else {
                DeviceType::Tv
            },
        },
        subjective: SubjectiveRecord {
            sequence_id: format!("seq{id:03}"),
            source_id: format!("src{:02}", id % sources),
            mos: 3.0,
            ci95_halfwidth: None,
        },
    }
}

/// `n` rows labelled by `truth` plus Gaussian noise; also returns the
/// noiseless labels. Rows the model cannot score are redrawn.
pub fn labelled(truth: &CoefficientSet, n: usize, sigma: f64, seed: u64) -> (Dataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut clean = Vec::with_capacity(n);
    while rows.len() < n {
        let mut row = random_row(&mut rng, rows.len(), 23);
        let Ok(p) = predict(&row.features, &row.display, truth) else {
            continue;
        };
        let e = if sigma > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        row.subjective.mos = (p.mos + e).clamp(1.0, 5.0);
        clean.push(p.mos);
        rows.push(row);
    }
    (Dataset::new(rows).unwrap(), clean)
}

/// Every coefficient scaled by an independent factor in [0.8, 1.2].
pub fn perturbed(set: &CoefficientSet, seed: u64) -> CoefficientSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = set
        .to_vec()
        .iter()
        .map(|x| x * rng.random_range(0.8..=1.2))
        .collect();
    CoefficientSet::from_values(set.model(), &v).unwrap()
}

/// `n` random rows as they look after a trip through the dataset CSV, labelled
/// by `truth` plus noise. Every third row carries a confidence interval.
pub fn csv_dataset(
    truth: &CoefficientSet,
    n: usize,
    sources: usize,
    sigma: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let row = random_row(&mut rng, rows.len(), sources);
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &Dataset::new(vec![row]).unwrap()).unwrap();
        let mut row = read_dataset_csv(&buf[..]).unwrap().rows()[0].clone();
        let Ok(p) = predict(&row.features, &row.display, truth) else {
            continue;
        };
        let e = if sigma > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        row.subjective.mos = (p.mos + e).clamp(1.0, 5.0);
        if rows.len() % 3 == 0 {
            row.subjective.ci95_halfwidth = Some(rng.random_range(0.1..0.4));
        }
        rows.push(row);
    }
    Dataset::new(rows).unwrap()
}

/// Writes `dataset` as CSV into `dir` and returns the path.
pub fn write_csv(dir: &std::path::Path, name: &str, dataset: &Dataset) -> std::path::PathBuf {
    let path = dir.join(name);
    let file = std::fs::File::create(&path).unwrap();
    write_dataset_csv(file, dataset).unwrap();
    path
}
