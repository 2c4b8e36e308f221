//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;
#[path = "acceptance/oracles.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bsvqa::bitstream::extract_with_metadata;
use bsvqa::evaluation::{
    cross_validate, make_folds, outlier_ratio, pcc, rmse, EvalOptions, DEFAULT_OUTLIER_THRESHOLD,
};
use bsvqa::fitting::{fit, FitOptions};
use bsvqa::models::{mos_from_r, r_floor, r_from_mos};
use bsvqa::{
    predict, CoefficientSet, Dataset, DatasetRow, DeviceType, FrameType, ModelId, SubjectiveRecord,
};
use oracles::Inputs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and budgets.
const FORMULA_REL_TOL: f64 = 1e-9;
const FORMULA_POINTS: usize = 25;
const FORMULA_BUDGET: Duration = Duration::from_secs(1);
const TRANSFORM_TOL: f64 = 1e-6;
const TRANSFORM_GRID: usize = 1000;
const FIT_ROWS: usize = 200;
const FIT_SIGMA: f64 = 0.1;
const FIT_RMSE_MAX: f64 = 0.12;
const FIT_SSE_MAX: f64 = 1e-8;
const FIT_BUDGET: Duration = Duration::from_secs(60);
const METRIC_TOL: f64 = 1e-12;
const METRIC_VECTORS: usize = 1000;
const FOLD_ROWS: usize = 115;
const FOLDS: usize = 5;
const COMPARE_STARTS: &str = "2";

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * b.abs().max(a.abs())
}

fn inputs(row: &DatasetRow) -> Inputs {
    let f = &row.features;
    Inputs {
        br: f.bitrate_kbps,
        fr: f.framerate_fps,
        width: f64::from(f.width_px),
        height: f64::from(f.height_px),
        avg_bytes_i: f.avg_bytes_per_iframe,
        avg_qp: f.avg_qp,
        max_qp: f.max_qp,
        min_qp: f.min_qp,
        iflicker: f64::from(f.iflicker_count),
        skip_ratio: f.skip_ratio,
        avg_mv: f.avg_mv,
        kfr: f.key_frame_rate,
        sad: f.sad_per_pixel.unwrap_or(0.0),
        class: usize::from(f.content_class.unwrap_or(0)),
        quant: f.quant,
        scenes: f
            .scenes
            .iter()
            .map(|s| (f64::from(s.gop_count), s.avg_iframe_bytes, s.weight))
            .collect(),
        screen_inches: row.display.screen_size_inches,
        display_width: f64::from(row.display.display_width_px),
        display_height: f64::from(row.display.display_height_px),
        handheld: row.display.device_type == DeviceType::Handheld,
    }
}

/// Oracle MOS and, where the model has one, its 0..100 value.
fn oracle(model: ModelId, x: &Inputs, k: &[f64]) -> (f64, Option<f64>) {
    match model {
        ModelId::G1070 => (oracles::g1070(x, k), None),
        ModelId::P1201_1 => (oracles::p1201_1(x, k), None),
        ModelId::P1201_2 => {
            let (m, q) = oracles::p1201_2(x, k);
            (m, Some(q))
        }
        ModelId::P1203Mode3 => {
            let (m, q) = oracles::p1203(x, k);
            (m, Some(q))
        }
        ModelId::Yamagishi => (oracles::yamagishi(x, k), None),
        ModelId::Ries => (oracles::ries(x, k), None),
        ModelId::Joskowicz => (oracles::joskowicz(x, k), None),
        ModelId::Takagi => (oracles::takagi(x, k), None),
        ModelId::UvesMode1 => (oracles::uves_mode1(x, k), None),
        ModelId::UvesModel1_1 => (oracles::uves_model1_1(x, k), None),
    }
}

/// Random coefficients around the defaults; P.1203 also gets a non-trivial
/// handheld polynomial.
fn random_coefficients(model: ModelId, rng: &mut ChaCha8Rng) -> CoefficientSet {
    let mut v: Vec<f64> = CoefficientSet::default_for(model)
        .to_vec()
        .iter()
        .map(|x| x * rng.random_range(0.8..=1.2))
        .collect();
    if model == ModelId::P1203Mode3 {
        v[8] = rng.random_range(-0.5..0.5);
        v[9] = rng.random_range(0.8..1.2);
        v[10] = rng.random_range(-0.05..0.05);
        v[11] = rng.random_range(-0.005..0.005);
    }
    CoefficientSet::from_values(model, &v).unwrap()
}

fn formula_conformance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut domain_agreements = 0;
    for &model in &ModelId::PRIMARY {
        let mut matched = 0;
        let mut id = 0;
        while matched < FORMULA_POINTS {
            id += 1;
            ensure(id < 10 * FORMULA_POINTS, || {
                format!("{model}: too few valid points")
            })?;
            let row = common::random_row(&mut rng, id, 23);
            let set = random_coefficients(model, &mut rng);
            let (want, want_native) = oracle(model, &inputs(&row), &set.to_vec());
            match predict(&row.features, &row.display, &set) {
                Ok(p) => {
                    let rel = (p.mos - want).abs() / want.abs();
                    worst = worst.max(rel);
                    ensure(close(p.mos, want, FORMULA_REL_TOL), || {
                        format!("{model} point {id}: {} vs oracle {want}", p.mos)
                    })?;
                    if let Some(q) = want_native {
                        ensure(close(p.native_scale_value, q, FORMULA_REL_TOL), || {
                            format!(
                                "{model} point {id}: scale value {} vs {q}",
                                p.native_scale_value
                            )
                        })?;
                    }
                    matched += 1;
                }
                Err(e) => {
                    ensure(!want.is_finite(), || {
                        format!("{model} point {id}: library error `{e}` but oracle gives {want}")
                    })?;
                    domain_agreements += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < FORMULA_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "9 models x {FORMULA_POINTS} points, max rel err {worst:.1e}, {domain_agreements} shared domain errors, {elapsed:.2?}"
    ))
}

fn base_row() -> DatasetRow {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut row = common::random_row(&mut rng, 0, 1);
    let f = &mut row.features;
    f.bitrate_kbps = 2000.0;
    f.framerate_fps = 30.0;
    f.width_px = 1920;
    f.height_px = 1080;
    f.avg_bytes_per_iframe = 60000.0;
    f.avg_qp = 30.0;
    f.max_qp = 33.0;
    f.min_qp = 27.0;
    f.quant = 30.0 / 51.0;
    f.sad_per_pixel = Some(4.0);
    f.content_class = Some(1);
    row.display.screen_size_inches = 42.0;
    row.display.display_width_px = 1920;
    row.display.display_height_px = 1080;
    row.display.device_type = DeviceType::Tv;
    row
}

fn run(
    row: &DatasetRow,
    model: ModelId,
    edit: impl FnOnce(&mut Vec<f64>),
) -> bsvqa::Result<bsvqa::Prediction> {
    let mut v = CoefficientSet::default_for(model).to_vec();
    edit(&mut v);
    predict(
        &row.features,
        &row.display,
        &CoefficientSet::from_values(model, &v)?,
    )
}

fn get(p: &bsvqa::Prediction, name: &str) -> f64 {
    p.get(name)
        .unwrap_or_else(|| panic!("breakdown lacks {name}"))
}

fn inside(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x < hi
}

fn clamp_and_branch_suite() -> Check {
    let base = base_row();
    let mut fr23 = base.clone();
    fr23.features.framerate_fps = 23.9;
    let mut fr24 = base.clone();
    fr24.features.framerate_fps = 24.0;
    let mut upscaled = base.clone();
    upscaled.features.width_px = 640;
    upscaled.features.height_px = 360;
    let mut handheld = base.clone();
    handheld.display.device_type = DeviceType::Handheld;
    let g = ModelId::G1070;
    let p3 = ModelId::P1203Mode3;
    let mut checks: Vec<(&str, bool)> = Vec::new();
    macro_rules! check {
        ($name:expr, $cond:expr) => {
            checks.push(($name, $cond))
        };
    }

    // I_ofr in [0, 4]
    check!(
        "I_ofr upper",
        get(&run(&base, g, |v| v[0] = 10.0).unwrap(), "I_ofr") == 4.0
    );
    check!(
        "I_ofr inside",
        inside(get(&run(&base, g, |_| {}).unwrap(), "I_ofr"), 0.0, 4.0)
    );
    check!(
        "I_ofr lower",
        get(&run(&base, g, |v| v[0] = -10.0).unwrap(), "I_ofr") == 0.0
    );
    // O_fr in [0, 30]; a zero optimum has no logarithm
    check!(
        "O_fr upper",
        get(&run(&base, g, |v| v[4] = 100.0).unwrap(), "O_fr") == 30.0
    );
    check!(
        "O_fr inside",
        inside(get(&run(&base, g, |_| {}).unwrap(), "O_fr"), 0.0, 30.0)
    );
    check!("O_fr lower", run(&base, g, |v| v[4] = -1000.0).is_err());

    // P.1201.1 frame-rate split at 24
    let c = CoefficientSet::default_for(ModelId::P1201_1).to_vec();
    let low = run(&fr23, ModelId::P1201_1, |_| {}).unwrap();
    check!("P1201.1 fr < 24", low.mos == 5.0 - get(&low, "Qcod"));
    let high = run(&fr24, ModelId::P1201_1, |_| {}).unwrap();
    let cpx = get(&high, "cpx_video");
    let expect =
        (5.0 - get(&high, "Qcod")) * (1.0 + c[0] * cpx - c[1] * cpx * (1000.0f64 / 24.0).log10());
    check!(
        "P1201.1 fr >= 24",
        close(high.mos, expect, 1e-12) && high.mos != 5.0 - get(&high, "Qcod")
    );

    // MOSq in [1, 5]
    check!(
        "MOSq upper",
        get(&run(&base, p3, |v| v[0] = 10.0).unwrap(), "MOSq") == 5.0
    );
    check!(
        "MOSq inside",
        inside(get(&run(&base, p3, |_| {}).unwrap(), "MOSq"), 1.0, 5.0)
    );
    check!(
        "MOSq lower",
        get(&run(&base, p3, |v| v[0] = -10.0).unwrap(), "MOSq") == 1.0
    );
    // Dq in [0, 100]: saturated MOSq maps to R = 100
    check!(
        "Dq lower",
        get(&run(&base, p3, |v| v[0] = 10.0).unwrap(), "Dq") == 0.0
    );
    check!(
        "Dq inside",
        inside(get(&run(&base, p3, |_| {}).unwrap(), "Dq"), 0.0, 100.0)
    );
    // Du in [0, 100]
    check!(
        "Du upper",
        get(&run(&upscaled, p3, |v| v[3] = 1e4).unwrap(), "Du") == 100.0
    );
    check!(
        "Du inside",
        inside(get(&run(&upscaled, p3, |_| {}).unwrap(), "Du"), 0.0, 100.0)
    );
    check!(
        "Du lower",
        get(&run(&upscaled, p3, |v| v[3] = -50.0).unwrap(), "Du") == 0.0
    );
    // Dt zero from 24 fps
    check!(
        "Dt fr < 24",
        get(&run(&fr23, p3, |_| {}).unwrap(), "Dt1") != 0.0
    );
    check!("Dt fr >= 24", {
        let p = run(&fr24, p3, |_| {}).unwrap();
        get(&p, "Dt") == 0.0 && get(&p, "Dt1") == 0.0
    });
    // Dt in [0, 100]
    check!(
        "Dt upper",
        get(&run(&fr23, p3, |v| v[5] = 1e4).unwrap(), "Dt") == 100.0
    );
    check!(
        "Dt inside",
        inside(get(&run(&fr23, p3, |_| {}).unwrap(), "Dt"), 0.0, 100.0)
    );
    check!(
        "Dt lower",
        get(&run(&fr23, p3, |v| v[5] = -1e3).unwrap(), "Dt") == 0.0
    );
    // D in [0, 100]
    check!("D upper", {
        let p = run(&upscaled, p3, |v| {
            v[0] = -10.0;
            v[3] = 1e4;
        })
        .unwrap();
        get(&p, "D") == 100.0 && get(&p, "Q") == 0.0
    });
    check!(
        "D inside",
        inside(get(&run(&upscaled, p3, |_| {}).unwrap(), "D"), 0.0, 100.0)
    );
    // MOS branch: MOSq directly only when Du = 0 and Dt = 0
    check!("MOS = MOSq", {
        let p = run(&base, p3, |_| {}).unwrap();
        p.mos == get(&p, "MOSq")
    });
    check!("MOS from Q (upscaled)", {
        let p = run(&upscaled, p3, |_| {}).unwrap();
        close(p.mos, oracles::mos_from_r(get(&p, "Q")), 1e-12) && p.mos != get(&p, "MOSq")
    });
    check!("MOS from Q (low fr)", {
        let p = run(&fr23, p3, |_| {}).unwrap();
        get(&p, "Du") == 0.0 && close(p.mos, oracles::mos_from_r(get(&p, "Q")), 1e-12)
    });
    // handheld adjustment and its clamp
    let h = [0.3, 0.9, 0.01, 0.001];
    check!("handheld adjusts", {
        let tv = run(&base, p3, |v| v[8..12].copy_from_slice(&h))
            .unwrap()
            .mos;
        let hh = run(&handheld, p3, |v| v[8..12].copy_from_slice(&h))
            .unwrap()
            .mos;
        close(
            hh,
            h[0] + h[1] * tv + h[2] * tv * tv + h[3] * tv * tv * tv,
            1e-12,
        ) && hh != tv
    });
    check!("tv unadjusted", {
        let a = run(&base, p3, |v| v[8..12].copy_from_slice(&h))
            .unwrap()
            .mos;
        a == run(&base, p3, |_| {}).unwrap().mos
    });
    check!(
        "handheld upper",
        run(&handheld, p3, |v| v[8] = 10.0).unwrap().mos == 5.0
    );
    check!(
        "handheld inside",
        inside(run(&handheld, p3, |_| {}).unwrap().mos, 1.0, 5.0)
    );
    check!(
        "handheld lower",
        run(&handheld, p3, |v| v[8] = -10.0).unwrap().mos == 1.0
    );

    // uVES Qcod in [1, 5]
    let u = ModelId::UvesModel1_1;
    check!(
        "Qcod upper",
        get(&run(&base, u, |v| v[2] = 100.0).unwrap(), "Qcod") == 5.0
    );
    check!(
        "Qcod inside",
        inside(get(&run(&base, u, |_| {}).unwrap(), "Qcod"), 1.0, 5.0)
    );
    check!(
        "Qcod lower",
        get(
            &run(&base, u, |v| {
                v[1] = 0.0;
                v[2] = 0.01
            })
            .unwrap(),
            "Qcod"
        ) == 1.0
    );
    // uVES Q_Disp in [1, 5]
    let m = ModelId::UvesMode1;
    check!(
        "Q_Disp upper",
        get(&run(&base, m, |v| v[13] = 100.0).unwrap(), "Q_Disp") == 5.0
    );
    check!(
        "Q_Disp inside",
        inside(get(&run(&base, m, |_| {}).unwrap(), "Q_Disp"), 1.0, 5.0)
    );
    check!(
        "Q_Disp lower",
        get(&run(&base, m, |v| v[13] = 0.5).unwrap(), "Q_Disp") == 1.0
    );

    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    ensure(failed.is_empty(), || {
        format!("failed: {}", failed.join(", "))
    })?;
    Ok(format!(
        "{} boundary cases across 10 clamps and 4 branches",
        checks.len()
    ))
}

fn transform_round_trip() -> Check {
    let mut worst = 0.0f64;
    let mut last_r = f64::NEG_INFINITY;
    for i in 0..TRANSFORM_GRID {
        let m = 1.0 + 3.5 * i as f64 / (TRANSFORM_GRID - 1) as f64;
        let r = r_from_mos(m).map_err(|e| e.to_string())?;
        ensure(r > last_r, || format!("r_from_mos not increasing at {m}"))?;
        last_r = r;
        let back = mos_from_r(r).map_err(|e| e.to_string())?;
        worst = worst.max((back - m).abs());
        ensure((back - m).abs() <= TRANSFORM_TOL, || {
            format!("MOS {m} -> R {r} -> {back}")
        })?;
        // against the bisection oracle
        ensure((r - oracles::r_from_mos(m)).abs() <= TRANSFORM_TOL, || {
            format!("R({m}) = {r}")
        })?;
    }
    let lo = r_floor();
    let mut last_m = f64::NEG_INFINITY;
    for i in 0..TRANSFORM_GRID {
        let r = lo + (100.0 - lo) * i as f64 / (TRANSFORM_GRID - 1) as f64;
        let m = mos_from_r(r).map_err(|e| e.to_string())?;
        ensure(m > last_m, || format!("mos_from_r not increasing at {r}"))?;
        last_m = m;
        let back = r_from_mos(m).map_err(|e| e.to_string())?;
        ensure((back - r).abs() <= TRANSFORM_TOL, || {
            format!("R {r} -> MOS {m} -> {back}")
        })?;
    }
    Ok(format!(
        "{TRANSFORM_GRID}-point grids both ways, max MOS error {worst:.1e}"
    ))
}

fn fit_recovery() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    for (i, &model) in ModelId::PRIMARY.iter().enumerate() {
        let truth = CoefficientSet::default_for(model);
        let init = common::perturbed(&truth, 100 + i as u64);

        let (noisy, clean) = common::labelled(&truth, FIT_ROWS, FIT_SIGMA, 7);
        let r = fit(model, &noisy, Some(&init), None, 1, &FitOptions::default())
            .map_err(|e| format!("{model}: {e}"))?;
        let predicted: Vec<f64> = noisy
            .rows()
            .iter()
            .map(|row| predict(&row.features, &row.display, &r.coefficients).map(|p| p.mos))
            .collect::<bsvqa::Result<_>>()
            .map_err(|e| format!("{model}: fitted model fails on training rows: {e}"))?;
        let err = rmse(&predicted, &clean).map_err(|e| e.to_string())?;
        ensure(err <= FIT_RMSE_MAX, || {
            format!("{model}: RMSE vs truth {err}")
        })?;

        let (exact, _) = common::labelled(&truth, FIT_ROWS, 0.0, 7);
        let z = fit(model, &exact, Some(&init), None, 1, &FitOptions::default())
            .map_err(|e| format!("{model}: {e}"))?;
        ensure(z.final_sse <= FIT_SSE_MAX, || {
            format!("{model}: zero-noise SSE {}", z.final_sse)
        })?;
        lines.push(format!("{model} {err:.3}/{:.0e}", z.final_sse));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < FIT_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("RMSE/SSE: {}; {elapsed:.1?}", lines.join(", ")))
}

fn two_pass_pcc(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

fn metric_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for trial in 0..METRIC_VECTORS {
        let n = rng.random_range(2..=200);
        let slope = rng.random_range(-2.0..2.0);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| slope * v + rng.random_range(-1.0..1.0))
            .collect();

        let got = pcc(&x, &y).map_err(|e| e.to_string())?;
        let want = two_pass_pcc(&x, &y);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= METRIC_TOL, || {
            format!("trial {trial}: pcc {got} vs {want}")
        })?;

        let got = rmse(&x, &y).map_err(|e| e.to_string())?;
        let want = (x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        ensure((got - want).abs() <= METRIC_TOL, || {
            format!("trial {trial}: rmse {got} vs {want}")
        })?;

        let records: Vec<SubjectiveRecord> = x
            .iter()
            .enumerate()
            .map(|(i, &mos)| SubjectiveRecord {
                sequence_id: format!("s{i}"),
                source_id: "a".into(),
                mos,
                ci95_halfwidth: rng.random_bool(0.5).then(|| rng.random_range(0.0..1.0)),
            })
            .collect();
        let predicted: Vec<f64> = x.iter().map(|v| v + rng.random_range(-0.6..0.6)).collect();
        let got = outlier_ratio(&records, &predicted, DEFAULT_OUTLIER_THRESHOLD)
            .map_err(|e| e.to_string())?;
        let mut outliers = 0;
        for i in 0..n {
            let limit = match records[i].ci95_halfwidth {
                Some(ci) => ci,
                None => DEFAULT_OUTLIER_THRESHOLD,
            };
            if (records[i].mos - predicted[i]).abs() > limit {
                outliers += 1;
            }
        }
        let want = outliers as f64 / n as f64;
        ensure((got - want).abs() <= METRIC_TOL, || {
            format!("trial {trial}: OR {got} vs {want}")
        })?;

        let a = rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let b = rng.random_range(-100.0..100.0);
        let moved: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let base = pcc(&x, &y).map_err(|e| e.to_string())?;
        let shifted = pcc(&moved, &y).map_err(|e| e.to_string())?;
        ensure((shifted - a.signum() * base).abs() <= METRIC_TOL, || {
            format!("trial {trial}: pcc({a}x+{b}, y) = {shifted}, pcc(x, y) = {base}")
        })?;
    }
    Ok(format!(
        "{METRIC_VECTORS} vectors, max PCC deviation {worst:.1e}, invariance holds"
    ))
}

/// 115 rows over sources of uneven size.
fn fold_dataset() -> Dataset {
    let truth = CoefficientSet::default_for(ModelId::P1201_1);
    let (ds, _) = common::labelled(&truth, FOLD_ROWS, 0.1, 3);
    let sizes = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 16, 18];
    let mut rows = ds.rows().to_vec();
    let mut it = rows.iter_mut();
    for (s, &size) in sizes.iter().cycle().enumerate() {
        let mut done = false;
        for _ in 0..size {
            match it.next() {
                Some(r) => r.subjective.source_id = format!("src{s:02}"),
                None => done = true,
            }
        }
        if done {
            break;
        }
    }
    Dataset::new(rows).unwrap()
}

fn fold_protocol() -> Check {
    let ds = fold_dataset();
    let plan = make_folds(&ds, FOLDS, 42).map_err(|e| e.to_string())?;
    let sizes = plan.fold_sizes();
    ensure(sizes == vec![23; FOLDS], || format!("fold sizes {sizes:?}"))?;

    let mut per_source: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for row in ds.rows() {
        let fold = plan.assignments[row.sequence_id()];
        per_source
            .entry(row.subjective.source_id.as_str())
            .or_insert_with(|| vec![0; FOLDS])[fold] += 1;
    }
    for (src, counts) in &per_source {
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        ensure(hi - lo <= 1, || format!("{src} spread {counts:?}"))?;
    }

    let again = make_folds(&ds, FOLDS, 42).map_err(|e| e.to_string())?;
    let a = serde_json::to_vec(&plan).unwrap();
    ensure(a == serde_json::to_vec(&again).unwrap(), || {
        "fold plans differ".into()
    })?;
    let other = make_folds(&ds, FOLDS, 43).map_err(|e| e.to_string())?;
    ensure(other.assignments != plan.assignments, || {
        "seed has no effect".into()
    })?;

    let options = EvalOptions::default();
    let r1 = cross_validate(ModelId::P1201_1, &ds, FOLDS, 42, None, &options)
        .map_err(|e| e.to_string())?;
    let r2 = cross_validate(ModelId::P1201_1, &ds, FOLDS, 42, None, &options)
        .map_err(|e| e.to_string())?;
    ensure(
        serde_json::to_vec(&r1).unwrap() == serde_json::to_vec(&r2).unwrap(),
        || "evaluation reports differ".into(),
    )?;
    Ok(format!(
        "5 x 23, {} sources each spread within 1 per fold, plan and report byte-identical",
        per_source.len()
    ))
}

fn fixture_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn parser_conformance() -> Check {
    let manifest: serde_json::Value = serde_json::from_slice(
        &std::fs::read(fixture_path("fixtures.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for (name, expected) in manifest.as_object().unwrap() {
        let bytes = std::fs::read(fixture_path(name)).map_err(|e| e.to_string())?;
        let (frames, sps, meta) =
            extract_with_metadata(&bytes).map_err(|e| format!("{name}: {e}"))?;
        let width = expected["width"].as_u64().unwrap() as u32;
        let height = expected["height"].as_u64().unwrap() as u32;
        ensure((sps.width_px, sps.height_px) == (width, height), || {
            format!("{name}: {}x{}", sps.width_px, sps.height_px)
        })?;
        let count = expected["frames"].as_u64().unwrap() as usize;
        ensure(frames.len() == count, || {
            format!("{name}: {} frames", frames.len())
        })?;
        ensure(frames[0].frame_type == FrameType::I, || {
            format!("{name}: first frame not I")
        })?;
        ensure(
            frames[1..].iter().all(|f| f.frame_type == FrameType::P),
            || format!("{name}: later frames not P"),
        )?;
        let qps: Vec<f64> = expected["qp"]
            .as_array()
            .unwrap()
            .iter()
            .map(|q| q.as_f64().unwrap())
            .collect();
        let qp = qps.iter().sum::<f64>() / qps.len() as f64;
        ensure(frames.iter().all(|f| f.avg_qp == qp), || {
            format!("{name}: QP differs from {qp}")
        })?;
        let payload: u64 = frames.iter().map(|f| f.size_bytes).sum();
        ensure(
            payload as usize + meta.start_code_bytes == bytes.len(),
            || {
                format!(
                    "{name}: {payload} + {} != {}",
                    meta.start_code_bytes,
                    bytes.len()
                )
            },
        )?;
        summary.push(format!("{name} {width}x{height} {count}f QP {qp}"));
    }
    Ok(summary.join("; "))
}

fn p1203_sanity() -> Check {
    let set = CoefficientSet::default_for(ModelId::P1203Mode3);
    let k = set.to_vec();
    ensure(
        k[..8] == [4.66, -0.07, 4.06, 72.61, 0.32, 30.98, 1.29, 64.65],
        || format!("defaults are not the recommended values: {k:?}"),
    )?;
    let mut row = base_row();
    let mut last = f64::INFINITY;
    let steps = 200;
    for i in 0..=steps {
        let quant = i as f64 / steps as f64;
        row.features.quant = quant;
        let p = predict(&row.features, &row.display, &set).map_err(|e| e.to_string())?;
        let raw = k[0] + k[1] * (k[2] * quant).exp();
        let mos_q = get(&p, "MOSq");
        ensure(mos_q <= last, || format!("MOSq rises at quant {quant}"))?;
        if raw > 1.0 && raw < 5.0 {
            ensure(mos_q < last || i == 0, || {
                format!("MOSq flat at quant {quant}")
            })?;
        }
        ensure((1.0..=5.0).contains(&p.mos), || {
            format!("MOS {} at quant {quant}", p.mos)
        })?;
        last = mos_q;
    }
    row.features.quant = 0.0;
    let top = predict(&row.features, &row.display, &set)
        .map_err(|e| e.to_string())?
        .mos;
    row.features.quant = 1.0;
    let bottom = predict(&row.features, &row.display, &set)
        .map_err(|e| e.to_string())?
        .mos;
    Ok(format!(
        "MOSq decreasing over quant in [0, 1]; MOS {top:.3} at 0, {bottom:.3} at 1"
    ))
}

fn conditional_reproduction() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let truth = CoefficientSet::default_for(ModelId::UvesMode1);
    let ds = common::csv_dataset(&truth, FOLD_ROWS, 23, 0.2, 21);
    let data = common::write_csv(dir.path(), "dataset.csv", &ds);
    let out = dir.path().join("table.csv");
    let mut models: Vec<&str> = ModelId::PRIMARY.iter().map(|m| m.as_str()).collect();
    models.push(ModelId::UvesModel1_1.as_str());
    let models = models.join(",");
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_bsvqa"))
        .args([
            "compare",
            "--model",
            &models,
            "--starts",
            COMPARE_STARTS,
            "--format",
            "csv",
        ])
        .arg("--dataset")
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        String::from_utf8_lossy(&status.stderr).into_owned()
    })?;
    let elapsed = start.elapsed();

    let text = std::fs::read_to_string(&out).map_err(|e| e.to_string())?;
    let body = text.split_once('\n').map(|(_, b)| b).unwrap_or("");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(rows.len() == ModelId::PRIMARY.len() + 1, || {
        format!("{} rows", rows.len())
    })?;
    let pccs: Vec<f64> = rows
        .iter()
        .map(|r| r[1].parse().unwrap_or(f64::NEG_INFINITY))
        .collect();
    ensure(pccs.windows(2).all(|w| w[0] >= w[1]), || {
        format!("not sorted: {pccs:?}")
    })?;
    let find = |id: &str| rows.iter().find(|r| &r[0] == id).cloned();
    let full = find("uves_mode1").ok_or("no uves_mode1 row")?;
    let coding = find("uves_model1_1").ok_or("no uves_model1_1 row")?;
    for r in &rows {
        let res = dir.path().join(format!("table.{}.residuals.csv", &r[0]));
        let n = std::fs::read_to_string(&res)
            .map_err(|e| e.to_string())?
            .lines()
            .count();
        ensure(n == FOLD_ROWS + 2, || {
            format!("{}: {n} residual lines", &r[0])
        })?;
    }
    Ok(format!(
        "10-row table from one command in {elapsed:.1?}; ablation PCC/RMSE {}/{} (Model 1.1) vs {}/{} (Mode 1); published-data reproduction awaits the dataset",
        short(&coding[1]),
        short(&coding[2]),
        short(&full[1]),
        short(&full[2])
    ))
}

fn short(s: &str) -> String {
    s.parse::<f64>()
        .map(|v| format!("{v:.3}"))
        .unwrap_or_else(|_| s.to_string())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("formula conformance", formula_conformance),
        ("clamp/branch suite", clamp_and_branch_suite),
        ("transform round-trip", transform_round_trip),
        ("fit recovery", fit_recovery),
        ("metric oracles", metric_oracles),
        ("fold protocol", fold_protocol),
        ("parser conformance", parser_conformance),
        ("P.1203 recommended-coefficient sanity", p1203_sanity),
        ("conditional reproduction", conditional_reproduction),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
