//! Least-squares coefficient fitting for any model.
//!
//! The objective is the sum of squared MOS residuals. A row whose prediction
//! fails (domain error) adds [`ERROR_PENALTY`] instead of aborting, so the
//! search can wander through invalid regions. The minimiser is a seeded
//! multi-start bounded Nelder–Mead: start 0 is the initial vector itself,
//! later starts perturb it uniformly by up to ±20 %.

pub mod nelder_mead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{predict, CoefficientSet, ModelId};
pub use nelder_mead::{minimize, NelderMeadOptions, NelderMeadResult};

/// Squared-error contribution of a row whose prediction fails.
pub const ERROR_PENALTY: f64 = 1e6;

/// Default box for every coefficient.
pub const DEFAULT_BOUND: f64 = 1e4;

/// Relative size of the uniform perturbation applied to later starts.
pub const START_PERTURBATION: f64 = 0.2;

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub starts: usize,
    pub nelder_mead: NelderMeadOptions,
    /// Evaluate starts on the rayon pool.
    pub parallel: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            nelder_mead: NelderMeadOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub coefficients: CoefficientSet,
    pub final_sse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `mos − predicted` per training row; failed rows carry √penalty so the
    /// squares still sum to `final_sse`.
    pub per_row_residuals: Vec<f64>,
    /// Index of the start that produced the result.
    pub best_start: usize,
    /// Rows whose prediction failed under the returned coefficients.
    pub failed_rows: usize,
}

/// Residual of every row, with the penalty convention for failures.
pub fn residuals(coefficients: &CoefficientSet, dataset: &Dataset) -> (Vec<f64>, usize) {
    let mut failed = 0;
    let res = dataset
        .rows()
        .iter()
        .map(
            |row| match predict(&row.features, &row.display, coefficients) {
                Ok(p) => row.mos() - p.mos,
                Err(_) => {
                    failed += 1;
                    ERROR_PENALTY.sqrt()
                }
            },
        )
        .collect();
    (res, failed)
}

/// Sum of squared residuals with the error-penalty convention.
pub fn objective(coefficients: &CoefficientSet, dataset: &Dataset) -> f64 {
    dataset
        .rows()
        .iter()
        .map(
            |row| match predict(&row.features, &row.display, coefficients) {
                Ok(p) => (row.mos() - p.mos).powi(2),
                Err(_) => ERROR_PENALTY,
            },
        )
        .sum()
}

fn objective_from_values(model: ModelId, values: &[f64], dataset: &Dataset) -> f64 {
    match CoefficientSet::from_values(model, values) {
        Ok(c) => objective(&c, dataset),
        Err(_) => f64::INFINITY,
    }
}

/// Fits `model` to `train`.
///
/// `init` defaults to [`CoefficientSet::default_for`]; `bounds` default to
/// ±[`DEFAULT_BOUND`]. The result is the best over all starts, ties broken by
/// the lowest start index, so it depends only on the inputs and `seed`.
pub fn fit(
    model: ModelId,
    train: &Dataset,
    init: Option<&CoefficientSet>,
    bounds: Option<&[(f64, f64)]>,
    seed: u64,
    options: &FitOptions,
) -> Result<FitResult> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let init = match init {
        Some(c) if c.model() != model => {
            return Err(Error::InvalidInput(format!(
                "initial coefficients are for {}, not {model}",
                c.model()
            )))
        }
        Some(c) => c.clone(),
        None => CoefficientSet::default_for(model),
    };
    let x0 = init.to_vec();
    let bounds: Vec<(f64, f64)> = match bounds {
        Some(b) if b.len() != x0.len() => {
            return Err(Error::Arity {
                model: model.as_str(),
                expected: x0.len(),
                got: b.len(),
            })
        }
        Some(b) => {
            if let Some((lo, hi)) = b.iter().find(|(lo, hi)| !(lo <= hi)) {
                return Err(Error::InvalidInput(format!("empty bound [{lo}, {hi}]")));
            }
            b.to_vec()
        }
        None => vec![(-DEFAULT_BOUND, DEFAULT_BOUND); x0.len()],
    };

    let starts = start_points(&x0, &bounds, options.starts.max(1), seed);
    let run = |start: &Vec<f64>| {
        let f = |x: &[f64]| objective_from_values(model, x, train);
        minimize(&f, start, &bounds, &options.nelder_mead)
    };
    let results: Vec<NelderMeadResult> = if options.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };

    let (best_start, best) = results
        .iter()
        .enumerate()
        .fold(
            None::<(usize, &NelderMeadResult)>,
            |acc, (i, r)| match acc {
                Some((_, b)) if b.value <= r.value => acc,
                _ => Some((i, r)),
            },
        )
        .expect("at least one start");

    let coefficients = CoefficientSet::from_values(model, &best.x)?;
    let (per_row_residuals, failed_rows) = residuals(&coefficients, train);
    let final_sse = per_row_residuals.iter().map(|r| r * r).sum();
    let all_failed = failed_rows == train.len();
    if all_failed {
        log::warn!("{model}: every training row fails under the best coefficients");
    }
    Ok(FitResult {
        coefficients,
        final_sse,
        iterations: results.iter().map(|r| r.iterations).sum(),
        converged: best.converged && !all_failed,
        per_row_residuals,
        best_start,
        failed_rows,
    })
}

fn start_points(x0: &[f64], bounds: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![x0.to_vec()];
    for _ in 1..count {
        let p = x0
            .iter()
            .zip(bounds)
            .map(|(&x, &(lo, hi))| {
                let u: f64 = rng.random_range(-1.0..=1.0);
                let v = if x == 0.0 {
                    u * 0.05
                } else {
                    x * (1.0 + START_PERTURBATION * u)
                };
                v.clamp(lo, hi)
            })
            .collect();
        starts.push(p);
    }
    starts
}
