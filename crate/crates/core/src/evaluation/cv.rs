use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::folds::{make_folds, FoldPlan};
use super::metrics::{outlier_ratio, pcc, rmse, DEFAULT_OUTLIER_THRESHOLD};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::SubjectiveRecord;
use crate::fitting::{fit, FitOptions};
use crate::models::{predict, CoefficientSet, ModelId};

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub fit: FitOptions,
    /// Outlier threshold for sequences without a confidence interval.
    pub outlier_threshold: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            outlier_threshold: DEFAULT_OUTLIER_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_size: usize,
    /// `None` when the held-out fold has too few points or no variance.
    pub pcc: Option<f64>,
    pub rmse: f64,
    pub outlier_ratio: f64,
    pub fitted_coefficients: CoefficientSet,
    pub train_sse: f64,
    /// Held-out rows the fitted model could not score; they are scored with
    /// the training mean MOS instead.
    pub prediction_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateMetrics {
    /// Mean over folds with a defined PCC; `None` when no fold has one.
    pub pcc: Option<f64>,
    pub rmse: f64,
    pub outlier_ratio: f64,
    /// Folds that contributed to `pcc`.
    pub pcc_folds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub sequence_id: String,
    pub mos: f64,
    pub predicted: f64,
    pub fold: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub model: ModelId,
    pub k: usize,
    pub seed: u64,
    pub outlier_threshold: f64,
    pub per_fold: Vec<FoldReport>,
    pub aggregate: AggregateMetrics,
    /// One entry per sequence, in dataset order.
    pub residuals: Vec<Residual>,
    pub fold_plan: FoldPlan,
}

/// Result of running several models over one shared fold plan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub k: usize,
    pub seed: u64,
    pub fold_plan: FoldPlan,
    /// Ordered by descending aggregate PCC; undefined PCC last.
    pub reports: Vec<EvalReport>,
}

/// A fold's report plus its held-out (dataset position, prediction) pairs.
type FoldOutcome = (FoldReport, Vec<(usize, f64)>);

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(fold as u64)
}

/// k-fold cross-validation of `model` with a freshly built fold plan.
pub fn cross_validate(
    model: ModelId,
    dataset: &Dataset,
    k: usize,
    seed: u64,
    init: Option<&CoefficientSet>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    let plan = make_folds(dataset, k, seed)?;
    cross_validate_with_plan(model, dataset, &plan, init, options)
}

/// Cross-validation over an existing plan: fit on k−1 folds, score the
/// held-out fold, average the per-fold metrics.
pub fn cross_validate_with_plan(
    model: ModelId,
    dataset: &Dataset,
    plan: &FoldPlan,
    init: Option<&CoefficientSet>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let folds = plan.positions(dataset)?;
    let outcomes: Vec<Result<FoldOutcome>> = folds
        .par_iter()
        .enumerate()
        .map(|(fold, test_pos)| run_fold(model, dataset, plan, fold, test_pos, init, options))
        .collect();

    let mut per_fold = Vec::with_capacity(plan.k);
    let mut predicted = vec![f64::NAN; dataset.len()];
    let mut fold_of = vec![0; dataset.len()];
    for (fold, outcome) in outcomes.into_iter().enumerate() {
        let (report, preds) = outcome?;
        for (pos, p) in preds {
            predicted[pos] = p;
            fold_of[pos] = fold;
        }
        per_fold.push(report);
    }

    let kf = per_fold.len() as f64;
    let defined: Vec<f64> = per_fold.iter().filter_map(|f| f.pcc).collect();
    let aggregate = AggregateMetrics {
        pcc: (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64),
        rmse: per_fold.iter().map(|f| f.rmse).sum::<f64>() / kf,
        outlier_ratio: per_fold.iter().map(|f| f.outlier_ratio).sum::<f64>() / kf,
        pcc_folds: defined.len(),
    };
    let residuals = dataset
        .rows()
        .iter()
        .zip(predicted)
        .zip(fold_of)
        .map(|((row, predicted), fold)| Residual {
            sequence_id: row.sequence_id().to_string(),
            mos: row.mos(),
            predicted,
            fold,
        })
        .collect();

    Ok(EvalReport {
        model,
        k: plan.k,
        seed: plan.seed,
        outlier_threshold: options.outlier_threshold,
        per_fold,
        aggregate,
        residuals,
        fold_plan: plan.clone(),
    })
}

fn run_fold(
    model: ModelId,
    dataset: &Dataset,
    plan: &FoldPlan,
    fold: usize,
    test_pos: &[usize],
    init: Option<&CoefficientSet>,
    options: &EvalOptions,
) -> Result<FoldOutcome> {
    if test_pos.is_empty() {
        return Err(Error::InvalidInput(format!("fold {fold} is empty")));
    }
    let train_pos: Vec<usize> = (0..dataset.len())
        .filter(|p| test_pos.binary_search(p).is_err())
        .collect();
    let train = dataset.subset(&train_pos);
    let fitted = fit(
        model,
        &train,
        init,
        None,
        fold_seed(plan.seed, fold),
        &options.fit,
    )?;
    let train_mean = train.mos().iter().sum::<f64>() / train.len() as f64;

    let mut failures = 0;
    let mut preds = Vec::with_capacity(test_pos.len());
    for &pos in test_pos {
        let row = &dataset.rows()[pos];
        let p = match predict(&row.features, &row.display, &fitted.coefficients) {
            Ok(p) => p.mos,
            Err(e) => {
                log::warn!(
                    "{model} fold {fold}: cannot score `{}` ({e}); using training mean",
                    row.sequence_id()
                );
                failures += 1;
                train_mean
            }
        };
        preds.push((pos, p));
    }

    let mos: Vec<f64> = test_pos.iter().map(|&p| dataset.rows()[p].mos()).collect();
    let pred: Vec<f64> = preds.iter().map(|&(_, p)| p).collect();
    let subjective: Vec<SubjectiveRecord> = test_pos
        .iter()
        .map(|&p| dataset.rows()[p].subjective.clone())
        .collect();
    let fold_pcc = match pcc(&mos, &pred) {
        Ok(r) => Some(r),
        Err(Error::UndefinedCorrelation(why)) => {
            log::warn!("{model} fold {fold}: PCC omitted ({why})");
            None
        }
        Err(e) => return Err(e),
    };
    let report = FoldReport {
        fold,
        test_size: test_pos.len(),
        pcc: fold_pcc,
        rmse: rmse(&mos, &pred)?,
        outlier_ratio: outlier_ratio(&subjective, &pred, options.outlier_threshold)?,
        fitted_coefficients: fitted.coefficients,
        train_sse: fitted.final_sse,
        prediction_failures: failures,
    };
    Ok((report, preds))
}

/// Cross-validates every model over one shared plan and ranks them.
pub fn compare_models(
    models: &[ModelId],
    dataset: &Dataset,
    k: usize,
    seed: u64,
    options: &EvalOptions,
) -> Result<Comparison> {
    let plan = make_folds(dataset, k, seed)?;
    let mut reports = models
        .iter()
        .map(|&m| cross_validate_with_plan(m, dataset, &plan, None, options))
        .collect::<Result<Vec<_>>>()?;
    reports.sort_by(|a, b| rank(a.aggregate.pcc, b.aggregate.pcc));
    Ok(Comparison {
        k,
        seed,
        fold_plan: plan,
        reports,
    })
}

fn rank(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

pub const COMPARISON_CSV_HEADER: [&str; 4] = ["model", "PCC", "RMSE", "OR"];
pub const RESIDUAL_CSV_HEADER: [&str; 4] = ["sequence_id", "mos", "predicted", "fold"];

/// Writes the model/PCC/RMSE/OR table; an undefined PCC is left blank.
pub fn write_comparison_csv<W: Write>(writer: W, reports: &[EvalReport]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(COMPARISON_CSV_HEADER)?;
    for r in reports {
        wtr.write_record([
            r.model.as_str().to_string(),
            r.aggregate.pcc.map(|v| v.to_string()).unwrap_or_default(),
            r.aggregate.rmse.to_string(),
            r.aggregate.outlier_ratio.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `sequence_id,mos,predicted,fold` rows for scatter plots.
pub fn write_residuals_csv<W: Write>(writer: W, report: &EvalReport) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(RESIDUAL_CSV_HEADER)?;
    for r in &report.residuals {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
