use crate::error::{Error, Result};
use crate::features::SubjectiveRecord;

/// Residual threshold used when a sequence has no confidence interval.
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 0.25;

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(())
}

/// Pearson correlation, accumulated with single-pass co-moment updates.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least two points, got {}",
            x.len()
        )));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let n = (i + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / n;
        my += dy / n;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    if x.is_empty() {
        return Err(Error::InvalidInput("rmse of empty vectors".into()));
    }
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / x.len() as f64).sqrt())
}

/// Share of sequences whose absolute residual exceeds their 95 % CI
/// half-width, or `fallback_threshold` when the CI is unknown.
pub fn outlier_ratio(
    subjective: &[SubjectiveRecord],
    predicted: &[f64],
    fallback_threshold: f64,
) -> Result<f64> {
    if subjective.len() != predicted.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            subjective.len(),
            predicted.len()
        )));
    }
    if subjective.is_empty() {
        return Ok(0.0);
    }
    let outliers = subjective
        .iter()
        .zip(predicted)
        .filter(|(s, &p)| (s.mos - p).abs() > s.ci95_halfwidth.unwrap_or(fallback_threshold))
        .count();
    Ok(outliers as f64 / subjective.len() as f64)
}
