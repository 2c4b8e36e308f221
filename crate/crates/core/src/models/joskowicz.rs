use super::{finite, positive, warn_once, JoskowiczCoefficients, Prediction};
use crate::error::{Error, Result};
use crate::features::StreamFeatures;

const MODEL: &str = "joskowicz";

/// Logistic bit-rate model whose knee (v1) and slope (v2) depend on the
/// clip's SAD per pixel. A missing SAD is treated as 0.
pub fn predict_joskowicz(f: &StreamFeatures, k: &JoskowiczCoefficients) -> Result<Prediction> {
    let br = positive(MODEL, "bitrate", f.bitrate_kbps)?;
    let sad = match f.sad_per_pixel {
        Some(s) => s,
        None => {
            warn_once!("joskowicz: SAD per pixel missing, using 0");
            0.0
        }
    };
    if !(sad >= 0.0) {
        return Err(Error::domain(MODEL, format!("SAD must be >= 0, got {sad}")));
    }
    let v1 = finite(MODEL, "v1", k.c1 * sad.powf(k.c2) + k.c3)?;
    if v1 <= 0.0 {
        return Err(Error::domain(
            MODEL,
            format!("v1 must be positive, got {v1}"),
        ));
    }
    let v2 = finite(MODEL, "v2", k.c4 * sad.powf(k.c5) + k.c6)?;
    let v_c = 4.0 * (1.0 - 1.0 / (1.0 + (br / v1).powf(v2)));
    let qv = finite(MODEL, "QV", 1.0 + v_c)?;

    Ok(Prediction::new(qv, qv)
        .with("v1", v1)
        .with("v2", v2)
        .with("v_c", v_c))
}
