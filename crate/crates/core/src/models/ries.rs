use super::{finite, warn_once, Prediction, RiesCoefficients};
use crate::error::{Error, Result};
use crate::features::StreamFeatures;

const MODEL: &str = "ries";

/// Content-class model; the class picks one row of coefficients. A missing
/// class falls back to row 0.
pub fn predict_ries(f: &StreamFeatures, k: &RiesCoefficients) -> Result<Prediction> {
    let br = f.bitrate_kbps;
    let fr = f.framerate_fps;
    if br == 0.0 || fr == 0.0 {
        return Err(Error::domain(
            MODEL,
            "bitrate and framerate must be non-zero",
        ));
    }
    let class = match f.content_class {
        Some(c) => usize::from(c),
        None => {
            warn_once!("ries: content class missing, using class 0");
            0
        }
    };
    let row = k.classes.get(class).ok_or_else(|| {
        Error::domain(
            MODEL,
            format!("content class {class} has no coefficient row"),
        )
    })?;
    let [c1, c2, c3, c4, c5] = *row;
    let qv = finite(MODEL, "QV", c1 + c2 * br + c3 / br + c4 * fr + c5 / fr)?;

    Ok(Prediction::new(qv, qv).with("content_class", class as f64))
}
