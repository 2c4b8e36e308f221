use super::{finite, positive, Prediction, YamagishiCoefficients};
use crate::error::{Error, Result};
use crate::features::StreamFeatures;

const MODEL: &str = "yamagishi";

pub fn predict_yamagishi(f: &StreamFeatures, k: &YamagishiCoefficients) -> Result<Prediction> {
    let br = positive(MODEL, "bitrate", f.bitrate_kbps)?;
    let fr = positive(MODEL, "framerate", f.framerate_fps)?;

    let f_o = k.c1 + k.c2 * br;
    if !(f_o > 0.0) {
        return Err(Error::domain(
            MODEL,
            format!("optimal frame rate must be positive, got {f_o}"),
        ));
    }
    let d_fr = finite(MODEL, "D_Fr", k.c3 + k.c4 * br)?;
    if d_fr == 0.0 {
        return Err(Error::domain(MODEL, "D_Fr is zero"));
    }
    if k.c6 == 0.0 {
        return Err(Error::domain(MODEL, "c6 is zero"));
    }
    let v0 = finite(
        MODEL,
        "v_0",
        k.c5 * (1.0 - 1.0 / (1.0 + (br / k.c6).powf(k.c7))),
    )?;
    let log_gap = fr.ln() - f_o.ln();
    let v_c = v0 * (-(log_gap * log_gap) / (2.0 * d_fr * d_fr)).exp();
    let qv = finite(MODEL, "QV", 1.0 + v_c)?;

    Ok(Prediction::new(qv, qv)
        .with("f_o", f_o)
        .with("D_Fr", d_fr)
        .with("v_0", v0)
        .with("v_c", v_c))
}
