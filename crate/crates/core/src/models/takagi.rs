use super::{finite, positive, Prediction, TakagiCoefficients};
use crate::error::{Error, Result};
use crate::features::StreamFeatures;

const MODEL: &str = "takagi";

/// Lower bound applied to the coding complexity before taking logarithms.
pub const TAKAGI_VC_FLOOR: f64 = 1e-6;

/// Logistic in QP whose slope, midpoint and ceiling depend on resolution
/// (pixel count), frame rate and coding complexity.
///
/// `log` terms are base 10 except the complexity term of β, which is natural.
/// The curve is evaluated exactly as `-1 / (1/γ + e^{α(QP−β)}) + γ`, so with
/// α > 0 it rises with QP.
pub fn predict_takagi(f: &StreamFeatures, k: &TakagiCoefficients) -> Result<Prediction> {
    let br = positive(MODEL, "bitrate", f.bitrate_kbps)?;
    let fr = positive(MODEL, "framerate", f.framerate_fps)?;
    let r = positive(MODEL, "resolution", f.num_pixels())?;
    let qp = finite(MODEL, "QP", f.avg_qp)?;

    let v_c = (qp - k.e * br.ln()).max(TAKAGI_VC_FLOOR);
    let (log_r, log_fr) = (r.log10(), fr.log10());
    let alpha = k.a1 * log_r + k.b1 * log_fr + k.c1 * v_c.log10() + k.d1;
    let beta = k.a2 * log_r + k.b2 * log_fr + k.c2 * v_c.ln() + k.d2;
    let gamma = k.a3 * log_r + k.b3 * log_fr + k.c3 * v_c.log10() + k.d3;
    if gamma == 0.0 {
        return Err(Error::domain(MODEL, "gamma is zero"));
    }
    let mos_p = -1.0 / (1.0 / gamma + (alpha * (qp - beta)).exp()) + gamma;
    let mos_p = finite(MODEL, "MOS_p", mos_p)?;

    Ok(Prediction::new(mos_p, mos_p)
        .with("v_c", v_c)
        .with("alpha", alpha)
        .with("beta", beta)
        .with("gamma", gamma))
}
