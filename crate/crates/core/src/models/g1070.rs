use super::{finite, positive, G1070Coefficients, Prediction};
use crate::error::{Error, Result};
use crate::features::StreamFeatures;

const MODEL: &str = "g1070";

/// Videophone opinion model: a Gaussian in log frame rate centred on the
/// bit-rate-dependent optimal frame rate.
pub fn predict_g1070(f: &StreamFeatures, k: &G1070Coefficients) -> Result<Prediction> {
    let br = positive(MODEL, "bitrate", f.bitrate_kbps)?;
    let fr = positive(MODEL, "framerate", f.framerate_fps)?;

    let i_ofr = k.a1 - k.a2 / (1.0 + (br / k.a3).powf(k.a4));
    let i_ofr = finite(MODEL, "I_ofr", i_ofr)?.clamp(0.0, 4.0);
    let o_fr = finite(MODEL, "O_fr", k.a5 + k.a6 * br)?.clamp(0.0, 30.0);
    if o_fr <= 0.0 {
        return Err(Error::domain(MODEL, "optimal frame rate clamps to 0"));
    }
    let d_fr = finite(MODEL, "D_FrV", k.a7 + k.a8 * br)?;
    if d_fr == 0.0 {
        return Err(Error::domain(MODEL, "D_FrV is zero"));
    }
    let log_gap = fr.ln() - o_fr.ln();
    let i_coding = i_ofr * (-(log_gap * log_gap) / (2.0 * d_fr * d_fr)).exp();
    let qv = finite(MODEL, "QV", 1.0 + i_coding)?;

    Ok(Prediction::new(qv, qv)
        .with("I_ofr", i_ofr)
        .with("O_fr", o_fr)
        .with("D_FrV", d_fr)
        .with("I_coding", i_coding))
}
