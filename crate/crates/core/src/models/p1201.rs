use super::{finite, mos_from_r, positive, P1201Coefficients, Prediction};
use crate::error::{Error, Result};
use crate::features::StreamFeatures;

/// Content complexity assumed when the I-frame size is unknown.
pub const P1201_1_DEFAULT_CPX: f64 = 0.5;

const MODEL_1: &str = "p1201_1";
const MODEL_2: &str = "p1201_2";

/// Lower-resolution model. Below 24 fps the quality is `5 − Qcod`; from 24
/// fps up the complexity/frame-rate factor is applied.
pub fn predict_p1201_1(f: &StreamFeatures, k: &P1201Coefficients) -> Result<Prediction> {
    let br = positive(MODEL_1, "bitrate", f.bitrate_kbps)?;
    let fr = positive(MODEL_1, "framerate", f.framerate_fps)?;

    let cpx = if f.imputed.avg_bytes_per_iframe_imputed {
        P1201_1_DEFAULT_CPX
    } else {
        let bytes = f.avg_bytes_per_iframe;
        if !(bytes > 0.0) {
            return Err(Error::domain(
                MODEL_1,
                format!("average I-frame size must be positive, got {bytes}"),
            ));
        }
        (br / bytes).sqrt().min(1.0)
    };

    let normbr = br * 8.0 * 30.0 / (1000.0 * fr.min(30.0));
    let shape = k.c3 * cpx + k.c4;
    let qcod = finite(MODEL_1, "Qcod", 4.0 / (1.0 + (normbr / shape).powf(shape)))?;
    let qv = if fr < 24.0 {
        5.0 - qcod
    } else {
        (5.0 - qcod) * (1.0 + k.c1 * cpx - k.c2 * cpx * (1000.0 / fr).log10())
    };
    let qv = finite(MODEL_1, "QV", qv)?;

    Ok(Prediction::new(qv, qv)
        .with("Qcod", qcod)
        .with("normbr_v", normbr)
        .with("cpx_video", cpx))
}

/// Higher-resolution model on the 0–100 scale; compared against MOS through
/// [`mos_from_r`].
pub fn predict_p1201_2(f: &StreamFeatures, k: &P1201Coefficients) -> Result<Prediction> {
    let br = positive(MODEL_2, "bitrate", f.bitrate_kbps)?;
    let fr = positive(MODEL_2, "framerate", f.framerate_fps)?;
    let pixels = positive(MODEL_2, "pixels per frame", f.num_pixels())?;
    if f.scenes.is_empty() {
        return Err(Error::domain(MODEL_2, "no scenes"));
    }

    let bit_per_pixel = br * 1e6 / (pixels * fr);
    let (num, den) = f.scenes.iter().fold((0.0, 0.0), |(n, d), sc| {
        let wn = sc.weight * f64::from(sc.gop_count);
        (n + wn, d + sc.avg_iframe_bytes * wn)
    });
    if den == 0.0 {
        return Err(Error::domain(MODEL_2, "all scene I-frame sizes are zero"));
    }
    let cpx = num / den * (pixels * fr / 1000.0);

    let qcod = k.c1 * (k.c2 * bit_per_pixel).exp() + k.c3 * cpx + k.c4;
    let qcod = finite(MODEL_2, "Qcod", qcod)?;
    let qv = (100.0 - qcod).clamp(0.0, 100.0);
    let mos = mos_from_r(qv)?;

    Ok(Prediction::new(mos, qv)
        .with("Qcod", qcod)
        .with("bitPerPixel", bit_per_pixel)
        .with("cpx_video", cpx))
}
