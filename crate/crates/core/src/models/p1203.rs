use super::{clamp_mos, finite, mos_from_r, r_from_mos, P1203Coefficients, Prediction};
use crate::error::{Error, Result};
use crate::features::{DeviceType, DisplayParams, StreamFeatures};

const MODEL: &str = "p1203_mode3";

/// Video quality module, mode 3: quantisation, upscaling and temporal
/// degradations combined on the 0–100 scale.
///
/// Clamp order: MOSq → Dq → Du → Dt → D, then the MOS branch and, for
/// handheld devices, the cubic adjustment with its own clamp.
pub fn predict_p1203_mode3(
    f: &StreamFeatures,
    d: &DisplayParams,
    k: &P1203Coefficients,
) -> Result<Prediction> {
    let quant = finite(MODEL, "quant", f.quant)?;
    let framerate = finite(MODEL, "framerate", f.framerate_fps)?;
    let cod_res = f.num_pixels();
    let dis_res = d.num_pixels();
    if !(cod_res > 0.0 && dis_res > 0.0) {
        return Err(Error::domain(MODEL, "resolutions must be positive"));
    }

    let mos_q_raw = finite(MODEL, "MOSq", k.q1 + k.q2 * (k.q3 * quant).exp())?;
    let mos_q = mos_q_raw.clamp(1.0, 5.0);
    let dq = (100.0 - r_from_mos(mos_q)?).clamp(0.0, 100.0);

    let scale_factor = (dis_res / cod_res).max(1.0);
    let du = k.u1 * (k.u2 * (scale_factor - 1.0) + 1.0).log10();
    let du = finite(MODEL, "Du", du)?.clamp(0.0, 100.0);

    let (dt1, dt2, dt3, dt) = if framerate < 24.0 {
        let temporal = (k.t1 - k.t2 * framerate) / (k.t3 + framerate);
        let dt1 = 100.0 * temporal;
        let dt2 = dq * temporal;
        let dt3 = du * temporal;
        (dt1, dt2, dt3, dt1 - dt2 - dt3)
    } else {
        (0.0, 0.0, 0.0, 0.0)
    };
    let dt = finite(MODEL, "Dt", dt)?.clamp(0.0, 100.0);

    let degradation = (dq + du + dt).clamp(0.0, 100.0);
    let q = 100.0 - degradation;
    let tv_mos = if du == 0.0 && dt == 0.0 {
        mos_q
    } else {
        mos_from_r(q)?
    };
    let mos = match d.device_type {
        DeviceType::Tv => tv_mos,
        DeviceType::Handheld => {
            let adjusted = k.h1 + k.h2 * tv_mos + k.h3 * tv_mos.powi(2) + k.h4 * tv_mos.powi(3);
            finite(MODEL, "MOSq_handheld", adjusted)?.clamp(1.0, 5.0)
        }
    };

    Ok(Prediction::new(clamp_mos(mos), q)
        .with("MOSq", mos_q)
        .with("Dq", dq)
        .with("scaleFactor", scale_factor)
        .with("Du", du)
        .with("Dt1", dt1)
        .with("Dt2", dt2)
        .with("Dt3", dt3)
        .with("Dt", dt)
        .with("D", degradation)
        .with("Q", q))
}
