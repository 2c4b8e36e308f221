use super::{finite, positive, Prediction, UvesCodingCoefficients, UvesCoefficients};
use crate::error::{Error, Result};
use crate::features::{DisplayParams, StreamFeatures, MAX_QP};

const MODEL: &str = "uves_mode1";

pub const UVES_N1: f64 = 4.0;
pub const UVES_N2: f64 = 100.0;

struct Coding {
    qcod: f64,
    kfr_imp: f64,
    qp_fr: f64,
    cpx: f64,
    mv_imp: f64,
}

fn coding_quality(f: &StreamFeatures, n: &[f64; 11]) -> Result<Coding> {
    let [n1, n2, n3, n4, n5, n6, n7, n8, n9, n10, n11] = *n;
    let fr = positive(MODEL, "framerate", f.framerate_fps)?;
    let br = positive(MODEL, "bitrate", f.bitrate_kbps)?;
    let avg_bytes = f.avg_bytes_per_iframe;
    if !(avg_bytes > 0.0) {
        return Err(Error::domain(
            MODEL,
            format!("average I-frame size must be positive, got {avg_bytes}"),
        ));
    }

    let kfr_imp = n2 * f.key_frame_rate + n3;
    let qp_fr = n4
        + n5 * (f.avg_qp / MAX_QP).powf(n6)
        + n7 / fr
        + n8 * f64::from(f.iflicker_count)
        + n9 * (f.max_qp - f.min_qp);
    let cpx = ((br / avg_bytes).sqrt() + n10 * f.skip_ratio).min(1.0);
    let mv_imp = n11 * f.avg_mv * (1.0 - fr / 30.0);
    let qcod = kfr_imp * (n1 * (qp_fr + cpx + mv_imp)).exp();
    let qcod = finite(MODEL, "Qcod", qcod)?.clamp(1.0, 5.0);
    Ok(Coding {
        qcod,
        kfr_imp,
        qp_fr: finite(MODEL, "QP_fr", qp_fr)?,
        cpx,
        mv_imp,
    })
}

/// Coding-quality sub-model (Model 1.1) alone; its Qcod is the MOS.
pub fn predict_uves_model1_1(f: &StreamFeatures, k: &UvesCodingCoefficients) -> Result<Prediction> {
    let n = [
        k.n1, k.n2, k.n3, k.n4, k.n5, k.n6, k.n7, k.n8, k.n9, k.n10, k.n11,
    ];
    let c = coding_quality(f, &n)?;
    Ok(Prediction::new(c.qcod, c.qcod)
        .with("Qcod", c.qcod)
        .with("kfr_imp", c.kfr_imp)
        .with("QP_fr", c.qp_fr)
        .with("cpx", c.cpx)
        .with("MV_imp", c.mv_imp))
}

/// Full Mode 1: coding quality combined with display quality driven by
/// pixel density and screen size.
pub fn predict_uves_mode1(
    f: &StreamFeatures,
    d: &DisplayParams,
    k: &UvesCoefficients,
) -> Result<Prediction> {
    let n = [
        k.n1, k.n2, k.n3, k.n4, k.n5, k.n6, k.n7, k.n8, k.n9, k.n10, k.n11,
    ];
    let c = coding_quality(f, &n)?;

    let screen = d.screen_size_inches;
    if !(screen > 0.0) {
        return Err(Error::domain(MODEL, "screen size must be positive"));
    }
    let (w, h) = (f64::from(f.width_px), f64::from(f.height_px));
    let ppi = (w * w + h * h).sqrt() / screen;
    let q_disp = k.n14 * (1.0 - 1.0 / (1.0 + (ppi / (k.n15 * screen.powf(k.n16))).powf(k.n17)));
    let q_disp = finite(MODEL, "Q_disp", q_disp)?.clamp(1.0, 5.0);
    let qd = q_disp - (q_disp - 1.0) / (1.0 + (k.n12 * f.avg_qp / k.n13).exp());
    let qd = finite(MODEL, "Qd", qd)?;

    let qs = qd - (5.0 - c.qcod) * (qd - UVES_N1) / UVES_N2;
    let qs = finite(MODEL, "Qs", qs)?.clamp(1.0, 5.0);

    Ok(Prediction::new(qs, qs)
        .with("Qcod", c.qcod)
        .with("Qd", qd)
        .with("Q_Disp", q_disp)
        .with("ppi", ppi)
        .with("kfr_imp", c.kfr_imp)
        .with("QP_fr", c.qp_fr)
        .with("cpx", c.cpx)
        .with("MV_imp", c.mv_imp))
}
