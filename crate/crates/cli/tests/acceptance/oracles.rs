//! Straight-line reference evaluations of the nine models.
//!
//! Each function works on plain scalars and a flat coefficient slice and is
//! written directly from the printed model equations. Nothing here calls into
//! the library. NaN marks inputs outside a model's domain.

// min/max chains keep the bounds logic apart from the library's `clamp`.
#![allow(clippy::manual_clamp)]

/// Scalar inputs shared by all models.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub br: f64,
    pub fr: f64,
    pub width: f64,
    pub height: f64,
    pub avg_bytes_i: f64,
    pub avg_qp: f64,
    pub max_qp: f64,
    pub min_qp: f64,
    pub iflicker: f64,
    pub skip_ratio: f64,
    pub avg_mv: f64,
    pub kfr: f64,
    pub sad: f64,
    pub class: usize,
    pub quant: f64,
    /// (GOP count, mean I-frame bytes, weight) per scene.
    pub scenes: Vec<(f64, f64, f64)>,
    pub screen_inches: f64,
    pub display_width: f64,
    pub display_height: f64,
    pub handheld: bool,
}

fn clamp_mos(x: f64) -> f64 {
    x.max(1.0).min(5.0)
}

/// MOS from the 0..100 scale.
pub fn mos_from_r(q: f64) -> f64 {
    let r = q.max(0.0).min(100.0);
    let m = 1.0 + 0.035 * r + r * (r - 60.0) * (100.0 - r) * 0.000007;
    m.max(1.0)
}

/// 0..100 value from MOS by plain bisection of the cubic on its increasing
/// range.
pub fn r_from_mos(mos: f64) -> f64 {
    let target = mos.max(1.0).min(4.5);
    let mut lo = 80.0 - 5400f64.sqrt();
    let mut hi = 100.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = 1.0 + 0.035 * mid + mid * (mid - 60.0) * (100.0 - mid) * 0.000007;
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn g1070(x: &Inputs, a: &[f64]) -> f64 {
    let mut i_ofr = a[0] - a[1] / (1.0 + (x.br / a[2]).powf(a[3]));
    if i_ofr < 0.0 {
        i_ofr = 0.0;
    }
    if i_ofr > 4.0 {
        i_ofr = 4.0;
    }
    let mut o_fr = a[4] + a[5] * x.br;
    if o_fr < 0.0 {
        o_fr = 0.0;
    }
    if o_fr > 30.0 {
        o_fr = 30.0;
    }
    if o_fr == 0.0 {
        return f64::NAN;
    }
    let d_fr = a[6] + a[7] * x.br;
    let i_coding = i_ofr * (-((x.fr.ln() - o_fr.ln()).powi(2)) / (2.0 * d_fr * d_fr)).exp();
    clamp_mos(1.0 + i_coding)
}

pub fn p1201_1(x: &Inputs, c: &[f64]) -> f64 {
    let cpx = (x.br / x.avg_bytes_i).sqrt().min(1.0);
    let normbr = x.br * 8.0 * 30.0 / (1000.0 * x.fr.min(30.0));
    let s = c[2] * cpx + c[3];
    let qcod = 4.0 / (1.0 + (normbr / s).powf(s));
    let qv = if x.fr < 24.0 {
        5.0 - qcod
    } else {
        (5.0 - qcod) * (1.0 + c[0] * cpx - c[1] * cpx * (1000.0 / x.fr).log10())
    };
    clamp_mos(qv)
}

/// Returns (MOS, 0..100 value).
pub fn p1201_2(x: &Inputs, c: &[f64]) -> (f64, f64) {
    let pixels = x.width * x.height;
    let bpp = x.br * 1_000_000.0 / (pixels * x.fr);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(n, s, w) in &x.scenes {
        num += w * n;
        den += s * w * n;
    }
    let cpx = num / den * (pixels * x.fr / 1000.0);
    let qcod = c[0] * (c[1] * bpp).exp() + c[2] * cpx + c[3];
    let qv = (100.0 - qcod).max(0.0).min(100.0);
    (clamp_mos(mos_from_r(qv)), qv)
}

/// Returns (MOS, Q).
pub fn p1203(x: &Inputs, k: &[f64]) -> (f64, f64) {
    let (q1, q2, q3, u1, u2, t1, t2, t3) = (k[0], k[1], k[2], k[3], k[4], k[5], k[6], k[7]);
    let (h1, h2, h3, h4) = (k[8], k[9], k[10], k[11]);
    let mos_q = (q1 + q2 * (q3 * x.quant).exp()).min(5.0).max(1.0);
    let dq = (100.0 - r_from_mos(mos_q)).min(100.0).max(0.0);
    let scale = (x.display_width * x.display_height / (x.width * x.height)).max(1.0);
    let du = (u1 * (u2 * (scale - 1.0) + 1.0).log10())
        .min(100.0)
        .max(0.0);
    let dt = if x.fr < 24.0 {
        let dt1 = 100.0 * (t1 - t2 * x.fr) / (t3 + x.fr);
        let dt2 = dq * (t1 - t2 * x.fr) / (t3 + x.fr);
        let dt3 = du * (t1 - t2 * x.fr) / (t3 + x.fr);
        dt1 - dt2 - dt3
    } else {
        0.0
    };
    let dt = dt.min(100.0).max(0.0);
    let d = (dq + du + dt).min(100.0).max(0.0);
    let q = 100.0 - d;
    let mut mos = if du == 0.0 && dt == 0.0 {
        mos_q
    } else {
        mos_from_r(q)
    };
    if x.handheld {
        mos = (h1 + h2 * mos + h3 * mos * mos + h4 * mos * mos * mos)
            .min(5.0)
            .max(1.0);
    }
    (clamp_mos(mos), q)
}

pub fn yamagishi(x: &Inputs, c: &[f64]) -> f64 {
    let f_o = c[0] + c[1] * x.br;
    if f_o <= 0.0 {
        return f64::NAN;
    }
    let d_fr = c[2] + c[3] * x.br;
    let v0 = c[4] * (1.0 - 1.0 / (1.0 + (x.br / c[5]).powf(c[6])));
    let v_c = v0 * (-((x.fr.ln() - f_o.ln()).powi(2)) / (2.0 * d_fr * d_fr)).exp();
    clamp_mos(1.0 + v_c)
}

pub fn ries(x: &Inputs, c: &[f64]) -> f64 {
    let row = &c[x.class * 5..x.class * 5 + 5];
    clamp_mos(row[0] + row[1] * x.br + row[2] / x.br + row[3] * x.fr + row[4] / x.fr)
}

pub fn joskowicz(x: &Inputs, c: &[f64]) -> f64 {
    let v1 = c[0] * x.sad.powf(c[1]) + c[2];
    if v1 <= 0.0 {
        return f64::NAN;
    }
    let v2 = c[3] * x.sad.powf(c[4]) + c[5];
    let v_c = 4.0 * (1.0 - 1.0 / (1.0 + (x.br / v1).powf(v2)));
    clamp_mos(1.0 + v_c)
}

pub fn takagi(x: &Inputs, k: &[f64]) -> f64 {
    let (a1, a2, a3, b1, b2, b3) = (k[0], k[1], k[2], k[3], k[4], k[5]);
    let (c1, c2, c3, d1, d2, d3, e) = (k[6], k[7], k[8], k[9], k[10], k[11], k[12]);
    let r = x.width * x.height;
    let v_c = (x.avg_qp - e * x.br.ln()).max(0.000001);
    let alpha = a1 * r.log10() + b1 * x.fr.log10() + c1 * v_c.log10() + d1;
    let beta = a2 * r.log10() + b2 * x.fr.log10() + c2 * v_c.ln() + d2;
    let gamma = a3 * r.log10() + b3 * x.fr.log10() + c3 * v_c.log10() + d3;
    let mos = -1.0 / (1.0 / gamma + (alpha * (x.avg_qp - beta)).exp()) + gamma;
    clamp_mos(mos)
}

fn uves_qcod(x: &Inputs, n: &[f64]) -> f64 {
    let kfr_imp = n[1] * x.kfr + n[2];
    let qp_fr = n[3]
        + n[4] * (x.avg_qp / 51.0).powf(n[5])
        + n[6] * (1.0 / x.fr)
        + n[7] * x.iflicker
        + n[8] * (x.max_qp - x.min_qp);
    let cpx = ((x.br / x.avg_bytes_i).sqrt() + n[9] * x.skip_ratio).min(1.0);
    let mv_imp = n[10] * x.avg_mv * (1.0 - x.fr / 30.0);
    let qcod = kfr_imp * (n[0] * (qp_fr + cpx + mv_imp)).exp();
    qcod.max(1.0).min(5.0)
}

pub fn uves_model1_1(x: &Inputs, n: &[f64]) -> f64 {
    clamp_mos(uves_qcod(x, n))
}

pub fn uves_mode1(x: &Inputs, n: &[f64]) -> f64 {
    let qcod = uves_qcod(x, n);
    let ppi = (x.width * x.width + x.height * x.height).sqrt() / x.screen_inches;
    let q_disp =
        n[13] * (1.0 - 1.0 / (1.0 + (ppi / (n[14] * x.screen_inches.powf(n[15]))).powf(n[16])));
    let q_disp = q_disp.min(5.0).max(1.0);
    let qd = q_disp - (q_disp - 1.0) / (1.0 + (n[11] * x.avg_qp / n[12]).exp());
    let qs = qd - (5.0 - qcod) * (qd - 4.0) / 100.0;
    clamp_mos(qs.max(1.0).min(5.0))
}
