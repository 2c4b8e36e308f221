//! Parametric MOS predictors.
//!
//! Each predictor is a pure function of the stream features, the display
//! context (for the two models that use one) and a coefficient vector. Every
//! model applies its own native clamps first and the final [1, 5] MOS clamp
//! last.

mod coefficients;
mod g1070;
mod joskowicz;
mod p1201;
mod p1203;
mod ries;
mod takagi;
mod transform;
mod uves;
mod yamagishi;


use serde::Serialize;

pub use coefficients::{
    bundled_defaults, parse_coefficient_file, CoefficientDocument, CoefficientSet,
    G1070Coefficients, JoskowiczCoefficients, ModelId, P1201Coefficients, P1203Coefficients,
    RiesCoefficients, TakagiCoefficients, UvesCodingCoefficients, UvesCoefficients,
    YamagishiCoefficients, BUNDLED_DEFAULTS, RIES_CLASSES,
};
pub use g1070::predict_g1070;
pub use joskowicz::predict_joskowicz;
pub use p1201::{predict_p1201_1, predict_p1201_2, P1201_1_DEFAULT_CPX};
pub use p1203::predict_p1203_mode3;
pub use ries::predict_ries;
pub use takagi::{predict_takagi, TAKAGI_VC_FLOOR};
pub use transform::{mos_from_r, r_floor, r_from_mos, MOS_AT_R_MAX};
pub use uves::{predict_uves_mode1, predict_uves_model1_1, UVES_N1, UVES_N2};
pub use yamagishi::predict_yamagishi;

use crate::error::{Error, Result};
use crate::features::{DisplayParams, StreamFeatures};

pub const MOS_MIN: f64 = 1.0;
pub const MOS_MAX: f64 = 5.0;

/// A model output: the MOS, the model's own-scale value and the named
/// intermediate quantities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub mos: f64,
    pub native_scale_value: f64,
    pub breakdown: Breakdown,
}

/// Named intermediate values in the order the model computes them.
///
/// A plain vector rather than a map: predictions sit in the fitting inner
/// loop and a handful of entries is cheaper to scan than to index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Breakdown(Vec<(&'static str, f64)>);

impl Breakdown {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Serialize for Breakdown {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Prediction {
    pub(crate) fn new(mos: f64, native_scale_value: f64) -> Self {
        Self {
            mos: clamp_mos(mos),
            native_scale_value,
            breakdown: Breakdown(Vec::with_capacity(10)),
        }
    }

    pub(crate) fn with(mut self, name: &'static str, value: f64) -> Self {
        self.breakdown.0.push((name, value));
        self
    }

    /// An intermediate value by name.
    pub fn get(&self, name: &str) -> Option<f64> {
        self.breakdown.get(name)
    }
}

pub(crate) fn clamp_mos(v: f64) -> f64 {
    v.clamp(MOS_MIN, MOS_MAX)
}

/// Fails with a domain error when an intermediate value is not finite.
pub(crate) fn finite(model: &'static str, name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(model, format!("{name} evaluated to {v}")))
    }
}

pub(crate) fn positive(model: &'static str, name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::domain(
            model,
            format!("{name} must be positive, got {v}"),
        ))
    }
}

/// Dispatches to the predictor matching the coefficient set.
pub fn predict(
    features: &StreamFeatures,
    display: &DisplayParams,
    coefficients: &CoefficientSet,
) -> Result<Prediction> {
    match coefficients {
        CoefficientSet::G1070(k) => predict_g1070(features, k),
        CoefficientSet::P1201_1(k) => predict_p1201_1(features, k),
        CoefficientSet::P1201_2(k) => predict_p1201_2(features, k),
        CoefficientSet::P1203(k) => predict_p1203_mode3(features, display, k),
        CoefficientSet::Yamagishi(k) => predict_yamagishi(features, k),
        CoefficientSet::Ries(k) => predict_ries(features, k),
        CoefficientSet::Joskowicz(k) => predict_joskowicz(features, k),
        CoefficientSet::Takagi(k) => predict_takagi(features, k),
        CoefficientSet::Uves(k) => predict_uves_mode1(features, display, k),
        CoefficientSet::UvesCoding(k) => predict_uves_model1_1(features, k),
    }
}

/// Logs a warning the first time a call site is reached.
macro_rules! warn_once {
    ($($arg:tt)+) => {{
        static ONCE: std::sync::Once = std::sync::Once::new();
        ONCE.call_once(|| log::warn!($($arg)+));
    }};
}
pub(crate) use warn_once;
