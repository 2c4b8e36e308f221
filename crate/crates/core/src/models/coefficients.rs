//! Coefficient vectors for every model and their JSON document form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Deserializer;
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies a quality model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    G1070,
    P1201_1,
    P1201_2,
    P1203Mode3,
    Yamagishi,
    Ries,
    Joskowicz,
    Takagi,
    UvesMode1,
    /// uVES coding-quality sub-model on its own (no display parameters).
    UvesModel1_1,
}

impl ModelId {
    /// The nine models of the comparison.
    pub const PRIMARY: [ModelId; 9] = [
        ModelId::G1070,
        ModelId::P1201_1,
        ModelId::P1201_2,
        ModelId::P1203Mode3,
        ModelId::Yamagishi,
        ModelId::Ries,
        ModelId::Joskowicz,
        ModelId::Takagi,
        ModelId::UvesMode1,
    ];

    pub const ALL: [ModelId; 10] = [
        ModelId::G1070,
        ModelId::P1201_1,
        ModelId::P1201_2,
        ModelId::P1203Mode3,
        ModelId::Yamagishi,
        ModelId::Ries,
        ModelId::Joskowicz,
        ModelId::Takagi,
        ModelId::UvesMode1,
        ModelId::UvesModel1_1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::G1070 => "g1070",
            ModelId::P1201_1 => "p1201_1",
            ModelId::P1201_2 => "p1201_2",
            ModelId::P1203Mode3 => "p1203_mode3",
            ModelId::Yamagishi => "yamagishi",
            ModelId::Ries => "ries",
            ModelId::Joskowicz => "joskowicz",
            ModelId::Takagi => "takagi",
            ModelId::UvesMode1 => "uves_mode1",
            ModelId::UvesModel1_1 => "uves_model1_1",
        }
    }

    pub fn coefficient_names(self) -> Vec<String> {
        let names: &[&str] = match self {
            ModelId::G1070 => G1070Coefficients::NAMES,
            ModelId::P1201_1 | ModelId::P1201_2 => P1201Coefficients::NAMES,
            ModelId::P1203Mode3 => P1203Coefficients::NAMES,
            ModelId::Yamagishi => YamagishiCoefficients::NAMES,
            ModelId::Ries => return RiesCoefficients::names(),
            ModelId::Joskowicz => JoskowiczCoefficients::NAMES,
            ModelId::Takagi => TakagiCoefficients::NAMES,
            ModelId::UvesMode1 => UvesCoefficients::NAMES,
            ModelId::UvesModel1_1 => UvesCodingCoefficients::NAMES,
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn arity(self) -> usize {
        match self {
            ModelId::Ries => RIES_CLASSES * 5,
            _ => self.coefficient_names().len(),
        }
    }

    fn known_list() -> String {
        ModelId::ALL
            .iter()
            .map(|m| m.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let needle = s.trim().to_ascii_lowercase();
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == needle)
            .ok_or_else(|| Error::UnknownModel {
                given: s.to_string(),
                known: ModelId::known_list(),
            })
    }
}

impl Serialize for ModelId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ModelId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! coefficient_struct {
    ($(#[$meta:meta])* $name:ident { $($field:ident),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq)]
        pub struct $name {
            $(pub $field: f64,)+
        }

        impl $name {
            pub const NAMES: &'static [&'static str] = &[$(stringify!($field)),+];

            pub fn to_vec(&self) -> Vec<f64> {
                vec![$(self.$field),+]
            }

            pub(crate) fn from_slice(v: &[f64]) -> Self {
                let mut it = v.iter().copied();
                Self {
                    $($field: it.next().expect("arity checked by caller"),)+
                }
            }
        }
    };
}

coefficient_struct!(
    /// a1..a8.
    G1070Coefficients { a1, a2, a3, a4, a5, a6, a7, a8 }
);
coefficient_struct!(
    /// c1..c4, shared layout for P.1201.1 and P.1201.2.
    P1201Coefficients { c1, c2, c3, c4 }
);
coefficient_struct!(P1203Coefficients {
    q1,
    q2,
    q3,
    u1,
    u2,
    t1,
    t2,
    t3,
    h1,
    h2,
    h3,
    h4
});
coefficient_struct!(YamagishiCoefficients {
    c1,
    c2,
    c3,
    c4,
    c5,
    c6,
    c7
});
coefficient_struct!(JoskowiczCoefficients {
    c1,
    c2,
    c3,
    c4,
    c5,
    c6
});
coefficient_struct!(TakagiCoefficients {
    a1,
    a2,
    a3,
    b1,
    b2,
    b3,
    c1,
    c2,
    c3,
    d1,
    d2,
    d3,
    e
});
coefficient_struct!(UvesCoefficients {
    n1,
    n2,
    n3,
    n4,
    n5,
    n6,
    n7,
    n8,
    n9,
    n10,
    n11,
    n12,
    n13,
    n14,
    n15,
    n16,
    n17
});
coefficient_struct!(
    /// n1..n11: the coding-quality half of uVES.
    UvesCodingCoefficients { n1, n2, n3, n4, n5, n6, n7, n8, n9, n10, n11 }
);

pub const RIES_CLASSES: usize = 5;

/// One row of c1..c5 per content class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiesCoefficients {
    pub classes: [[f64; 5]; RIES_CLASSES],
}

impl RiesCoefficients {
    fn names() -> Vec<String> {
        (0..RIES_CLASSES)
            .flat_map(|k| (1..=5).map(move |i| format!("class{k}_c{i}")))
            .collect()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.classes.iter().flatten().copied().collect()
    }

    fn from_slice(v: &[f64]) -> Self {
        let mut classes = [[0.0; 5]; RIES_CLASSES];
        for (k, row) in classes.iter_mut().enumerate() {
            row.copy_from_slice(&v[k * 5..k * 5 + 5]);
        }
        Self { classes }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientSet {
    G1070(G1070Coefficients),
    P1201_1(P1201Coefficients),
    P1201_2(P1201Coefficients),
    P1203(P1203Coefficients),
    Yamagishi(YamagishiCoefficients),
    Ries(RiesCoefficients),
    Joskowicz(JoskowiczCoefficients),
    Takagi(TakagiCoefficients),
    Uves(UvesCoefficients),
    UvesCoding(UvesCodingCoefficients),
}

impl CoefficientSet {
    pub fn model(&self) -> ModelId {
        match self {
            CoefficientSet::G1070(_) => ModelId::G1070,
            CoefficientSet::P1201_1(_) => ModelId::P1201_1,
            CoefficientSet::P1201_2(_) => ModelId::P1201_2,
            CoefficientSet::P1203(_) => ModelId::P1203Mode3,
            CoefficientSet::Yamagishi(_) => ModelId::Yamagishi,
            CoefficientSet::Ries(_) => ModelId::Ries,
            CoefficientSet::Joskowicz(_) => ModelId::Joskowicz,
            CoefficientSet::Takagi(_) => ModelId::Takagi,
            CoefficientSet::Uves(_) => ModelId::UvesMode1,
            CoefficientSet::UvesCoding(_) => ModelId::UvesModel1_1,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            CoefficientSet::G1070(c) => c.to_vec(),
            CoefficientSet::P1201_1(c) | CoefficientSet::P1201_2(c) => c.to_vec(),
            CoefficientSet::P1203(c) => c.to_vec(),
            CoefficientSet::Yamagishi(c) => c.to_vec(),
            CoefficientSet::Ries(c) => c.to_vec(),
            CoefficientSet::Joskowicz(c) => c.to_vec(),
            CoefficientSet::Takagi(c) => c.to_vec(),
            CoefficientSet::Uves(c) => c.to_vec(),
            CoefficientSet::UvesCoding(c) => c.to_vec(),
        }
    }

    /// Builds a set from a flat vector ordered as [`ModelId::coefficient_names`].
    pub fn from_values(model: ModelId, v: &[f64]) -> Result<Self> {
        if v.len() != model.arity() {
            return Err(Error::Arity {
                model: model.as_str(),
                expected: model.arity(),
                got: v.len(),
            });
        }
        Ok(match model {
            ModelId::G1070 => CoefficientSet::G1070(G1070Coefficients::from_slice(v)),
            ModelId::P1201_1 => CoefficientSet::P1201_1(P1201Coefficients::from_slice(v)),
            ModelId::P1201_2 => CoefficientSet::P1201_2(P1201Coefficients::from_slice(v)),
            ModelId::P1203Mode3 => CoefficientSet::P1203(P1203Coefficients::from_slice(v)),
            ModelId::Yamagishi => CoefficientSet::Yamagishi(YamagishiCoefficients::from_slice(v)),
            ModelId::Ries => CoefficientSet::Ries(RiesCoefficients::from_slice(v)),
            ModelId::Joskowicz => CoefficientSet::Joskowicz(JoskowiczCoefficients::from_slice(v)),
            ModelId::Takagi => CoefficientSet::Takagi(TakagiCoefficients::from_slice(v)),
            ModelId::UvesMode1 => CoefficientSet::Uves(UvesCoefficients::from_slice(v)),
            ModelId::UvesModel1_1 => {
                CoefficientSet::UvesCoding(UvesCodingCoefficients::from_slice(v))
            }
        })
    }

    /// Starting-point coefficients.
    ///
    /// P.1203 uses the published recommended values with an identity handheld
    /// polynomial. The other sets are hand-tuned so that typical streaming
    /// inputs land inside the MOS range; they are meant as fitting
    /// initialisations, not as calibrated models.
    pub fn default_for(model: ModelId) -> Self {
        let v: Vec<f64> = match model {
            ModelId::G1070 => vec![3.9, 3.6, 600.0, 1.3, 10.0, 0.005, 0.6, 0.0002],
            ModelId::P1201_1 => vec![0.05, 0.02, 1.0, 1.2],
            ModelId::P1201_2 => vec![60.0, -0.02, 10.0, 5.0],
            ModelId::P1203Mode3 => vec![
                4.66, -0.07, 4.06, 72.61, 0.32, 30.98, 1.29, 64.65, 0.0, 1.0, 0.0, 0.0,
            ],
            ModelId::Yamagishi => vec![10.0, 0.005, 0.6, 0.0002, 3.8, 600.0, 1.3],
            ModelId::Ries => [3.3, 3.4, 3.5, 3.6, 3.7]
                .into_iter()
                .flat_map(|c1| [c1, 0.0002, -150.0, 0.02, -8.0])
                .collect(),
            ModelId::Joskowicz => vec![200.0, 0.5, 100.0, 0.3, 0.2, 0.9],
            ModelId::Takagi => vec![
                -0.01, 1.0, 0.05, 0.02, -1.0, 0.1, 0.01, 0.5, 0.05, -0.2, 30.0, 4.0, 2.0,
            ],
            ModelId::UvesMode1 => vec![
                -0.6, -0.1, 5.2, -0.5, 2.0, 2.0, 2.0, 0.01, 0.005, 0.2, 0.02, -1.0, 60.0, 4.5,
                80.0, -0.3, 1.5,
            ],
            ModelId::UvesModel1_1 => {
                vec![-0.6, -0.1, 5.2, -0.5, 2.0, 2.0, 2.0, 0.01, 0.005, 0.2, 0.02]
            }
        };
        CoefficientSet::from_values(model, &v).expect("default arity matches")
    }

    pub fn to_document(&self) -> CoefficientDocument {
        let model = self.model();
        CoefficientDocument {
            model,
            coefficients: model
                .coefficient_names()
                .into_iter()
                .zip(self.to_vec())
                .collect(),
        }
    }

    pub fn from_document(doc: &CoefficientDocument) -> Result<Self> {
        let names = doc.model.coefficient_names();
        let lookup: BTreeMap<&str, f64> = doc
            .coefficients
            .iter()
            .map(|(k, v)| (k.as_str(), *v))
            .collect();
        if let Some((extra, _)) = doc.coefficients.iter().find(|(k, _)| !names.contains(k)) {
            return Err(Error::InvalidInput(format!(
                "unknown coefficient `{extra}` for model {}",
                doc.model
            )));
        }
        let mut values = Vec::with_capacity(names.len());
        for name in &names {
            let v = *lookup.get(name.as_str()).ok_or_else(|| Error::Arity {
                model: doc.model.as_str(),
                expected: names.len(),
                got: doc.coefficients.len(),
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "coefficient `{name}` of {} is not finite",
                    doc.model
                )));
            }
            values.push(v);
        }
        CoefficientSet::from_values(doc.model, &values)
    }
}

/// `{"model": "<id>", "coefficients": {name: value, ...}}`, coefficients kept
/// in declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientDocument {
    pub model: ModelId,
    pub coefficients: Vec<(String, f64)>,
}

impl Serialize for CoefficientDocument {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Ordered<'a>(&'a [(String, f64)]);
        impl Serialize for Ordered<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.len()))?;
                for (k, v) in self.0 {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("model", &self.model)?;
        map.serialize_entry("coefficients", &Ordered(&self.coefficients))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for CoefficientDocument {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            model: ModelId,
            coefficients: BTreeMap<String, f64>,
        }
        let raw = Raw::deserialize(d)?;
        let order = raw.model.coefficient_names();
        let mut coefficients: Vec<(String, f64)> = raw.coefficients.into_iter().collect();
        coefficients.sort_by_key(|(k, _)| order.iter().position(|n| n == k).unwrap_or(usize::MAX));
        Ok(CoefficientDocument {
            model: raw.model,
            coefficients,
        })
    }
}

impl Serialize for CoefficientSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_document().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CoefficientDocument::deserialize(d)?;
        CoefficientSet::from_document(&doc).map_err(serde::de::Error::custom)
    }
}

/// A coefficient file holds either one document or an array of them.
pub fn parse_coefficient_file(text: &str) -> Result<Vec<CoefficientSet>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum File {
        Many(Vec<CoefficientSet>),
        One(CoefficientSet),
    }
    match serde_json::from_str::<File>(text) {
        Ok(File::Many(v)) => Ok(v),
        Ok(File::One(c)) => Ok(vec![c]),
        // untagged errors are opaque; retry as a single document for a
        // useful message
        Err(_) => Ok(vec![serde_json::from_str::<CoefficientSet>(text)?]),
    }
}

/// The bundled defaults for every model.
pub const BUNDLED_DEFAULTS: &str = include_str!("../../data/default_coefficients.json");

pub fn bundled_defaults() -> Vec<CoefficientSet> {
    parse_coefficient_file(BUNDLED_DEFAULTS).expect("bundled coefficient file is valid")
}
