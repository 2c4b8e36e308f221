//! No-reference bitstream video quality assessment.
//!
//! * [`bitstream`] pulls per-frame statistics out of H.264 Annex-B streams.
//! * [`features`] aggregates them into per-sequence [`StreamFeatures`].
//! * [`models`] holds nine parametric MOS predictors.
//! * [`fitting`] fits model coefficients to subjective scores.
//! * [`evaluation`] cross-validates and ranks models.

// `!(x > 0.0)` guards are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bitstream;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod fitting;
pub mod models;

pub use dataset::{read_dataset_csv, write_dataset_csv, Dataset, DatasetRow};
pub use error::{Error, Result};
pub use features::{
    aggregate_features, DeviceType, DisplayParams, FrameRecord, FrameType, StreamFeatures,
    SubjectiveRecord,
};
pub use models::{predict, CoefficientSet, ModelId, Prediction};
