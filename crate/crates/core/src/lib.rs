//! F-energy laboratory: profiles, stress-energy tensors, comparison
//! geometry on model manifolds, grid exterior calculus, and the
//! verification experiments built on them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod born_infeld;
pub mod chern;
pub mod energy;
pub mod error;
pub mod exterior;
pub mod fields;
pub mod fprofile;
pub mod geometry;
pub mod quad;
pub mod report;
pub mod variation;

pub use born_infeld::{DualityPair, RadialGraphSolution, Sign};
pub use chern::{DoublingReport, FluxReport};
pub use energy::{ConservationCertificate, MonotonicityReport, RadialField};
pub use error::{Error, Result};
pub use exterior::{PointForm, SymTensor2};
pub use fields::{GridField, GridSpec};
pub use fprofile::{Degree, FProfile};
pub use geometry::{CurvatureRegime, ExponentKind, ExponentResult, RadialManifold};
pub use variation::VariationReport;
