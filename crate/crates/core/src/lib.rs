//! Chart-level Riemannian geometry engine: Taylor jets, metrics, connections,
//! curvature, and numerical verification of Ricci-soliton type equations.
//!
//! The numeric core is generic over [`Real`]; the aliases below fix it to `f64`.

// index loops mirror the tensor notation; negated comparisons keep NaN failing
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod hypersurface;
pub mod pointwise;
pub mod report;
pub mod scalar;
pub mod selftest;
pub mod soliton;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Jet = fields::Jet3<f64>;
pub type Field = fields::TensorField<f64>;
pub type Metric = pointwise::MetricField<f64>;
pub type PointMetric = pointwise::MetricAtPoint<f64>;
pub type Tensor = pointwise::TensorAtPoint<f64>;
pub type Connection = connection::ConnectionField<f64>;
pub type Curvature = curvature::CurvatureAtPoint<f64>;
pub type Soliton = soliton::SolitonData<f64>;
