//! Tensor algebra at a single point.

mod eigen;
pub mod linalg;
mod metric;
mod tensor;

pub use eigen::{generalized_eigen, FrameSpectrum};
pub use metric::{metric_at, norm2, raise_lower, MetricAtPoint, MetricField, SYMMETRY_TOL};
pub(crate) use tensor::decompose;
pub use tensor::{Slot, TensorAtPoint};
