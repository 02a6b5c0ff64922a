//! Rank-one transforms of Gaussian process covariances: Karhunen–Loève
//! spectra, L₂ small-ball asymptotics and Monte Carlo checks.

// `!(x > 0.0)` is how inputs reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod kernel;
pub mod montecarlo;
pub mod quadrature;
pub mod smallball;
pub mod spectral;
pub mod transform;
pub mod validate;
pub mod weight;

pub use error::{Error, Result};
pub use kernel::{Kernel, KernelId, KernelTable, Process};
pub use montecarlo::SampleBatch;
pub use quadrature::Grid;
pub use smallball::AsymptoticDescriptor;
pub use spectral::Spectrum;
pub use transform::{Transform, TwoParamTransform};
pub use weight::{Polynomial, Weight, WeightFn, WeightPart};
