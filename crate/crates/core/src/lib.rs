//! Hard-edge gap probabilities for squared singular values of products of
//! Ginibre matrices.

mod dd;
pub mod dynamics;
pub mod error;
pub mod fredholm;
pub mod kernel;
pub mod montecarlo;
pub mod quad;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use fredholm::{IntervalUnion, NystromSystem, ResolventData};
pub use montecarlo::EnsembleSpec;
pub use kernel::{Kernel, KernelMethod, KernelPoint};
pub use specfun::{MeijerPair, ModelParams, SeriesEval, Which};
pub use dynamics::{DynamicalState, GapCurve, ImaginaryRoot, Provenance};
