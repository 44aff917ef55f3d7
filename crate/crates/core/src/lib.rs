//! Exact computation of psi-class intersection numbers and cubic matrix-model correlators
//! through a second-order Laplacian acting on renormalised spectral moments.

pub mod bell;
pub mod cli;
pub mod boundary;
pub mod error;
pub mod laplacian;
pub mod recursion;
pub mod ring;
pub mod spectral;
pub mod virasoro;

pub use error::{Error, Result};
