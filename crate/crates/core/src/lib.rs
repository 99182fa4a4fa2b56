//! Simulation and inference for symmetric α-stable linear fractional stable
//! motion: stable variates, moving-average path synthesis, wavelet
//! coefficient pyramids, the wavelet-max estimator of α, and numerical
//! checks of the kernel `Φ_{H,α}` behind it.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernel;
pub mod lfsm;
pub mod quad;
pub mod stable;
pub mod stats;
pub mod wavelet;

pub use error::{Error, Result};
