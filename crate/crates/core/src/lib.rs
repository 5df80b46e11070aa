//! Minkowski and Klein-Gordon curvelet frames: spectral windows, adapted
//! geometry, Fourier and real-space evaluation, Gram and Green matrices.

pub mod curvelet;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod gram;
pub mod green;
pub mod linalg;
pub mod metric;
mod natural;
pub mod quadrature;
pub mod wavelet1d;

pub use error::{CurveletError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
