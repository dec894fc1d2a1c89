//! Synthesis of divergence-free fractional Brownian vector fields and
//! wavelet-regularized estimation of incompressible motion between images.
//!
//! The crate is organized in layers:
//!
//! * [`grid`] / [`io`] hold the dense periodic grid types and their file formats.
//! * [`spectral`] implements Fourier multiplier operators on the unit torus
//!   (fractional Laplacians, Leray projection, curl/divergence/vorticity,
//!   radial energy spectra).
//! * [`wavelets`] is a periodized orthonormal filter-bank transform with
//!   anisotropic (row/column) 2-D pyramids.
//! * [`divfree`] combines both: a divergence-free wavelet frame built by
//!   applying the curl to scalar stream pyramids.
//! * [`fbm`] samples isotropic, self-similar, divergence-free random fields
//!   and provides their closed-form spectra and increment covariances.
//! * [`connection`] computes Galerkin representations of fractional
//!   differential operators in the wavelet basis, either by conjugating the
//!   exact spectral operator or from two-scale linear systems.
//! * [`imaging`] provides cubic B-spline image interpolation, periodic
//!   backward warping, and synthetic test-pair generation.
//! * [`estimator`] is the MAP motion estimator: several regularization
//!   pipelines sharing one L-BFGS core with a coarse-to-fine schedule.
//! * [`metrics`] and [`bench`] evaluate estimates against ground truth and
//!   drive the full benchmark harness.

pub mod bench;
pub mod connection;
pub mod divfree;
pub mod error;
pub mod estimator;
pub mod fbm;
mod fft;
pub mod grid;
pub mod imaging;
pub mod io;
pub mod lbfgs;
pub mod metrics;
pub mod spectral;
pub mod wavelets;

pub use error::{Error, Result};
pub use grid::{ScalarGrid, VectorGrid};
pub use wavelets::{FilterBank, WaveletPyramid};
