//! Divergence-free wavelet frame on the torus.
//!
//! A velocity field is represented by the wavelet pyramid of its stream
//! function: synthesis inverts the pyramid to a scalar field and applies the
//! perpendicular gradient, so every synthesized field is divergence-free bin
//! by bin. Analysis runs the exact reverse: vorticity, inversion of the
//! (reduced) Laplacian, forward transform.
//!
//! The representable space excludes constants (slot (0,0) is pinned to zero;
//! a mean flow has no stream function on the torus) and the three pure
//! Nyquist stream modes, whose grid-sampled curl is identically zero. On
//! that canonical subspace analysis and synthesis invert each other exactly;
//! on arbitrary fields, `synthesize(analyze(u))` equals the Leray projection
//! of `u` minus its mean.

use crate::error::{Error, Result};
use crate::grid::VectorGrid;
use crate::spectral::{curl, stream_laplacian_pinv, vorticity};
use crate::wavelets::{fwt2d, ifwt2d, FilterBank, WaveletPyramid};

/// Result of analyzing a velocity field.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// Stream-function pyramid; slot (0,0) is always zero.
    pub coeffs: WaveletPyramid,
    /// Mean flow that the frame cannot represent, when non-negligible.
    pub removed_mean: Option<[f64; 2]>,
}

/// Velocity field of a stream-function pyramid. Slot (0,0) must be zero.
pub fn synthesize(coeffs: &WaveletPyramid, fb: &FilterBank) -> Result<VectorGrid> {
    coeffs.check_finite()?;
    let dc = coeffs.at(0, 0);
    if dc != 0.0 {
        return Err(Error::NonZeroMeanSlot(dc));
    }
    let psi = ifwt2d(coeffs, fb);
    curl(&psi)
}

/// Stream-function pyramid of a velocity field.
///
/// The constant component of `u` is not representable; when its magnitude is
/// non-negligible it is reported in [`Analysis::removed_mean`]. Nyquist
/// corner content, which the sampled curl cannot see, is silently projected
/// out along with any divergent component.
pub fn analyze(u: &VectorGrid, fb: &FilterBank) -> Result<Analysis> {
    u.check_finite()?;
    let m1 = u.u1.mean();
    let m2 = u.u2.mean();
    let scale = (u.mean_sq()).sqrt();
    let removed_mean = if m1.abs().max(m2.abs()) > 1e-12 * (1.0 + scale) {
        Some([m1, m2])
    } else {
        None
    };
    let omega = vorticity(u)?;
    let psi = stream_laplacian_pinv(&omega);
    let mut coeffs = fwt2d(&psi, fb);
    // The stream function is mean-free by construction; pin the slot exactly.
    coeffs.set(0, 0, 0.0);
    Ok(Analysis {
        coeffs,
        removed_mean,
    })
}

/// Adjoint of [`synthesize`] under the plain sum inner products: maps a
/// vector field of residuals to coefficient space. This is the pullback used
/// by estimators to turn a pointwise data gradient into a gradient with
/// respect to the stream pyramid.
pub fn synthesis_adjoint(r: &VectorGrid, fb: &FilterBank) -> Result<WaveletPyramid> {
    r.check_finite()?;
    let w = vorticity(r)?;
    let mut pyr = fwt2d(&w, fb);
    pyr.set(0, 0, 0.0);
    Ok(pyr)
}
