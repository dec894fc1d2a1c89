//! Error metrics for estimated motion fields: pointwise RMSE in pixel
//! units, mean angular error in two flavors, and a spectral comparison
//! that integrates the gap between fitted log-log spectrum lines.

use crate::error::{bad_param, Error, Result};
use crate::grid::VectorGrid;
use crate::spectral::{fit_loglog_slope, radial_spectrum};

/// Root-mean-square endpoint error, converted from domain units to pixels.
pub fn rmse_px(truth: &VectorGrid, est: &VectorGrid) -> Result<f64> {
    if truth.n() != est.n() {
        return Err(Error::SizeMismatch(truth.n(), est.n()));
    }
    truth.check_finite()?;
    est.check_finite()?;
    let n = truth.n() as f64;
    let mut acc = 0.0;
    let (t1, t2) = (truth.u1.as_slice(), truth.u2.as_slice());
    let (e1, e2) = (est.u1.as_slice(), est.u2.as_slice());
    for i in 0..t1.len() {
        let d1 = t1[i] - e1[i];
        let d2 = t2[i] - e2[i];
        acc += d1 * d1 + d2 * d2;
    }
    Ok(n * (acc / (n * n)).sqrt())
}

/// Angular-error flavor. `Plain` divides the inner product by the squared
/// reference magnitude, so any positive rescaling of the reference scores
/// zero; sites where the reference vanishes are skipped. `Augmented` is the
/// common 3-D variant that appends a unit temporal component (in pixel
/// units), which is defined everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngularVariant {
    Plain,
    Augmented,
}

impl AngularVariant {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(AngularVariant::Plain),
            "augmented" | "barron" => Ok(AngularVariant::Augmented),
            other => Err(Error::Config(format!(
                "unknown angular-error variant '{other}' (expected plain or augmented)"
            ))),
        }
    }
}

/// Mean angular error in degrees between `est` and the reference `truth`.
pub fn mean_angular_error_deg(
    truth: &VectorGrid,
    est: &VectorGrid,
    variant: AngularVariant,
) -> Result<f64> {
    if truth.n() != est.n() {
        return Err(Error::SizeMismatch(truth.n(), est.n()));
    }
    truth.check_finite()?;
    est.check_finite()?;
    let n = truth.n() as f64;
    let mut acc = 0.0;
    let mut count = 0usize;
    let (ts1, ts2) = (truth.u1.as_slice(), truth.u2.as_slice());
    let (es1, es2) = (est.u1.as_slice(), est.u2.as_slice());
    for i in 0..ts1.len() {
        let (t1, t2) = (ts1[i], ts2[i]);
        let (e1, e2) = (es1[i], es2[i]);
        let cos = match variant {
            AngularVariant::Plain => {
                let m2 = t1 * t1 + t2 * t2;
                if m2 < 1e-24 {
                    continue;
                }
                ((t1 * e1 + t2 * e2) / m2).clamp(-1.0, 1.0)
            }
            AngularVariant::Augmented => {
                // pixel units: a displacement of one grid cell has length 1
                let (t1, t2) = (n * t1, n * t2);
                let (e1, e2) = (n * e1, n * e2);
                let num = 1.0 + t1 * e1 + t2 * e2;
                let den = ((1.0 + t1 * t1 + t2 * t2) * (1.0 + e1 * e1 + e2 * e2)).sqrt();
                (num / den).clamp(-1.0, 1.0)
            }
        };
        acc += cos.acos();
        count += 1;
    }
    if count == 0 {
        return Err(bad_param("truth", 0.0, "no sites with measurable direction"));
    }
    Ok(acc / count as f64 * 180.0 / std::f64::consts::PI)
}

/// A straight line fitted to a radial energy spectrum in log-log
/// coordinates, stored base-e: ln E = slope * ln(kappa) + intercept_ln.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumFit {
    pub slope: f64,
    pub intercept_ln: f64,
}

impl SpectrumFit {
    /// Regularity exponent implied by a power-law decay slope -(2H+1).
    pub fn hurst(&self) -> f64 {
        -(self.slope + 1.0) / 2.0
    }
}

/// Fits the radial energy spectrum of `v` over integer shells
/// `kappa_min..=kappa_max`.
pub fn fit_field_spectrum(v: &VectorGrid, kappa_min: usize, kappa_max: usize) -> Result<SpectrumFit> {
    let spectrum = radial_spectrum(v, v.n() / 2)?;
    fit_spectrum(&spectrum, kappa_min, kappa_max)
}

/// Same fit starting from an already-computed shell spectrum.
pub fn fit_spectrum(spectrum: &[f64], kappa_min: usize, kappa_max: usize) -> Result<SpectrumFit> {
    let (slope, intercept10) = fit_loglog_slope(spectrum, kappa_min, kappa_max)?;
    Ok(SpectrumFit { slope, intercept_ln: intercept10 * std::f64::consts::LN_10 })
}

/// Integral of the absolute gap between two fitted spectrum lines over
/// x = ln(kappa), x in [ln kappa_min, ln kappa_max]. Both lines must come
/// from the same window for the comparison to be meaningful.
pub fn spectral_gap(
    reference: &SpectrumFit,
    fitted: &SpectrumFit,
    kappa_min: usize,
    kappa_max: usize,
) -> Result<f64> {
    if kappa_min < 1 || kappa_max <= kappa_min {
        return Err(Error::Config(format!(
            "bad spectral window [{kappa_min}, {kappa_max}]"
        )));
    }
    let a = fitted.slope - reference.slope;
    let b = fitted.intercept_ln - reference.intercept_ln;
    let x0 = (kappa_min as f64).ln();
    let x1 = (kappa_max as f64).ln();
    Ok(abs_line_integral(a, b, x0, x1))
}

/// Fits both fields over the window and integrates the line gap.
pub fn sae(
    truth: &VectorGrid,
    est: &VectorGrid,
    kappa_min: usize,
    kappa_max: usize,
) -> Result<f64> {
    let ft = fit_field_spectrum(truth, kappa_min, kappa_max)?;
    let fe = fit_field_spectrum(est, kappa_min, kappa_max)?;
    spectral_gap(&ft, &fe, kappa_min, kappa_max)
}

/// Closed form of the integral of |a x + b| over [x0, x1], splitting at the
/// root when it falls inside the interval.
fn abs_line_integral(a: f64, b: f64, x0: f64, x1: f64) -> f64 {
    if a == 0.0 {
        return b.abs() * (x1 - x0);
    }
    let antideriv = |x: f64| 0.5 * a * x * x + b * x;
    let root = -b / a;
    if root <= x0 || root >= x1 {
        (antideriv(x1) - antideriv(x0)).abs()
    } else {
        (antideriv(root) - antideriv(x0)).abs() + (antideriv(x1) - antideriv(root)).abs()
    }
}
