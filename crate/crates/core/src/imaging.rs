//! Image interpolation, warping, and the displaced-frame-difference data
//! term, plus synthetic benchmark imagery.
//!
//! Images are periodic `n x n` intensity grids. Interpolation is cubic
//! B-spline with an exact periodic prefilter, so evaluating at the nodes
//! reproduces the samples and gradients come from the analytic derivative of
//! the spline, not finite differences. Displacements live in domain units
//! (`[0,1]^2`), so a displacement of `1/n` moves intensity by one pixel.

use crate::error::{bad_param, Error, Result};
use crate::grid::{ScalarGrid, VectorGrid};
use crate::spectral::apply_multiplier;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

/// Periodic cubic B-spline interpolant of one image.
#[derive(Debug, Clone)]
pub struct SplineImage {
    samples: ScalarGrid,
    coeffs: ScalarGrid,
}

/// Cubic B-spline basis weights for fractional offset `f` in `[0,1)`,
/// covering coefficient taps at offsets -1, 0, 1, 2.
#[inline]
fn bspline_weights(f: f64) -> [f64; 4] {
    let f2 = f * f;
    let f3 = f2 * f;
    [
        (1.0 - f).powi(3) / 6.0,
        (4.0 - 6.0 * f2 + 3.0 * f3) / 6.0,
        (1.0 + 3.0 * f + 3.0 * f2 - 3.0 * f3) / 6.0,
        f3 / 6.0,
    ]
}

/// Derivatives of [`bspline_weights`] with respect to `f` (per-pixel units).
#[inline]
fn bspline_weight_derivs(f: f64) -> [f64; 4] {
    let f2 = f * f;
    [
        -0.5 * (1.0 - f).powi(2),
        (-12.0 * f + 9.0 * f2) / 6.0,
        (3.0 + 6.0 * f - 9.0 * f2) / 6.0,
        0.5 * f2,
    ]
}

impl SplineImage {
    pub fn n(&self) -> usize {
        self.samples.n()
    }

    pub fn samples(&self) -> &ScalarGrid {
        &self.samples
    }

    /// Interpolant value at pixel coordinates `(t1, t2)` (column, row),
    /// periodic in both axes.
    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        self.eval_impl(t1, t2, false).0
    }

    /// Value and gradient at pixel coordinates; the gradient is in
    /// per-pixel units (multiply by `n` for domain units).
    pub fn eval_with_grad(&self, t1: f64, t2: f64) -> (f64, f64, f64) {
        self.eval_impl(t1, t2, true)
    }

    fn eval_impl(&self, t1: f64, t2: f64, want_grad: bool) -> (f64, f64, f64) {
        let n = self.n();
        let nf = n as f64;
        let x1 = t1.rem_euclid(nf);
        let x2 = t2.rem_euclid(nf);
        let i1 = x1.floor();
        let i2 = x2.floor();
        let w1 = bspline_weights(x1 - i1);
        let w2 = bspline_weights(x2 - i2);
        let (j0, i0) = (i1 as i64 - 1, i2 as i64 - 1);

        let mask = n as i64 - 1;
        let mut val = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        if want_grad {
            let d1 = bspline_weight_derivs(x1 - i1);
            let d2 = bspline_weight_derivs(x2 - i2);
            for (b, (w2b, d2b)) in w2.iter().zip(&d2).enumerate() {
                let row = ((i0 + b as i64) & mask) as usize;
                let mut acc = 0.0;
                let mut acc_d = 0.0;
                for (a, (w1a, d1a)) in w1.iter().zip(&d1).enumerate() {
                    let col = ((j0 + a as i64) & mask) as usize;
                    let c = self.coeffs.at(row, col);
                    acc += w1a * c;
                    acc_d += d1a * c;
                }
                val += w2b * acc;
                g1 += w2b * acc_d;
                g2 += d2b * acc;
            }
        } else {
            for (b, w2b) in w2.iter().enumerate() {
                let row = ((i0 + b as i64) & mask) as usize;
                let mut acc = 0.0;
                for (a, w1a) in w1.iter().enumerate() {
                    let col = ((j0 + a as i64) & mask) as usize;
                    acc += w1a * self.coeffs.at(row, col);
                }
                val += w2b * acc;
            }
        }
        (val, g1, g2)
    }
}

/// Computes periodic cubic B-spline coefficients: a DFT division by the
/// sampled B-spline response `(4 + 2 cos(2 pi m / n)) / 6` per axis, which
/// is bounded away from zero, so the prefilter is unconditionally stable.
pub fn prefilter(img: &ScalarGrid) -> Result<SplineImage> {
    img.check_finite()?;
    let n = img.n();
    let resp = |m: i64| (4.0 + 2.0 * (crate::spectral::TWO_PI * m as f64 / n as f64).cos()) / 6.0;
    let coeffs = apply_multiplier(img, |m1, m2| {
        Complex64::new(1.0 / (resp(m1) * resp(m2)), 0.0)
    })?;
    Ok(SplineImage { samples: img.clone(), coeffs })
}

/// Warped image `x -> y1(x + u(x))` sampled at the grid nodes.
pub fn warp(y1: &SplineImage, u: &VectorGrid) -> Result<ScalarGrid> {
    if y1.n() != u.n() {
        return Err(Error::SizeMismatch(y1.n(), u.n()));
    }
    u.check_finite()?;
    let n = y1.n();
    let nf = n as f64;
    ScalarGrid::from_fn(n, |i, j| {
        let t1 = j as f64 + nf * u.u1.at(i, j);
        let t2 = i as f64 + nf * u.u2.at(i, j);
        y1.eval(t1, t2)
    })
}

/// An observed pair: `y0` near the warped template, `y1` the template, both
/// with calibrated additive noise and achieved PSNRs recorded.
#[derive(Debug, Clone)]
pub struct ImagePair {
    pub y0: SplineImage,
    pub y1: SplineImage,
    pub seed: u64,
    pub psnr0: f64,
    pub psnr1: f64,
}

impl ImagePair {
    pub fn n(&self) -> usize {
        self.y0.n()
    }

    /// Builds a pair directly from already-observed images (no noise stage).
    pub fn from_images(y0: &ScalarGrid, y1: &ScalarGrid) -> Result<ImagePair> {
        if y0.n() != y1.n() {
            return Err(Error::SizeMismatch(y0.n(), y1.n()));
        }
        Ok(ImagePair {
            y0: prefilter(y0)?,
            y1: prefilter(y1)?,
            seed: 0,
            psnr0: f64::INFINITY,
            psnr1: f64::INFINITY,
        })
    }
}

/// Data term `1/2 * mean((y1(x+u) - y0(x))^2)` over the grid.
pub fn dfd(pair: &ImagePair, u: &VectorGrid) -> Result<f64> {
    Ok(dfd_and_residual(pair, u)?.0)
}

/// Residual field `(y1(x+u) - y0(x)) * grad y1(x+u)` in domain units; its
/// mean inner product with a perturbation of `u` is the directional
/// derivative of [`dfd`].
pub fn residual_field(pair: &ImagePair, u: &VectorGrid) -> Result<VectorGrid> {
    Ok(dfd_and_residual(pair, u)?.1)
}

/// One fused pass computing the data term and its residual field; this is
/// the inner loop of every estimator iteration.
pub fn dfd_and_residual(pair: &ImagePair, u: &VectorGrid) -> Result<(f64, VectorGrid)> {
    let n = pair.n();
    if u.n() != n {
        return Err(Error::SizeMismatch(n, u.n()));
    }
    u.check_finite()?;
    let nf = n as f64;
    let mut r1 = ScalarGrid::zeros(n)?;
    let mut r2 = ScalarGrid::zeros(n)?;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let t1 = j as f64 + nf * u.u1.at(i, j);
            let t2 = i as f64 + nf * u.u2.at(i, j);
            let (v, g1, g2) = pair.y1.eval_with_grad(t1, t2);
            let diff = v - pair.y0.samples.at(i, j);
            acc += diff * diff;
            r1.set(i, j, diff * g1 * nf);
            r2.set(i, j, diff * g2 * nf);
        }
    }
    let value = 0.5 * acc / (n * n) as f64;
    Ok((value, VectorGrid::new(r1, r2)?))
}

/// Mean squared spline gradient of the moving frame at the pixel centers,
/// averaged over the two axes. This is the per-component scale of the data
/// term's Gauss-Newton curvature with respect to a displacement field in
/// grid units, which optimizers use to balance their coordinates.
pub fn mean_grad_sq(pair: &ImagePair) -> f64 {
    let n = pair.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (_, g1, g2) = pair.y1.eval_with_grad(j as f64, i as f64);
            acc += g1 * g1 + g2 * g2;
        }
    }
    // the chain rule through `t = x + n u` contributes n^2 per component and
    // the pixel average contributes 1/n^2, so the spline gradients enter
    // unscaled
    0.5 * acc / (n * n) as f64
}

/// Synthetic template content for benchmark pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Texture {
    /// Band-limited Gaussian noise concentrated at mid frequencies; the
    /// default template, contrast everywhere, no flat spots.
    BandpassNoise,
    /// A dense field of small Gaussian blobs, particle-imagery style.
    Particles,
}

impl Texture {
    pub fn parse(s: &str) -> Result<Texture> {
        match s {
            "bandpass-noise" | "bandpass" => Ok(Texture::BandpassNoise),
            "particles" => Ok(Texture::Particles),
            other => Err(Error::Config(format!("unknown texture '{}'", other))),
        }
    }
}

/// Deterministic seeded texture image, min-max normalized to `[0, 1]`.
pub fn synth_texture(kind: Texture, n: usize, seed: u64) -> Result<ScalarGrid> {
    crate::grid::check_size(n)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x7e87_a1e5_u64);
    let img = match kind {
        Texture::BandpassNoise => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let white = ScalarGrid::from_vec(
                n,
                (0..n * n).map(|_| normal.sample(&mut rng)).collect(),
            )?;
            // red-tilted band over [1, n/6]: the low-frequency content keeps
            // the data term informative under displacements of several
            // pixels, the high end sharpens the optimum
            let cutoff = n as f64 / 6.0;
            apply_multiplier(&white, |m1, m2| {
                let r = ((m1 * m1 + m2 * m2) as f64).sqrt();
                if r == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let band = (-(r / cutoff).powi(4)).exp() / r;
                    Complex64::new(band, 0.0)
                }
            })?
        }
        Texture::Particles => {
            use rand::Rng;
            let mut img = ScalarGrid::zeros(n)?;
            let count = (n * n) / 16;
            let mask = n as i64 - 1;
            for _ in 0..count {
                let cx: f64 = rng.gen::<f64>() * n as f64;
                let cy: f64 = rng.gen::<f64>() * n as f64;
                let amp: f64 = 0.3 + 0.7 * rng.gen::<f64>();
                let sig: f64 = 1.0 + 0.8 * rng.gen::<f64>();
                let reach = (4.0 * sig).ceil() as i64;
                let inv = 1.0 / (2.0 * sig * sig);
                let (icx, icy) = (cx.floor() as i64, cy.floor() as i64);
                for di in -reach..=reach {
                    for dj in -reach..=reach {
                        let i = ((icy + di) & mask) as usize;
                        let j = ((icx + dj) & mask) as usize;
                        let dx = (icx + dj) as f64 - cx;
                        let dy = (icy + di) as f64 - cy;
                        let v = img.at(i, j) + amp * (-(dx * dx + dy * dy) * inv).exp();
                        img.set(i, j, v);
                    }
                }
            }
            img
        }
    };
    // normalize to unit intensity range so PSNR peaks are comparable
    let (lo, hi) = img.min_max();
    if !(hi > lo) {
        return Err(Error::Config("degenerate texture: constant image".into()));
    }
    let scale = 1.0 / (hi - lo);
    Ok(ScalarGrid::from_fn(n, |i, j| (img.at(i, j) - lo) * scale)?)
}

/// Generates the observed pair for a known truth displacement:
/// `y0 = warp(y1, u) + noise` at `psnr0`, `y1 = template + noise` at
/// `psnr1`. Noise std per image is `peak * 10^(-psnr/20)` with peak the
/// maximum of that image's clean version; achieved PSNRs are measured from
/// the realized noise and stored. Targets may be `inf` for noise-free.
pub fn make_pair(
    template: &ScalarGrid,
    u: &VectorGrid,
    psnr0: f64,
    psnr1: f64,
    seed: u64,
) -> Result<ImagePair> {
    for (name, p) in [("psnr0", psnr0), ("psnr1", psnr1)] {
        if p.is_nan() || p <= 0.0 {
            return Err(bad_param(name, p, "target PSNR must be positive"));
        }
    }
    let clean1 = template.clone();
    let spline1 = prefilter(&clean1)?;
    let clean0 = warp(&spline1, u)?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (y0, psnr0_achieved) = add_noise(&clean0, psnr0, &mut rng)?;
    let (y1, psnr1_achieved) = add_noise(&clean1, psnr1, &mut rng)?;

    Ok(ImagePair {
        y0: prefilter(&y0)?,
        y1: prefilter(&y1)?,
        seed,
        psnr0: psnr0_achieved,
        psnr1: psnr1_achieved,
    })
}

fn add_noise(
    clean: &ScalarGrid,
    psnr: f64,
    rng: &mut ChaCha12Rng,
) -> Result<(ScalarGrid, f64)> {
    let peak = clean.min_max().1;
    if peak <= 0.0 {
        return Err(Error::Config("image peak must be positive for PSNR noise".into()));
    }
    if psnr.is_infinite() {
        return Ok((clean.clone(), f64::INFINITY));
    }
    let sigma = peak * 10f64.powf(-psnr / 20.0);
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    let n = clean.n();
    let mut out = clean.clone();
    let mut power = 0.0;
    for i in 0..n {
        for j in 0..n {
            let e = normal.sample(rng);
            power += e * e;
            out.set(i, j, out.at(i, j) + e);
        }
    }
    let achieved = 10.0 * (peak * peak / (power / (n * n) as f64)).log10();
    Ok((out, achieved))
}
