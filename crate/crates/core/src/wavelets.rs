//! Periodized orthonormal wavelet transforms.
//!
//! The 1-D transform decimates all the way down: for a signal of length
//! `n = 2^J`, position 0 of the output holds the single scaling coefficient
//! and positions `[2^(s-1), 2^s)` hold the wavelet coefficients of scale `s`,
//! with `s = 1` the coarsest and `s = J` the finest. The analysis step is
//! `a[l] = sum_k h[k] x[(2l+k) mod len]` (likewise `d` with `g`), and the
//! synthesis step is its exact adjoint, so the transform is orthonormal.
//!
//! The 2-D transform is the anisotropic tensor product: every row (the `x1`
//! direction) is fully decomposed, then every column. A pyramid entry is
//! addressed by an independent (scale, shift) pair per axis.

mod filters;

use crate::error::{Error, Result};
use crate::grid::{check_size, ScalarGrid};

/// Quadrature mirror filter pair plus metadata.
#[derive(Debug, Clone)]
pub struct FilterBank {
    name: &'static str,
    /// Low-pass (scaling) filter, `sum h = sqrt(2)`.
    pub h: Vec<f64>,
    /// High-pass (wavelet) filter, `g[k] = (-1)^k h[L-1-k]`.
    pub g: Vec<f64>,
    /// Number of vanishing moments of the wavelet.
    pub vanishing_moments: usize,
}

impl FilterBank {
    /// Looks up a bank by name: `haar`, `db4`, `db8`, `coif4` or `coif10`
    /// (Daubechies and Coiflets are named by their vanishing moments).
    pub fn by_name(name: &str) -> Result<Self> {
        let (table, moments, canon): (&[f64], usize, &'static str) =
            match name.to_ascii_lowercase().as_str() {
                "haar" | "db1" => (&filters::HAAR, 1, "haar"),
                "db4" => (&filters::DB4, 4, "db4"),
                "db8" => (&filters::DB8, 8, "db8"),
                "coif4" => (&filters::COIF4, 4, "coif4"),
                "coif10" => (&filters::COIF10, 10, "coif10"),
                _ => return Err(Error::UnknownFilter(name.to_string())),
            };
        let h = table.to_vec();
        let len = h.len();
        let g: Vec<f64> = (0..len)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * h[len - 1 - k]
            })
            .collect();
        Ok(Self {
            name: canon,
            h,
            g,
            vanishing_moments: moments,
        })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Array position of the coefficient at `(scale, shift)`; scale 0 is the
/// single scaling slot (shift must be 0), scale `s >= 1` occupies positions
/// `[2^(s-1), 2^s)`.
#[inline]
pub fn slot_position(scale: usize, shift: usize) -> usize {
    if scale == 0 {
        debug_assert_eq!(shift, 0);
        0
    } else {
        debug_assert!(shift < 1usize << (scale - 1));
        (1usize << (scale - 1)) + shift
    }
}

/// Inverse of [`slot_position`]: `(scale, shift)` of an array position.
#[inline]
pub fn slot_scale(position: usize) -> (usize, usize) {
    if position == 0 {
        (0, 0)
    } else {
        let scale = usize::BITS as usize - position.leading_zeros() as usize;
        (scale, position - (1usize << (scale - 1)))
    }
}

fn analysis_step(x: &mut [f64], len: usize, fb: &FilterBank, scratch: &mut [f64]) {
    let mask = len - 1;
    let half = len / 2;
    let taps = fb.len();
    for l in 0..half {
        let base = 2 * l;
        let mut a = 0.0;
        let mut d = 0.0;
        for k in 0..taps {
            let v = x[(base + k) & mask];
            a += fb.h[k] * v;
            d += fb.g[k] * v;
        }
        scratch[l] = a;
        scratch[half + l] = d;
    }
    x[..len].copy_from_slice(&scratch[..len]);
}

fn synthesis_step(x: &mut [f64], len: usize, fb: &FilterBank, scratch: &mut [f64]) {
    let mask = len - 1;
    let half = len / 2;
    let taps = fb.len();
    scratch[..len].fill(0.0);
    for l in 0..half {
        let a = x[l];
        let d = x[half + l];
        let base = 2 * l;
        for k in 0..taps {
            scratch[(base + k) & mask] += fb.h[k] * a + fb.g[k] * d;
        }
    }
    x[..len].copy_from_slice(&scratch[..len]);
}

/// Full in-place periodized analysis of a signal whose length is a power of
/// two (at least 2).
pub fn fwt1d(x: &mut [f64], fb: &FilterBank) {
    let n = x.len();
    debug_assert!(n.is_power_of_two() && n >= 2);
    let mut scratch = vec![0.0; n];
    let mut len = n;
    while len >= 2 {
        analysis_step(x, len, fb, &mut scratch);
        len /= 2;
    }
}

/// Full in-place synthesis, the exact adjoint (and inverse) of [`fwt1d`].
pub fn ifwt1d(x: &mut [f64], fb: &FilterBank) {
    let n = x.len();
    debug_assert!(n.is_power_of_two() && n >= 2);
    let mut scratch = vec![0.0; n];
    let mut len = 2;
    while len <= n {
        synthesis_step(x, len, fb, &mut scratch);
        len *= 2;
    }
}

/// Anisotropic 2-D coefficient pyramid.
///
/// Stored row-major like a grid: entry `(a, b)` sits at `a * n + b`, where
/// `b` indexes the `x1`-axis slot and `a` the `x2`-axis slot (matching the
/// grid layout where the row index is `x2`).
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    n: usize,
    data: Vec<f64>,
}

impl WaveletPyramid {
    pub fn zeros(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self {
            n,
            data: vec![0.0; n * n],
        })
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        check_size(n)?;
        if data.len() != n * n {
            return Err(Error::SizeMismatch(data.len(), n * n));
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Finest scale present: `log2 n`.
    pub fn max_scale(&self) -> usize {
        self.n.trailing_zeros() as usize
    }

    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.n + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.data[a * self.n + b] = v;
    }

    /// Coefficient of the tensor basis function with `x1`-axis slot
    /// `(s1, l1)` and `x2`-axis slot `(s2, l2)`.
    pub fn slot(&self, s1: usize, l1: usize, s2: usize, l2: usize) -> f64 {
        self.at(slot_position(s2, l2), slot_position(s1, l1))
    }

    pub fn set_slot(&mut self, s1: usize, l1: usize, s2: usize, l2: usize, v: f64) {
        self.set(slot_position(s2, l2), slot_position(s1, l1), v);
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn check_finite(&self) -> Result<()> {
        for (idx, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput(idx / self.n, idx % self.n));
            }
        }
        Ok(())
    }
}

fn transpose_in_place(data: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn transform_rows(data: &mut [f64], n: usize, fb: &FilterBank, inverse: bool) {
    for row in data.chunks_exact_mut(n) {
        if inverse {
            ifwt1d(row, fb);
        } else {
            fwt1d(row, fb);
        }
    }
}

/// Anisotropic 2-D analysis: full 1-D decomposition of every row, then of
/// every column.
pub fn fwt2d(grid: &ScalarGrid, fb: &FilterBank) -> WaveletPyramid {
    let n = grid.n();
    let mut data = grid.as_slice().to_vec();
    transform_rows(&mut data, n, fb, false);
    transpose_in_place(&mut data, n);
    transform_rows(&mut data, n, fb, false);
    transpose_in_place(&mut data, n);
    WaveletPyramid { n, data }
}

/// Inverse of [`fwt2d`].
pub fn ifwt2d(pyr: &WaveletPyramid, fb: &FilterBank) -> ScalarGrid {
    let n = pyr.n();
    let mut data = pyr.as_slice().to_vec();
    transpose_in_place(&mut data, n);
    transform_rows(&mut data, n, fb, true);
    transpose_in_place(&mut data, n);
    transform_rows(&mut data, n, fb, true);
    ScalarGrid::from_vec(n, data).expect("pyramid came from a valid grid")
}

/// Samples one tensor basis function on the grid by inverting a unit pyramid.
pub fn basis_on_grid(
    n: usize,
    s1: usize,
    l1: usize,
    s2: usize,
    l2: usize,
    fb: &FilterBank,
) -> Result<ScalarGrid> {
    let mut pyr = WaveletPyramid::zeros(n)?;
    pyr.set_slot(s1, l1, s2, l2, 1.0);
    Ok(ifwt2d(&pyr, fb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const BANKS: [&str; 5] = ["haar", "db4", "db8", "coif4", "coif10"];

    #[test]
    fn filter_identities() {
        let sqrt2 = std::f64::consts::SQRT_2;
        for name in BANKS {
            let fb = FilterBank::by_name(name).unwrap();
            let taps = fb.len();
            assert!(
                (fb.h.iter().sum::<f64>() - sqrt2).abs() < 1e-12,
                "{name}: dc gain"
            );
            assert!(fb.g.iter().sum::<f64>().abs() < 1e-12, "{name}: g dc");
            for shift in 0..taps / 2 {
                let hh: f64 = (0..taps - 2 * shift)
                    .map(|k| fb.h[k] * fb.h[k + 2 * shift])
                    .sum();
                let gg: f64 = (0..taps - 2 * shift)
                    .map(|k| fb.g[k] * fb.g[k + 2 * shift])
                    .sum();
                let expect = if shift == 0 { 1.0 } else { 0.0 };
                assert!((hh - expect).abs() < 1e-12, "{name}: h orth at {shift}");
                assert!((gg - expect).abs() < 1e-12, "{name}: g orth at {shift}");
            }
            // Cross-orthogonality at every even shift, both directions.
            for shift in 0..taps / 2 {
                let hg: f64 = (0..taps - 2 * shift)
                    .map(|k| fb.h[k + 2 * shift] * fb.g[k])
                    .sum();
                let gh: f64 = (0..taps - 2 * shift)
                    .map(|k| fb.h[k] * fb.g[k + 2 * shift])
                    .sum();
                assert!(hg.abs() < 1e-12 && gh.abs() < 1e-12, "{name}: h-g cross");
            }
        }
    }

    #[test]
    fn unknown_bank_is_an_error() {
        assert!(FilterBank::by_name("sym5").is_err());
    }

    #[test]
    fn slot_map_round_trip() {
        for p in 0..1024 {
            let (s, l) = slot_scale(p);
            assert_eq!(slot_position(s, l), p);
            if s > 0 {
                assert!(l < (1 << (s - 1)));
            }
        }
        assert_eq!(slot_scale(0), (0, 0));
        assert_eq!(slot_scale(1), (1, 0));
        assert_eq!(slot_scale(2), (2, 0));
        assert_eq!(slot_scale(3), (2, 1));
        assert_eq!(slot_scale(4), (3, 0));
    }

    #[test]
    fn round_trip_1d() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for name in BANKS {
            let fb = FilterBank::by_name(name).unwrap();
            for n in [4usize, 64, 256] {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut y = x.clone();
                fwt1d(&mut y, &fb);
                // Parseval along the way.
                let ex: f64 = x.iter().map(|v| v * v).sum();
                let ey: f64 = y.iter().map(|v| v * v).sum();
                assert!((ex - ey).abs() < 1e-10 * ex, "{name} n={n}: energy");
                ifwt1d(&mut y, &fb);
                for (a, b) in x.iter().zip(&y) {
                    assert!((a - b).abs() < 1e-10, "{name} n={n}");
                }
            }
        }
    }

    #[test]
    fn round_trip_2d() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let g = ScalarGrid::from_fn(32, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        for name in ["haar", "coif10"] {
            let fb = FilterBank::by_name(name).unwrap();
            let pyr = fwt2d(&g, &fb);
            assert!((pyr.norm_sq() - g.mean_sq() * 32.0 * 32.0).abs() < 1e-9);
            let back = ifwt2d(&pyr, &fb);
            for (a, b) in g.as_slice().iter().zip(back.as_slice()) {
                assert!((a - b).abs() < 1e-10, "{name}");
            }
        }
    }

    #[test]
    fn constant_signal_concentrates_in_scaling_slot() {
        for name in BANKS {
            let fb = FilterBank::by_name(name).unwrap();
            let n = 64;
            let mut x = vec![2.5; n];
            fwt1d(&mut x, &fb);
            let expect = 2.5 * (n as f64).sqrt();
            assert!((x[0] - expect).abs() < 1e-10 * expect, "{name}");
            for (p, v) in x.iter().enumerate().skip(1) {
                assert!(v.abs() < 1e-10 * expect, "{name}: leak at {p}");
            }
        }
    }

    #[test]
    fn scaling_basis_function_is_flat() {
        let fb = FilterBank::by_name("coif4").unwrap();
        let n = 16;
        let b = basis_on_grid(n, 0, 0, 0, 0, &fb).unwrap();
        let expect = 1.0 / n as f64;
        for v in b.as_slice() {
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_coarsest_wavelet_is_a_step() {
        let fb = FilterBank::by_name("haar").unwrap();
        let n = 16usize;
        let mut x = vec![0.0; n];
        x[slot_position(1, 0)] = 1.0;
        ifwt1d(&mut x, &fb);
        let a = 1.0 / (n as f64).sqrt();
        for (j, v) in x.iter().enumerate() {
            let expect = if j < n / 2 { a } else { -a };
            assert!((v - expect).abs() < 1e-12, "j={j}");
        }
    }

    #[test]
    fn vanishing_moments_kill_interior_polynomials() {
        // A sampled cubic is only polynomial away from the periodic wrap, so
        // the invariant applies to coefficients whose support avoids it.
        let fb = FilterBank::by_name("db4").unwrap();
        let n = 256usize;
        let taps = fb.len();
        let x: Vec<f64> = (0..n)
            .map(|j| {
                let t = j as f64 / n as f64;
                0.3 - 1.7 * t + 0.9 * t * t + 2.1 * t * t * t
            })
            .collect();
        let mut y = x.clone();
        fwt1d(&mut y, &fb);
        let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        // Finest scale: support [2l, 2l + taps - 1].
        let s_fin = n.trailing_zeros() as usize;
        let mut checked = 0;
        for l in 0..n / 2 {
            if 2 * l + taps <= n {
                let c = y[slot_position(s_fin, l)];
                assert!(c.abs() < 1e-9 * peak, "fine l={l}: {c}");
                checked += 1;
            }
        }
        // Second-finest: two cascade levels widen the support to 3*taps - 2.
        for l in 0..n / 4 {
            if 4 * l + 3 * taps <= n {
                let c = y[slot_position(s_fin - 1, l)];
                assert!(c.abs() < 1e-9 * peak, "mid l={l}: {c}");
                checked += 1;
            }
        }
        assert!(checked > 150);
    }

    #[test]
    fn coarse_pyramid_embeds_in_fine_pyramid() {
        // One analysis step on both axes, then the full pyramid of the
        // decimated image must reappear as the top-left block.
        let fb = FilterBank::by_name("db4").unwrap();
        let n = 64usize;
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let img = ScalarGrid::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        let fine = fwt2d(&img, &fb);

        // Manual single-step decimation along rows and columns.
        let mut data = img.as_slice().to_vec();
        let mut scratch = vec![0.0; n];
        for row in data.chunks_exact_mut(n) {
            super::analysis_step(row, n, &fb, &mut scratch);
        }
        super::transpose_in_place(&mut data, n);
        for row in data.chunks_exact_mut(n) {
            super::analysis_step(row, n, &fb, &mut scratch);
        }
        super::transpose_in_place(&mut data, n);
        let half = n / 2;
        let coarse_img = ScalarGrid::from_fn(half, |i, j| data[i * n + j]).unwrap();
        let coarse = fwt2d(&coarse_img, &fb);

        for a in 0..half {
            for b in 0..half {
                assert!(
                    (coarse.at(a, b) - fine.at(a, b)).abs() < 1e-11,
                    "({a},{b})"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn prop_round_trip(seed in 0u64..1000, log_n in 2u32..7, bank in 0usize..5) {
            let n = 1usize << log_n;
            let fb = FilterBank::by_name(BANKS[bank]).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let mut y = x.clone();
            fwt1d(&mut y, &fb);
            ifwt1d(&mut y, &fb);
            for (a, b) in x.iter().zip(&y) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
