//! Internal 2-D FFT plumbing shared by the spectral operators.
//!
//! Conventions: the forward transform is the plain unnormalized DFT sum and
//! the inverse carries the full `1/n^2`. Frequencies are indexed by integers
//! `m in [-n/2, n/2-1]`, with array position `p` mapping to `m = p` for
//! `p < n/2` and `m = p - n` otherwise; the angular wavenumber is `2*pi*m`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::grid::ScalarGrid;

type PlanKey = (usize, bool);

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// Signed frequency for array position `p` on a grid of side `n`.
#[inline]
pub(crate) fn freq_index(p: usize, n: usize) -> i64 {
    if p < n / 2 {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

/// Signed frequency with the unmatched Nyquist index mapped to zero; used by
/// every first-order (odd) derivative operator.
#[inline]
pub(crate) fn freq_index_reduced(p: usize, n: usize) -> i64 {
    if p == n / 2 {
        0
    } else {
        freq_index(p, n)
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// In-place 2-D DFT over a row-major `n x n` complex buffer. No
/// normalization is applied in either direction.
pub(crate) fn fft2_in_place(buf: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), n * n);
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    transpose(buf, n);
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    transpose(buf, n);
}

/// Forward 2-D DFT of a real grid (unnormalized).
pub(crate) fn dft2_forward(g: &ScalarGrid) -> Vec<Complex64> {
    let n = g.n();
    let mut buf: Vec<Complex64> = g
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2_in_place(&mut buf, n, false);
    buf
}

/// Inverse 2-D DFT scaled by `1/n^2`, returning the real part.
pub(crate) fn dft2_inverse_real(mut spec: Vec<Complex64>, n: usize) -> ScalarGrid {
    fft2_in_place(&mut spec, n, true);
    let norm = 1.0 / ((n * n) as f64);
    let data: Vec<f64> = spec.iter().map(|c| c.re * norm).collect();
    ScalarGrid::from_vec(n, data).expect("buffer came from a valid grid")
}

/// Filters a real 1-D signal with a multiplier that depends only on the
/// signed frequency index. The multiplier must be real and even in `m` for
/// the output to be real; the imaginary residue is dropped as roundoff.
pub(crate) fn real_multiplier_1d(v: &[f64], mult: impl Fn(i64) -> f64) -> Vec<f64> {
    let n = v.len();
    let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let fwd = plan(n, false);
    let mut scratch = vec![Complex64::default(); fwd.get_inplace_scratch_len()];
    fwd.process_with_scratch(&mut buf, &mut scratch);
    for (p, c) in buf.iter_mut().enumerate() {
        *c *= mult(freq_index(p, n));
    }
    let inv = plan(n, true);
    scratch.resize(inv.get_inplace_scratch_len(), Complex64::default());
    inv.process_with_scratch(&mut buf, &mut scratch);
    let norm = 1.0 / n as f64;
    buf.iter().map(|c| c.re * norm).collect()
}
