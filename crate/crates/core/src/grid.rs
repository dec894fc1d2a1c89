//! Dense periodic grids over the unit torus.
//!
//! A grid of side `n` samples a function on `[0,1)^2` at `x1 = j/n`,
//! `x2 = i/n`, stored row-major with `i` (the `x2` index) as the row.
//! All transforms in this crate require `n` to be a power of two, at least 4.

use crate::error::{Error, Result};

/// Checks the side-length contract shared by every grid constructor.
pub fn check_size(n: usize) -> Result<()> {
    if n >= 4 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::BadGridSize(n))
    }
}

/// Scalar field sampled on an `n x n` periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    n: usize,
    data: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Self {
            n,
            data: vec![0.0; n * n],
        })
    }

    /// Builds a grid by evaluating `f(i, j)` at every sample, `i` being the
    /// row (`x2`) index and `j` the column (`x1`) index.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_size(n)?;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Ok(Self { n, data })
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

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Periodic access: indices are wrapped modulo `n`.
    #[inline]
    pub fn at_wrapped(&self, i: isize, j: isize) -> f64 {
        let mask = (self.n - 1) as isize;
        self.data[((i & mask) as usize) * self.n + ((j & mask) as usize)]
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

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / (self.data.len() as f64)
    }

    /// Mean of the squared samples.
    pub fn mean_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>() / (self.data.len() as f64)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Subtracts the mean in place and returns it.
    pub fn remove_mean(&mut self) -> f64 {
        let m = self.mean();
        for v in &mut self.data {
            *v -= m;
        }
        m
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Returns the first non-finite sample, if any.
    pub fn check_finite(&self) -> Result<()> {
        for (idx, v) in self.data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteInput(idx / self.n, idx % self.n));
            }
        }
        Ok(())
    }
}

/// Grid-mean inner product `(1/n^2) sum a*b`.
pub fn dot_mean(a: &ScalarGrid, b: &ScalarGrid) -> f64 {
    debug_assert_eq!(a.n, b.n);
    let s: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| x * y)
        .sum();
    s / (a.data.len() as f64)
}

/// Two-component vector field on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorGrid {
    pub u1: ScalarGrid,
    pub u2: ScalarGrid,
}

impl VectorGrid {
    pub fn new(u1: ScalarGrid, u2: ScalarGrid) -> Result<Self> {
        if u1.n() != u2.n() {
            return Err(Error::SizeMismatch(u1.n(), u2.n()));
        }
        Ok(Self { u1, u2 })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Ok(Self {
            u1: ScalarGrid::zeros(n)?,
            u2: ScalarGrid::zeros(n)?,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.u1.n()
    }

    /// Mean squared magnitude `(1/n^2) sum |u|^2`.
    pub fn mean_sq(&self) -> f64 {
        self.u1.mean_sq() + self.u2.mean_sq()
    }

    pub fn scale(&mut self, s: f64) {
        self.u1.scale(s);
        self.u2.scale(s);
    }

    pub fn check_finite(&self) -> Result<()> {
        self.u1.check_finite()?;
        self.u2.check_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_contract() {
        assert!(ScalarGrid::zeros(2).is_err());
        assert!(ScalarGrid::zeros(12).is_err());
        assert!(ScalarGrid::zeros(0).is_err());
        assert!(ScalarGrid::zeros(4).is_ok());
        assert!(ScalarGrid::zeros(256).is_ok());
    }

    #[test]
    fn wrapped_access() {
        let g = ScalarGrid::from_fn(4, |i, j| (i * 4 + j) as f64).unwrap();
        assert_eq!(g.at_wrapped(-1, 0), g.at(3, 0));
        assert_eq!(g.at_wrapped(4, 5), g.at(0, 1));
        assert_eq!(g.at_wrapped(-5, -1), g.at(3, 3));
    }

    #[test]
    fn mean_removal() {
        let mut g = ScalarGrid::from_fn(8, |i, j| 3.0 + (i + 2 * j) as f64).unwrap();
        let m = g.remove_mean();
        assert!((g.mean()).abs() < 1e-12);
        assert!(m > 3.0);
    }
}
