//! One-dimensional wavelet Galerkin matrices of even-order fractional
//! derivative operators.
//!
//! `F^(alpha)` holds the pairings `<w_a, (-d^2/dx^2)^alpha w_b>` over the full
//! periodized 1-D wavelet basis (scaling slot included), indexed in pyramid
//! order. Two construction routes are provided:
//!
//! * **discrete** (normative): conjugate the exact grid multiplier
//!   `((2 pi |m|)^2)^alpha` with the orthonormal FWT. Exact in the grid
//!   semantics, `O(n^2 log n)`, and the default everywhere.
//! * **paper**: tabulate continuum scaling-function pairings
//!   `e(l) = <phi, (-d^2/dx^2)^alpha phi(. - l)>` from their two-scale linear
//!   system with Riesz-asymptotic tails, periodize, and change basis to the
//!   pyramid. Kept for cross-validation; it approximates the discrete route
//!   to a few percent at benchmark sizes.
//!
//! An independent Fourier-product quadrature for `e(l)` guards the table
//! solver in tests.

use crate::error::{bad_param, Error, Result};
use crate::fft::real_multiplier_1d;
use crate::spectral::TWO_PI;
use crate::wavelets::{fwt1d, ifwt1d, FilterBank};
use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

/// Construction route of a [`ConnectionMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableMode {
    Paper,
    Discrete,
}

impl TableMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TableMode::Paper => "paper",
            TableMode::Discrete => "discrete",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(TableMode::Paper),
            "discrete" => Ok(TableMode::Discrete),
            other => Err(Error::Config(format!(
                "unknown table mode '{other}' (expected paper or discrete)"
            ))),
        }
    }
}

/// Dense symmetric Galerkin matrix of `(-d^2/dx^2)^alpha` in the periodized
/// 1-D wavelet basis, pyramid index order.
#[derive(Debug, Clone)]
pub struct ConnectionMatrix {
    pub alpha: f64,
    pub mode: TableMode,
    pub mat: DMatrix<f64>,
    /// Relative Frobenius asymmetry measured before symmetrization.
    pub asymmetry: f64,
}

impl ConnectionMatrix {
    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.mat[(a, b)]
    }

    /// Row-major copy, the order used by the on-disk matrix layout.
    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                out.push(self.mat[(r, c)]);
            }
        }
        out
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_matrix(path, self.n(), &self.to_row_major())
    }
}

/// Table of scaling-function pairings `e(l)` for `|l| <= lmin`, with the
/// asymptotic tail available beyond the stored range.
#[derive(Debug, Clone)]
pub struct ScalingConnectionTable {
    pub alpha: f64,
    pub lmin: usize,
    e: Vec<f64>,
    /// Riesz constant for the fractional tail; `None` for integer orders,
    /// whose tails vanish to working precision (compact support).
    tail_c: Option<f64>,
}

impl ScalingConnectionTable {
    /// Pairing at offset `l`: stored value inside the truncation radius,
    /// asymptotic tail (or zero, integer orders) outside.
    pub fn at(&self, l: i64) -> f64 {
        let radius = self.lmin as i64;
        if l.abs() <= radius {
            self.e[(l + radius) as usize]
        } else {
            match self.tail_c {
                Some(c) => 1.0 / (c * (l.abs() as f64).powf(1.0 + 2.0 * self.alpha)),
                None => 0.0,
            }
        }
    }

    /// Stored values for `l = -lmin ..= lmin`.
    pub fn values(&self) -> &[f64] {
        &self.e
    }
}

/// Riesz-potential normalization
/// `c_alpha = sqrt(pi) Gamma(-alpha) 2^(-2 alpha) / Gamma(alpha + 1/2)`,
/// which fixes the power-law tail `e(l) ~ 1/(c_alpha |l|^(1+2 alpha))`.
/// Integer and half-integer orders are rejected: the Gamma factor hits a
/// pole at integers, and the tail expansion degenerates at half-integers.
pub fn riesz_constant(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(bad_param("alpha", alpha, "must be positive"));
    }
    let doubled = 2.0 * alpha;
    if (doubled - doubled.round()).abs() < 1e-12 {
        return Err(Error::RieszOrderDegenerate(alpha));
    }
    let c = std::f64::consts::PI.sqrt() * gamma(-alpha) * 2f64.powf(-2.0 * alpha)
        / gamma(alpha + 0.5);
    Ok(c)
}

/// `a(t) = sum_k h[k] h[k+t]`: the filter autocorrelation entering the
/// two-scale recursion. Orthonormality makes `a(0) = 1` and kills all other
/// even offsets.
pub(crate) fn filter_autocorrelation(fb: &FilterBank) -> Vec<f64> {
    let h = &fb.h;
    let len = h.len() as i64;
    let mut a = vec![0.0; (2 * len - 1) as usize];
    for t in -(len - 1)..len {
        let mut acc = 0.0;
        for k in 0..len {
            let kt = k + t;
            if kt >= 0 && kt < len {
                acc += h[k as usize] * h[kt as usize];
            }
        }
        a[(t + len - 1) as usize] = acc;
    }
    a
}

fn autocorr_at(a: &[f64], filter_len: i64, t: i64) -> f64 {
    if t.abs() >= filter_len {
        0.0
    } else {
        a[(t + filter_len - 1) as usize]
    }
}

/// Integer-order pairings on their exact support `|l| <= filter_len - 2`.
///
/// The two-scale recursion alone fixes the table only up to scale; the
/// polynomial moment identity `sum_l l^(2p) e(l) = (-1)^p (2p)!` pins the
/// normalization. Swapping a recursion row for the moment row ruins the
/// solve (the remaining rows leave a second, spurious near-null direction
/// that LU happily mixes in), so the moment row is appended instead and the
/// stacked overdetermined system goes through least squares. The true table
/// satisfies every row simultaneously; a filter bank too rough for the
/// derivative order leaves an irreducible residual, reported as singular.
fn integer_pairing_table(p: i32, fb: &FilterBank) -> Result<Vec<f64>> {
    let flen = fb.len() as i64;
    let rad = (flen - 2).max(0);
    let dim = (2 * rad + 1) as usize;
    let gain = 4f64.powi(p);
    let acorr = filter_autocorrelation(fb);

    let mut m = DMatrix::<f64>::zeros(dim + 1, dim);
    let mut b = DVector::<f64>::zeros(dim + 1);
    for l in -rad..=rad {
        let row = (l + rad) as usize;
        m[(row, row)] += 1.0;
        for j in (2 * l - flen + 1)..=(2 * l + flen - 1) {
            // pairings vanish beyond the radius, so truncation is exact here
            if j.abs() <= rad {
                m[(row, (j + rad) as usize)] -=
                    gain * autocorr_at(&acorr, flen, j - 2 * l);
            }
        }
    }
    let mut row_max = 1.0f64;
    for j in 1..=rad {
        row_max = row_max.max((j as f64).powi(2 * p));
    }
    for j in -rad..=rad {
        m[(dim, (j + rad) as usize)] = (j as f64).powi(2 * p) / row_max;
    }
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let target = sign * gamma(2.0 * p as f64 + 1.0);
    b[dim] = target / row_max;

    let svd = m.clone().svd(true, true);
    let e = svd
        .solve(&b, 1e-13)
        .map_err(|what| Error::LinearSolve(what.to_string()))?;

    let scale = e.amax().max(1e-300);
    let r = &m * &e - &b;
    let mut rec_resid = 0.0f64;
    for row in 0..dim {
        rec_resid = rec_resid.max(r[row].abs());
    }
    rec_resid /= scale;
    let mom_resid = r[dim].abs() * row_max / target.abs();
    if rec_resid > 1e-6 || mom_resid > 1e-6 {
        return Err(Error::ConnectionSingular {
            filter: fb.name().to_string(),
            alpha: p as f64,
            what: format!(
                "two-scale recursion and moment normalization are inconsistent \
                 (residuals {:.2e} / {:.2e}); the filter bank is too rough for \
                 this derivative order",
                rec_resid, mom_resid
            ),
        });
    }

    let mut vals: Vec<f64> = e.iter().copied().collect();
    let c = rad as usize;
    for l in 1..=c {
        let avg = 0.5 * (vals[c + l] + vals[c - l]);
        vals[c + l] = avg;
        vals[c - l] = avg;
    }
    Ok(vals)
}

/// Solves the two-scale system for the scaling pairings `e(l)`,
/// `l in [-lmin, lmin]`:
/// `e(l) = 2^(2 alpha) sum_j a(j - 2l) e(j)`,
/// closed with the Riesz tail for fractional orders. Integer orders are
/// compactly supported and go through the least-squares construction above;
/// filter banks too rough to carry the operator (Haar at alpha >= 1, for
/// one) are rejected there.
pub fn scaling_connection_coeffs(
    alpha: f64,
    fb: &FilterBank,
    lmin: usize,
) -> Result<ScalingConnectionTable> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(bad_param("alpha", alpha, "must be nonnegative"));
    }
    let filter_len = fb.len();
    if lmin < 4 * filter_len {
        return Err(bad_param(
            "lmin",
            lmin as f64,
            "truncation radius must be at least 4x the filter length",
        ));
    }
    if alpha == 0.0 {
        // orthonormal translates: the identity pairing
        let mut e = vec![0.0; 2 * lmin + 1];
        e[lmin] = 1.0;
        return Ok(ScalingConnectionTable { alpha, lmin, e, tail_c: None });
    }

    if (alpha - alpha.round()).abs() < 1e-12 {
        let small = integer_pairing_table(alpha.round() as i32, fb)?;
        let rad_i = (fb.len() - 2).max(0);
        let mut e = vec![0.0; 2 * lmin + 1];
        e[lmin - rad_i..=lmin + rad_i].copy_from_slice(&small);
        return Ok(ScalingConnectionTable { alpha, lmin, e, tail_c: None });
    }
    let c = riesz_constant(alpha)?;

    let rad = lmin as i64;
    let flen = filter_len as i64;
    let gain = 2f64.powf(2.0 * alpha);
    let acorr = filter_autocorrelation(fb);

    // The pairing is even in l, so fold that symmetry into the system:
    // unknowns e(l) for l in [0, lmin], signed offsets land on column |j|.
    // This keeps the output symmetric by construction and halves the solve.
    let dim = lmin + 1;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    for l in 0..=rad {
        let row = l as usize;
        m[(row, row)] += 1.0;
        // coupled offsets: j with |j - 2l| < filter length
        for j in (2 * l - flen + 1)..=(2 * l + flen - 1) {
            let w = gain * autocorr_at(&acorr, flen, j - 2 * l);
            if w == 0.0 {
                continue;
            }
            if j.abs() <= rad {
                m[(row, j.unsigned_abs() as usize)] -= w;
            } else {
                // tail values are known, move them to the right-hand side
                b[row] += w / (c * (j.abs() as f64).powf(1.0 + 2.0 * alpha));
            }
        }
    }

    let lu = m.clone().lu();
    let e = lu.solve(&b).ok_or_else(|| {
        Error::LinearSolve(format!(
            "two-scale system singular (alpha {}, filter {}, lmin {})",
            alpha,
            fb.name(),
            lmin
        ))
    })?;

    let scale = e.amax().max(1e-300);
    let resid = (&m * &e - &b).amax() / scale;
    if resid > 1e-8 {
        return Err(Error::LinearSolve(format!(
            "two-scale solve residual {:.2e} (alpha {}, filter {})",
            resid,
            alpha,
            fb.name()
        )));
    }

    let mut vals = vec![0.0; 2 * lmin + 1];
    for l in 0..=lmin {
        vals[lmin + l] = e[l];
        vals[lmin - l] = e[l];
    }

    Ok(ScalingConnectionTable { alpha, lmin, e: vals, tail_c: Some(c) })
}

fn check_sn(s_n: u32, cap: u32) -> Result<usize> {
    if !(2..=cap).contains(&s_n) {
        return Err(bad_param("s_n", s_n as f64, "scale count out of range"));
    }
    Ok(1usize << s_n)
}

/// Builds `F^(alpha)` from the continuum pairing table: periodize
/// `e(l - l')` (differences wrapped to `[-n/2, n/2)`, tail values beyond the
/// truncation radius), change basis to the pyramid with the orthonormal FWT
/// on both indices, and scale by `2^(2 alpha s_n)`.
///
/// The scale factor is the whole story of the finest-level normalization:
/// the operator is homogeneous of degree `2 alpha` and the finest-scale
/// functions live at spacing `2^(-s_n)`, so conjugating the unit-spacing
/// table costs exactly that power. (The equivalent formulation as a
/// sqrt(2)-weighted filter cascade with per-slot rescaling composes to the
/// same matrix; doing the algebra once here avoids redundant roundoff.)
pub fn build_f_paper(alpha: f64, fb: &FilterBank, s_n: u32) -> Result<ConnectionMatrix> {
    let n = check_sn(s_n, 10)?;
    let lmin = (4 * fb.len()).max(n / 4);
    let table = scaling_connection_coeffs(alpha, fb, lmin)?;

    let half = (n / 2) as i64;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    for r in 0..n as i64 {
        let mut row = Vec::with_capacity(n);
        for c in 0..n as i64 {
            let d = (c - r + half).rem_euclid(n as i64) - half;
            row.push(table.at(d));
        }
        rows.push(row);
    }

    // conjugate with the orthonormal analysis transform: rows, then columns
    for row in rows.iter_mut() {
        fwt1d(row, fb);
    }
    let mut col = vec![0.0; n];
    for c in 0..n {
        for (r, row) in rows.iter().enumerate() {
            col[r] = row[c];
        }
        fwt1d(&mut col, fb);
        for (r, row) in rows.iter_mut().enumerate() {
            row[c] = col[r];
        }
    }

    let scale = (n as f64).powf(2.0 * alpha);
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            mat[(r, c)] = v * scale;
        }
    }
    Ok(finish_matrix(alpha, TableMode::Paper, mat))
}

/// Builds `F^(alpha)` exactly in the grid semantics: for each pyramid basis
/// vector, synthesize to the grid, apply the DFT multiplier
/// `((2 pi |m|)^2)^alpha` (DC passes only at `alpha = 0`), and analyze back.
pub fn build_f_discrete(alpha: f64, fb: &FilterBank, s_n: u32) -> Result<ConnectionMatrix> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(bad_param("alpha", alpha, "must be nonnegative"));
    }
    let n = check_sn(s_n, 12)?;
    let mut powers = vec![0.0; n / 2 + 1];
    powers[0] = if alpha == 0.0 { 1.0 } else { 0.0 };
    for (m, p) in powers.iter_mut().enumerate().skip(1) {
        *p = (TWO_PI * m as f64).powf(2.0 * alpha);
    }

    let mut mat = DMatrix::<f64>::zeros(n, n);
    let mut basis = vec![0.0; n];
    for b in 0..n {
        basis.fill(0.0);
        basis[b] = 1.0;
        ifwt1d(&mut basis, fb);
        let mut filtered = real_multiplier_1d(&basis, |m| powers[m.unsigned_abs() as usize]);
        fwt1d(&mut filtered, fb);
        for (r, v) in filtered.iter().enumerate() {
            mat[(r, b)] = *v;
        }
    }
    Ok(finish_matrix(alpha, TableMode::Discrete, mat))
}

fn finish_matrix(alpha: f64, mode: TableMode, mat: DMatrix<f64>) -> ConnectionMatrix {
    let sym = 0.5 * (&mat + mat.transpose());
    let diff = &mat - &sym;
    let denom = sym.norm().max(1e-300);
    let asymmetry = 2.0 * diff.norm() / denom;
    ConnectionMatrix { alpha, mode, mat: sym, asymmetry }
}

/// Independent quadrature oracle for the scaling pairings:
/// `e(l) = (1/pi) int_0^K k^(2 alpha) |phi_hat(k)|^2 cos(k l) dk`
/// with `phi_hat` the 20-term truncated refinement product
/// `prod_j m0(k / 2^j)`. Returns values for `l = 0 ..= lmax`. Simpson rule
/// with step `dk`; `kmax` controls the spectral tail cut, which dominates
/// the error budget for large `alpha`.
pub fn fourier_product_table(
    alpha: f64,
    fb: &FilterBank,
    lmax: usize,
    kmax: f64,
    dk: f64,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(bad_param("alpha", alpha, "oracle needs a positive order"));
    }
    if !(dk > 0.0) || !(kmax > 10.0 * dk) {
        return Err(bad_param("dk", dk, "bad quadrature step"));
    }
    let levels = 20;
    let steps = {
        let raw = (kmax / dk).ceil() as usize;
        raw + (raw % 2)
    };
    let h = &fb.h;
    let len = h.len();
    let root_half = std::f64::consts::FRAC_1_SQRT_2;

    let mut sums = vec![0.0; lmax + 1];
    for idx in 0..=steps {
        let k = idx as f64 * dk;
        // |phi_hat(k)|^2 via the truncated product of m0(k/2^j)
        let mut prod_re = 1.0;
        let mut prod_im = 0.0;
        for j in 1..=levels {
            let xi = k / 2f64.powi(j);
            let (mut m_re, mut m_im) = (0.0, 0.0);
            // Horner in e^{-i xi}
            let (c, s) = (xi.cos(), -xi.sin());
            for t in (0..len).rev() {
                let nr = m_re * c - m_im * s + h[t];
                let ni = m_re * s + m_im * c;
                m_re = nr;
                m_im = ni;
            }
            m_re *= root_half;
            m_im *= root_half;
            let pr = prod_re * m_re - prod_im * m_im;
            let pi = prod_re * m_im + prod_im * m_re;
            prod_re = pr;
            prod_im = pi;
        }
        let phi2 = prod_re * prod_re + prod_im * prod_im;
        let base = if k == 0.0 { 0.0 } else { k.powf(2.0 * alpha) * phi2 };
        let w = if idx == 0 || idx == steps {
            1.0
        } else if idx % 2 == 1 {
            4.0
        } else {
            2.0
        };
        for (l, acc) in sums.iter_mut().enumerate() {
            *acc += w * base * (k * l as f64).cos();
        }
    }
    let norm = dk / 3.0 / std::f64::consts::PI;
    Ok(sums.into_iter().map(|s| s * norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bank(name: &str) -> FilterBank {
        FilterBank::by_name(name).unwrap()
    }

    #[test]
    fn riesz_constant_matches_high_precision() {
        // frozen from a 40-digit Gamma evaluation
        assert_relative_eq!(
            riesz_constant(0.25).unwrap(),
            -5.0132565492620010048,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            riesz_constant(7.0 / 6.0).unwrap(),
            2.2616367465796080182,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            riesz_constant(7.0 / 3.0).unwrap(),
            -0.052839453241394697644,
            max_relative = 1e-12
        );
        for bad in [0.0, 1.0, 2.0, 0.5, 1.5, 2.5, -0.3] {
            assert!(riesz_constant(bad).is_err(), "alpha {} must be excluded", bad);
        }
    }

    #[test]
    fn autocorrelation_identities() {
        for name in ["haar", "db4", "coif10"] {
            let fb = bank(name);
            let a = filter_autocorrelation(&fb);
            let flen = fb.len() as i64;
            assert_relative_eq!(autocorr_at(&a, flen, 0), 1.0, epsilon = 1e-12);
            for t in 1..flen {
                if t % 2 == 0 {
                    assert!(
                        autocorr_at(&a, flen, t).abs() < 1e-12,
                        "{name}: a({t}) should vanish"
                    );
                }
                assert_relative_eq!(
                    autocorr_at(&a, flen, t),
                    autocorr_at(&a, flen, -t),
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn zero_order_table_is_delta() {
        let fb = bank("db4");
        let t = scaling_connection_coeffs(0.0, &fb, 40).unwrap();
        assert_eq!(t.at(0), 1.0);
        for l in 1..=40 {
            assert_eq!(t.at(l), 0.0);
        }
        assert_eq!(t.at(1000), 0.0);
    }

    #[test]
    fn small_truncation_radius_rejected() {
        let fb = bank("coif10");
        assert!(scaling_connection_coeffs(1.0, &fb, 4 * fb.len() - 1).is_err());
    }

    #[test]
    fn integer_table_moment_identities() {
        let fb = bank("coif10");
        let t = scaling_connection_coeffs(1.0, &fb, 4 * fb.len()).unwrap();
        let rad = t.lmin as i64;
        let (mut s0, mut s2) = (0.0, 0.0);
        let mut peak = 0.0f64;
        for l in -rad..=rad {
            s0 += t.at(l);
            s2 += (l * l) as f64 * t.at(l);
            peak = peak.max(t.at(l).abs());
        }
        // constants are annihilated, quadratics reproduce the second derivative
        assert!(s0.abs() <= 1e-8 * peak, "sum {}", s0);
        assert_relative_eq!(s2, -2.0, epsilon = 1e-8);
        assert!(t.at(0) > 0.0);
        assert_eq!(t.at(rad + 5), 0.0);
    }

    #[test]
    fn haar_cannot_carry_integer_orders() {
        let fb = bank("haar");
        match scaling_connection_coeffs(1.0, &fb, 4 * fb.len()) {
            Err(Error::ConnectionSingular { .. }) => {}
            other => panic!("expected singular recursion, got {:?}", other.map(|_| ())),
        }
        assert!(build_f_paper(1.0, &fb, 4).is_err());
    }

    #[test]
    fn fractional_table_matches_fourier_oracle() {
        let fb = bank("coif10");
        let alpha = 7.0 / 6.0;
        let t = scaling_connection_coeffs(alpha, &fb, 4 * fb.len()).unwrap();
        let oracle = fourier_product_table(alpha, &fb, 8, 2048.0 * std::f64::consts::PI, 0.005)
            .unwrap();
        let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (l, want) in oracle.iter().enumerate() {
            let got = t.at(l as i64);
            assert!(
                (got - want).abs() <= 1e-4 * scale,
                "l={}: table {} oracle {}",
                l,
                got,
                want
            );
        }

        // tail self-consistency: the solution blends into the Riesz asymptote
        let c = riesz_constant(alpha).unwrap();
        let r = |l: i64| t.at(l) * c * (l as f64).powf(1.0 + 2.0 * alpha);
        let drift = r(t.lmin as i64 / 2) / r(t.lmin as i64) - 1.0;
        assert!(drift.abs() < 0.02, "tail drift {}", drift);
    }

    #[test]
    fn integer_tables_match_fourier_oracle() {
        let fb = bank("coif10");
        for alpha in [1.0, 2.0] {
            let t = scaling_connection_coeffs(alpha, &fb, 4 * fb.len()).unwrap();
            let oracle =
                fourier_product_table(alpha, &fb, 8, 2048.0 * std::f64::consts::PI, 0.005)
                    .unwrap();
            let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (l, want) in oracle.iter().enumerate() {
                let got = t.at(l as i64);
                assert!(
                    (got - want).abs() <= 1e-4 * scale,
                    "alpha={} l={}: table {} oracle {}",
                    alpha,
                    l,
                    got,
                    want
                );
            }
        }
    }

    #[test]
    fn discrete_zero_order_is_identity() {
        let f = build_f_discrete(0.0, &bank("db4"), 5).unwrap();
        let n = f.n();
        for r in 0..n {
            for c in 0..n {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((f.at(r, c) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discrete_quadratic_form_is_exact() {
        use rand::{Rng, SeedableRng};
        let fb = bank("coif4");
        let s_n = 6u32;
        let n = 1usize << s_n;
        let f = build_f_discrete(1.0, &fb, s_n).unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // d^T F d against <v, (-d^2/dx^2) v> evaluated straight in Fourier
        let mut quad = 0.0;
        for r in 0..n {
            for c in 0..n {
                quad += d[r] * f.at(r, c) * d[c];
            }
        }
        let mut v = d.clone();
        ifwt1d(&mut v, &fb);
        let lap = real_multiplier_1d(&v, |m| (TWO_PI * m as f64).powi(2));
        let direct: f64 = v.iter().zip(&lap).map(|(a, b)| a * b).sum();
        assert_relative_eq!(quad, direct, max_relative = 1e-12);
    }

    #[test]
    fn discrete_semigroup_square_root() {
        let fb = bank("coif4");
        let half = build_f_discrete(0.5, &fb, 6).unwrap();
        let one = build_f_discrete(1.0, &fb, 6).unwrap();
        let prod = &half.mat * &half.mat;
        // DC row/column is annihilated by both, compare the rest
        let mut num = 0.0;
        let mut den = 0.0;
        for r in 1..one.n() {
            for c in 1..one.n() {
                num += (prod[(r, c)] - one.at(r, c)).powi(2);
                den += one.at(r, c).powi(2);
            }
        }
        assert!(num.sqrt() <= 1e-10 * den.sqrt(), "rel {}", num.sqrt() / den.sqrt());
    }

    #[test]
    fn discrete_translation_invariance_within_scale() {
        let fb = bank("coif4");
        let f = build_f_discrete(1.3, &fb, 6).unwrap();
        let scale_s = 4usize; // positions 8..16
        let base = 1usize << (scale_s - 1);
        let count = base;
        let peak = f.mat.amax();
        for l in 0..count {
            for lp in 0..count {
                let v = f.at(base + l, base + lp);
                let w = f.at(base + (l + 1) % count, base + (lp + 1) % count);
                assert!(
                    (v - w).abs() <= 1e-12 * peak,
                    "shift covariance broken at ({l},{lp})"
                );
            }
        }
    }

    #[test]
    fn matrices_are_positive_semidefinite() {
        let fb = bank("coif4");
        let f = build_f_discrete(1.3, &fb, 5).unwrap();
        let eig = f.mat.clone().symmetric_eigen();
        let norm = f.mat.norm();
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-10 * norm, "min eigenvalue {}", min);
    }

    #[test]
    fn paper_zero_order_is_identity() {
        let f = build_f_paper(0.0, &bank("db4"), 5).unwrap();
        for r in 0..f.n() {
            for c in 0..f.n() {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((f.at(r, c) - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn paper_route_tracks_discrete_oracle() {
        let fb = bank("coif10");
        // The two routes agree essentially exactly below the top octave; up
        // there the scaling-function images fold onto the grid and the
        // continuous pairings run hot (peak ratio ~1.12 at alpha 1, ~1.33 at
        // alpha 2 near m = 0.44n). That bump owns most of the Frobenius mass,
        // so the global gaps below are measured values with headroom, while
        // the per-mode check pins the shared normalization tightly.
        for (alpha, band) in [(1.0f64, 0.10), (2.0, 0.25)] {
            let paper = build_f_paper(alpha, &fb, 6).unwrap();
            let disc = build_f_discrete(alpha, &fb, 6).unwrap();
            let rel = (&paper.mat - &disc.mat).norm() / disc.mat.norm();
            assert!(rel <= band, "alpha {}: paper vs discrete gap {}", alpha, rel);
            assert!(paper.asymmetry < 1e-2, "asymmetry {}", paper.asymmetry);

            let n = paper.n();
            for m in [1usize, 3, n / 16, n / 8] {
                let mut g: Vec<f64> = (0..n)
                    .map(|t| (TWO_PI * m as f64 * t as f64 / n as f64).cos())
                    .collect();
                fwt1d(&mut g, &fb);
                let d = DVector::from_vec(g);
                let num = (&paper.mat * &d).dot(&d);
                let den = (&disc.mat * &d).dot(&d);
                assert!(
                    (num / den - 1.0).abs() < 5e-4,
                    "alpha {} mode {}: quadratic-form ratio {}",
                    alpha,
                    m,
                    num / den
                );
            }
        }
    }

    #[test]
    fn matrix_round_trips_through_disk() {
        let f = build_f_discrete(0.75, &bank("db4"), 4).unwrap();
        let path = std::env::temp_dir().join(format!(
            "fbmflow_conn_{}.f64",
            std::process::id()
        ));
        f.save(&path).unwrap();
        let (rows, data) = crate::io::read_matrix(&path).unwrap();
        assert_eq!(rows, f.n());
        let back = f.to_row_major();
        assert_eq!(data, back);
        std::fs::remove_file(&path).ok();
    }
}
