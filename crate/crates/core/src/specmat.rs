//! Dense symmetric-matrix numerics.
//!
//! Everything spectral goes through one symmetric eigendecomposition: extreme
//! eigenvalues, the matrix exponential and logarithm, projectors onto
//! eigenspaces. Matrices in this crate are small (dimension in the tens), so
//! the O(d^3) cost is irrelevant and the functional calculus stays exact up to
//! the eigensolver's accuracy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance used when symmetrizing ingested data.
pub const DEFAULT_SYM_TOL: f64 = 1e-8;

/// Relative floor for "strictly positive" eigenvalue checks.
pub const PD_REL_FLOOR: f64 = 1e-12;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// A dense real symmetric matrix. Symmetry holds bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMat {
    m: DMatrix<f64>,
}

/// Eigenvalues sorted in descending order, with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Symmetrize a square array, `(A + A^T) / 2`, after checking the asymmetry is
/// at most `rel_tol * max(1, max|a_ij|)`.
pub fn symmetrize(raw: &DMatrix<f64>, rel_tol: f64) -> Result<SymMat> {
    let (r, c) = raw.shape();
    if r != c {
        return Err(Error::NotSquare { rows: r, cols: c });
    }
    if r == 0 {
        return Err(Error::Empty);
    }
    check_finite(raw)?;
    let scale = raw.amax().max(1.0);
    let mut max_asym = 0.0f64;
    for i in 0..r {
        for j in (i + 1)..r {
            max_asym = max_asym.max((raw[(i, j)] - raw[(j, i)]).abs());
        }
    }
    let tolerance = rel_tol * scale;
    if max_asym > tolerance {
        return Err(Error::AsymmetricInput {
            max_asymmetry: max_asym,
            tolerance,
        });
    }
    Ok(SymMat::from_symmetric_part(raw))
}

impl SymMat {
    /// Takes the symmetric part without any tolerance check.
    pub fn from_symmetric_part(raw: &DMatrix<f64>) -> Self {
        let n = raw.nrows();
        let mut m = raw.clone();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (raw[(i, j)] + raw[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMat { m }
    }

    pub fn new(raw: DMatrix<f64>) -> Result<Self> {
        symmetrize(&raw, DEFAULT_SYM_TOL)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        SymMat {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        SymMat {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(SymMat {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(values)),
        })
    }

    /// `v v^T`.
    pub fn outer(v: &[f64]) -> Self {
        let n = v.len();
        SymMat {
            m: DMatrix::from_fn(n, n, |i, j| v[i] * v[j]),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        SymMat {
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &SymMat) -> SymMat {
        SymMat {
            m: &self.m - &other.m,
        }
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat { m: &self.m * s }
    }

    /// `self + s * other`, in place.
    pub fn axpy(&mut self, s: f64, other: &SymMat) {
        self.m.zip_apply(&other.m, |a, b| *a += s * b);
    }

    /// `A^2`, re-symmetrized to remove rounding asymmetry.
    pub fn square(&self) -> SymMat {
        SymMat::from_symmetric_part(&(&self.m * &self.m))
    }

    /// `B A B` for symmetric `B`.
    pub fn congruence(&self, b: &SymMat) -> SymMat {
        SymMat::from_symmetric_part(&(&b.m * &self.m * &b.m))
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        let eig = SymmetricEigen::try_new(self.m.clone(), EIG_EPS, EIG_MAX_ITER)
            .ok_or(Error::EigFailure)?;
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        Ok(Spectrum {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.spectrum()?.eigenvalues)
    }

    pub fn lambda_max(&self) -> Result<f64> {
        Ok(self.spectrum()?.eigenvalues[0])
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(*self.spectrum()?.eigenvalues.last().unwrap())
    }

    /// `max(lambda_max, -lambda_min)`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        Ok(ev[0].max(-ev[ev.len() - 1]))
    }

    /// Applies a scalar function through the eigendecomposition.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<SymMat> {
        Ok(self.spectrum()?.reconstruct_with(f))
    }

    pub fn exp(&self) -> Result<SymMat> {
        self.map_spectrum(f64::exp)
    }

    pub fn log(&self) -> Result<SymMat> {
        let eig = self.spectrum()?;
        eig.require_positive_definite()?;
        Ok(eig.reconstruct_with(f64::ln))
    }

    pub fn is_positive_definite(&self) -> Result<bool> {
        Ok(self.spectrum()?.require_positive_definite().is_ok())
    }
}

impl Spectrum {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMat {
        let q = &self.eigenvectors;
        let fl = DVector::from_iterator(self.eigenvalues.len(), self.eigenvalues.iter().map(|&l| f(l)));
        let mut scaled = q.clone();
        for (mut col, v) in scaled.column_iter_mut().zip(fl.iter()) {
            col *= *v;
        }
        SymMat::from_symmetric_part(&(scaled * q.transpose()))
    }

    pub fn reconstruct(&self) -> SymMat {
        self.reconstruct_with(|l| l)
    }

    /// Orthogonal projector onto the span of the eigenvectors with (sorted)
    /// indices in `range`.
    pub fn projector(&self, range: std::ops::Range<usize>) -> SymMat {
        let q = self.eigenvectors.columns(range.start, range.len());
        SymMat::from_symmetric_part(&(q * q.transpose()))
    }

    /// `lambda_min > 1e-12 * max(1, lambda_max)`.
    pub fn require_positive_definite(&self) -> Result<()> {
        let lmin = self.lambda_min();
        if lmin > PD_REL_FLOOR * self.lambda_max().max(1.0) {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite { lambda_min: lmin })
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMat {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SymMat::from_rows(&rows)
    }
}

impl From<SymMat> for Vec<Vec<f64>> {
    fn from(s: SymMat) -> Self {
        s.m.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// The symmetric dilation `[[0, C], [C^T, 0]]`.
pub fn dilate(c: &DMatrix<f64>) -> SymMat {
    let (r, k) = c.shape();
    let mut m = DMatrix::zeros(r + k, r + k);
    m.view_mut((0, r), (r, k)).copy_from(c);
    m.view_mut((r, 0), (k, r)).copy_from(&c.transpose());
    SymMat { m }
}

/// Largest singular value of a rectangular matrix.
///
/// Computed from the smaller Gram matrix; `lambda_max(dilate(c))` is the same
/// quantity and the tests hold the two routes against each other.
pub fn spectral_norm(c: &DMatrix<f64>) -> Result<f64> {
    check_finite(c)?;
    let (r, k) = c.shape();
    if r == 0 || k == 0 {
        return Ok(0.0);
    }
    let gram = if r <= k {
        c * c.transpose()
    } else {
        c.transpose() * c
    };
    let top = SymMat::from_symmetric_part(&gram).lambda_max()?;
    Ok(top.max(0.0).sqrt())
}

/// Stable rank `||C||_F^2 / ||C||_2^2`.
pub fn stable_rank(c: &DMatrix<f64>) -> Result<f64> {
    check_finite(c)?;
    let s = spectral_norm(c)?;
    if s == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(c.norm_squared() / (s * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_sym(dim: usize, seed: u64) -> SymMat {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let raw = DMatrix::from_fn(dim, dim, |_, _| next());
        SymMat::from_symmetric_part(&raw)
    }

    fn power_iteration_lambda_max(a: &SymMat) -> f64 {
        // shift so the top eigenvalue dominates in magnitude
        let shift = a.as_matrix().abs().row_sum().max() + 1.0;
        let shifted = a.as_matrix() + DMatrix::identity(a.dim(), a.dim()) * shift;
        let mut v = DVector::from_element(a.dim(), 1.0);
        let mut lambda = 0.0;
        for _ in 0..200_000 {
            let w = &shifted * &v;
            let next = w.norm();
            v = w / next;
            if (next - lambda).abs() < 1e-15 * next {
                break;
            }
            lambda = next;
        }
        (v.transpose() * a.as_matrix() * &v)[(0, 0)]
    }

    #[test]
    fn symmetrize_identity() {
        let s = symmetrize(&DMatrix::identity(3, 3), 1e-8).unwrap();
        assert_eq!(s.as_matrix(), &DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn symmetrize_averages_small_asymmetry() {
        let raw = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + 1e-12, 0.0]);
        let s = symmetrize(&raw, 1e-8).unwrap();
        assert_eq!(s.get(0, 1), s.get(1, 0));
        assert_relative_eq!(s.get(0, 1), 1.0 + 5e-13, epsilon = 1e-16);
    }

    #[test]
    fn symmetrize_rejects_asymmetric() {
        let raw = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(
            symmetrize(&raw, 1e-8),
            Err(Error::AsymmetricInput { .. })
        ));
    }

    #[test]
    fn symmetrize_rejects_non_finite() {
        let raw = DMatrix::from_row_slice(2, 2, &[0.0, f64::NAN, f64::NAN, 0.0]);
        assert_eq!(symmetrize(&raw, 1e-8), Err(Error::NonFinite));
        let raw = DMatrix::from_row_slice(1, 1, &[f64::INFINITY]);
        assert_eq!(symmetrize(&raw, 1e-8), Err(Error::NonFinite));
    }

    #[test]
    fn diagonal_extremes() {
        let d = SymMat::diag(&[3.0, 1.0, -2.0]).unwrap();
        assert_eq!(d.lambda_max().unwrap(), 3.0);
        assert_eq!(d.lambda_min().unwrap(), -2.0);
    }

    #[test]
    fn rademacher_outer_minus_identity() {
        for d in 2..=8 {
            let x: Vec<f64> = (0..d).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
            let m = SymMat::outer(&x).sub(&SymMat::identity(d));
            assert_relative_eq!(m.lambda_max().unwrap(), (d - 1) as f64, epsilon = 1e-12);
            assert_relative_eq!(m.lambda_min().unwrap(), -1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lambda_max_matches_power_iteration() {
        for seed in 0..5 {
            let a = random_sym(5, seed);
            let expected = power_iteration_lambda_max(&a);
            assert_relative_eq!(a.lambda_max().unwrap(), expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn spectrum_reconstructs() {
        let a = random_sym(7, 11);
        let err = (a.spectrum().unwrap().reconstruct().as_matrix() - a.as_matrix()).norm();
        assert!(err <= 1e-8 * a.frobenius_norm().max(1.0));
        let ev = a.eigenvalues().unwrap();
        assert!(ev.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn spectral_norm_cases() {
        assert_eq!(spectral_norm(&DMatrix::zeros(3, 4)).unwrap(), 0.0);
        let a = DVector::from_column_slice(&[1.0, 2.0, 2.0]);
        let b = DVector::from_column_slice(&[3.0, 4.0]);
        let c = &a * b.transpose();
        assert_relative_eq!(spectral_norm(&c).unwrap(), 15.0, max_relative = 1e-12);
    }

    #[test]
    fn spectral_norm_matches_svd_oracle() {
        let raw = random_sym(6, 3).into_matrix();
        let c = raw.view((0, 0), (4, 6)).into_owned();
        let svd_top = c.clone().svd(false, false).singular_values.max();
        assert_relative_eq!(spectral_norm(&c).unwrap(), svd_top, max_relative = 1e-8);
        assert_relative_eq!(dilate(&c).lambda_max().unwrap(), svd_top, max_relative = 1e-8);
    }

    #[test]
    fn dilation_examples() {
        let d = dilate(&DMatrix::from_element(1, 1, 2.0));
        assert_eq!(d.as_matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
        assert_relative_eq!(d.lambda_max().unwrap(), 2.0, epsilon = 1e-14);

        let ev = dilate(&DMatrix::identity(2, 2)).eigenvalues().unwrap();
        for (got, want) in ev.iter().zip([1.0, 1.0, -1.0, -1.0]) {
            assert_relative_eq!(*got, want, epsilon = 1e-12);
        }

        let a = DVector::from_column_slice(&[1.0, -2.0]);
        let b = DVector::from_column_slice(&[2.0, 0.0, 1.0]);
        let scale = a.norm() * b.norm();
        let ev = dilate(&(&a * b.transpose())).eigenvalues().unwrap();
        assert_relative_eq!(ev[0], scale, max_relative = 1e-12);
        assert_relative_eq!(ev[4], -scale, max_relative = 1e-12);
        for v in &ev[1..4] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn exp_and_log() {
        let z = SymMat::zeros(3).exp().unwrap();
        assert_relative_eq!(z.as_matrix(), &DMatrix::identity(3, 3), epsilon = 1e-15);
        let e = SymMat::diag(&[1.0, 2.0]).unwrap().exp().unwrap();
        assert_relative_eq!(e.get(0, 0), 1f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(e.get(1, 1), 2f64.exp(), max_relative = 1e-14);
        assert_eq!(e.get(0, 1), 0.0);

        let neg = SymMat::diag(&[1.0, 0.0]).unwrap();
        assert!(matches!(neg.log(), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn log_exp_roundtrip() {
        for seed in 0..10 {
            // entries in [-1/2, 1/2] keep the spectrum inside [-2, 2]
            let a = random_sym(4, seed).scale(0.5);
            let back = a.exp().unwrap().log().unwrap();
            assert!((back.as_matrix() - a.as_matrix()).norm() <= 1e-8);
        }
    }

    #[test]
    fn stable_rank_cases() {
        assert_relative_eq!(stable_rank(&DMatrix::identity(5, 5)).unwrap(), 5.0, max_relative = 1e-12);
        let a = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let b = DVector::from_column_slice(&[1.0, -1.0]);
        assert_relative_eq!(stable_rank(&(&a * b.transpose())).unwrap(), 1.0, max_relative = 1e-12);
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 1.0, 1.0]));
        assert_relative_eq!(stable_rank(&d).unwrap(), 1.5, max_relative = 1e-12);
        assert_eq!(stable_rank(&DMatrix::zeros(2, 2)), Err(Error::ZeroMatrix));
    }

    #[test]
    fn projector_is_idempotent() {
        let a = random_sym(6, 5);
        let p = a.spectrum().unwrap().projector(0..2);
        let p2 = p.square();
        assert!((p2.as_matrix() - p.as_matrix()).norm() < 1e-12);
        assert_relative_eq!(p.trace(), 2.0, epsilon = 1e-12);
    }

    fn sym_strategy(max_dim: usize) -> impl Strategy<Value = SymMat> {
        (1..=max_dim).prop_flat_map(|d| {
            proptest::collection::vec(-5.0f64..5.0, d * d)
                .prop_map(move |v| SymMat::from_symmetric_part(&DMatrix::from_vec(d, d, v)))
        })
    }

    fn rect_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-3.0f64..3.0, r * c)
                .prop_map(move |v| DMatrix::from_vec(r, c, v))
        })
    }

    proptest! {
        #[test]
        fn trace_average_between_extremes(a in sym_strategy(6)) {
            let s = a.spectrum().unwrap();
            let avg = a.trace() / a.dim() as f64;
            let tol = 1e-10 * a.frobenius_norm().max(1.0);
            prop_assert!(s.lambda_min() <= avg + tol);
            prop_assert!(avg <= s.lambda_max() + tol);
        }

        #[test]
        fn dilation_spectrum_symmetric(c in rect_strategy()) {
            let mut ev = dilate(&c).eigenvalues().unwrap();
            let mut neg: Vec<f64> = ev.iter().map(|x| -x).collect();
            ev.sort_by(f64::total_cmp);
            neg.sort_by(f64::total_cmp);
            for (a, b) in ev.iter().zip(&neg) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
        }

        #[test]
        fn spectral_norm_equals_dilation_top(c in rect_strategy()) {
            let s = spectral_norm(&c).unwrap();
            let d = dilate(&c).lambda_max().unwrap();
            prop_assert!((s - d).abs() <= 1e-10 * s.max(1e-300) + 1e-13);
        }

        #[test]
        fn exp_is_positive_definite(a in sym_strategy(5)) {
            prop_assert!(a.exp().unwrap().lambda_min().unwrap() > 0.0);
        }

        #[test]
        fn stable_rank_range(c in rect_strategy()) {
            prop_assume!(c.norm() > 1e-6);
            let r = stable_rank(&c).unwrap();
            let cap = c.nrows().min(c.ncols()) as f64;
            prop_assert!(r >= 1.0 - 1e-10 && r <= cap + 1e-10);
        }
    }
}
