//! Approximate matrix products by non-uniform column sampling.
//!
//! Column `i` of `A` and `B` is drawn with probability proportional to
//! `||a_i|| ||b_i||`, and `A B^T` is estimated by the average of
//! `a_i b_i^T / p_i` over `n` draws. The certificates bound the spectral-norm
//! error of that average.

use nalgebra::DMatrix;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng;
use crate::specmat::{dilate, spectral_norm, SymMat};
use crate::tailfn::{phi, TailProbability};

/// Leaf size of the pairwise summation tree.
const SUM_LEAF: usize = 16;
#[cfg(feature = "parallel")]
const PAR_MIN_SPAN: usize = 1024;

/// Column-sampling distribution for a pair `(A, B)` with equal column counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub m: usize,
    pub rows_a: usize,
    pub rows_b: usize,
    /// `||a_i|| ||b_i||` per column
    pub weights: Vec<f64>,
    pub probs: Vec<f64>,
    /// `sum_i ||a_i|| ||b_i||`
    pub z: f64,
    /// Columns with a positive weight, ascending.
    pub active: Vec<usize>,
    /// Cumulative probabilities over `active`; the last entry is exactly 1.
    pub cum: Vec<f64>,
}

fn check_finite(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} has non-finite entries")))
    }
}

fn column_weights(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    a.column_iter()
        .zip(b.column_iter())
        .map(|(ac, bc)| ac.norm() * bc.norm())
        .collect()
}

pub fn build_plan(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<SamplingPlan> {
    if a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "A has {} columns but B has {}",
            a.ncols(),
            b.ncols()
        )));
    }
    if a.nrows() == 0 || b.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::ShapeMismatch("A and B must be non-empty".into()));
    }
    check_finite("A", a)?;
    check_finite("B", b)?;
    let weights = column_weights(a, b);
    let z: f64 = weights.iter().sum();
    if !(z > 0.0) {
        return Err(Error::AllZeroColumns);
    }
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let active: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut acc = 0.0;
    let mut cum: Vec<f64> = active
        .iter()
        .map(|&i| {
            acc += probs[i];
            acc
        })
        .collect();
    *cum.last_mut().unwrap() = 1.0;
    Ok(SamplingPlan {
        m: a.ncols(),
        rows_a: a.nrows(),
        rows_b: b.nrows(),
        weights,
        probs,
        z,
        active,
        cum,
    })
}

impl SamplingPlan {
    /// Inverse-CDF lookup of a uniform draw `u` in `[0, 1)`.
    pub fn column_for(&self, u: f64) -> usize {
        let k = self.cum.partition_point(|&c| c <= u);
        self.active[k.min(self.active.len() - 1)]
    }

    fn check(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
        if a.ncols() != self.m
            || b.ncols() != self.m
            || a.nrows() != self.rows_a
            || b.nrows() != self.rows_b
            || column_weights(a, b) != self.weights
        {
            return Err(Error::PlanMismatch);
        }
        Ok(())
    }

    /// The `n` column indices that [`approx_product`] uses for `seed`.
    pub fn draw_indices(&self, n: usize, seed: u64) -> Vec<usize> {
        let mut r = rng::stream(seed, rng::PRODUCT_STREAM);
        (0..n).map(|_| self.column_for(rng::unit_f64(&mut r))).collect()
    }

    /// Index of the `j`-th draw, addressed directly by counter.
    pub fn draw_index_at(&self, seed: u64, j: u64) -> usize {
        let mut r = rng::stream(seed, rng::PRODUCT_STREAM);
        rng::seek_u64(&mut r, j);
        self.column_for(rng::unit_f64(&mut r))
    }
}

fn pairwise_sum(a: &DMatrix<f64>, b: &DMatrix<f64>, plan: &SamplingPlan, idx: &[usize]) -> DMatrix<f64> {
    if idx.len() <= SUM_LEAF {
        let mut acc = DMatrix::zeros(a.nrows(), b.nrows());
        for &i in idx {
            let ai = a.column(i) / plan.probs[i];
            acc.ger(1.0, &ai, &b.column(i), 1.0);
        }
        return acc;
    }
    let mid = idx.len() / 2;
    let (lo, hi) = idx.split_at(mid);
    #[cfg(feature = "parallel")]
    let (l, r) = if idx.len() >= PAR_MIN_SPAN {
        rayon::join(|| pairwise_sum(a, b, plan, lo), || pairwise_sum(a, b, plan, hi))
    } else {
        (pairwise_sum(a, b, plan, lo), pairwise_sum(a, b, plan, hi))
    };
    #[cfg(not(feature = "parallel"))]
    let (l, r) = (pairwise_sum(a, b, plan, lo), pairwise_sum(a, b, plan, hi));
    l + r
}

/// `(1/n) sum_j a_{i_j} b_{i_j}^T / p_{i_j}` for the given column indices.
///
/// Summation follows a fixed pairwise tree over the sample order, so the
/// result is bitwise identical however the work is split across threads.
pub fn estimate_from_indices(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    plan: &SamplingPlan,
    indices: &[usize],
) -> Result<DMatrix<f64>> {
    plan.check(a, b)?;
    if indices.is_empty() {
        return Err(Error::domain("need at least one sample"));
    }
    if indices.iter().any(|&i| i >= plan.m || plan.probs[i] == 0.0) {
        return Err(Error::domain("sample index outside the active columns"));
    }
    Ok(pairwise_sum(a, b, plan, indices) / indices.len() as f64)
}

/// Sampled estimate of `A B^T` from `n` i.i.d. column draws.
pub fn approx_product(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    plan: &SamplingPlan,
    n: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    plan.check(a, b)?;
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    estimate_from_indices(a, b, plan, &plan.draw_indices(n, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RmmVariant {
    Precise,
    Simplified,
}

/// Spectral-norm error certificate for the sampled product.
#[derive(Debug, Clone, PartialEq)]
pub struct RmmCertificate {
    /// Threshold on `||hat M - M||_2`; relative to `||A|| ||B||` when `normalized`.
    pub deviation: f64,
    pub probability: TailProbability,
    pub k_coeff: f64,
    pub variant: RmmVariant,
    pub normalized: bool,
    /// `||A||_2 ||B||_2`, when the matrices were available.
    pub scale: Option<f64>,
    pub t: f64,
    pub n: u64,
    pub params: std::collections::BTreeMap<String, f64>,
}

impl RmmCertificate {
    /// The threshold on the unnormalized error `||hat M - M||_2`, when known.
    pub fn absolute_deviation(&self) -> Option<f64> {
        if self.normalized {
            self.scale.map(|s| s * self.deviation)
        } else {
            Some(self.deviation)
        }
    }

    /// The threshold on `||hat M - M||_2 / (||A|| ||B||)`, when known.
    pub fn relative_deviation(&self) -> Option<f64> {
        if self.normalized {
            Some(self.deviation)
        } else {
            self.scale.filter(|&s| s > 0.0).map(|s| self.deviation / s)
        }
    }
}

impl Serialize for RmmCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("RmmCertificate", 11)?;
        st.serialize_field("deviation", &self.deviation)?;
        st.serialize_field("deviation_absolute", &self.absolute_deviation())?;
        st.serialize_field("deviation_relative", &self.relative_deviation())?;
        st.serialize_field("probability", &self.probability.value)?;
        st.serialize_field("probability_raw", &self.probability.raw)?;
        st.serialize_field("k_coeff", &self.k_coeff)?;
        st.serialize_field("variant", &self.variant)?;
        st.serialize_field("normalized", &self.normalized)?;
        st.serialize_field("t", &self.t)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("params", &self.params)?;
        st.end()
    }
}

/// Exact quantities that drive the precise certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductStats {
    pub norm_a: f64,
    pub norm_b: f64,
    pub z: f64,
    /// `tr(A^T A B^T B) = ||A B^T||_F^2`
    pub cross_trace: f64,
    pub stable_rank_a: f64,
    pub stable_rank_b: f64,
}

impl ProductStats {
    pub fn compute(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        let plan = build_plan(a, b)?;
        let norm_a = spectral_norm(a)?;
        let norm_b = spectral_norm(b)?;
        Ok(ProductStats {
            norm_a,
            norm_b,
            z: plan.z,
            cross_trace: (a * b.transpose()).norm_squared(),
            stable_rank_a: (a.norm_squared() / (norm_a * norm_a)).max(1.0),
            stable_rank_b: (b.norm_squared() / (norm_b * norm_b)).max(1.0),
        })
    }

    pub fn scale(&self) -> f64 {
        self.norm_a * self.norm_b
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("t must be finite and > 0, got {t}")))
    }
}

/// Precise certificate from the exact norms, `Z` and cross trace.
pub fn certificate_precise(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    n: u64,
    t: f64,
) -> Result<RmmCertificate> {
    certificate_precise_from_stats(&ProductStats::compute(a, b)?, n, t)
}

pub fn certificate_precise_from_stats(s: &ProductStats, n: u64, t: f64) -> Result<RmmCertificate> {
    check_t(t)?;
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let nf = n as f64;
    let scale = s.scale();
    let spread = s.z + scale;
    let deviation = (2.0 * scale * spread * t / nf).sqrt() + spread * t / (3.0 * nf);
    // Z^2 >= tr(A^T A B^T B) holds exactly; rounding may leave a tiny negative
    let k_coeff = (4.0 * (s.z * s.z - s.cross_trace) / (scale * spread)).max(0.0);
    Ok(RmmCertificate {
        deviation,
        probability: TailProbability::from_raw(k_coeff * phi(t)?),
        k_coeff,
        variant: RmmVariant::Precise,
        normalized: false,
        scale: Some(scale),
        t,
        n,
        params: crate::bounds::params_map([
            ("norm_a", s.norm_a),
            ("norm_b", s.norm_b),
            ("z", s.z),
            ("cross_trace", s.cross_trace),
            ("n", nf),
        ]),
    })
}

fn check_ranks(ra: f64, rb: f64) -> Result<()> {
    if ra >= 1.0 && rb >= 1.0 && ra.is_finite() && rb.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("stable ranks must be >= 1, got {ra}, {rb}")))
    }
}

/// Simplified certificate in terms of stable ranks; the threshold is on the
/// error relative to `||A|| ||B||` and the failure probability is `e^{-t}`.
pub fn certificate_simplified(ra: f64, rb: f64, n: u64, t: f64) -> Result<RmmCertificate> {
    check_ranks(ra, rb)?;
    check_t(t)?;
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let nf = n as f64;
    let root = (ra * rb).sqrt();
    let q = (1.0 + root) * ((4.0 * root).ln() + t) / nf;
    Ok(RmmCertificate {
        deviation: 2.0 * q.sqrt() + 2.0 * q / 3.0,
        probability: TailProbability::from_raw((-t).exp()),
        k_coeff: 4.0 * root,
        variant: RmmVariant::Simplified,
        normalized: true,
        scale: None,
        t,
        n,
        params: crate::bounds::params_map([("r_a", ra), ("r_b", rb), ("n", nf)]),
    })
}

/// Simplified certificate with ranks and scale taken from the matrices.
pub fn certificate_simplified_for(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    n: u64,
    t: f64,
) -> Result<RmmCertificate> {
    let s = ProductStats::compute(a, b)?;
    let mut cert = certificate_simplified(s.stable_rank_a, s.stable_rank_b, n, t)?;
    cert.scale = Some(s.scale());
    Ok(cert)
}

/// `8/3 + 2 sqrt(5/3)`.
pub fn sample_size_constant() -> f64 {
    8.0 / 3.0 + 2.0 * (5.0f64 / 3.0).sqrt()
}

/// Columns needed so the relative error is at most `eps` with probability `1 - delta`.
pub fn sample_size(ra: f64, rb: f64, eps: f64, delta: f64) -> Result<u64> {
    check_ranks(ra, rb)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let root = (ra * rb).sqrt();
    let n = sample_size_constant() * (1.0 + root) * ((4.0 * root).ln() + (1.0 / delta).ln()) / (eps * eps);
    Ok(n.ceil() as u64)
}

/// The support of one sampled dilation `X_j`: `(dilate(a_i b_i^T) / p_i, p_i)`.
pub fn atoms(a: &DMatrix<f64>, b: &DMatrix<f64>, plan: &SamplingPlan) -> Result<Vec<(SymMat, f64)>> {
    plan.check(a, b)?;
    Ok(plan
        .active
        .iter()
        .map(|&i| {
            let outer = a.column(i) * b.column(i).transpose();
            (dilate(&(outer / plan.probs[i])), plan.probs[i])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn plan_identity() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let p = build_plan(&i2, &i2).unwrap();
        assert_eq!(p.probs, vec![0.5, 0.5]);
        assert_eq!(p.z, 2.0);
        assert_eq!(p.cum, vec![0.5, 1.0]);
    }

    #[test]
    fn plan_weighted() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let p = build_plan(&a, &b).unwrap();
        assert_eq!(p.z, 11.0);
        assert_relative_eq!(p.probs[0], 3.0 / 11.0, max_relative = 1e-15);
        assert_relative_eq!(p.probs[1], 8.0 / 11.0, max_relative = 1e-15);
    }

    #[test]
    fn plan_drops_zero_columns() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(1, 3, &[1.0, 5.0, 1.0]);
        let p = build_plan(&a, &b).unwrap();
        assert_eq!(p.probs[1], 0.0);
        assert_eq!(p.active, vec![0, 2]);
        assert_relative_eq!(p.probs[0] + p.probs[2], 1.0, epsilon = 1e-15);
        for k in 0..1000 {
            assert_ne!(p.column_for(k as f64 / 1000.0), 1);
        }
    }

    #[test]
    fn plan_errors() {
        let a = DMatrix::<f64>::zeros(2, 3);
        let b = DMatrix::<f64>::identity(3, 3);
        assert_eq!(build_plan(&a, &b), Err(Error::AllZeroColumns));
        let b2 = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(build_plan(&a, &b2), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn single_column_is_exact() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let b = DMatrix::from_column_slice(2, 1, &[4.0, 1.0]);
        let p = build_plan(&a, &b).unwrap();
        let exact = &a * b.transpose();
        for (n, seed) in [(1, 0), (7, 3), (50, 99)] {
            let est = approx_product(&a, &b, &p, n, seed).unwrap();
            assert_relative_eq!(est, exact, max_relative = 1e-14);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let a = DMatrix::from_fn(3, 40, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let b = DMatrix::from_fn(4, 40, |i, j| ((i * 5 + j) % 7) as f64 - 3.0);
        let p = build_plan(&a, &b).unwrap();
        let x = approx_product(&a, &b, &p, 3000, 42).unwrap();
        let y = approx_product(&a, &b, &p, 3000, 42).unwrap();
        assert_eq!(x.as_slice(), y.as_slice());
        let z = approx_product(&a, &b, &p, 3000, 43).unwrap();
        assert_ne!(x.as_slice(), z.as_slice());
    }

    #[test]
    fn indices_are_counter_addressed() {
        let a = DMatrix::from_fn(2, 10, |i, j| (i + j + 1) as f64);
        let p = build_plan(&a, &a).unwrap();
        let seq = p.draw_indices(25, 8);
        for j in [0u64, 5, 24] {
            assert_eq!(p.draw_index_at(8, j), seq[j as usize]);
        }
        // prefix stability: a longer run extends a shorter one
        assert_eq!(&p.draw_indices(40, 8)[..25], &seq[..]);
    }

    #[test]
    fn plan_mismatch() {
        let a = DMatrix::<f64>::identity(2, 2);
        let p = build_plan(&a, &a).unwrap();
        let other = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert_eq!(approx_product(&other, &a, &p, 3, 0), Err(Error::PlanMismatch));
        let wide = DMatrix::<f64>::identity(2, 3);
        assert_eq!(approx_product(&wide, &wide, &p, 3, 0), Err(Error::PlanMismatch));
    }

    #[test]
    fn unbiased_over_atoms() {
        let a = DMatrix::from_fn(3, 6, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let b = DMatrix::from_fn(2, 6, |i, j| ((i + 2 * j) % 5) as f64 - 2.0);
        let p = build_plan(&a, &b).unwrap();
        let mut mean = DMatrix::zeros(3, 2);
        for &i in &p.active {
            mean += (a.column(i) * b.column(i).transpose() / p.probs[i]) * p.probs[i];
        }
        assert_relative_eq!(mean, &a * b.transpose(), epsilon = 1e-12);
    }

    #[test]
    fn precise_rank_one_exact() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 2.0]);
        let c = certificate_precise(&a, &a, 10, 2.0).unwrap();
        assert_eq!(c.k_coeff, 0.0);
        assert_eq!(c.probability.value, 0.0);
    }

    #[test]
    fn precise_identity() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        for (n, t) in [(10u64, 1.0), (100, 5.0)] {
            let c = certificate_precise(&i2, &i2, n, t).unwrap();
            let nf = n as f64;
            assert_relative_eq!(c.deviation, (6.0 * t / nf).sqrt() + t / nf, max_relative = 1e-13);
            assert_relative_eq!(c.k_coeff, 8.0 / 3.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn simplified_examples() {
        let c = certificate_simplified(1.0, 1.0, 155, 10f64.ln()).unwrap();
        assert_relative_eq!(c.deviation, 0.46807365160133348, max_relative = 1e-12);
        assert!(c.deviation <= 0.5);
        assert_relative_eq!(c.probability.value, 0.1, max_relative = 1e-14);
        let c2 = certificate_simplified(1.0, 1.0, 155, 2.0 * 10f64.ln()).unwrap();
        assert!(c2.deviation > c.deviation);
        assert!(certificate_simplified(0.5, 1.0, 155, 1.0).is_err());
    }

    #[test]
    fn sample_size_examples() {
        assert_relative_eq!(sample_size_constant(), 5.248655564138278, max_relative = 1e-14);
        assert_eq!(sample_size(1.0, 1.0, 0.5, 0.1).unwrap(), 155);
        let base = sample_size(2.0, 3.0, 0.2, 0.05).unwrap();
        let half = sample_size(2.0, 3.0, 0.1, 0.05).unwrap();
        assert!(half >= 4 * base - 4 && half <= 4 * base);
        assert!(sample_size(2.0, 4.0, 0.2, 0.05).unwrap() > base);
        assert!(sample_size(1.0, 1.0, 1.0, 0.1).is_err());
        assert!(sample_size(1.0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn json_carries_both_scales() {
        let a = DMatrix::from_fn(3, 5, |i, j| (i * j) as f64 + 1.0);
        let c = certificate_simplified_for(&a, &a, 100, 2.0).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["variant"], "simplified");
        assert_eq!(v["normalized"], true);
        assert!(v["deviation_absolute"].as_f64().unwrap() > v["deviation"].as_f64().unwrap());
    }

    fn mat(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-3.0f64..3.0, rows * cols)
            .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
    }

    proptest! {
        #[test]
        fn k_coeff_nonnegative(a in mat(3, 7), b in mat(4, 7)) {
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let s = ProductStats::compute(&a, &b).unwrap();
            prop_assert!(s.z * s.z >= s.cross_trace * (1.0 - 1e-12));
            let c = certificate_precise_from_stats(&s, 10, 1.0).unwrap();
            prop_assert!(c.k_coeff >= 0.0 && c.deviation >= 0.0);
        }

        #[test]
        fn simplified_dominates_precise(a in mat(3, 8), b in mat(2, 8), n in 1u64..5000, t in 0.01f64..20.0) {
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let s = ProductStats::compute(&a, &b).unwrap();
            let simp = certificate_simplified(s.stable_rank_a, s.stable_rank_b, n, t).unwrap();
            let root = (s.stable_rank_a * s.stable_rank_b).sqrt();
            let t_equiv = 2.0 * ((4.0 * root).ln() + t);
            let precise = certificate_precise_from_stats(&s, n, t_equiv).unwrap();
            prop_assert!(simp.deviation >= precise.deviation / s.scale() * (1.0 - 1e-12));
        }
    }
}
