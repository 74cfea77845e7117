//! Certificates for concrete settings: the supremum of a subgaussian process,
//! second-moment (covariance) estimation error in spectral norm, and the
//! fixed-dimension subgaussian tools (Rayleigh quotients, covering numbers,
//! extreme eigenvalues of an empirical covariance).

use serde::{Deserialize, Serialize};

use crate::bounds::{params_map, Sides, Source, TailCertificate};
use crate::error::{Error, Result};
use crate::specmat::SymMat;
use crate::tailfn::{phi, TailProbability};

/// Smallest `log k` for which the `e^{-t/2}` simplification of the process
/// bound is used (`t = 2 (tau + log k) > 2.6`).
pub const SUP_PROCESS_MIN_LOG_K: f64 = 1.3;

/// Smallest `t` for which the combined split-covariance bound is stated.
pub const SPLIT_MIN_T: f64 = 2.6;

fn check_pos(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

/// Per-coordinate variance proxies of a (possibly dependent) subgaussian process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Process {
    pub sigma2: Vec<f64>,
    pub v: f64,
    pub k: f64,
}

impl Process {
    pub fn new(sigma2: Vec<f64>) -> Result<Self> {
        if sigma2.is_empty() {
            return Err(Error::domain("sigma2 must be non-empty"));
        }
        for &s in &sigma2 {
            check_pos("sigma2 entry", s)?;
        }
        let v = sigma2.iter().copied().fold(0.0, f64::max);
        let k = sigma2.iter().sum::<f64>() / v;
        Ok(Process { sigma2, v, k })
    }

    /// `2 sqrt(v (log k + tau))`, without the `log k` precondition of [`sup_process_bound`].
    pub fn threshold(&self, tau: f64) -> f64 {
        2.0 * (self.v * (self.k.ln() + tau)).sqrt()
    }
}

/// `Pr[sup_i Z_i > 2 sqrt(v (log k + tau))] <= e^{-tau}`.
pub fn sup_process_bound(p: &Process, tau: f64) -> Result<TailCertificate> {
    check_pos("tau", tau)?;
    let log_k = p.k.ln();
    let t = 2.0 * (tau + log_k);
    if log_k < SUP_PROCESS_MIN_LOG_K {
        return Err(Error::PreconditionFailed(format!(
            "log k = {log_k:.6} < {SUP_PROCESS_MIN_LOG_K}; the e^(-t/2) simplification is not \
             valid (raw t = 2 (tau + log k) = {t:.6}); use the subgaussian certificate instead"
        )));
    }
    Ok(TailCertificate {
        deviation: p.threshold(tau),
        probability: TailProbability::from_raw((-tau).exp()),
        t,
        sides: Sides::One,
        source: Source::SupProcess,
        params: params_map([("v", p.v), ("k", p.k), ("tau", tau)]),
    })
}

/// Spectral statistics of a bounded random vector `x` with `Sigma = E[x x^T]`,
/// `K = E[x x^T x x^T]` and `||x||^2 <= ell2_bar` almost surely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceStats {
    /// `lambda_max(K - Sigma^2)`
    pub lam_k: f64,
    /// `tr(K - Sigma^2)`
    pub tr_k: f64,
    pub ell2_bar: f64,
    pub lam_min_s: f64,
    pub lam_max_s: f64,
    pub n: u64,
}

impl CovarianceStats {
    pub fn new(
        lam_k: f64,
        tr_k: f64,
        ell2_bar: f64,
        lam_min_s: f64,
        lam_max_s: f64,
        n: u64,
    ) -> Result<Self> {
        for (name, v) in [
            ("lam_k", lam_k),
            ("tr_k", tr_k),
            ("ell2_bar", ell2_bar),
            ("lam_min_s", lam_min_s),
            ("lam_max_s", lam_max_s),
        ] {
            check_nonneg(name, v)?;
        }
        if n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        let slack = 1e-12 * tr_k.max(ell2_bar).max(1.0);
        if tr_k + slack < lam_k {
            return Err(Error::domain(format!("tr_k = {tr_k} < lam_k = {lam_k}")));
        }
        if lam_max_s + slack < lam_min_s {
            return Err(Error::domain(format!(
                "lam_max_s = {lam_max_s} < lam_min_s = {lam_min_s}"
            )));
        }
        if ell2_bar + slack < lam_max_s {
            return Err(Error::domain(format!(
                "ell2_bar = {ell2_bar} cannot be below lam_max_s = {lam_max_s}"
            )));
        }
        Ok(CovarianceStats {
            lam_k,
            tr_k,
            ell2_bar,
            lam_min_s,
            lam_max_s,
            n,
        })
    }

    /// Derives the statistics from `Sigma` and `K` directly.
    pub fn from_matrices(sigma: &SymMat, k: &SymMat, ell2_bar: f64, n: u64) -> Result<Self> {
        if sigma.dim() != k.dim() {
            return Err(Error::ShapeMismatch(format!(
                "Sigma is {0}x{0} but K is {1}x{1}",
                sigma.dim(),
                k.dim()
            )));
        }
        let resid = k.sub(&sigma.square());
        let s = sigma.spectrum()?;
        Self::new(
            resid.lambda_max()?.max(0.0),
            resid.trace().max(0.0),
            ell2_bar,
            s.lambda_min().max(0.0),
            s.lambda_max().max(0.0),
            n,
        )
    }

    /// `tr_k / lam_k`, taken as 1 when `lam_k = 0`.
    pub fn intrinsic_dimension(&self) -> f64 {
        if self.lam_k == 0.0 {
            1.0
        } else {
            (self.tr_k / self.lam_k).max(1.0)
        }
    }

    fn is_zero(&self) -> bool {
        self.lam_k == 0.0 && self.tr_k == 0.0 && self.ell2_bar == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovSide {
    /// `lambda_max(hat Sigma - Sigma)`
    Upper,
    /// `lambda_max(Sigma - hat Sigma)`
    Lower,
    /// `||hat Sigma - Sigma||_2`
    Two,
}

impl CovSide {
    fn additive_scale(self, s: &CovarianceStats) -> f64 {
        match self {
            CovSide::Upper => s.ell2_bar - s.lam_min_s,
            CovSide::Lower => s.lam_max_s,
            CovSide::Two => (s.ell2_bar - s.lam_min_s).max(s.lam_max_s),
        }
    }

    fn sides(self) -> Sides {
        match self {
            CovSide::Upper | CovSide::Lower => Sides::One,
            CovSide::Two => Sides::Two,
        }
    }
}

/// Spectral-norm error certificate for the empirical second-moment matrix.
pub fn covariance_certificate(
    s: &CovarianceStats,
    t: f64,
    side: CovSide,
) -> Result<TailCertificate> {
    check_pos("t", t)?;
    let n = s.n as f64;
    let deviation = (2.0 * s.lam_k * t / n).sqrt() + side.additive_scale(s) * t / (3.0 * n);
    let raw = s.intrinsic_dimension() * phi(t)? * side.sides().factor();
    Ok(TailCertificate {
        deviation,
        probability: TailProbability::from_raw(raw),
        t,
        sides: side.sides(),
        source: Source::Covariance,
        params: params_map([
            ("lam_k", s.lam_k),
            ("tr_k", s.tr_k),
            ("ell2_bar", s.ell2_bar),
            ("lam_min_s", s.lam_min_s),
            ("lam_max_s", s.lam_max_s),
            ("n", n),
        ]),
    })
}

/// Inputs of the combined head/tail covariance bound: the top-`d` eigenspace
/// is handled by a subgaussian covering argument with constant `gamma_d0`, the
/// complement by [`covariance_certificate`] statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub d: u64,
    pub gamma_d0: f64,
    pub lam_max_s: f64,
    pub tail: CovarianceStats,
}

impl SplitStats {
    pub fn new(d: u64, gamma_d0: f64, lam_max_s: f64, tail: CovarianceStats) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("d must be positive"));
        }
        check_pos("gamma_d0", gamma_d0)?;
        check_nonneg("lam_max_s", lam_max_s)?;
        Ok(SplitStats {
            d,
            gamma_d0,
            lam_max_s,
            tail,
        })
    }

    /// Builds the tail block from `Sigma`, `K_{d,1}` and `ell2_{d,1}`.
    ///
    /// The tail projector is the complement of the top-`d` eigenspace of
    /// `Sigma`; `lambda_min(Sigma_{d,1})` is taken over that complement.
    pub fn from_matrices(
        d: usize,
        gamma_d0: f64,
        sigma: &SymMat,
        k_tail: &SymMat,
        ell2_tail: f64,
        n: u64,
    ) -> Result<Self> {
        let dim = sigma.dim();
        if d == 0 || d >= dim {
            return Err(Error::domain(format!("need 1 <= d < dim = {dim}, got {d}")));
        }
        if k_tail.dim() != dim {
            return Err(Error::ShapeMismatch("K_{d,1} must match Sigma".into()));
        }
        let eig = sigma.spectrum()?;
        let proj = eig.projector(d..dim);
        let sigma_tail = sigma.congruence(&proj);
        let resid = k_tail.sub(&sigma_tail.square());
        let tail = CovarianceStats::new(
            resid.lambda_max()?.max(0.0),
            resid.trace().max(0.0),
            ell2_tail,
            eig.lambda_min().max(0.0),
            eig.eigenvalues[d].max(0.0),
            n,
        )?;
        Self::new(d as u64, gamma_d0, eig.lambda_max().max(0.0), tail)
    }
}

/// Combined head/tail bound on `||hat Sigma_n - Sigma||_2` with failure
/// probability `4 e^{-t/2}`, valid for `t >= 2.6`.
pub fn split_covariance_certificate(s: &SplitStats, n: u64, t: f64) -> Result<TailCertificate> {
    if !(t >= SPLIT_MIN_T) || !t.is_finite() {
        return Err(Error::PreconditionFailed(format!(
            "split certificate requires t >= {SPLIT_MIN_T}, got {t}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    if s.tail.n != n {
        return Err(Error::domain(format!(
            "tail statistics were built for n = {}, certificate requested for n = {n}",
            s.tail.n
        )));
    }
    let nf = n as f64;
    let d = s.d as f64;
    let head = 4.0 * s.gamma_d0 * s.lam_max_s * (((71.0 * d + 16.0 * t) / nf).sqrt() + (5.0 * d + t) / nf);
    let tail = if s.tail.is_zero() {
        0.0
    } else {
        let tt = s.tail.intrinsic_dimension().ln() + t;
        let scale = CovSide::Two.additive_scale(&s.tail);
        2.0 * (2.0 * s.tail.lam_k * tt / nf).sqrt() + 2.0 * scale * tt / (3.0 * nf)
    };
    Ok(TailCertificate {
        deviation: head + tail,
        probability: TailProbability::from_raw(4.0 * (-t / 2.0).exp()),
        t,
        sides: Sides::Two,
        source: Source::SplitCovariance,
        params: params_map([
            ("d", d),
            ("gamma_d0", s.gamma_d0),
            ("lam_max_s", s.lam_max_s),
            ("tail_lam_k", s.tail.lam_k),
            ("tail_tr_k", s.tail.tr_k),
            ("tail_ell2_bar", s.tail.ell2_bar),
            ("tail_lam_min_s", s.tail.lam_min_s),
            ("tail_lam_max_s", s.tail.lam_max_s),
            ("n", nf),
        ]),
    })
}

/// Gaussian-vector comparison bound on `||hat Sigma_n||_2` with probability `e^{-t}`.
pub fn gaussian_covariance_bound(
    lam_max_s: f64,
    tr_s: f64,
    n: u64,
    t: f64,
) -> Result<TailCertificate> {
    check_pos("lam_max_s", lam_max_s)?;
    check_pos("t", t)?;
    if !(tr_s >= lam_max_s) || !tr_s.is_finite() {
        return Err(Error::domain(format!(
            "need tr_s >= lam_max_s, got tr_s = {tr_s}, lam_max_s = {lam_max_s}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let nf = n as f64;
    let threshold = lam_max_s
        + 2.0 * (lam_max_s * tr_s / nf).sqrt()
        + 2.0 * (2.0 * lam_max_s * lam_max_s * t / nf).sqrt()
        + (tr_s + 2.0 * (2.0 * tr_s * lam_max_s * t).sqrt() + 2.0 * lam_max_s * t) / nf;
    Ok(TailCertificate {
        deviation: threshold,
        probability: TailProbability::from_raw((-t).exp()),
        t,
        sides: Sides::One,
        source: Source::GaussianCovariance,
        params: params_map([("lam_max_s", lam_max_s), ("tr_s", tr_s), ("n", nf)]),
    })
}

/// Bounds on a single Rayleigh quotient of an isotropic subgaussian empirical
/// covariance; each side holds with probability at least `1 - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighBounds {
    pub upper: f64,
    pub lower: f64,
}

pub fn rayleigh_tail(gamma: f64, n: u64, delta: f64) -> Result<RayleighBounds> {
    check_pos("gamma", gamma)?;
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    let nf = n as f64;
    let l = (1.0 / delta).ln();
    let root = (32.0 * gamma * gamma * l / nf).sqrt();
    Ok(RayleighBounds {
        upper: 1.0 + root + 2.0 * gamma * l / nf,
        lower: 1.0 - root,
    })
}

/// Size bound `(1 + 2/eps0)^d` for an `eps0`-net of the unit sphere in `R^d`.
pub fn covering_number(d: u64, eps0: f64) -> Result<f64> {
    check_pos("eps0", eps0)?;
    Ok((1.0 + 2.0 / eps0).powf(d as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenBounds {
    pub epsilon: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Joint bound on the extreme eigenvalues of `(1/n) sum x_i x_i^T` for
/// isotropic `gamma`-subgaussian vectors in `R^d`, failure probability `delta`.
pub fn empirical_covariance_eigen_bound(
    gamma: f64,
    d: u64,
    n: u64,
    eps0: f64,
    delta: f64,
) -> Result<EigenBounds> {
    check_pos("gamma", gamma)?;
    if d == 0 || n == 0 {
        return Err(Error::domain("d and n must be positive"));
    }
    if !(eps0 > 0.0 && eps0 < 0.5) {
        return Err(Error::domain(format!("eps0 must lie in (0, 1/2), got {eps0}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let nf = n as f64;
    let a = d as f64 * (1.0 + 2.0 / eps0).ln() + (2.0 / delta).ln();
    let epsilon = gamma * ((32.0 * a / nf).sqrt() + 2.0 * a / nf);
    let widened = epsilon / (1.0 - 2.0 * eps0);
    Ok(EigenBounds {
        epsilon,
        upper: 1.0 + widened,
        lower: 1.0 - widened,
    })
}
