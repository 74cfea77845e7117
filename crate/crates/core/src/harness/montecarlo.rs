//! Seeded Monte Carlo validation of certificates.
//!
//! Trial `j` draws everything from [`rng::stream`]`(seed, j)`, and the per-trial
//! statistics are collected in trial order, so a report depends only on the
//! configuration and never on the worker count.

use nalgebra::DMatrix;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ensemble::Ensemble;
use crate::applications::{
    covariance_certificate, gaussian_covariance_bound, sup_process_bound, CovSide, CovarianceStats,
    Process,
};
use crate::bounds::{bernstein_tail, params_from_moments, subgaussian_tail, SubgaussianParams};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::rmm::{self, certificate_precise, certificate_simplified_for};
use crate::rng;
use crate::specmat::{spectral_norm, SymMat};

pub const DEFAULT_ALPHA: f64 = 1e-3;

/// Which certificate a run is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertKind {
    Bernstein { t: f64 },
    Subgaussian { t: f64 },
    SupProcess { tau: f64 },
    Covariance { t: f64, side: CovSide },
    GaussianCovariance { t: f64 },
    RmmPrecise { t: f64 },
    RmmSimplified { t: f64 },
}

impl CertKind {
    pub fn label(&self) -> String {
        match self {
            CertKind::Bernstein { t } => format!("bernstein(t={t})"),
            CertKind::Subgaussian { t } => format!("subgaussian(t={t})"),
            CertKind::SupProcess { tau } => format!("sup-process(tau={tau})"),
            CertKind::Covariance { t, side } => {
                let side = match side {
                    CovSide::Upper => "upper",
                    CovSide::Lower => "lower",
                    CovSide::Two => "two",
                };
                format!("covariance(t={t},side={side})")
            }
            CertKind::GaussianCovariance { t } => format!("gaussian-covariance(t={t})"),
            CertKind::RmmPrecise { t } => format!("rmm-precise(t={t})"),
            CertKind::RmmSimplified { t } => format!("rmm-simplified(t={t})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Samples averaged per trial.
    pub n: u64,
    pub trials: u64,
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(n: u64, trials: u64, seed: u64) -> Self {
        McConfig {
            n,
            trials,
            alpha: DEFAULT_ALPHA,
            seed,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be positive"));
        }
        if self.n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.threads == Some(0) {
            return Err(Error::domain("threads must be positive"));
        }
        Ok(())
    }
}

/// One-sided Hoeffding margin `sqrt(log(1/alpha) / (2 trials))`.
pub fn hoeffding_slack(trials: u64, alpha: f64) -> f64 {
    ((1.0 / alpha).ln() / (2.0 * trials as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub ensemble_id: String,
    pub certificate: String,
    pub n: u64,
    pub trials: u64,
    pub violations: u64,
    pub empirical: f64,
    /// Certified failure probability, clamped to 1.
    pub bound: f64,
    pub bound_raw: f64,
    /// Deviation threshold the statistic is compared with.
    pub threshold: f64,
    pub slack: f64,
    pub pass: bool,
    pub seed: u64,
    pub alpha: f64,
    pub stat_mean: f64,
    pub stat_max: f64,
    /// `threshold / stat_mean`; how far the typical deviation sits below the threshold.
    pub looseness: Option<f64>,
}

type Statistic = Box<dyn Fn(&mut ChaCha8Rng) -> Result<f64> + Send + Sync>;

fn unknown(e: &Ensemble, c: &CertKind) -> Error {
    Error::UnknownMoments(format!("{} has no statistics for {}", e.id(), c.label()))
}

fn normals(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| StandardNormal.sample(rng)).collect()
}

/// `(1/n) sum x x^T` for `n` Rademacher vectors of length `d`, one `u64` each.
fn rademacher_gram(rng: &mut ChaCha8Rng, d: usize, n: u64) -> Result<SymMat> {
    let mut acc = DMatrix::<f64>::zeros(d, d);
    let mut x = vec![0.0; d];
    for _ in 0..n {
        let bits = rng.next_u64();
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if bits >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
        for c in 0..d {
            for r in 0..d {
                acc[(r, c)] += x[r] * x[c];
            }
        }
    }
    SymMat::new(acc / n as f64)
}

fn gaussian_gram(rng: &mut ChaCha8Rng, root: &DMatrix<f64>, n: u64) -> Result<SymMat> {
    let d = root.nrows();
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for _ in 0..n {
        let z = nalgebra::DVector::from_vec(normals(rng, d));
        let x = root * z;
        acc.ger(1.0, &x, &x, 1.0);
    }
    Ok(SymMat::from_symmetric_part(&(acc / n as f64)))
}

fn side_statistic(diff: &SymMat, side: CovSide) -> Result<f64> {
    match side {
        CovSide::Upper => diff.lambda_max(),
        CovSide::Lower => Ok(-diff.lambda_min()?),
        CovSide::Two => diff.spectral_norm(),
    }
}

/// Threshold, probability `(value, raw)` and a sampler of the compared statistic.
fn build(e: &Ensemble, c: &CertKind, n: u64) -> Result<(f64, (f64, f64), Statistic)> {
    let nf = n as f64;
    match (e, *c) {
        (Ensemble::RademacherOuter { d }, CertKind::Bernstein { t }) => {
            let d = *d;
            let m = e.exact_moments()?.ok_or_else(|| unknown(e, c))?;
            let cert = bernstein_tail(&params_from_moments((d - 1) as f64, &m.second_moment, n)?, t)?;
            let stat: Statistic = Box::new(move |r| {
                rademacher_gram(r, d, n)?.sub(&SymMat::identity(d)).lambda_max()
            });
            Ok((cert.deviation, (cert.probability.value, cert.probability.raw), stat))
        }
        (Ensemble::RademacherOuter { d }, CertKind::Covariance { t, side }) => {
            let d = *d;
            let df = d as f64;
            let stats = CovarianceStats::new(df - 1.0, df * (df - 1.0), df, 1.0, 1.0, n)?;
            let cert = covariance_certificate(&stats, t, side)?;
            let stat: Statistic = Box::new(move |r| {
                side_statistic(&rademacher_gram(r, d, n)?.sub(&SymMat::identity(d)), side)
            });
            Ok((cert.deviation, (cert.probability.value, cert.probability.raw), stat))
        }
        (Ensemble::DiagSubgaussian { sigma2 }, CertKind::Subgaussian { t }) => {
            let top = sigma2.iter().copied().fold(0.0, f64::max);
            let k_bar = sigma2.iter().sum::<f64>() / top;
            let cert = subgaussian_tail(&SubgaussianParams::new(n, top, k_bar)?, t)?;
            // the average of n diagonal Gaussians is diagonal with variances sigma2 / n
            let sd: Vec<f64> = sigma2.iter().map(|s| (s / nf).sqrt()).collect();
            let stat: Statistic = Box::new(move |r| {
                Ok(sd.iter().map(|s| s * Distribution::<f64>::sample(&StandardNormal, r)).fold(f64::NEG_INFINITY, f64::max))
            });
            Ok((cert.deviation, (cert.probability.value, cert.probability.raw), stat))
        }
        (Ensemble::DiagSubgaussian { sigma2 }, CertKind::SupProcess { tau }) => {
            // a single draw of the process; n plays no role
            let cert = sup_process_bound(&Process::new(sigma2.clone())?, tau)?;
            let sd: Vec<f64> = sigma2.iter().map(|s| s.sqrt()).collect();
            let stat: Statistic = Box::new(move |r| {
                Ok(sd.iter().map(|s| s * Distribution::<f64>::sample(&StandardNormal, r)).fold(f64::NEG_INFINITY, f64::max))
            });
            Ok((cert.deviation, (cert.probability.value, cert.probability.raw), stat))
        }
        (Ensemble::GaussianVectors { sigma }, CertKind::GaussianCovariance { t }) => {
            let eig = sigma.spectrum()?;
            let cert = gaussian_covariance_bound(eig.lambda_max(), sigma.trace(), n, t)?;
            let root = eig.reconstruct_with(|l| l.max(0.0).sqrt()).into_matrix();
            let stat: Statistic = Box::new(move |r| gaussian_gram(r, &root, n)?.spectral_norm());
            Ok((cert.deviation, (cert.probability.value, cert.probability.raw), stat))
        }
        (Ensemble::RmmSampler { a, b, plan }, CertKind::RmmPrecise { t } | CertKind::RmmSimplified { t }) => {
            let cert = if matches!(c, CertKind::RmmPrecise { .. }) {
                certificate_precise(a, b, n, t)?
            } else {
                certificate_simplified_for(a, b, n, t)?
            };
            let threshold = cert.absolute_deviation().ok_or_else(|| unknown(e, c))?;
            let exact = a * b.transpose();
            let (a, b, plan) = (a.clone(), b.clone(), plan.clone());
            let stat: Statistic = Box::new(move |r| {
                let idx: Vec<usize> = (0..n).map(|_| plan.column_for(rng::unit_f64(r))).collect();
                spectral_norm(&(rmm::estimate_from_indices(&a, &b, &plan, &idx)? - &exact))
            });
            Ok((threshold, (cert.probability.value, cert.probability.raw), stat))
        }
        (_, CertKind::Bernstein { t }) => {
            let atoms = e.as_discrete()?.ok_or_else(|| unknown(e, c))?.centered()?;
            let b_bar = atoms.max_lambda()?.max(0.0);
            let cert = bernstein_tail(&params_from_moments(b_bar, &atoms.second_moment(), n)?, t)?;
            let stat: Statistic = Box::new(move |r| {
                let mut acc = SymMat::zeros(atoms.dim());
                for _ in 0..n {
                    acc.axpy(1.0 / nf, atoms.pick(rng::unit_f64(r)));
                }
                acc.lambda_max()
            });
            Ok((cert.deviation, (cert.probability.value, cert.probability.raw), stat))
        }
        _ => Err(unknown(e, c)),
    }
}

fn run_trials(cfg: &McConfig, stat: &Statistic) -> Result<Vec<f64>> {
    let one = |j: u64| stat(&mut rng::stream(cfg.seed, j));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let work = || (0..cfg.trials).into_par_iter().map(one).collect::<Result<Vec<f64>>>();
        match cfg.threads {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::domain(format!("thread pool: {e}")))?
                .install(work),
            None => work(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..cfg.trials).map(one).collect()
    }
}

/// Runs `cfg.trials` replications and counts how often the statistic exceeds
/// the certificate's threshold.
pub fn mc_validate(e: &Ensemble, cert: &CertKind, cfg: &McConfig) -> Result<TrialReport> {
    cfg.validate()?;
    let (threshold, (bound, bound_raw), stat) = build(e, cert, cfg.n)?;
    let stats = run_trials(cfg, &stat)?;
    let violations = stats.iter().filter(|&&s| s > threshold).count() as u64;
    let empirical = violations as f64 / cfg.trials as f64;
    let slack = hoeffding_slack(cfg.trials, cfg.alpha);
    let stat_mean = stats.iter().sum::<f64>() / stats.len() as f64;
    let stat_max = stats.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TrialReport {
        ensemble_id: e.id(),
        certificate: cert.label(),
        n: cfg.n,
        trials: cfg.trials,
        violations,
        empirical,
        bound,
        bound_raw,
        threshold,
        slack,
        pass: empirical <= bound + slack,
        seed: cfg.seed,
        alpha: cfg.alpha,
        stat_mean,
        stat_max,
        looseness: (stat_mean > 0.0).then(|| threshold / stat_mean),
    })
}

const CSV_HEADER: [&str; 16] = [
    "ensemble_id", "certificate", "n", "trials", "violations", "empirical", "bound", "bound_raw",
    "threshold", "slack", "pass", "seed", "alpha", "stat_mean", "stat_max", "looseness",
];

/// CSV with a header row and one row per report; floats carry 17 significant digits.
pub fn reports_to_csv(reports: &[TrialReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(err)?;
    for r in reports {
        w.write_record([
            r.ensemble_id.clone(),
            r.certificate.clone(),
            r.n.to_string(),
            r.trials.to_string(),
            r.violations.to_string(),
            fmt_f64(r.empirical),
            fmt_f64(r.bound),
            fmt_f64(r.bound_raw),
            fmt_f64(r.threshold),
            fmt_f64(r.slack),
            r.pass.to_string(),
            r.seed.to_string(),
            fmt_f64(r.alpha),
            fmt_f64(r.stat_mean),
            fmt_f64(r.stat_max),
            r.looseness.map(fmt_f64).unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
