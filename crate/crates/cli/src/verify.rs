//! `verify`: Monte Carlo suites described in TOML.
//!
//! ```toml
//! seed = 7
//! trials = 100000
//!
//! [[suite]]
//! name = "rademacher"
//! n = 100
//! ensemble = { kind = "rademacher", d = 4 }
//! certificate = { kind = "bernstein", t = 8.0 }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mtails::harness::{mc_validate, reports_to_csv, CertKind, DiscreteAtoms, Ensemble, McConfig, TrialReport};
use mtails::io;
use mtails::specmat::SymMat;
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::cli::VerifyArgs;
use crate::commands::{read_matrix, write_text};

const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub alpha: Option<f64>,
    #[serde(rename = "suite", default)]
    pub suites: Vec<Suite>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub name: Option<String>,
    pub ensemble: EnsembleConfig,
    pub certificate: CertKind,
    pub n: u64,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
}

/// A matrix given inline as rows or as a CSV path relative to the config file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Rows(Vec<Vec<f64>>),
    File(PathBuf),
}

impl MatrixSource {
    fn load(&self, base: &Path) -> Result<DMatrix<f64>> {
        match self {
            MatrixSource::Rows(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
                    bail!("inline matrix must be a non-empty list of equal-length rows");
                }
                Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
            }
            MatrixSource::File(p) => read_matrix(&base.join(p)),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnsembleConfig {
    Rademacher { d: usize },
    DiagGaussian { sigma2: Vec<f64> },
    Atoms { atoms: Vec<Vec<Vec<f64>>>, probs: Vec<f64> },
    GaussianVectors { sigma: MatrixSource },
    Rmm { a: MatrixSource, b: MatrixSource },
}

impl EnsembleConfig {
    fn build(&self, base: &Path) -> Result<Ensemble> {
        Ok(match self {
            EnsembleConfig::Rademacher { d } => Ensemble::rademacher(*d)?,
            EnsembleConfig::DiagGaussian { sigma2 } => Ensemble::diag_gaussian(sigma2.clone())?,
            EnsembleConfig::Atoms { atoms, probs } => {
                let atoms = atoms.iter().map(|rows| SymMat::from_rows(rows)).collect::<Result<Vec<_>, _>>()?;
                Ensemble::DiscreteAtoms(DiscreteAtoms::new(atoms, probs.clone())?)
            }
            EnsembleConfig::GaussianVectors { sigma } => {
                Ensemble::gaussian_vectors(SymMat::new(sigma.load(base)?)?)?
            }
            EnsembleConfig::Rmm { a, b } => Ensemble::rmm(a.load(base)?, b.load(base)?)?,
        })
    }
}

pub fn parse_config(text: &str) -> Result<VerifyConfig> {
    let cfg: VerifyConfig = toml::from_str(text).context("invalid verify config")?;
    if cfg.suites.is_empty() {
        bail!("verify config lists no [[suite]] entries");
    }
    Ok(cfg)
}

pub fn run_suites(cfg: &VerifyConfig, base: &Path, default_seed: u64, threads: Option<usize>) -> Result<Vec<TrialReport>> {
    cfg.suites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let label = s.name.clone().unwrap_or_else(|| format!("suite {}", i + 1));
            let ensemble = s.ensemble.build(base).with_context(|| format!("{label}: ensemble"))?;
            let mut mc = McConfig::new(
                s.n,
                s.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS),
                s.seed.or(cfg.seed).unwrap_or(default_seed),
            );
            if let Some(alpha) = s.alpha.or(cfg.alpha) {
                mc.alpha = alpha;
            }
            mc.threads = threads;
            let report = mc_validate(&ensemble, &s.certificate, &mc).with_context(|| format!("{label}: run"))?;
            eprintln!(
                "{} {label}: {} {} violations {}/{} = {:.5}, bound {:.5} + slack {:.5}",
                if report.pass { "pass" } else { "FAIL" },
                report.ensemble_id,
                report.certificate,
                report.violations,
                report.trials,
                report.empirical,
                report.bound,
                report.slack
            );
            Ok(report)
        })
        .collect()
}

/// Runs the suites; returns whether all of them passed.
pub fn verify(a: &VerifyArgs, default_seed: u64) -> Result<bool> {
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("cannot read {}", a.config.display()))?;
    let cfg = parse_config(&text)?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let reports = run_suites(&cfg, base, default_seed, a.threads)?;
    if let Some(p) = &a.csv {
        write_text(Some(p), &reports_to_csv(&reports)?)?;
    }
    if a.json.is_some() || a.csv.is_none() {
        write_text(a.json.as_deref(), &io::to_json_string(&reports)?)?;
    }
    Ok(reports.iter().all(|r| r.pass))
}
