use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mtails", version, about = "Dimension-free matrix tail bounds and sampled matrix products")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "MTAILS_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Subgaussian, Bernstein or generic trace certificate.
    Bound(BoundArgs),
    /// Solve phi(t) = p for t.
    Invert(InvertArgs),
    /// Supremum of a subgaussian process with per-coordinate variances.
    Sup(SupArgs),
    /// Empirical second-moment matrix of a bounded random vector.
    Cov(CovArgs),
    /// Head/tail split bound for the empirical covariance.
    Split(SplitArgs),
    /// Norm bound for the empirical covariance of Gaussian vectors.
    Gauss(GaussArgs),
    /// Bounds on one Rayleigh quotient of an isotropic empirical covariance.
    Rayleigh(RayleighArgs),
    /// Extreme-eigenvalue bound for an isotropic empirical covariance.
    Eigbound(EigboundArgs),
    /// Column-sampling distribution for A B^T.
    RmmPlan(RmmPlanArgs),
    /// Sampled estimate of A B^T with its error certificate.
    RmmMul(RmmMulArgs),
    /// Samples needed for a relative error eps with probability 1 - delta.
    RmmSize(RmmSizeArgs),
    /// Run Monte Carlo suites from a TOML file.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Subgaussian,
    Bernstein,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Precise,
    Simplified,
}

/// Where JSON output goes; stdout when absent.
#[derive(Debug, Clone, Args, Serialize)]
pub struct JsonOut {
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("level").required(true).args(["t", "delta"])))]
pub struct BoundArgs {
    #[arg(long, value_enum)]
    pub kind: BoundKind,
    /// Number of summands.
    #[arg(long)]
    pub n: Option<u64>,
    /// Almost-sure bound on lambda_max(X_i) (Bernstein).
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Intrinsic dimension k_bar.
    #[arg(long)]
    pub k: Option<f64>,
    /// Trace quantity of the generic inequality.
    #[arg(long)]
    pub trace: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Solve for t at this failure probability instead.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub p: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct SupArgs {
    /// Comma-separated variance proxies.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub sigma2: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

/// Covariance statistics, given directly or derived from matrix files.
#[derive(Debug, Args, Serialize)]
pub struct CovStatsArgs {
    /// lambda_max(K - Sigma^2)
    #[arg(long, conflicts_with_all = ["sigma", "kmat"])]
    pub lam_k: Option<f64>,
    /// tr(K - Sigma^2)
    #[arg(long)]
    pub tr_k: Option<f64>,
    /// Almost-sure bound on ||x||^2.
    #[arg(long)]
    pub ell2: f64,
    #[arg(long)]
    pub lam_min: Option<f64>,
    #[arg(long)]
    pub lam_max: Option<f64>,
    /// CSV file holding Sigma = E[x x^T].
    #[arg(long, value_name = "FILE", requires = "kmat")]
    pub sigma: Option<PathBuf>,
    /// CSV file holding K = E[x x^T x x^T].
    #[arg(long = "k", value_name = "FILE", requires = "sigma")]
    pub kmat: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CovArgs {
    #[command(flatten)]
    pub stats: CovStatsArgs,
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = Side::Two)]
    pub side: Side,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    /// Dimension of the head eigenspace.
    #[arg(long)]
    pub d: u64,
    /// Subgaussian constant of the head coordinates.
    #[arg(long)]
    pub gamma: f64,
    /// lambda_max(Sigma); derived from --sigma when given.
    #[arg(long, conflicts_with = "sigma")]
    pub lam_max: Option<f64>,
    #[arg(long, conflicts_with = "sigma")]
    pub tail_lam_k: Option<f64>,
    #[arg(long, conflicts_with = "sigma")]
    pub tail_tr_k: Option<f64>,
    /// Almost-sure bound on the squared norm of the tail projection.
    #[arg(long)]
    pub tail_ell2: f64,
    #[arg(long, conflicts_with = "sigma")]
    pub tail_lam_min: Option<f64>,
    #[arg(long, conflicts_with = "sigma")]
    pub tail_lam_max: Option<f64>,
    /// CSV file holding Sigma.
    #[arg(long, value_name = "FILE", requires = "k_tail")]
    pub sigma: Option<PathBuf>,
    /// CSV file holding the fourth-moment matrix of the tail projection, same size as Sigma.
    #[arg(long, value_name = "FILE", requires = "sigma")]
    pub k_tail: Option<PathBuf>,
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct GaussArgs {
    #[arg(long, required_unless_present = "sigma", allow_hyphen_values = true)]
    pub lam_max: Option<f64>,
    #[arg(long, required_unless_present = "sigma", allow_hyphen_values = true)]
    pub tr: Option<f64>,
    /// CSV file holding Sigma.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["lam_max", "tr"])]
    pub sigma: Option<PathBuf>,
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct RayleighArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct EigboundArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long)]
    pub d: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    pub eps0: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct MatrixPair {
    /// CSV file holding A (columns are sampled).
    #[arg(long, value_name = "FILE")]
    pub a: PathBuf,
    /// CSV file holding B with the same column count as A.
    #[arg(long, value_name = "FILE")]
    pub b: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RmmPlanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: MatrixPair,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct RmmMulArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub pair: MatrixPair,
    /// Number of sampled columns.
    #[arg(long)]
    pub n: u64,
    /// Certificate level; e^(-t) is the simplified failure probability.
    #[arg(long, default_value_t = std::f64::consts::LN_10, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = Variant::Precise)]
    pub variant: Variant,
    /// CSV file for the estimate.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// JSON file for the certificate; stdout when absent.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub cert: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RmmSizeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub ra: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub rb: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub json: JsonOut,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// TOML file listing the suites.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// CSV trial table, one row per suite.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    /// JSON reports; stdout when neither this nor --csv is given.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub json: Option<PathBuf>,
    /// Exit with status 1 when any suite fails.
    #[arg(long)]
    #[serde(skip)]
    pub strict: bool,
}
