use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use mtails::applications::{
    covariance_certificate, empirical_covariance_eigen_bound, gaussian_covariance_bound,
    rayleigh_tail, split_covariance_certificate, sup_process_bound, CovSide, CovarianceStats,
    Process, SplitStats,
};
use mtails::bounds::{
    bernstein_deviation_at_confidence, bernstein_tail, generic_rhs, subgaussian_deviation_at_confidence,
    subgaussian_tail, BernsteinParams, SubgaussianParams, TailCertificate,
};
use mtails::specmat::{spectral_norm, symmetrize, SymMat, DEFAULT_SYM_TOL};
use mtails::{io, rmm, tailfn};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::*;

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    io::read_matrix_csv(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn read_sym(path: &Path) -> Result<SymMat> {
    symmetrize(&read_matrix(path)?, DEFAULT_SYM_TOL).with_context(|| format!("reading {}", path.display()))
}

pub fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(f);
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).context("writing to stdout")
        }
    }
}

/// Writes `result` as JSON with the command's inputs echoed under `"inputs"`.
fn emit(result: &impl Serialize, inputs: &impl Serialize, out: Option<&Path>) -> Result<()> {
    let mut v = serde_json::to_value(result)?;
    if let Value::Object(map) = &mut v {
        map.insert("inputs".into(), serde_json::to_value(inputs)?);
    }
    write_text(out, &io::to_json_string(&v)?)
}

fn need(v: Option<f64>, flag: &str, what: &str) -> Result<f64> {
    v.ok_or_else(|| anyhow!("--{flag} is required for {what}"))
}

fn summarize(name: &str, c: &TailCertificate) {
    eprintln!(
        "{name}: deviation {:.6} exceeded with probability <= {:.6e} (t = {:.6})",
        c.deviation, c.probability.value, c.t
    );
}

pub fn bound(a: &BoundArgs) -> Result<()> {
    let out = a.json.out.as_deref();
    match a.kind {
        BoundKind::Generic => {
            let trace = need(a.trace, "trace", "--kind generic")?;
            let t = a.t.ok_or_else(|| anyhow!("--kind generic takes --t, not --delta"))?;
            let p = generic_rhs(trace, t)?;
            eprintln!("generic: probability <= {:.6e} (t = {t})", p.value);
            let result = json!({
                "probability": p.value,
                "probability_raw": p.raw,
                "t": t,
                "source": "generic",
                "params": { "trace_quantity": trace },
            });
            emit(&result, a, out)
        }
        BoundKind::Subgaussian => {
            let what = "--kind subgaussian";
            let n = a.n.ok_or_else(|| anyhow!("--n is required for {what}"))?;
            let p = SubgaussianParams::new(n, need(a.sigma2, "sigma2", what)?, need(a.k, "k", what)?)?;
            let cert = match (a.t, a.delta) {
                (Some(t), _) => subgaussian_tail(&p, t)?,
                (None, Some(d)) => subgaussian_deviation_at_confidence(&p, d)?,
                (None, None) => unreachable!("clap requires --t or --delta"),
            };
            summarize("subgaussian", &cert);
            emit(&cert, a, out)
        }
        BoundKind::Bernstein => {
            let what = "--kind bernstein";
            let n = a.n.ok_or_else(|| anyhow!("--n is required for {what}"))?;
            let p = BernsteinParams::new(
                n,
                need(a.b, "b", what)?,
                need(a.sigma2, "sigma2", what)?,
                need(a.k, "k", what)?,
            )?;
            let cert = match (a.t, a.delta) {
                (Some(t), _) => bernstein_tail(&p, t)?,
                (None, Some(d)) => bernstein_deviation_at_confidence(&p, d)?,
                (None, None) => unreachable!("clap requires --t or --delta"),
            };
            summarize("bernstein", &cert);
            emit(&cert, a, out)
        }
    }
}

pub fn invert(a: &InvertArgs) -> Result<()> {
    let t = tailfn::invert_phi(a.p)?;
    let phi_t = tailfn::phi(t)?;
    eprintln!("phi(t) = {} at t = {t:.12}", a.p);
    emit(&json!({ "t": t, "phi_t": phi_t }), a, a.json.out.as_deref())
}

pub fn sup(a: &SupArgs) -> Result<()> {
    let cert = sup_process_bound(&Process::new(a.sigma2.clone())?, a.tau)?;
    summarize("sup", &cert);
    emit(&cert, a, a.json.out.as_deref())
}

fn side(s: Side) -> CovSide {
    match s {
        Side::Upper => CovSide::Upper,
        Side::Lower => CovSide::Lower,
        Side::Two => CovSide::Two,
    }
}

pub fn cov(a: &CovArgs) -> Result<()> {
    let s = &a.stats;
    let stats = match (&s.sigma, &s.kmat) {
        (Some(sp), Some(kp)) => CovarianceStats::from_matrices(&read_sym(sp)?, &read_sym(kp)?, s.ell2, a.n)?,
        _ => {
            let what = "covariance statistics without --sigma/--k";
            CovarianceStats::new(
                need(s.lam_k, "lam-k", what)?,
                need(s.tr_k, "tr-k", what)?,
                s.ell2,
                need(s.lam_min, "lam-min", what)?,
                need(s.lam_max, "lam-max", what)?,
                a.n,
            )?
        }
    };
    let cert = covariance_certificate(&stats, a.t, side(a.side))?;
    summarize("cov", &cert);
    emit(&cert, a, a.json.out.as_deref())
}

pub fn split(a: &SplitArgs) -> Result<()> {
    let stats = match (&a.sigma, &a.k_tail) {
        (Some(sp), Some(kp)) => {
            let d = usize::try_from(a.d).context("--d is too large")?;
            SplitStats::from_matrices(d, a.gamma, &read_sym(sp)?, &read_sym(kp)?, a.tail_ell2, a.n)?
        }
        _ => {
            let what = "split statistics without --sigma/--k-tail";
            let tail = CovarianceStats::new(
                need(a.tail_lam_k, "tail-lam-k", what)?,
                need(a.tail_tr_k, "tail-tr-k", what)?,
                a.tail_ell2,
                need(a.tail_lam_min, "tail-lam-min", what)?,
                need(a.tail_lam_max, "tail-lam-max", what)?,
                a.n,
            )?;
            SplitStats::new(a.d, a.gamma, need(a.lam_max, "lam-max", what)?, tail)?
        }
    };
    let cert = split_covariance_certificate(&stats, a.n, a.t)?;
    summarize("split", &cert);
    emit(&cert, a, a.json.out.as_deref())
}

pub fn gauss(a: &GaussArgs) -> Result<()> {
    let (lam_max, tr) = match &a.sigma {
        Some(p) => {
            let s = read_sym(p)?;
            (s.lambda_max()?, s.trace())
        }
        None => (need(a.lam_max, "lam-max", "gauss")?, need(a.tr, "tr", "gauss")?),
    };
    let cert = gaussian_covariance_bound(lam_max, tr, a.n, a.t)?;
    summarize("gauss", &cert);
    emit(&cert, a, a.json.out.as_deref())
}

pub fn rayleigh(a: &RayleighArgs) -> Result<()> {
    let r = rayleigh_tail(a.gamma, a.n, a.delta)?;
    eprintln!("rayleigh: quotient in [{:.6}, {:.6}], each side with probability >= {}", r.lower, r.upper, 1.0 - a.delta);
    emit(&r, a, a.json.out.as_deref())
}

pub fn eigbound(a: &EigboundArgs) -> Result<()> {
    let r = empirical_covariance_eigen_bound(a.gamma, a.d, a.n, a.eps0, a.delta)?;
    eprintln!(
        "eigbound: eigenvalues in [{:.6}, {:.6}] with probability >= {}",
        r.lower,
        r.upper,
        1.0 - a.delta
    );
    emit(&r, a, a.json.out.as_deref())
}

pub fn rmm_plan(a: &RmmPlanArgs) -> Result<()> {
    let (ma, mb) = (read_matrix(&a.pair.a)?, read_matrix(&a.pair.b)?);
    let plan = rmm::build_plan(&ma, &mb)?;
    eprintln!("rmm-plan: {} of {} columns active, Z = {:.6}", plan.active.len(), plan.m, plan.z);
    emit(&plan, a, a.json.out.as_deref())
}

#[derive(Serialize)]
struct MulInputs<'a> {
    #[serde(flatten)]
    args: &'a RmmMulArgs,
    seed: u64,
}

pub fn rmm_mul(a: &RmmMulArgs, seed: u64) -> Result<()> {
    let (ma, mb) = (read_matrix(&a.pair.a)?, read_matrix(&a.pair.b)?);
    let plan = rmm::build_plan(&ma, &mb)?;
    let n = usize::try_from(a.n).context("--n is too large")?;
    let cert = match a.variant {
        Variant::Precise => rmm::certificate_precise(&ma, &mb, a.n, a.t)?,
        Variant::Simplified => rmm::certificate_simplified_for(&ma, &mb, a.n, a.t)?,
    };
    let est = rmm::approx_product(&ma, &mb, &plan, n, seed)?;
    let err = spectral_norm(&(&est - &ma * mb.transpose()))?;
    write_text(Some(&a.out), &io::matrix_to_csv_string(&est))?;
    let abs = cert.absolute_deviation().unwrap_or(f64::NAN);
    eprintln!(
        "rmm-mul: {} written; error {err:.6} vs threshold {abs:.6} (failure probability <= {:.6e})",
        a.out.display(),
        cert.probability.value
    );
    let mut v = serde_json::to_value(&cert)?;
    if let Value::Object(map) = &mut v {
        let rel = cert.scale.filter(|&s| s > 0.0).map(|s| err / s);
        map.insert("observed".into(), json!({ "error": err, "error_relative": rel }));
    }
    emit(&v, &MulInputs { args: a, seed }, a.cert.as_deref())
}

pub fn rmm_size(a: &RmmSizeArgs) -> Result<()> {
    let n = rmm::sample_size(a.ra, a.rb, a.eps, a.delta)?;
    eprintln!("rmm-size: {n} samples");
    emit(&json!({ "n": n, "constant": rmm::sample_size_constant() }), a, a.json.out.as_deref())
}
