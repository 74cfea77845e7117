//! Deterministic checks: exact enumeration over discrete ensembles, trace
//! concavity on concrete matrices, the MGF integral identity by quadrature, and
//! the subgaussian MGF hypothesis on finite `eta` grids.
//!
//! Every check compares with a fixed additive tolerance of `1e-9` unless noted;
//! no statistical slack is involved.

use serde::{Deserialize, Serialize};

use super::ensemble::{DiscreteAtoms, Ensemble};
use super::quadrature::{adaptive_simpson, integrate_half_line};
use crate::bounds::SubgaussianParams;
use crate::error::{Error, Result};
use crate::specmat::SymMat;
use crate::tailfn::g;

pub const EXACT_TOL: f64 = 1e-9;
pub const MAX_SEQUENCES: u128 = 1_000_000;
pub const MAX_EXACT_N: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Comparison {
    fn at_most(lhs: f64, rhs: f64) -> Self {
        Comparison {
            lhs,
            rhs,
            holds: lhs <= rhs + EXACT_TOL,
        }
    }
}

fn check_enumerable(atoms: &DiscreteAtoms, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let sequences = (atoms.len() as u128).saturating_pow(n as u32);
    if n > MAX_EXACT_N || sequences > MAX_SEQUENCES {
        return Err(Error::TooLarge {
            sequences,
            limit: MAX_SEQUENCES,
        });
    }
    Ok(())
}

/// Visits every length-`n` atom sequence with its probability and partial sum.
fn for_each_sequence(
    atoms: &DiscreteAtoms,
    n: usize,
    mut visit: impl FnMut(f64, &SymMat) -> Result<()>,
) -> Result<()> {
    let k = atoms.len();
    let mut digits = vec![0usize; n];
    loop {
        let mut sum = SymMat::zeros(atoms.dim());
        let mut prob = 1.0;
        for &i in &digits {
            sum.axpy(1.0, &atoms.atoms()[i]);
            prob *= atoms.probs()[i];
        }
        visit(prob, &sum)?;
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(());
            }
            digits[pos] += 1;
            if digits[pos] < k {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// `E tr exp(sum_i X_i - n log E exp(X))` over i.i.d. atoms, which must not
/// exceed `tr exp(0) = dim`.
pub fn exact_trace_exp_check(atoms: &DiscreteAtoms, n: usize) -> Result<Comparison> {
    check_enumerable(atoms, n)?;
    let shift = atoms.log_mgf(1.0)?.scale(n as f64);
    let mut value = 0.0;
    for_each_sequence(atoms, n, |p, sum| {
        value += p * sum.sub(&shift).exp()?.trace();
        Ok(())
    })?;
    Ok(Comparison::at_most(value, atoms.dim() as f64))
}

/// Exact probability that `lambda_max(eta sum X_i - n log E exp(eta X)) > t`
/// against the trace bound `tr E[-(...)] / (e^t - t - 1)`.
pub fn exact_tail_check(atoms: &DiscreteAtoms, n: usize, eta: f64, t: f64) -> Result<Comparison> {
    check_enumerable(atoms, n)?;
    if !(t > 0.0) || !t.is_finite() || !eta.is_finite() {
        return Err(Error::domain(format!("need finite eta and t > 0, got eta = {eta}, t = {t}")));
    }
    let nf = n as f64;
    let log_mgf = atoms.log_mgf(eta)?;
    let shift = log_mgf.scale(nf);
    let mut lhs = 0.0;
    for_each_sequence(atoms, n, |p, sum| {
        if sum.scale(eta).sub(&shift).lambda_max()? > t {
            lhs += p;
        }
        Ok(())
    })?;
    let expected_neg = shift.sub(&atoms.mean().scale(eta * nf));
    let rhs = expected_neg.trace() / g(t);
    Ok(Comparison::at_most(lhs, rhs))
}

/// Midpoint concavity of `M -> tr exp(H + log M)`:
/// `lhs` is the average of the endpoint values, `rhs` the value at the midpoint.
pub fn lieb_concavity_check(h: &SymMat, m1: &SymMat, m2: &SymMat) -> Result<Comparison> {
    if h.dim() != m1.dim() || h.dim() != m2.dim() {
        return Err(Error::ShapeMismatch("H, M1, M2 must share one dimension".into()));
    }
    let value = |m: &SymMat| -> Result<f64> { Ok(h.add(&m.log()?).exp()?.trace()) };
    let mid = m1.add(m2).scale(0.5);
    let avg = 0.5 * (value(m1)? + value(m2)?);
    Ok(Comparison::at_most(avg, value(&mid)?))
}

/// Non-negative scalar laws with closed-form MGF, mean and survival function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum ScalarLaw {
    Exponential { rate: f64 },
    Constant { value: f64 },
    /// Uniform on `[0, upper]`.
    Uniform { upper: f64 },
}

impl ScalarLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScalarLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            ScalarLaw::Constant { value } => value >= 0.0 && value.is_finite(),
            ScalarLaw::Uniform { upper } => upper > 0.0 && upper.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid law parameters: {self:?}")))
        }
    }

    pub fn mgf(&self, eta: f64) -> Result<f64> {
        match *self {
            ScalarLaw::Exponential { rate } => {
                if eta >= rate {
                    Err(Error::Divergent { eta })
                } else {
                    Ok(rate / (rate - eta))
                }
            }
            ScalarLaw::Constant { value } => Ok((eta * value).exp()),
            ScalarLaw::Uniform { upper } => Ok(if eta == 0.0 {
                1.0
            } else {
                (eta * upper).exp_m1() / (eta * upper)
            }),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScalarLaw::Exponential { rate } => 1.0 / rate,
            ScalarLaw::Constant { value } => value,
            ScalarLaw::Uniform { upper } => upper / 2.0,
        }
    }

    /// `Pr[W > t]` for `t >= 0`.
    pub fn survival(&self, t: f64) -> f64 {
        match *self {
            ScalarLaw::Exponential { rate } => (-rate * t).exp(),
            ScalarLaw::Constant { value } => {
                if t < value {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarLaw::Uniform { upper } => (1.0 - t / upper).clamp(0.0, 1.0),
        }
    }

    fn support_end(&self) -> Option<f64> {
        match *self {
            ScalarLaw::Exponential { .. } => None,
            ScalarLaw::Constant { value } => Some(value),
            ScalarLaw::Uniform { upper } => Some(upper),
        }
    }
}

const QUAD_TOL: f64 = 1e-13;
const TAIL_TOL: f64 = 1e-12;

/// `E[exp(eta W)] - eta E[W] - 1` in closed form against
/// `eta * int_0^inf (e^{eta t} - 1) Pr[W > t] dt` by quadrature.
///
/// `holds` uses the relative tolerance `1e-6 * max(1, |lhs|)`.
pub fn mgf_identity_check(law: &ScalarLaw, eta: f64) -> Result<Comparison> {
    law.validate()?;
    if !eta.is_finite() {
        return Err(Error::domain("eta must be finite"));
    }
    let lhs = law.mgf(eta)? - eta * law.mean() - 1.0;
    let integrand = |t: f64| (eta * t).exp_m1() * law.survival(t);
    let integral = match law.support_end() {
        Some(end) => adaptive_simpson(integrand, 0.0, end, QUAD_TOL),
        None => integrate_half_line(integrand, QUAD_TOL, TAIL_TOL).ok_or(Error::Divergent { eta })?,
    };
    let rhs = eta * integral;
    Ok(Comparison {
        lhs,
        rhs,
        holds: (lhs - rhs).abs() <= 1e-6 * lhs.abs().max(1.0),
    })
}

/// Outcome of the finite-grid check of the subgaussian MGF hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCheck {
    pub pass: bool,
    /// Largest `lambda_max(log E exp(eta X)) - eta^2 sigma2 / 2` over the grid.
    pub worst_lambda_gap: f64,
    /// Largest `tr(log E exp(eta X)) - eta^2 sigma2 k / 2` over the grid.
    pub worst_trace_gap: f64,
    pub failing_etas: Vec<f64>,
}

/// Checks `lambda_max(log E exp(eta X)) <= eta^2 sigma2 / 2` and
/// `tr(log E exp(eta X)) <= eta^2 sigma2 k / 2` at each grid point.
pub fn mgf_hypothesis_grid_check(
    ensemble: &Ensemble,
    params: &SubgaussianParams,
    eta_grid: &[f64],
) -> Result<GridCheck> {
    if eta_grid.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::domain("grid points must be finite and > 0"));
    }
    let mut out = GridCheck {
        pass: true,
        worst_lambda_gap: f64::NEG_INFINITY,
        worst_trace_gap: f64::NEG_INFINITY,
        failing_etas: Vec::new(),
    };
    for &eta in eta_grid {
        let l = ensemble.log_mgf(eta)?;
        let cap = eta * eta * params.sigma2_bar / 2.0;
        let lam_gap = l.lambda_max()? - cap;
        let tr_gap = l.trace() - cap * params.k_bar;
        out.worst_lambda_gap = out.worst_lambda_gap.max(lam_gap);
        out.worst_trace_gap = out.worst_trace_gap.max(tr_gap);
        let tol = 1e-12 * cap.max(1.0) * (params.k_bar.max(1.0));
        if lam_gap > tol || tr_gap > tol {
            out.pass = false;
            out.failing_etas.push(eta);
        }
    }
    Ok(out)
}
