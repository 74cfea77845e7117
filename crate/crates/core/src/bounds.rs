//! Tail certificates for averages of random symmetric matrices.
//!
//! Forward calculators map a deviation parameter `t` to a certificate
//! `(deviation threshold, failure probability)`; the inverted forms solve for
//! `t` given a target failure probability. The failure probability of every
//! certificate here is `k_bar * phi(t)`, with `k_bar` an intrinsic-dimension
//! ratio (trace over top eigenvalue) instead of the ambient dimension.

use std::collections::BTreeMap;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::specmat::SymMat;
use crate::tailfn::{g, invert_phi, phi, TailProbability};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sides {
    One,
    Two,
}

impl Sides {
    pub fn factor(self) -> f64 {
        match self {
            Sides::One => 1.0,
            Sides::Two => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Subgaussian,
    Bernstein,
    Generic,
    SupProcess,
    Covariance,
    SplitCovariance,
    GaussianCovariance,
}

/// A deviation threshold and the probability of exceeding it.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCertificate {
    pub deviation: f64,
    pub probability: TailProbability,
    pub t: f64,
    pub sides: Sides,
    pub source: Source,
    /// Inputs echoed back for auditing.
    pub params: BTreeMap<String, f64>,
}

impl Serialize for TailCertificate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TailCertificate", 7)?;
        st.serialize_field("deviation", &self.deviation)?;
        st.serialize_field("probability", &self.probability.value)?;
        st.serialize_field("probability_raw", &self.probability.raw)?;
        st.serialize_field("t", &self.t)?;
        st.serialize_field("sides", &self.sides)?;
        st.serialize_field("source", &self.source)?;
        st.serialize_field("params", &self.params)?;
        st.end()
    }
}

pub(crate) fn params_map<const N: usize>(entries: [(&str, f64); N]) -> BTreeMap<String, f64> {
    entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("t must be finite and > 0, got {t}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn check_k_bar(k_bar: f64, sigma2_bar: f64) -> Result<()> {
    if !k_bar.is_finite() || k_bar <= 0.0 {
        return Err(Error::domain(format!("k_bar must be finite and > 0, got {k_bar}")));
    }
    if sigma2_bar > 0.0 && k_bar < 1.0 {
        return Err(Error::domain(format!(
            "k_bar must be >= 1 when sigma2_bar > 0, got {k_bar}"
        )));
    }
    Ok(())
}

/// Variance-proxy scale and intrinsic dimension of a subgaussian matrix sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgaussianParams {
    pub n: u64,
    pub sigma2_bar: f64,
    pub k_bar: f64,
}

impl SubgaussianParams {
    pub fn new(n: u64, sigma2_bar: f64, k_bar: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        check_nonneg("sigma2_bar", sigma2_bar)?;
        check_k_bar(k_bar, sigma2_bar)?;
        Ok(SubgaussianParams { n, sigma2_bar, k_bar })
    }

    fn echo(&self) -> BTreeMap<String, f64> {
        params_map([
            ("n", self.n as f64),
            ("sigma2_bar", self.sigma2_bar),
            ("k_bar", self.k_bar),
        ])
    }
}

/// Almost-sure eigenvalue bound, variance scale and intrinsic dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinParams {
    pub n: u64,
    pub b_bar: f64,
    pub sigma2_bar: f64,
    pub k_bar: f64,
}

impl BernsteinParams {
    pub fn new(n: u64, b_bar: f64, sigma2_bar: f64, k_bar: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n must be positive"));
        }
        check_nonneg("b_bar", b_bar)?;
        check_nonneg("sigma2_bar", sigma2_bar)?;
        check_k_bar(k_bar, sigma2_bar)?;
        Ok(BernsteinParams {
            n,
            b_bar,
            sigma2_bar,
            k_bar,
        })
    }

    pub fn with_n(self, n: u64) -> Result<Self> {
        Self::new(n, self.b_bar, self.sigma2_bar, self.k_bar)
    }

    fn echo(&self) -> BTreeMap<String, f64> {
        params_map([
            ("n", self.n as f64),
            ("b_bar", self.b_bar),
            ("sigma2_bar", self.sigma2_bar),
            ("k_bar", self.k_bar),
        ])
    }
}

/// `trace_quantity / (e^t - t - 1)`, the generic trace-based tail.
pub fn generic_rhs(trace_quantity: f64, t: f64) -> Result<TailProbability> {
    check_nonneg("trace_quantity", trace_quantity)?;
    check_t(t)?;
    if trace_quantity == 0.0 {
        return Ok(TailProbability::from_raw(0.0));
    }
    Ok(TailProbability::from_raw(trace_quantity / g(t)))
}

/// `Pr[lambda_max(avg X_i) > sqrt(2 sigma2 t / n)] <= k_bar phi(t)`.
pub fn subgaussian_tail(p: &SubgaussianParams, t: f64) -> Result<TailCertificate> {
    check_t(t)?;
    let deviation = (2.0 * p.sigma2_bar * t / p.n as f64).sqrt();
    Ok(TailCertificate {
        deviation,
        probability: TailProbability::from_raw(p.k_bar * phi(t)?),
        t,
        sides: Sides::One,
        source: Source::Subgaussian,
        params: p.echo(),
    })
}

/// Solves `k_bar phi(t) = delta` for `t`.
fn t_at_confidence(k_bar: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    invert_phi(delta / k_bar)
}

pub fn subgaussian_deviation_at_confidence(
    p: &SubgaussianParams,
    delta: f64,
) -> Result<TailCertificate> {
    let t = t_at_confidence(p.k_bar, delta)?;
    let mut cert = subgaussian_tail(p, t)?;
    cert.params.insert("delta".into(), delta);
    Ok(cert)
}

/// `Pr[lambda_max(avg X_i) > sqrt(2 sigma2 t / n) + b t / (3n)] <= k_bar phi(t)`.
pub fn bernstein_tail(p: &BernsteinParams, t: f64) -> Result<TailCertificate> {
    check_t(t)?;
    let n = p.n as f64;
    let deviation = (2.0 * p.sigma2_bar * t / n).sqrt() + p.b_bar * t / (3.0 * n);
    Ok(TailCertificate {
        deviation,
        probability: TailProbability::from_raw(p.k_bar * phi(t)?),
        t,
        sides: Sides::One,
        source: Source::Bernstein,
        params: p.echo(),
    })
}

pub fn bernstein_deviation_at_confidence(
    p: &BernsteinParams,
    delta: f64,
) -> Result<TailCertificate> {
    let t = t_at_confidence(p.k_bar, delta)?;
    let mut cert = bernstein_tail(p, t)?;
    cert.params.insert("delta".into(), delta);
    Ok(cert)
}

/// Bernstein parameters from an exact average second-moment matrix.
///
/// `sigma2_bar = lambda_max(S)`, `k_bar = tr(S) / sigma2_bar`, with
/// `k_bar = 1` when `S = 0`.
pub fn params_from_moments(
    b_bar: f64,
    second_moment: &SymMat,
    n: u64,
) -> Result<BernsteinParams> {
    let eig = second_moment.spectrum()?;
    let (lmax, lmin) = (eig.lambda_max(), eig.lambda_min());
    if lmin < -1e-10 * lmax.max(0.0) {
        return Err(Error::NotPsd { lambda_min: lmin });
    }
    let sigma2_bar = lmax.max(0.0);
    let k_bar = if sigma2_bar == 0.0 {
        1.0
    } else {
        // rounding can push the ratio a hair below 1 for rank-one inputs
        (second_moment.trace() / sigma2_bar).max(1.0)
    };
    BernsteinParams::new(n, b_bar, sigma2_bar, k_bar)
}
