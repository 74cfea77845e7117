use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rmm::{self, SamplingPlan};
use crate::specmat::{dilate, SymMat};

/// A finite distribution over symmetric matrices of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteAtoms {
    atoms: Vec<SymMat>,
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl DiscreteAtoms {
    pub fn new(atoms: Vec<SymMat>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(Error::domain("need one probability per atom and at least one atom"));
        }
        let dim = atoms[0].dim();
        if atoms.iter().any(|a| a.dim() != dim) {
            return Err(Error::ShapeMismatch("atoms must share one dimension".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::domain("atom probabilities must be positive"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("atom probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let mut cum: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cum.last_mut().unwrap() = 1.0;
        Ok(DiscreteAtoms { atoms, probs, cum })
    }

    pub fn uniform(atoms: Vec<SymMat>) -> Result<Self> {
        let p = 1.0 / atoms.len() as f64;
        let n = atoms.len();
        Self::new(atoms, vec![p; n])
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[SymMat] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn pick(&self, u: f64) -> &SymMat {
        let k = self.cum.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        &self.atoms[k]
    }

    fn expect(&self, f: impl Fn(&SymMat) -> Result<SymMat>) -> Result<SymMat> {
        let mut acc = SymMat::zeros(self.dim());
        for (a, &p) in self.atoms.iter().zip(&self.probs) {
            acc.axpy(p, &f(a)?);
        }
        Ok(acc)
    }

    pub fn mean(&self) -> SymMat {
        self.expect(|a| Ok(a.clone())).expect("infallible")
    }

    pub fn second_moment(&self) -> SymMat {
        self.expect(|a| Ok(a.square())).expect("infallible")
    }

    /// `E[exp(eta X)]`.
    pub fn mgf(&self, eta: f64) -> Result<SymMat> {
        self.expect(|a| a.scale(eta).exp())
    }

    /// `log E[exp(eta X)]`.
    pub fn log_mgf(&self, eta: f64) -> Result<SymMat> {
        self.mgf(eta)?.log()
    }

    /// `max_atom lambda_max(X)`, an almost-sure bound.
    pub fn max_lambda(&self) -> Result<f64> {
        self.atoms
            .iter()
            .map(|a| a.lambda_max())
            .try_fold(f64::NEG_INFINITY, |m, l| Ok(m.max(l?)))
    }

    /// Atoms shifted by `-E[X]`.
    pub fn centered(&self) -> Result<Self> {
        let mean = self.mean();
        Self::new(self.atoms.iter().map(|a| a.sub(&mean)).collect(), self.probs.clone())
    }
}

/// Exact first and second moments of a single summand.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: SymMat,
    pub second_moment: SymMat,
}

/// Distributions of the summands `X_i` that the harness can sample and check.
#[derive(Debug, Clone)]
pub enum Ensemble {
    /// `X = x x^T - I`, `x` uniform on `{-1, +1}^d`.
    RademacherOuter { d: usize },
    /// `X = diag(Z_1, ..., Z_k)` with independent `Z_i ~ N(0, sigma2_i)`.
    DiagSubgaussian { sigma2: Vec<f64> },
    DiscreteAtoms(DiscreteAtoms),
    /// `x ~ N(0, Sigma)`, summand `x x^T`.
    GaussianVectors { sigma: SymMat },
    /// Sampled dilations `dilate(a_i b_i^T) / p_i` for the product `A B^T`.
    RmmSampler {
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        plan: SamplingPlan,
    },
}

pub const MAX_RADEMACHER_DIM: usize = 64;

impl Ensemble {
    pub fn rademacher(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_RADEMACHER_DIM {
            return Err(Error::domain(format!("Rademacher dimension must be in 1..=64, got {d}")));
        }
        Ok(Ensemble::RademacherOuter { d })
    }

    pub fn diag_gaussian(sigma2: Vec<f64>) -> Result<Self> {
        if sigma2.is_empty() || sigma2.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::domain("variances must be positive and finite"));
        }
        Ok(Ensemble::DiagSubgaussian { sigma2 })
    }

    pub fn gaussian_vectors(sigma: SymMat) -> Result<Self> {
        let lmin = sigma.lambda_min()?;
        if lmin < -1e-10 * sigma.lambda_max()?.max(1.0) {
            return Err(Error::NotPsd { lambda_min: lmin });
        }
        Ok(Ensemble::GaussianVectors { sigma })
    }

    pub fn rmm(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let plan = rmm::build_plan(&a, &b)?;
        Ok(Ensemble::RmmSampler { a, b, plan })
    }

    pub fn id(&self) -> String {
        match self {
            Ensemble::RademacherOuter { d } => format!("rademacher-outer(d={d})"),
            Ensemble::DiagSubgaussian { sigma2 } => format!("diag-gaussian(k={})", sigma2.len()),
            Ensemble::DiscreteAtoms(a) => format!("discrete-atoms(dim={},atoms={})", a.dim(), a.len()),
            Ensemble::GaussianVectors { sigma } => format!("gaussian-vectors(dim={})", sigma.dim()),
            Ensemble::RmmSampler { a, b, .. } => {
                format!("rmm-sampler({}x{},{}x{})", a.nrows(), a.ncols(), b.nrows(), b.ncols())
            }
        }
    }

    /// Dimension of one summand.
    pub fn dim(&self) -> usize {
        match self {
            Ensemble::RademacherOuter { d } => *d,
            Ensemble::DiagSubgaussian { sigma2 } => sigma2.len(),
            Ensemble::DiscreteAtoms(a) => a.dim(),
            Ensemble::GaussianVectors { sigma } => sigma.dim(),
            Ensemble::RmmSampler { a, b, .. } => a.nrows() + b.nrows(),
        }
    }

    /// Summand atoms for the ensembles with finite support.
    pub fn as_discrete(&self) -> Result<Option<DiscreteAtoms>> {
        match self {
            Ensemble::DiscreteAtoms(a) => Ok(Some(a.clone())),
            Ensemble::RmmSampler { a, b, plan } => {
                let (atoms, probs): (Vec<_>, Vec<_>) = rmm::atoms(a, b, plan)?.into_iter().unzip();
                // probabilities of a plan sum to 1 only up to rounding
                let total: f64 = probs.iter().sum();
                Ok(Some(DiscreteAtoms::new(atoms, probs.iter().map(|p| p / total).collect())?))
            }
            _ => Ok(None),
        }
    }

    /// Closed-form or exactly summed moments of one summand.
    pub fn exact_moments(&self) -> Result<Option<Moments>> {
        Ok(match self {
            Ensemble::RademacherOuter { d } => Some(Moments {
                mean: SymMat::zeros(*d),
                second_moment: SymMat::identity(*d).scale((*d - 1) as f64),
            }),
            Ensemble::DiagSubgaussian { sigma2 } => Some(Moments {
                mean: SymMat::zeros(sigma2.len()),
                second_moment: SymMat::diag(sigma2)?,
            }),
            Ensemble::DiscreteAtoms(a) => Some(Moments {
                mean: a.mean(),
                second_moment: a.second_moment(),
            }),
            Ensemble::GaussianVectors { sigma } => Some(Moments {
                mean: sigma.clone(),
                // E[x x^T x x^T] = 2 Sigma^2 + tr(Sigma) Sigma
                second_moment: sigma.square().scale(2.0).add(&sigma.scale(sigma.trace())),
            }),
            Ensemble::RmmSampler { a, b, .. } => {
                let d = self.as_discrete()?.expect("rmm ensembles are discrete");
                debug_assert_eq!(d.dim(), a.nrows() + b.nrows());
                Some(Moments {
                    mean: dilate(&(a * b.transpose())),
                    second_moment: d.second_moment(),
                })
            }
        })
    }

    /// `log E[exp(eta X)]` where it is available in closed form or by exact summation.
    pub fn log_mgf(&self, eta: f64) -> Result<SymMat> {
        match self {
            Ensemble::RademacherOuter { d } => {
                // x x^T has eigenvalue d on x and 0 elsewhere, so
                // E exp(eta (x x^T - I)) = e^{-eta} (1 + (e^{eta d} - 1) / d) I
                let df = *d as f64;
                let v = -eta + ((eta * df).exp_m1() / df).ln_1p();
                Ok(SymMat::identity(*d).scale(v))
            }
            Ensemble::DiagSubgaussian { sigma2 } => {
                SymMat::diag(&sigma2.iter().map(|s| eta * eta * s / 2.0).collect::<Vec<_>>())
            }
            Ensemble::DiscreteAtoms(a) => a.log_mgf(eta),
            Ensemble::RmmSampler { .. } => self
                .as_discrete()?
                .expect("rmm ensembles are discrete")
                .centered()?
                .log_mgf(eta),
            Ensemble::GaussianVectors { .. } => Err(Error::UnknownMoments(
                "no closed-form matrix MGF for Gaussian outer products".into(),
            )),
        }
    }
}
