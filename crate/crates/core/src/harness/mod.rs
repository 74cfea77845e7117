//! Exact and statistical checks of the inequalities.

pub mod ensemble;
pub mod exact;
pub mod montecarlo;
pub mod quadrature;

pub use ensemble::{DiscreteAtoms, Ensemble, Moments};
pub use exact::{
    exact_trace_exp_check, exact_tail_check, lieb_concavity_check, mgf_hypothesis_grid_check,
    mgf_identity_check, Comparison, GridCheck, ScalarLaw,
};
pub use montecarlo::{hoeffding_slack, mc_validate, reports_to_csv, CertKind, McConfig, TrialReport};
