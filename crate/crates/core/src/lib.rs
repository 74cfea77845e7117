//! Dimension-free matrix tail bounds.
//!
//! Calculators for subgaussian and Bernstein-type certificates whose failure
//! probability scales with an intrinsic dimension instead of the ambient one,
//! applications to suprema and covariance estimation, a sampled matrix
//! product with error certificates, and a harness that checks all of it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod io;
pub mod rmm;
pub mod rng;
pub mod specmat;
pub mod tailfn;

pub use bounds::{BernsteinParams, Sides, Source, SubgaussianParams, TailCertificate};
pub use error::{Error, Result};
pub use specmat::SymMat;
pub use tailfn::{g, invert_phi, phi, TailProbability};
