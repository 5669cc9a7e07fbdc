//! Isotropic vector random fields on spheres, stationary in time.
//!
//! The crate builds m-variate covariance models C(ϑ; t) on S^d × T from
//! Gegenbauer coefficient series, ships five closed-form model families,
//! simulates the corresponding Gaussian fields by constructive series
//! expansions, and verifies every implementable identity by quadrature or
//! Monte Carlo.
//!
//! Entry points:
//! - [`gegenbauer`]: ultraspherical polynomials and sphere constants;
//! - [`sphere`]: points, distances, uniform sampling, S^2 quadrature;
//! - [`temporal`]: stationary matrix-valued temporal covariances B(t);
//! - [`covariance`]: the space-time series C(ϑ; t) and closed-form models;
//! - [`simulate`]: series simulators on S^d (d >= 2) and the circle;
//! - [`verify`]: empirical covariance estimation and identity audits;
//! - [`cli`]: config-driven front end behind the `stfields` binary.
//!
//! See the crate `examples/` directory for one runnable example per major
//! capability.

pub mod cli;
pub mod covariance;
pub mod error;
pub mod gauss;
pub mod gegenbauer;
pub mod report;
pub mod simulate;
pub mod sphere;
pub mod temporal;
pub mod verify;

pub use error::{Error, Result};
