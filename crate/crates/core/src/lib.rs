//! Monte Carlo comparison of local-projection and VAR impulse-response
//! estimators on data drawn from a dynamic factor model.
//!
//! - [`numerics`]: regression, factorizations, Riccati/Lyapunov solvers, splines,
//!   simplex-constrained quadratic minimization.
//! - [`dgp`]: factor-model parameters, DGP drawing, simulation, population estimands.
//! - [`estimators`]: LP, penalized LP, VAR, bias-corrected VAR, BVAR, VAR averaging, SVAR-IV.
//! - [`analytic`]: closed-form asymptotics for a drifting ARMA(1,1)-type DGP.
//! - [`harness`]: experiment runner, aggregation, loss maps, checkpoints.
//! - [`cli`]: command-line front end.

pub mod analytic;
pub mod cli;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod numerics;

pub use error::{Error, Result};
