//! Impulse-response estimators under the three identification schemes.
//!
//! Every estimator returns responses relative to a unit impact on the
//! normalization variable.

mod averaging;
mod bias_correct;
mod bvar;
mod diagnostics;
mod lp;
mod penalized_lp;
mod var;

pub use averaging::{candidate_gradient, var_average_estimate, var_average_fit, VarAverageFit, MAX_AVERAGING_LAG};
pub use bias_correct::{pope_bias, pope_bias_correct};
pub use bvar::{bvar_posterior_mean, BvarPrior};
pub use diagnostics::{lm_serial_corr_test, select_lag_aic, LmTest};
pub use lp::{lp_coefficient, lp_estimate};
pub use penalized_lp::{
    default_lambda_grid, penalized_lp_estimate, penalized_lp_fit, third_difference, PenalizedLpFit,
};
pub use var::{
    reduced_form_irf, svar_iv_estimate, var_estimate, var_fit, var_fit_sample, var_irf, VARModel,
    VarRoles,
};

use serde::{Deserialize, Serialize};

use crate::dgp::{Dataset, Scheme};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Estimation method. `Var`, `BcVar`, `Bvar` and `VarAvg` use the internal
/// instrument under the IV scheme; `SvarIv` is the external-instrument VAR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Var,
    BcVar,
    Bvar,
    VarAvg,
    SvarIv,
    Lp,
    PenLp,
}

impl Method {
    /// Tie-break priority order (VAR family first).
    pub const ALL: [Method; 7] = [
        Method::Var,
        Method::BcVar,
        Method::Bvar,
        Method::VarAvg,
        Method::SvarIv,
        Method::Lp,
        Method::PenLp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lp => "lp",
            Method::PenLp => "pen_lp",
            Method::Var => "var",
            Method::BcVar => "bc_var",
            Method::Bvar => "bvar",
            Method::VarAvg => "var_avg",
            Method::SvarIv => "svar_iv",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.as_str() == s)
    }

    pub fn priority(&self) -> usize {
        Method::ALL.iter().position(|m| m == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// Column of the normalization variable in the data matrix used.
    pub index: usize,
    pub impact: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IRFEstimate {
    pub values: Vec<f64>,
    pub method: Method,
    pub scheme: Scheme,
    pub normalization: Normalization,
}

/// Settings shared by all estimators in one experiment.
#[derive(Debug, Clone)]
pub struct EstimatorSettings {
    pub p: usize,
    pub h_bar: usize,
    pub lambda_grid: Vec<f64>,
    pub n_folds: usize,
    pub prior: BvarPrior,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        EstimatorSettings {
            p: 4,
            h_bar: 19,
            lambda_grid: default_lambda_grid(),
            n_folds: 5,
            prior: BvarPrior::default(),
        }
    }
}

/// Runs one method on one dataset.
pub fn estimate(method: Method, data: &Dataset, s: &EstimatorSettings) -> Result<IRFEstimate> {
    match method {
        Method::Lp => lp_estimate(data, s.p, s.h_bar),
        Method::PenLp => penalized_lp_estimate(data, s.p, s.h_bar, &s.lambda_grid, s.n_folds),
        Method::Var => var_estimate(data, s.p, s.h_bar),
        Method::BcVar => {
            let model = pope_bias_correct(&var_fit(&data.observations, s.p)?);
            var_irf(&model, Method::BcVar, data.scheme, VarRoles::for_dataset(data), s.h_bar)
        }
        Method::Bvar => {
            let model = bvar_posterior_mean(&data.observations, s.p, &s.prior)?;
            var_irf(&model, Method::Bvar, data.scheme, VarRoles::for_dataset(data), s.h_bar)
        }
        Method::VarAvg => var_average_estimate(data, s.h_bar),
        Method::SvarIv => svar_iv_estimate(data, s.p, s.h_bar),
    }
}

pub(crate) const MIN_IMPACT: f64 = 1e-10;

pub(crate) fn check_impact(impact: f64) -> Result<f64> {
    if !impact.is_finite() || impact.abs() < MIN_IMPACT {
        return Err(Error::WeakNormalization { impact });
    }
    Ok(impact)
}

/// Rows `t` in `rows` of `[1, w_{t-1}', ..., w_{t-p}']`.
pub(crate) fn lag_design(w: &Matrix, p: usize, rows: std::ops::Range<usize>, intercept: bool) -> Matrix {
    let n = w.ncols();
    let off = usize::from(intercept);
    let mut x = Matrix::zeros(rows.len(), off + n * p);
    for (r, t) in rows.enumerate() {
        if intercept {
            x[(r, 0)] = 1.0;
        }
        for l in 1..=p {
            for j in 0..n {
                x[(r, off + (l - 1) * n + j)] = w[(t - l, j)];
            }
        }
    }
    x
}
