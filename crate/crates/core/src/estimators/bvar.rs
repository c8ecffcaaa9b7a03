use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use super::lag_design;
use super::var::{var_fit, VARModel};
use crate::error::{Error, Result};
use crate::numerics::{ols, spd_inverse, Matrix, Vector};

/// Zero-mean Gaussian prior on the VAR coefficients.
///
/// Lag `l` coefficients get variance `own_lag / l^2` on own lags and
/// `cross_lag / l^2` on other variables' lags, the latter optionally multiplied
/// by `s_i^2 / s_j^2` (univariate AR(4) residual variances). All lag variances
/// are multiplied by `lag_variance_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BvarPrior {
    pub own_lag: f64,
    pub cross_lag: f64,
    pub intercept_variance: f64,
    pub lag_variance_scale: f64,
    pub scale_by_residual_variance: bool,
}

impl Default for BvarPrior {
    fn default() -> Self {
        BvarPrior {
            own_lag: 0.04,
            cross_lag: 0.01,
            intercept_variance: 4000.0,
            lag_variance_scale: 1.0,
            scale_by_residual_variance: true,
        }
    }
}

const UNITS_AR_ORDER: usize = 4;

fn ar_residual_variances(w: &Matrix, p: usize) -> Result<Vec<f64>> {
    let t = w.nrows();
    let start = p.max(UNITS_AR_ORDER);
    (0..w.ncols())
        .map(|j| {
            let col = w.column(j).into_owned();
            let series = Matrix::from_column_slice(t, 1, col.as_slice());
            let x = lag_design(&series, UNITS_AR_ORDER, start..t, true);
            let y = series.rows(start, t - start).into_owned();
            Ok(ols(&y, &x)?.residual_cov[(0, 0)])
        })
        .collect()
}

/// Posterior mean of the VAR(p) coefficients with the residual covariance
/// fixed at its least-squares estimate.
pub fn bvar_posterior_mean(w: &Matrix, p: usize, prior: &BvarPrior) -> Result<VARModel> {
    let ols_model = var_fit(w, p)?;
    let n = w.ncols();
    let t_total = w.nrows();
    let k = 1 + n * p;
    let x = lag_design(w, p, p..t_total, true);
    let y = w.rows(p, t_total - p).into_owned();
    let scales = if prior.scale_by_residual_variance {
        ar_residual_variances(w, p)?
    } else {
        vec![1.0; n]
    };

    // vec(B) stacks equations: index r + k * i for regressor r of equation i.
    let mut prior_precision = Vector::zeros(n * k);
    for i in 0..n {
        prior_precision[k * i] = 1.0 / prior.intercept_variance;
        for l in 1..=p {
            for j in 0..n {
                let base = if i == j {
                    prior.own_lag
                } else {
                    prior.cross_lag * scales[i] / scales[j]
                };
                let v = prior.lag_variance_scale * base / (l * l) as f64;
                prior_precision[k * i + 1 + (l - 1) * n + j] = 1.0 / v;
            }
        }
    }
    let sigma_inv = spd_inverse(&ols_model.residual_cov)?;
    let xtx = x.transpose() * &x;
    let xty_s = x.transpose() * &y * &sigma_inv;
    let mut precision = sigma_inv.kronecker(&xtx);
    for d in 0..n * k {
        precision[(d, d)] += prior_precision[d];
    }
    let rhs = Vector::from_fn(n * k, |d, _| xty_s[(d % k, d / k)]);
    let chol = Cholesky::new(precision).ok_or(Error::NotPositiveDefinite { minor: n * k })?;
    let vec_b = chol.solve(&rhs);
    let b = Matrix::from_fn(n, k, |i, r| vec_b[r + k * i]);
    Ok(ols_model.with_coefficients(&b))
}
