use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::lag_design;
use crate::error::{Error, Result};
use crate::numerics::{log_det_spd, ols, Matrix};

/// AIC lag choice over `1..=p_max` on the common sample `t = p_max..T`.
/// Ties go to the smaller lag.
pub fn select_lag_aic(w: &Matrix, p_max: usize) -> Result<usize> {
    let (t_total, n) = w.shape();
    if p_max == 0 || t_total <= p_max + 1 + n * p_max {
        return Err(Error::InsufficientSample(format!(
            "{t_total} observations for AIC up to {p_max} lags"
        )));
    }
    let t_eff = t_total - p_max;
    let y = w.rows(p_max, t_eff).into_owned();
    let mut best = (f64::INFINITY, 1);
    for p in 1..=p_max {
        let x = lag_design(w, p, p_max..t_total, true);
        let fit = ols(&y, &x)?;
        let aic = log_det_spd(&fit.residual_cov)? + 2.0 * (p * n * n) as f64 / t_eff as f64;
        if aic < best.0 {
            best = (aic, p);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// LM test for first-order residual autocorrelation in a VAR(p): the residuals
/// are regressed on the VAR regressors plus their own first lag (zero for the
/// first observation), compared by likelihood ratio with `n^2` degrees of freedom.
pub fn lm_serial_corr_test(w: &Matrix, p: usize) -> Result<LmTest> {
    let (t_total, n) = w.shape();
    if p == 0 || t_total <= p + 2 + n * (p + 1) {
        return Err(Error::InsufficientSample(format!(
            "{t_total} observations for a VAR({p}) serial correlation test"
        )));
    }
    let t_eff = t_total - p;
    let x = lag_design(w, p, p..t_total, true);
    let y = w.rows(p, t_eff).into_owned();
    let u = ols(&y, &x)?.residuals;
    let restricted = ols(&u, &x)?;
    let mut x_aux = Matrix::zeros(t_eff, x.ncols() + n);
    x_aux.view_mut((0, 0), x.shape()).copy_from(&x);
    for t in 1..t_eff {
        for j in 0..n {
            x_aux[(t, x.ncols() + j)] = u[(t - 1, j)];
        }
    }
    let unrestricted = ols(&u, &x_aux)?;
    let statistic = t_eff as f64
        * (log_det_spd(&restricted.residual_cov)? - log_det_spd(&unrestricted.residual_cov)?);
    let dist = ChiSquared::new((n * n) as f64)
        .map_err(|e| Error::InvalidInput(format!("chi-squared: {e}")))?;
    Ok(LmTest {
        statistic,
        p_value: 1.0 - dist.cdf(statistic.max(0.0)),
    })
}
