//! Closed-form large-sample bias and variance of the LP and VAR(1) estimators
//! in the bivariate drifting model
//!
//! `y_t = rho y_{t-1} + e1_t + e2_t + (alpha / sqrt(T)) e2_{t-1}`,
//!
//! together with a simulator and the two estimators for Monte Carlo checks.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SIMPLE_BURN_IN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleDGPParams {
    pub rho: f64,
    /// Standard deviation of `e2`.
    pub sigma2: f64,
    pub alpha: f64,
    pub t: usize,
}

impl SimpleDGPParams {
    pub fn new(rho: f64, sigma2: f64, alpha: f64, t: usize) -> Result<Self> {
        let p = SimpleDGPParams { rho, sigma2, alpha, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidInput(format!("rho = {} must lie in (-1, 1)", self.rho)));
        }
        if !(self.sigma2 > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidInput("sigma2 must be positive and alpha finite".into()));
        }
        Ok(())
    }

    /// `(1 + sigma2^2) / (1 - rho^2)`.
    pub fn sigma0y2(&self) -> f64 {
        (1.0 + self.sigma2 * self.sigma2) / (1.0 - self.rho * self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMoments {
    pub abias: f64,
    pub avar: f64,
}

pub fn asy_lp(params: &SimpleDGPParams, h: usize) -> AsymptoticMoments {
    let s = params.sigma0y2();
    let r2 = params.rho * params.rho;
    AsymptoticMoments {
        abias: 0.0,
        avar: s * (1.0 - r2.powi(h as i32 + 1)) - r2.powi(h as i32),
    }
}

pub fn asy_var(params: &SimpleDGPParams, h: usize) -> Result<AsymptoticMoments> {
    if h == 0 {
        return Err(Error::InvalidInput(
            "VAR moments start at h = 1; use LP moments at impact".into(),
        ));
    }
    let s = params.sigma0y2();
    let (rho, s2) = (params.rho, params.sigma2 * params.sigma2);
    let hm1 = (h - 1) as f64;
    let abias = rho.powi(h as i32 - 1) * hm1 * params.alpha * s2 / (s - 1.0);
    let avar = rho.powi(2 * (h as i32 - 1)) * (1.0 + s2) * (1.0 + hm1 * hm1 / (s - 1.0))
        + rho.powi(2 * h as i32) * s2;
    Ok(AsymptoticMoments { abias, avar })
}

/// Bias weight at which the asymptotic LP and VAR losses coincide; LP is
/// preferred for weights at or above it.
pub fn indifference_weight(params: &SimpleDGPParams, h: usize) -> Result<f64> {
    if h < 2 {
        return Err(Error::InvalidInput(format!("estimators equivalent at h = {h}")));
    }
    let lp = asy_lp(params, h);
    let var = asy_var(params, h)?;
    let dv = lp.avar - var.avar;
    let db = var.abias * var.abias - lp.abias * lp.abias;
    if dv == 0.0 && db == 0.0 {
        return Err(Error::InvalidInput(format!("estimators equivalent at h = {h}")));
    }
    Ok((dv / (dv + db)).clamp(0.0, 1.0))
}

/// Mean of the limiting normal distribution of the second-lag t-statistic in an
/// AR(2) regression for `y`.
pub fn tstat_noncentrality(params: &SimpleDGPParams) -> f64 {
    let s2 = params.sigma2 * params.sigma2;
    -params.rho * s2 * params.alpha / (1.0 + s2)
}

/// Shock distribution of the simple model. Student t draws are rescaled to
/// unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockDistribution {
    #[default]
    Gaussian,
    StudentT8,
}

impl ShockDistribution {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ShockDistribution::Gaussian => StandardNormal.sample(rng),
            ShockDistribution::StudentT8 => {
                let t: f64 = StudentT::new(8.0).expect("valid dof").sample(rng);
                t / (8.0f64 / 6.0).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleSeries {
    pub y: Vec<f64>,
    pub eps1: Vec<f64>,
}

pub fn simulate_simple<R: Rng + ?Sized>(params: &SimpleDGPParams, rng: &mut R) -> SimpleSeries {
    simulate_simple_with(params, ShockDistribution::Gaussian, rng)
}

pub fn simulate_simple_with<R: Rng + ?Sized>(
    params: &SimpleDGPParams,
    dist: ShockDistribution,
    rng: &mut R,
) -> SimpleSeries {
    let ma = params.alpha / (params.t as f64).sqrt();
    let total = params.t + SIMPLE_BURN_IN;
    let mut y = Vec::with_capacity(params.t);
    let mut eps1 = Vec::with_capacity(params.t);
    let (mut y_prev, mut e2_prev) = (0.0, 0.0);
    for s in 0..total {
        let e1 = dist.draw(rng);
        let e2 = params.sigma2 * dist.draw(rng);
        let yt = params.rho * y_prev + e1 + e2 + ma * e2_prev;
        if s >= SIMPLE_BURN_IN {
            y.push(yt);
            eps1.push(e1);
        }
        y_prev = yt;
        e2_prev = e2;
    }
    SimpleSeries { y, eps1 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleEstimates {
    pub beta_hat: Vec<f64>,
    pub delta_hat: Vec<f64>,
}

/// LP (`y_{t+h}` on `e1_t` and `w_{t-1} = (e1_{t-1}, y_{t-1})`) and VAR(1)
/// estimates for `h = 0..=h_bar`, both without intercept.
pub fn simple_estimators(series: &SimpleSeries, h_bar: usize) -> Result<SimpleEstimates> {
    let (y, e) = (&series.y, &series.eps1);
    let t = y.len();
    if e.len() != t {
        return Err(Error::InvalidInput("y and eps1 lengths differ".into()));
    }
    if t <= h_bar + 3 {
        return Err(Error::InsufficientSample(format!("{t} observations for h_bar = {h_bar}")));
    }

    let mut beta_hat = Vec::with_capacity(h_bar + 1);
    for h in 0..=h_bar {
        let mut xx = Matrix3::<f64>::zeros();
        let mut xy = Vector3::<f64>::zeros();
        for s in 1..(t - h) {
            let x = Vector3::new(e[s], e[s - 1], y[s - 1]);
            xx += x * x.transpose();
            xy += x * y[s + h];
        }
        let chol = xx
            .cholesky()
            .ok_or_else(|| Error::RankDeficient { column: 0 })?;
        beta_hat.push(chol.solve(&xy)[0]);
    }

    let mut xx = Matrix2::<f64>::zeros();
    let mut xw = Matrix2::<f64>::zeros();
    for s in 1..t {
        let lag = Vector2::new(e[s - 1], y[s - 1]);
        let cur = Vector2::new(e[s], y[s]);
        xx += lag * lag.transpose();
        xw += cur * lag.transpose();
    }
    let xx_inv = xx.try_inverse().ok_or(Error::RankDeficient { column: 0 })?;
    let a = xw * xx_inv;
    let mut sigma = Matrix2::<f64>::zeros();
    for s in 1..t {
        let u = Vector2::new(e[s], y[s]) - a * Vector2::new(e[s - 1], y[s - 1]);
        sigma += u * u.transpose();
    }
    sigma /= (t - 1) as f64;
    if !(sigma[(0, 0)] > 0.0) {
        return Err(Error::NotPositiveDefinite { minor: 1 });
    }
    let mut gamma = Vector2::new(1.0, sigma[(1, 0)] / sigma[(0, 0)]);
    let mut delta_hat = Vec::with_capacity(h_bar + 1);
    for _ in 0..=h_bar {
        delta_hat.push(gamma[1]);
        gamma = a * gamma;
    }
    Ok(SimpleEstimates { beta_hat, delta_hat })
}

/// Conventional t-statistic on the second lag of a no-intercept AR(2)
/// regression for `y`.
pub fn ar2_second_lag_tstat(y: &[f64]) -> Result<f64> {
    let t = y.len();
    if t < 6 {
        return Err(Error::InsufficientSample(format!("{t} observations for an AR(2)")));
    }
    let mut xx = Matrix2::<f64>::zeros();
    let mut xy = Vector2::<f64>::zeros();
    for s in 2..t {
        let x = Vector2::new(y[s - 1], y[s - 2]);
        xx += x * x.transpose();
        xy += x * y[s];
    }
    let xx_inv = xx.try_inverse().ok_or(Error::RankDeficient { column: 1 })?;
    let b = xx_inv * xy;
    let ssr: f64 = (2..t)
        .map(|s| {
            let r = y[s] - b[0] * y[s - 1] - b[1] * y[s - 2];
            r * r
        })
        .sum();
    let s2 = ssr / (t - 4) as f64;
    Ok(b[1] / (s2 * xx_inv[(1, 1)]).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lp_impact_variance_white_noise() {
        let p = SimpleDGPParams::new(0.0, 1.0, 0.0, 100).unwrap();
        let m = asy_lp(&p, 0);
        assert_eq!(m.abias, 0.0);
        assert!((m.avar - 1.0).abs() < 1e-15);
    }

    #[test]
    fn var_requires_positive_horizon() {
        let p = SimpleDGPParams::new(0.5, 1.0, 1.0, 100).unwrap();
        assert!(asy_var(&p, 0).is_err());
        assert_eq!(asy_var(&p, 1).unwrap().abias, 0.0);
    }

    #[test]
    fn tstat_value() {
        let p = SimpleDGPParams::new(0.9, 1.0, 5.0, 2000).unwrap();
        assert!((tstat_noncentrality(&p) + 2.25).abs() < 1e-12);
    }

    #[test]
    fn impact_estimates_coincide() {
        let p = SimpleDGPParams::new(0.6, 1.0, 1.0, 300).unwrap();
        let s = simulate_simple(&p, &mut ChaCha8Rng::seed_from_u64(3));
        let est = simple_estimators(&s, 5).unwrap();
        assert!((est.beta_hat[0] - est.delta_hat[0]).abs() < 1e-10);
    }

    #[test]
    fn t8_shocks_have_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let v: f64 = (0..n)
            .map(|_| ShockDistribution::StudentT8.draw(&mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((v - 1.0).abs() < 0.03, "{v}");
    }
}
