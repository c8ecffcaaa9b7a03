//! Dense linear-algebra kernels shared by the DGP, estimator and analytic code.
//!
//! Everything here is a pure function of its inputs.

mod bspline;
mod simplex;

pub use bspline::bspline_basis;
pub use simplex::{simplex_kkt_residual, simplex_qp};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance below which a diagonal entry of the QR factor marks a
/// column as linearly dependent on its predecessors.
const RANK_TOL: f64 = 1e-10;

/// Least-squares fit of `Y = X B' + U`.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    /// Regressand-dim x regressor-dim.
    pub coefficients: Matrix,
    /// T x regressand-dim.
    pub residuals: Matrix,
    /// `residuals' residuals / T`.
    pub residual_cov: Matrix,
    r_factor: Matrix,
}

impl RegressionFit {
    /// `(X'X)^{-1}` recovered from the triangular QR factor.
    pub fn gram_inverse(&self) -> Matrix {
        let k = self.r_factor.nrows();
        let r_inv = self
            .r_factor
            .solve_upper_triangular(&Matrix::identity(k, k))
            .expect("triangular factor checked nonsingular at fit time");
        &r_inv * r_inv.transpose()
    }

    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }
}

/// Column-by-column OLS via Householder QR.
pub fn ols(y: &Matrix, x: &Matrix) -> Result<RegressionFit> {
    let (t, k) = x.shape();
    if y.nrows() != t {
        return Err(Error::InvalidInput(format!(
            "regressand has {} rows, regressors have {t}",
            y.nrows()
        )));
    }
    if t <= k {
        return Err(Error::InsufficientSample(format!(
            "{t} observations for {k} regressors"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::RankDeficient { column: 0 });
    }
    if let Some(column) = (0..k).find(|&j| r[(j, j)].abs() <= RANK_TOL * scale) {
        return Err(Error::RankDeficient { column });
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let top = qty.rows(0, k).into_owned();
    let beta = r
        .solve_upper_triangular(&top)
        .ok_or(Error::RankDeficient { column: k - 1 })?;
    let residuals = y - x * &beta;
    let residual_cov = symmetrize(&(residuals.transpose() * &residuals / t as f64));
    Ok(RegressionFit {
        coefficients: beta.transpose(),
        residuals,
        residual_cov,
        r_factor: r,
    })
}

pub fn symmetrize(s: &Matrix) -> Matrix {
    (s + s.transpose()) * 0.5
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Lower-triangular `L` with positive diagonal and `L L' = S`.
pub fn cholesky_lower(s: &Matrix) -> Result<Matrix> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::InvalidInput("cholesky input is not square".into()));
    }
    let scale = max_abs(s).max(f64::MIN_POSITIVE);
    if max_abs(&(s - s.transpose())) > 1e-10 * scale {
        return Err(Error::InvalidInput("cholesky input is not symmetric".into()));
    }
    let a = symmetrize(s);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || d <= 1e-14 * a[(j, j)].abs() {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
pub fn spd_inverse(s: &Matrix) -> Result<Matrix> {
    let l = cholesky_lower(s)?;
    let n = s.nrows();
    let l_inv = l
        .solve_lower_triangular(&Matrix::identity(n, n))
        .ok_or(Error::NotPositiveDefinite { minor: n })?;
    Ok(symmetrize(&(l_inv.transpose() * l_inv)))
}

pub fn log_det_spd(s: &Matrix) -> Result<f64> {
    let l = cholesky_lower(s)?;
    Ok(2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    if a.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Companion matrix of the lag polynomial `x_t = sum_l lags[l] x_{t-l-1}`.
pub fn companion(lags: &[Matrix], n: usize) -> Matrix {
    let p = lags.len().max(1);
    let mut c = Matrix::zeros(n * p, n * p);
    for (l, a) in lags.iter().enumerate() {
        c.view_mut((0, l * n), (n, n)).copy_from(a);
    }
    for l in 1..p {
        c.view_mut((l * n, (l - 1) * n), (n, n))
            .copy_from(&Matrix::identity(n, n));
    }
    c
}

/// Solves `X = A X A' + Q` by the doubling recursion.
pub fn solve_discrete_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix> {
    let radius = spectral_radius(a);
    if radius >= 1.0 - 1e-8 {
        return Err(Error::NonStationary { radius });
    }
    let mut x = symmetrize(q);
    let mut ak = a.clone();
    for _ in 0..64 {
        let inc = &ak * &x * ak.transpose();
        x += &inc;
        if max_abs(&inc) <= 1e-17 * max_abs(&x).max(f64::MIN_POSITIVE) {
            break;
        }
        ak = &ak * &ak;
    }
    Ok(symmetrize(&x))
}

#[derive(Debug, Clone, Copy)]
pub struct RiccatiOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Steady state of the Kalman filter for `s' = A s + B e`, `y = C s + D e`.
#[derive(Debug, Clone)]
pub struct SteadyStateKalman {
    pub gain: Matrix,
    /// One-step-ahead state prediction covariance.
    pub state_cov: Matrix,
    /// `C Sigma C' + D D'`.
    pub innovation_cov: Matrix,
}

pub fn steady_state_kalman(a: &Matrix, b: &Matrix, c: &Matrix, d: &Matrix) -> Result<SteadyStateKalman> {
    steady_state_kalman_with(a, b, c, d, RiccatiOptions::default())
}

pub fn steady_state_kalman_with(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    d: &Matrix,
    opts: RiccatiOptions,
) -> Result<SteadyStateKalman> {
    let ns = a.nrows();
    if a.ncols() != ns || b.nrows() != ns || c.ncols() != ns || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
        return Err(Error::InvalidInput("state-space dimensions are inconsistent".into()));
    }
    let radius = spectral_radius(a);
    if radius >= 1.0 {
        return Err(Error::NonStationary { radius });
    }
    let bb = b * b.transpose();
    let bd = b * d.transpose();
    let dd = d * d.transpose();
    let at = a.transpose();
    let ct = c.transpose();

    // (M S^{-1} M', M S^{-1}) where M = A Sigma C' + B D', S = C Sigma C' + D D'.
    let correction = |sigma: &Matrix| -> Result<(Matrix, Matrix, Matrix)> {
        let m = a * sigma * &ct + &bd;
        let s = symmetrize(&(c * sigma * &ct + &dd));
        if m.iter().all(|v| *v == 0.0) {
            return Ok((Matrix::zeros(ns, ns), Matrix::zeros(ns, c.nrows()), s));
        }
        let s_inv = spd_inverse(&s)?;
        let k = &m * &s_inv;
        Ok((&k * m.transpose(), k, s))
    };

    let mut sigma = Matrix::zeros(ns, ns);
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let (corr, _, _) = correction(&sigma)?;
        let next = symmetrize(&(a * &sigma * &at + &bb - corr));
        let diff = max_abs(&(&next - &sigma));
        let scale = max_abs(&next);
        sigma = next;
        change = if scale > 0.0 { diff / scale } else { diff };
        if change <= opts.tol {
            let (_, gain, innovation_cov) = correction(&sigma)?;
            return Ok(SteadyStateKalman {
                gain,
                state_cov: sigma,
                innovation_cov,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: opts.max_iter,
        residual: change,
    })
}

/// Linear-interpolation quantile (the "type 7" rule). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, q)
}
