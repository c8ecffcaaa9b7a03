use nalgebra::Complex;

use super::var::VARModel;
use crate::numerics::{companion, solve_discrete_lyapunov, spectral_radius, Matrix};

/// First-order bias term `B` such that `E[A_hat] - A ~ -B / T` for the
/// companion matrix `a` (np x np) of a VAR with innovation covariance
/// `sigma` (n x n). Returns the top `n x np` block.
pub fn pope_bias(a: &Matrix, sigma: &Matrix, t: usize) -> Option<Matrix> {
    let k = a.nrows();
    let n = sigma.nrows();
    let mut g = Matrix::zeros(k, k);
    g.view_mut((0, 0), (n, n)).copy_from(sigma);
    let gamma0 = solve_discrete_lyapunov(a, &g).ok()?;
    let gamma0_inv = gamma0.try_inverse()?;
    let at = a.transpose();
    let id = Matrix::identity(k, k);
    let mut sum = (&id - &at).try_inverse()?;
    sum += &at * (&id - &at * &at).try_inverse()?;
    // sum over eigenvalues of lambda (I - lambda A')^{-1}
    let at_c = at.map(|x| Complex::new(x, 0.0));
    let id_c = at_c.map(|_| Complex::new(0.0, 0.0)) + nalgebra::DMatrix::<Complex<f64>>::identity(k, k);
    for lambda in a.complex_eigenvalues().iter() {
        let m = &id_c - &at_c * *lambda;
        let inv = m.try_inverse()?;
        sum += (inv * *lambda).map(|z| z.re);
    }
    let b = g * sum * gamma0_inv / t as f64;
    Some(b.rows(0, n).into_owned())
}

/// Bias-corrected lag matrices with the stationarity adjustment: the correction
/// is scaled down in steps of 0.01 until the companion matrix is stable. An
/// OLS fit that is already non-stationary is returned unchanged.
pub fn pope_bias_correct(model: &VARModel) -> VARModel {
    let n = model.n();
    let a = companion(&model.lags, n);
    if spectral_radius(&a) >= 1.0 {
        return model.clone();
    }
    let Some(bias) = pope_bias(&a, &model.residual_cov, model.t_eff) else {
        return model.clone();
    };
    let top = a.rows(0, n).into_owned();
    let mut delta = 1.0f64;
    loop {
        let corrected = &top + &bias * delta;
        let lags: Vec<Matrix> = (0..model.p())
            .map(|l| corrected.view((0, l * n), (n, n)).into_owned())
            .collect();
        if delta <= 0.0 || spectral_radius(&companion(&lags, n)) < 1.0 {
            return VARModel {
                lags,
                ..model.clone()
            };
        }
        delta = (delta - 0.01).max(0.0);
    }
}
