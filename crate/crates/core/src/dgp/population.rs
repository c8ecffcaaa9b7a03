//! Population objects implied by the factor model for a given DGP: shock
//! column, state-space form, VAR(infinity) representation, estimands,
//! invertibility and summary statistics.

use serde::{Deserialize, Serialize};

use super::params::DFMParameters;
use super::spec::{DGPSpec, Scheme};
use crate::error::{Error, Result};
use crate::numerics::{
    cholesky_lower, companion, solve_discrete_lyapunov, spectral_radius, spd_inverse,
    steady_state_kalman, symmetrize, Matrix, Vector,
};

/// Impact-maximizing first column of `H` for the normalization variable `x_index`
/// (a row of `Lambda`), subject to `H H' = Sigma_eta`.
pub fn build_shock_column(params: &DFMParameters, x_index: usize) -> Result<Vector> {
    let row = params.lambda.row(x_index).transpose();
    let s_l = &params.sigma_eta * &row;
    let var = row.dot(&s_l);
    if var <= 1e-12 {
        return Err(Error::InvalidInput(format!(
            "normalization variable unloaded (impact variance {var:.3e})"
        )));
    }
    Ok(s_l / var.sqrt())
}

/// Completes `H` with first column `h1` via `H = B P`, where `B` is the Cholesky
/// factor of `Sigma_eta` and `P` the Householder reflection taking `e1` to `B^{-1} h1`.
pub fn complete_h(params: &DFMParameters, h1: &Vector) -> Result<Matrix> {
    let n = params.n_f;
    let b = cholesky_lower(&params.sigma_eta)?;
    let r = b
        .solve_lower_triangular(h1)
        .ok_or(Error::NotPositiveDefinite { minor: n })?;
    if (r.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput(format!(
            "shock column does not have unit structural variance (norm {:.6})",
            r.norm()
        )));
    }
    let mut v = -r;
    v[0] += 1.0;
    let vv = v.dot(&v);
    let p = if vv <= 1e-28 {
        Matrix::identity(n, n)
    } else {
        Matrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv)
    };
    Ok(b * p)
}

/// Impact of the structural shock on the normalization variable, `Lambda_i H_1`.
pub fn normalization_impact(params: &DFMParameters, spec: &DGPSpec) -> f64 {
    let i = spec.variable_indices[spec.normalization];
    params.lambda.row(i).transpose().dot(&spec.h_col1())
}

/// Factor responses `Theta^f_{., 1, h}` for `h = 0..=h_bar`.
pub fn factor_irf(params: &DFMParameters, h1: &Vector, h_bar: usize) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(h_bar + 1);
    for h in 0..=h_bar {
        if h == 0 {
            out.push(h1.clone());
            continue;
        }
        let mut v = Vector::zeros(params.n_f);
        for (l, phi) in params.phi.iter().enumerate() {
            if h > l {
                v += phi * &out[h - l - 1];
            }
        }
        out.push(v);
    }
    out
}

fn lambda_bar(params: &DFMParameters, spec: &DGPSpec) -> Matrix {
    Matrix::from_fn(spec.n_w(), params.n_f, |r, c| {
        params.lambda[(spec.variable_indices[r], c)]
    })
}

/// `s_{t+1} = A s_t + B zeta_t`, `w*_t = C s_t + D zeta_t` with
/// `zeta_t = (eps_{t+1}, xi_t)` and `w*_t = [I - Delta(L) L] w_t`.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub d: Matrix,
    /// Idiosyncratic lag matrices `Delta_1..Delta_q` (diagonal).
    pub delta: Vec<Matrix>,
}

pub fn state_space(params: &DFMParameters, spec: &DGPSpec) -> Result<StateSpace> {
    let n_f = params.n_f;
    let n_w = spec.n_w();
    let q = params.q_v;
    let m = q.max(params.p_f - 1);
    let ns = n_f * (m + 1);
    let mut lags = params.phi.clone();
    lags.resize(m + 1, Matrix::zeros(n_f, n_f));
    let a = companion(&lags, n_f);
    let h = complete_h(params, &spec.h_col1())?;
    let mut b = Matrix::zeros(ns, n_f + n_w);
    b.view_mut((0, 0), (n_f, n_f)).copy_from(&h);
    let lb = lambda_bar(params, spec);
    let delta: Vec<Matrix> = (0..q)
        .map(|l| {
            Matrix::from_diagonal(&Vector::from_fn(n_w, |r, _| {
                params.delta[(spec.variable_indices[r], l)]
            }))
        })
        .collect();
    let mut c = Matrix::zeros(n_w, ns);
    c.view_mut((0, 0), (n_w, n_f)).copy_from(&lb);
    for (l, dl) in delta.iter().enumerate() {
        c.view_mut((0, (l + 1) * n_f), (n_w, n_f)).copy_from(&(-(dl * &lb)));
    }
    let mut d = Matrix::zeros(n_w, n_f + n_w);
    for r in 0..n_w {
        d[(r, n_f + r)] = params.xi[spec.variable_indices[r]];
    }
    Ok(StateSpace { a, b, c, d, delta })
}

/// Truncated reduced-form VAR(infinity) of the selected observables.
#[derive(Debug, Clone)]
pub struct VarInfinity {
    /// `A_1..A_L`.
    pub lags: Vec<Matrix>,
    pub sigma_u: Matrix,
}

impl VarInfinity {
    /// Reduced-form MA coefficients `C_0..C_{h_bar}` of the truncated VAR.
    pub fn ma_coefficients(&self, h_bar: usize) -> Vec<Matrix> {
        let n = self.sigma_u.nrows();
        let mut out: Vec<Matrix> = vec![Matrix::identity(n, n)];
        for h in 1..=h_bar {
            let mut c = Matrix::zeros(n, n);
            for k in 1..=h.min(self.lags.len()) {
                c += &self.lags[k - 1] * &out[h - k];
            }
            out.push(c);
        }
        out
    }
}

pub fn var_infinity(params: &DFMParameters, spec: &DGPSpec, l_max: usize) -> Result<VarInfinity> {
    let ss = state_space(params, spec)?;
    let kf = steady_state_kalman(&ss.a, &ss.b, &ss.c, &ss.d)?;
    let closed = &ss.a - &kf.gain * &ss.c;
    // G_j = C (A - KC)^{j-1} K
    let mut g: Vec<Matrix> = Vec::with_capacity(l_max);
    let mut power_k = kf.gain.clone();
    for _ in 0..l_max {
        g.push(&ss.c * &power_k);
        power_k = &closed * power_k;
    }
    let delta_at = |l: usize| -> Option<&Matrix> {
        if l >= 1 && l <= ss.delta.len() {
            Some(&ss.delta[l - 1])
        } else {
            None
        }
    };
    let mut lags = Vec::with_capacity(l_max);
    for k in 1..=l_max {
        let mut a_k = g[k - 1].clone();
        if let Some(dk) = delta_at(k) {
            a_k += dk;
        }
        for j in 1..k {
            if let Some(dl) = delta_at(k - j) {
                a_k -= &g[j - 1] * dl;
            }
        }
        lags.push(a_k);
    }
    Ok(VarInfinity {
        lags,
        sigma_u: symmetrize(&kf.innovation_cov),
    })
}

/// Population impulse-response estimand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IRFTrue {
    pub values: Vec<f64>,
    pub scheme: Scheme,
    /// Whether `values` are already divided by the impact on the normalization variable.
    pub normalized: bool,
    /// Impact on the normalization variable of the shock underlying `values`.
    pub normalization_impact: f64,
}

impl IRFTrue {
    /// Responses relative to a unit impact on the normalization variable; this is
    /// what every estimator targets.
    pub fn relative(&self) -> Vec<f64> {
        if self.normalized {
            self.values.clone()
        } else {
            self.values.iter().map(|v| v / self.normalization_impact).collect()
        }
    }
}

const MIN_DENOMINATOR: f64 = 1e-10;

pub fn true_irf(params: &DFMParameters, spec: &DGPSpec, h_bar: usize) -> Result<IRFTrue> {
    let y = spec.variable_indices[spec.response];
    let lam_y = params.lambda.row(y).transpose();
    match spec.scheme {
        Scheme::ObservedShock | Scheme::Iv => {
            let theta_f = factor_irf(params, &spec.h_col1(), h_bar);
            let values: Vec<f64> = theta_f.iter().map(|t| lam_y.dot(t)).collect();
            let impact = normalization_impact(params, spec);
            if spec.scheme == Scheme::ObservedShock {
                return Ok(IRFTrue {
                    values,
                    scheme: spec.scheme,
                    normalized: false,
                    normalization_impact: impact,
                });
            }
            if impact.abs() <= MIN_DENOMINATOR {
                return Err(Error::WeakNormalization { impact });
            }
            Ok(IRFTrue {
                values: values.iter().map(|v| v / impact).collect(),
                scheme: spec.scheme,
                normalized: true,
                normalization_impact: impact,
            })
        }
        Scheme::Recursive => {
            let vi = var_infinity(params, spec, h_bar.max(1))?;
            let b = cholesky_lower(&vi.sigma_u)?;
            let x = spec.innovation;
            let denom = b[(spec.normalization, x)];
            if denom.abs() <= MIN_DENOMINATOR {
                return Err(Error::WeakNormalization { impact: denom });
            }
            let values = vi
                .ma_coefficients(h_bar)
                .iter()
                .map(|c| (c.row(spec.response) * b.column(x))[(0, 0)] / denom)
                .collect();
            Ok(IRFTrue {
                values,
                scheme: spec.scheme,
                normalized: true,
                normalization_impact: denom,
            })
        }
    }
}

/// R^2 from projecting `eps_{1,t}` on current and all past selected observables.
pub fn invertibility(params: &DFMParameters, spec: &DGPSpec) -> Result<f64> {
    let ss = state_space(params, spec)?;
    let n_f = params.n_f;
    let ns = ss.a.nrows();
    let nz = ss.b.ncols();
    let n_w = ss.c.nrows();
    let mut a = Matrix::zeros(ns + n_f, ns + n_f);
    a.view_mut((0, 0), (ns, ns)).copy_from(&ss.a);
    let mut b = Matrix::zeros(ns + n_f, nz);
    b.view_mut((0, 0), (ns, nz)).copy_from(&ss.b);
    b.view_mut((ns, 0), (n_f, n_f)).copy_from(&Matrix::identity(n_f, n_f));
    let mut c = Matrix::zeros(n_w, ns + n_f);
    c.view_mut((0, 0), (n_w, ns)).copy_from(&ss.c);
    let kf = steady_state_kalman(&a, &b, &c, &ss.d)?;
    let p = &kf.state_cov;
    let s_inv = spd_inverse(&kf.innovation_cov)?;
    let pc = p * c.transpose();
    let filtered = p - &pc * s_inv * pc.transpose();
    Ok((1.0 - filtered[(ns, ns)]).clamp(0.0, 1.0))
}

/// Population variance of the selected observables.
pub fn observable_variance(params: &DFMParameters, spec: &DGPSpec) -> Result<Matrix> {
    let var_f = factor_variance(params)?;
    let lb = lambda_bar(params, spec);
    let mut v = &lb * var_f * lb.transpose();
    for (r, &i) in spec.variable_indices.iter().enumerate() {
        v[(r, r)] += idio_variance(params, i)?;
    }
    Ok(symmetrize(&v))
}

fn factor_variance(params: &DFMParameters) -> Result<Matrix> {
    let a = params.factor_companion();
    let mut q = Matrix::zeros(a.nrows(), a.nrows());
    q.view_mut((0, 0), (params.n_f, params.n_f))
        .copy_from(&params.sigma_eta);
    let full = solve_discrete_lyapunov(&a, &q)?;
    Ok(full.view((0, 0), (params.n_f, params.n_f)).into_owned())
}

fn idio_variance(params: &DFMParameters, i: usize) -> Result<f64> {
    let a = params.idio_companion(i);
    let mut q = Matrix::zeros(a.nrows(), a.nrows());
    q[(0, 0)] = params.xi[i] * params.xi[i];
    Ok(solve_discrete_lyapunov(&a, &q)?[(0, 0)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub lrv_ratio: f64,
    pub largest_eigenvalue: f64,
    pub lag_tail_fraction: f64,
    pub invertibility: f64,
    pub iv_f_stat: f64,
    pub n_interior_extrema: usize,
    pub horizon_max_abs: usize,
    pub avg_over_max_abs: f64,
    pub quadratic_r2: f64,
}

/// Shape statistics of an impulse response: (interior extrema, first argmax |theta|,
/// mean / max |theta|, R^2 of a quadratic fit in h).
pub fn irf_shape_stats(theta: &[f64]) -> (usize, usize, f64, f64) {
    let n = theta.len();
    let extrema = (1..n.saturating_sub(1))
        .filter(|&h| (theta[h] - theta[h - 1]) * (theta[h + 1] - theta[h]) < 0.0)
        .count();
    let mut arg = 0;
    for h in 1..n {
        if theta[h].abs() > theta[arg].abs() {
            arg = h;
        }
    }
    let max_abs = theta[arg].abs();
    let mean = theta.iter().sum::<f64>() / n as f64;
    let ratio = if max_abs > 0.0 { mean / max_abs } else { 0.0 };
    let x = Matrix::from_fn(n, 3, |h, j| (h as f64).powi(j as i32));
    let y = Matrix::from_fn(n, 1, |h, _| theta[h]);
    let sst: f64 = theta.iter().map(|v| (v - mean) * (v - mean)).sum();
    let r2 = if sst <= 1e-300 {
        1.0
    } else {
        match crate::numerics::ols(&y, &x) {
            Ok(fit) => (1.0 - fit.residuals.norm_squared() / sst).clamp(0.0, 1.0),
            Err(_) => 1.0,
        }
    };
    (extrema, arg, ratio, r2)
}

pub fn summary_stats(
    params: &DFMParameters,
    spec: &DGPSpec,
    h_bar: usize,
    l: usize,
    t_ref: usize,
) -> Result<SummaryStats> {
    let n_f = params.n_f;
    // long-run and unconditional variances of the observables
    let phi1 = params.phi.iter().fold(Matrix::zeros(n_f, n_f), |acc, p| acc + p);
    let inv = (Matrix::identity(n_f, n_f) - phi1)
        .try_inverse()
        .ok_or(Error::NonStationary { radius: 1.0 })?;
    let lrv_f = &inv * &params.sigma_eta * inv.transpose();
    let lb = lambda_bar(params, spec);
    let mut lrv_trace = (&lb * lrv_f * lb.transpose()).trace();
    for &i in &spec.variable_indices {
        let dsum: f64 = params.delta.row(i).iter().sum();
        lrv_trace += params.xi[i] * params.xi[i] / ((1.0 - dsum) * (1.0 - dsum));
    }
    let var_w = observable_variance(params, spec)?;
    let lrv_ratio = lrv_trace / var_w.trace();

    let vi = var_infinity(params, spec, l)?;
    let largest_eigenvalue = spectral_radius(&companion(&vi.lags, spec.n_w()));
    let norms: Vec<f64> = vi.lags.iter().map(|a| a.norm()).collect();
    let total: f64 = norms.iter().sum();
    let tail: f64 = norms.iter().skip(4).sum();
    let lag_tail_fraction = if total > 0.0 { tail / total } else { 0.0 };

    let inv_r2 = invertibility(params, spec)?;

    let impact = normalization_impact(params, spec);
    let var_i = var_w[(spec.normalization, spec.normalization)];
    let r2 = impact * impact / ((1.0 + spec.iv.sigma_nu2) * var_i);
    let iv_f_stat = t_ref as f64 * r2 / (1.0 - r2);

    let theta = true_irf(params, spec, h_bar)?.relative();
    let (n_interior_extrema, horizon_max_abs, avg_over_max_abs, quadratic_r2) =
        irf_shape_stats(&theta);
    Ok(SummaryStats {
        lrv_ratio,
        largest_eigenvalue,
        lag_tail_fraction,
        invertibility: inv_r2,
        iv_f_stat,
        n_interior_extrema,
        horizon_max_abs,
        avg_over_max_abs,
        quadratic_r2,
    })
}
