use super::var::{reduced_form_irf, VarRoles};
use super::{check_impact, lag_design, IRFEstimate, Method, Normalization};
use crate::dgp::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, ols, simplex_qp, Matrix, Vector};

/// Largest lag length among the averaging candidates.
pub const MAX_AVERAGING_LAG: usize = 20;

/// Gradient of `e_j' Psi_h c` with respect to each lag matrix `A_l`,
/// `l = 1..=p`: `sum_{i=0}^{h-l} (Psi_i' e_j)(Psi_{h-l-i} c)'`.
pub fn candidate_gradient(psi: &[Matrix], j: usize, c: &Vector, h: usize, p: usize) -> Vec<Matrix> {
    let n = c.len();
    (1..=p)
        .map(|l| {
            let mut g = Matrix::zeros(n, n);
            if l <= h {
                for i in 0..=(h - l) {
                    let left = psi[i].row(j).transpose();
                    let right = &psi[h - l - i] * c;
                    g += left * right.transpose();
                }
            }
            g
        })
        .collect()
}

struct Candidate {
    /// Un-normalized responses for h = 0..=h_bar.
    delta: Vec<f64>,
    /// Influence contributions, one row per horizon, one column per observation.
    influence: Matrix,
}

fn fit_candidate(w: &Matrix, start: usize, p: usize, j: usize, c: &Vector, h_bar: usize) -> Result<Candidate> {
    let t_total = w.nrows();
    let n = w.ncols();
    let x = lag_design(w, p, start..t_total, true);
    let y = w.rows(start, t_total - start).into_owned();
    let fit = ols(&y, &x)?;
    let lags: Vec<Matrix> = (0..p)
        .map(|l| fit.coefficients.view((0, 1 + l * n), (n, n)).into_owned())
        .collect();
    let psi = reduced_form_irf(&lags, h_bar);
    let delta: Vec<f64> = psi.iter().map(|m| m.row(j).transpose().dot(c)).collect();
    // S^{-1} x_t for every observation (k x T)
    let sx = fit.gram_inverse() * x.transpose();
    let t_eff = y.nrows();
    let mut influence = Matrix::zeros(h_bar + 1, t_eff);
    for h in 1..=h_bar {
        let grads = candidate_gradient(&psi, j, c, h, p);
        let mut g_full = Matrix::zeros(n, 1 + n * p);
        for (l, g) in grads.iter().enumerate() {
            g_full.view_mut((0, 1 + l * n), (n, n)).copy_from(g);
        }
        let gs = g_full * &sx; // n x T
        for t in 0..t_eff {
            influence[(h, t)] = fit.residuals.row(t).transpose().dot(&gs.column(t));
        }
    }
    Ok(Candidate { delta, influence })
}

/// Averaging output: per-horizon weights over the 40 candidates
/// (AR(1..20) for the response, then VAR(1..20)).
#[derive(Debug, Clone)]
pub struct VarAverageFit {
    pub values: Vec<f64>,
    pub weights: Vec<Vector>,
    /// Candidate x horizon un-normalized responses.
    pub candidates: Matrix,
    pub mse: Vec<Matrix>,
    pub impact: f64,
}

pub fn var_average_fit(data: &Dataset, h_bar: usize) -> Result<VarAverageFit> {
    let w = &data.observations;
    let (t_total, n) = w.shape();
    let pm = MAX_AVERAGING_LAG;
    if t_total <= pm + 1 + n * pm {
        return Err(Error::InsufficientSample(format!(
            "{t_total} observations cannot support a {n}-variable VAR({pm})"
        )));
    }
    let roles = VarRoles::for_dataset(data);
    let start = pm;

    // Reference VAR(20): fixes Sigma and the Cholesky rotation.
    let x20 = lag_design(w, pm, start..t_total, true);
    let y20 = w.rows(start, t_total - start).into_owned();
    let fit20 = ols(&y20, &x20)?;
    let chol = cholesky_lower(&fit20.residual_cov)?;
    let c = chol.column(roles.shock).into_owned();
    let impact = check_impact(chol[(roles.normalization, roles.shock)])?;
    let scale_y = c[roles.response];

    let j = roles.response;
    let y_series = Matrix::from_column_slice(t_total, 1, w.column(j).into_owned().as_slice());
    let unit = Vector::from_element(1, scale_y);
    let mut cands = Vec::with_capacity(2 * pm);
    for p in 1..=pm {
        cands.push(fit_candidate(&y_series, start, p, 0, &unit, h_bar)?);
    }
    for p in 1..=pm {
        cands.push(fit_candidate(w, start, p, j, &c, h_bar)?);
    }
    let r = cands.len();
    let candidates = Matrix::from_fn(r, h_bar + 1, |i, h| cands[i].delta[h]);
    let reference = r - 1;

    let mut weights = Vec::with_capacity(h_bar + 1);
    let mut mse = Vec::with_capacity(h_bar + 1);
    let mut values = Vec::with_capacity(h_bar + 1);
    for h in 0..=h_bar {
        let d = Vector::from_fn(r, |i, _| candidates[(i, h)] - candidates[(reference, h)]);
        let a = Matrix::from_fn(r, cands[0].influence.ncols(), |i, t| cands[i].influence[(h, t)]);
        let m = &d * d.transpose() + &a * a.transpose();
        let scale = m.abs().max();
        let wts = if scale > 0.0 {
            simplex_qp(&(&m / scale))?
        } else {
            Vector::from_element(r, 1.0 / r as f64)
        };
        values.push(candidates.column(h).dot(&wts) / impact);
        weights.push(wts);
        mse.push(m);
    }
    Ok(VarAverageFit {
        values,
        weights,
        candidates,
        mse,
        impact,
    })
}

pub fn var_average_estimate(data: &Dataset, h_bar: usize) -> Result<IRFEstimate> {
    let fit = var_average_fit(data, h_bar)?;
    Ok(IRFEstimate {
        values: fit.values,
        method: Method::VarAvg,
        scheme: data.scheme,
        normalization: Normalization {
            index: VarRoles::for_dataset(data).normalization,
            impact: fit.impact,
        },
    })
}
