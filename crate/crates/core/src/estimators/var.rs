use super::{check_impact, lag_design, IRFEstimate, Method, Normalization};
use crate::dgp::{Dataset, Scheme};
use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, ols, Matrix, Vector};

/// Reduced-form VAR(p) with intercept.
#[derive(Debug, Clone)]
pub struct VARModel {
    pub intercept: Vector,
    pub lags: Vec<Matrix>,
    pub residual_cov: Matrix,
    pub cholesky: Matrix,
    pub t_eff: usize,
    pub residuals: Matrix,
}

impl VARModel {
    pub fn n(&self) -> usize {
        self.residual_cov.nrows()
    }

    pub fn p(&self) -> usize {
        self.lags.len()
    }

    /// `n x (1 + n p)` coefficient matrix `[nu, A_1, ..., A_p]`.
    pub fn coefficient_matrix(&self) -> Matrix {
        let n = self.n();
        let mut b = Matrix::zeros(n, 1 + n * self.p());
        b.set_column(0, &self.intercept);
        for (l, a) in self.lags.iter().enumerate() {
            b.view_mut((0, 1 + l * n), (n, n)).copy_from(a);
        }
        b
    }

    pub(crate) fn with_coefficients(&self, b: &Matrix) -> VARModel {
        let n = self.n();
        VARModel {
            intercept: b.column(0).into_owned(),
            lags: (0..self.p())
                .map(|l| b.view((0, 1 + l * n), (n, n)).into_owned())
                .collect(),
            ..self.clone()
        }
    }
}

/// OLS VAR(p) on observations `t = start..T` (requires `start >= p`).
pub fn var_fit_sample(w: &Matrix, p: usize, start: usize) -> Result<VARModel> {
    let (t_total, n) = w.shape();
    if p == 0 {
        return Err(Error::InvalidInput("VAR lag order must be positive".into()));
    }
    if start < p || start >= t_total {
        return Err(Error::InvalidInput("VAR estimation sample is empty".into()));
    }
    let t_eff = t_total - start;
    if t_eff <= n * p + 1 {
        return Err(Error::InsufficientSample(format!(
            "{t_eff} observations for a {n}-variable VAR({p})"
        )));
    }
    let x = lag_design(w, p, start..t_total, true);
    let y = w.rows(start, t_eff).into_owned();
    let fit = ols(&y, &x)?;
    // residual variance negligible relative to the variable's own variance
    let var_y = y.row_variance();
    if let Some(j) = (0..n).find(|&j| fit.residual_cov[(j, j)] <= 1e-12 * var_y[j]) {
        return Err(Error::NotPositiveDefinite { minor: j + 1 });
    }
    let cholesky = cholesky_lower(&fit.residual_cov)?;
    let coef = &fit.coefficients;
    Ok(VARModel {
        intercept: coef.column(0).into_owned(),
        lags: (0..p)
            .map(|l| coef.view((0, 1 + l * n), (n, n)).into_owned())
            .collect(),
        residual_cov: fit.residual_cov.clone(),
        cholesky,
        t_eff,
        residuals: fit.residuals,
    })
}

pub fn var_fit(w: &Matrix, p: usize) -> Result<VARModel> {
    var_fit_sample(w, p, p)
}

/// `Psi_0 = I`, `Psi_h = sum_l A_l Psi_{h-l}`.
pub fn reduced_form_irf(lags: &[Matrix], h_bar: usize) -> Vec<Matrix> {
    let n = lags.first().map(|a| a.nrows()).unwrap_or(0);
    let mut psi = vec![Matrix::identity(n, n)];
    for h in 1..=h_bar {
        let mut m = Matrix::zeros(n, n);
        for l in 1..=h.min(lags.len()) {
            m += &lags[l - 1] * &psi[h - l];
        }
        psi.push(m);
    }
    psi
}

/// Positions in the VAR data vector of the response, the identified
/// innovation and the normalization variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarRoles {
    pub response: usize,
    pub shock: usize,
    pub normalization: usize,
}

impl VarRoles {
    /// Shock (or instrument) ordered first for the observed-shock and IV
    /// schemes; the normalization variable's innovation for the recursive scheme.
    pub fn for_dataset(data: &Dataset) -> VarRoles {
        let shock = match data.scheme {
            Scheme::ObservedShock | Scheme::Iv => 0,
            Scheme::Recursive => data.normalization_col(),
        };
        VarRoles {
            response: data.response_col(),
            shock,
            normalization: data.normalization_col(),
        }
    }
}

/// Recursively identified responses `(Psi_h C)_{j,k} / (C)_{l,k}`.
pub fn var_irf(
    model: &VARModel,
    method: Method,
    scheme: Scheme,
    roles: VarRoles,
    h_bar: usize,
) -> Result<IRFEstimate> {
    let c = &model.cholesky;
    let impact = check_impact(c[(roles.normalization, roles.shock)])?;
    let col = c.column(roles.shock).into_owned();
    let values = reduced_form_irf(&model.lags, h_bar)
        .iter()
        .map(|psi| psi.row(roles.response).dot(&col.transpose()) / impact)
        .collect();
    Ok(IRFEstimate {
        values,
        method,
        scheme,
        normalization: Normalization {
            index: roles.normalization,
            impact,
        },
    })
}

/// Least-squares VAR on the full data vector.
pub fn var_estimate(data: &Dataset, p: usize, h_bar: usize) -> Result<IRFEstimate> {
    let model = var_fit(&data.observations, p)?;
    var_irf(&model, Method::Var, data.scheme, VarRoles::for_dataset(data), h_bar)
}

/// External-instrument SVAR: VAR in `wbar` only, rotated by the sample
/// covariance between the VAR residuals and the instrument.
pub fn svar_iv_estimate(data: &Dataset, p: usize, h_bar: usize) -> Result<IRFEstimate> {
    if !data.scheme.has_leading_column() {
        return Err(Error::InvalidInput("SVAR-IV needs an instrument column".into()));
    }
    let wbar = data.wbar();
    let model = var_fit(&wbar, p)?;
    let t_eff = model.t_eff;
    let z = data.observations.column(0).rows(p, t_eff).into_owned();
    let z_mean = z.mean();
    let u = &model.residuals;
    let gamma = Vector::from_fn(u.ncols(), |i, _| {
        u.column(i)
            .iter()
            .zip(z.iter())
            .map(|(a, b)| a * (b - z_mean))
            .sum::<f64>()
            / t_eff as f64
    });
    let psi = reduced_form_irf(&model.lags, h_bar);
    let j = data.response;
    let l = data.normalization;
    let impact = check_impact((&psi[0] * &gamma)[l])?;
    let values = psi.iter().map(|m| (m * &gamma)[j] / impact).collect();
    Ok(IRFEstimate {
        values,
        method: Method::SvarIv,
        scheme: data.scheme,
        normalization: Normalization {
            index: data.normalization_col(),
            impact,
        },
    })
}
