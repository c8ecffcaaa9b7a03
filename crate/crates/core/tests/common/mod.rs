#![allow(dead_code)]

use irflab::dgp::{DFMParameters, DGPSpec, IvParams, Policy, Scheme, VariableInfo};
use irflab::numerics::{Matrix, Vector};

pub fn variable(name: &str, policy: Policy, output: bool, price: bool) -> VariableInfo {
    VariableInfo {
        name: name.to_string(),
        category: 1,
        policy,
        output,
        price,
    }
}

/// Generic factor model with no idiosyncratic dynamics unless `delta` is given.
pub fn dfm(
    phi: Vec<Matrix>,
    sigma_eta: Matrix,
    lambda: Matrix,
    xi: Vec<f64>,
    delta: Option<Matrix>,
) -> DFMParameters {
    let n_f = sigma_eta.nrows();
    let n_x = lambda.nrows();
    let delta = delta.unwrap_or_else(|| Matrix::zeros(n_x, 0));
    let variables = (0..n_x)
        .map(|i| {
            let policy = if i + 1 == n_x { Policy::Monetary } else { Policy::None };
            variable(&format!("x{i}"), policy, i == 0, i == 1)
        })
        .collect();
    DFMParameters {
        n_f,
        n_x,
        p_f: phi.len(),
        q_v: delta.ncols(),
        phi,
        sigma_eta,
        lambda,
        delta,
        xi: Vector::from_vec(xi),
        variables,
    }
}

/// Scalar factor `f_t = rho f_{t-1} + sigma eps_t` observed through one series
/// with loading one and idiosyncratic standard deviation `xi`.
pub fn scalar_dfm(rho: f64, sigma: f64, xi: f64) -> DFMParameters {
    dfm(
        vec![Matrix::from_element(1, 1, rho)],
        Matrix::from_element(1, 1, sigma * sigma),
        Matrix::from_element(1, 1, 1.0),
        vec![xi],
        None,
    )
}

/// Three factors with two lags, three observables without measurement error
/// and a square, nonsingular loading matrix. The policy variable (index 2) is
/// ordered last and the other two rows are orthogonal to its loading, so the
/// policy shock has no impact on the earlier-ordered series.
pub fn invertible_dfm() -> DFMParameters {
    let phi1 = Matrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, -0.1, 0.4, 0.2, 0.05, 0.0, 0.3]);
    let phi2 = Matrix::from_row_slice(3, 3, &[0.1, 0.0, 0.05, 0.0, -0.1, 0.0, 0.0, 0.1, 0.1]);
    let policy_row = Vector::from_vec(vec![1.0, 0.5, -0.3]);
    let project = |v: Vector| -> Vector {
        let c = v.dot(&policy_row) / policy_row.norm_squared();
        v - &policy_row * c
    };
    let r0 = project(Vector::from_vec(vec![0.2, 1.0, 0.4]));
    let r1 = project(Vector::from_vec(vec![-0.5, 0.3, 1.0]));
    let lambda = Matrix::from_rows(&[r0.transpose(), r1.transpose(), policy_row.transpose()]);
    dfm(vec![phi1, phi2], Matrix::identity(3, 3), lambda, vec![0.0; 3], None)
}

pub fn spec_for(params: &DFMParameters, indices: Vec<usize>, response: usize, normalization: usize, scheme: Scheme) -> DGPSpec {
    DGPSpec::new(
        params,
        indices,
        response,
        normalization,
        scheme,
        IvParams {
            rho_z: 0.0,
            sigma_nu2: 1.0,
        },
    )
    .unwrap()
}

/// Autocovariances `Gamma(k) = E[w_t w_{t-k}']` of the selected observables for
/// `k = 0..=max_lag`, computed from factor and idiosyncratic autocovariances.
pub fn observable_autocov(params: &DFMParameters, indices: &[usize], max_lag: usize) -> Vec<Matrix> {
    let n_f = params.n_f;
    let p = params.p_f;
    let k = n_f * p;
    let mut comp = Matrix::zeros(k, k);
    for (l, phi) in params.phi.iter().enumerate() {
        comp.view_mut((0, l * n_f), (n_f, n_f)).copy_from(phi);
    }
    for i in n_f..k {
        comp[(i, i - n_f)] = 1.0;
    }
    let mut q = Matrix::zeros(k, k);
    q.view_mut((0, 0), (n_f, n_f)).copy_from(&params.sigma_eta);
    // vec(S) = (I - F kron F)^{-1} vec(Q)
    let big = Matrix::identity(k * k, k * k) - comp.kronecker(&comp);
    let vs = big.lu().solve(&Vector::from_column_slice(q.as_slice())).unwrap();
    let s0 = Matrix::from_column_slice(k, k, vs.as_slice());

    let lb = Matrix::from_fn(indices.len(), n_f, |r, c| params.lambda[(indices[r], c)]);
    // idiosyncratic autocovariances by direct MA(inf) summation
    let idio: Vec<Vec<f64>> = indices
        .iter()
        .map(|&i| {
            let q = params.q_v;
            let mut psi = vec![1.0f64];
            for j in 1..4000 {
                let mut v = 0.0;
                for l in 1..=q.min(j) {
                    v += params.delta[(i, l - 1)] * psi[j - l];
                }
                psi.push(v);
            }
            let s2 = params.xi[i] * params.xi[i];
            (0..=max_lag)
                .map(|kk| s2 * (0..psi.len() - kk).map(|j| psi[j] * psi[j + kk]).sum::<f64>())
                .collect()
        })
        .collect();

    let mut out = Vec::with_capacity(max_lag + 1);
    let mut fk = Matrix::identity(k, k);
    for lag in 0..=max_lag {
        let g = (&fk * &s0).view((0, 0), (n_f, n_f)).into_owned();
        let mut gw = &lb * g * lb.transpose();
        for r in 0..indices.len() {
            gw[(r, r)] += idio[r][lag];
        }
        out.push(gw);
        fk = &comp * fk;
    }
    out
}

/// Covariance matrix of the stacked vector `(w_t', w_{t-1}', ..., w_{t-L}')'`.
pub fn stacked_cov(gamma: &[Matrix], lags: usize) -> Matrix {
    let n = gamma[0].nrows();
    let mut v = Matrix::zeros(n * (lags + 1), n * (lags + 1));
    for i in 0..=lags {
        for j in 0..=lags {
            let block = if i <= j {
                gamma[j - i].clone()
            } else {
                gamma[i - j].transpose()
            };
            v.view_mut((i * n, j * n), (n, n)).copy_from(&block);
        }
    }
    v
}
