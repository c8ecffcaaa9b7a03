use rand::Rng;
use rand_distr::StandardNormal;

use super::params::DFMParameters;
use super::population::complete_h;
use super::spec::{DGPSpec, Scheme};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Simulated observations for one replication.
///
/// Columns are `(eps_1 or z, wbar)` for the observed-shock and IV schemes and
/// `wbar` for the recursive scheme. `response` and `normalization` are
/// positions within `wbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: Matrix,
    pub scheme: Scheme,
    pub labels: Vec<String>,
    pub response: usize,
    pub normalization: usize,
}

impl Dataset {
    pub fn new(observations: Matrix, scheme: Scheme, response: usize, normalization: usize) -> Result<Dataset> {
        let offset = usize::from(scheme.has_leading_column());
        let n_w = observations.ncols().checked_sub(offset).unwrap_or(0);
        if n_w == 0 || response >= n_w || normalization >= n_w {
            return Err(Error::InvalidInput("dataset roles out of range".into()));
        }
        if observations.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset contains non-finite values".into()));
        }
        let mut labels = Vec::with_capacity(observations.ncols());
        match scheme {
            Scheme::ObservedShock => labels.push("shock".to_string()),
            Scheme::Iv => labels.push("iv".to_string()),
            Scheme::Recursive => {}
        }
        labels.extend((0..n_w).map(|i| format!("w{i}")));
        Ok(Dataset {
            observations,
            scheme,
            labels,
            response,
            normalization,
        })
    }

    pub fn nobs(&self) -> usize {
        self.observations.nrows()
    }

    /// Column offset of the `wbar` block.
    pub fn offset(&self) -> usize {
        usize::from(self.scheme.has_leading_column())
    }

    pub fn response_col(&self) -> usize {
        self.offset() + self.response
    }

    pub fn normalization_col(&self) -> usize {
        self.offset() + self.normalization
    }

    pub fn n_w(&self) -> usize {
        self.observations.ncols() - self.offset()
    }

    /// The observables without the leading shock/instrument column.
    pub fn wbar(&self) -> Matrix {
        self.observations
            .columns(self.offset(), self.n_w())
            .into_owned()
    }
}

pub const DEFAULT_BURN_IN: usize = 100;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Simulates `T` periods after discarding `burn_in` periods started from zero.
///
/// Per period the draws are consumed in a fixed order: the `n_f` structural
/// shocks, one idiosyncratic innovation per selected observable, then the
/// instrument noise (IV scheme only).
pub fn simulate_data<R: Rng + ?Sized>(
    params: &DFMParameters,
    spec: &DGPSpec,
    t: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if t < 50 {
        return Err(Error::InvalidInput(format!("sample size {t} is below the minimum of 50")));
    }
    let n_f = params.n_f;
    let n_w = spec.n_w();
    let h = complete_h(params, &spec.h_col1())?;
    let p = params.p_f;
    let q = params.q_v;
    let total = t + burn_in;
    let offset = usize::from(spec.scheme.has_leading_column());
    let mut obs = Matrix::zeros(t, n_w + offset);

    let mut f_hist: Vec<Vector> = vec![Vector::zeros(n_f); p];
    let mut v_hist: Vec<Vector> = vec![Vector::zeros(n_w); q.max(1)];
    let mut z_prev = 0.0;
    let sd_nu = spec.iv.sigma_nu2.sqrt();
    let mut eps = Vector::zeros(n_f);

    for s in 0..total {
        for e in eps.iter_mut() {
            *e = normal(rng);
        }
        let mut f = &h * &eps;
        for (l, phi) in params.phi.iter().enumerate() {
            f += phi * &f_hist[l];
        }
        let mut v = Vector::zeros(n_w);
        for (r, &i) in spec.variable_indices.iter().enumerate() {
            let mut x = params.xi[i] * normal(rng);
            for l in 0..q {
                x += params.delta[(i, l)] * v_hist[l][r];
            }
            v[r] = x;
        }
        let lead = match spec.scheme {
            Scheme::ObservedShock => eps[0],
            Scheme::Iv => {
                let z = spec.iv.rho_z * z_prev + eps[0] + sd_nu * normal(rng);
                z_prev = z;
                z
            }
            Scheme::Recursive => 0.0,
        };
        if s >= burn_in {
            let row = s - burn_in;
            if offset == 1 {
                obs[(row, 0)] = lead;
            }
            for (r, &i) in spec.variable_indices.iter().enumerate() {
                obs[(row, offset + r)] = params.lambda.row(i).transpose().dot(&f) + v[r];
            }
        }
        f_hist.rotate_right(1);
        f_hist[0] = f;
        if q > 0 {
            v_hist.rotate_right(1);
            v_hist[0] = v;
        }
    }
    Dataset::new(obs, spec.scheme, spec.response, spec.normalization)
}
