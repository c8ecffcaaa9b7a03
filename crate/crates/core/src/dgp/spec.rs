use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{DFMParameters, Policy};
use super::population::build_shock_column;
use crate::error::{Error, Result};
use crate::numerics::Vector;

/// Identification scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ObservedShock,
    Iv,
    Recursive,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::ObservedShock => "observed_shock",
            Scheme::Iv => "iv",
            Scheme::Recursive => "recursive",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "observed_shock" | "observed" => Some(Scheme::ObservedShock),
            "iv" => Some(Scheme::Iv),
            "recursive" => Some(Scheme::Recursive),
            _ => None,
        }
    }

    /// Whether a shock or instrument column is prepended to the observables.
    pub fn has_leading_column(&self) -> bool {
        !matches!(self, Scheme::Recursive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvParams {
    pub rho_z: f64,
    pub sigma_nu2: f64,
}

impl Default for IvParams {
    fn default() -> Self {
        IvParams {
            rho_z: 0.1,
            sigma_nu2: 1.0,
        }
    }
}

/// Maps a target first-stage R^2 to the instrument noise variance `1/R^2 - 1`.
pub fn calibrate_iv_noise(r2: f64) -> Result<f64> {
    if !(r2 > 0.0 && r2 <= 1.0) {
        return Err(Error::InvalidInput(format!("IV R^2 must lie in (0, 1], got {r2}")));
    }
    Ok(1.0 / r2 - 1.0)
}

/// One drawn DGP: a subset of observables plus the estimand definition.
///
/// `variable_indices` index rows of `Lambda` and are stored in the ordering
/// used by the recursive scheme. `response`, `normalization` and `innovation`
/// are positions within that ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DGPSpec {
    pub policy: Policy,
    pub scheme: Scheme,
    pub variable_indices: Vec<usize>,
    pub response: usize,
    pub normalization: usize,
    pub innovation: usize,
    pub h_col1: Vec<f64>,
    pub iv: IvParams,
}

impl DGPSpec {
    /// Builds a spec with the impact-maximizing shock column for the
    /// normalization variable. The innovation variable is the normalization
    /// variable.
    pub fn new(
        params: &DFMParameters,
        variable_indices: Vec<usize>,
        response: usize,
        normalization: usize,
        scheme: Scheme,
        iv: IvParams,
    ) -> Result<DGPSpec> {
        let n = variable_indices.len();
        if n == 0 || response >= n || normalization >= n {
            return Err(Error::InvalidInput("response/normalization position out of range".into()));
        }
        if variable_indices.iter().any(|&i| i >= params.n_x) {
            return Err(Error::InvalidInput("variable index out of range".into()));
        }
        let mut sorted = variable_indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::InvalidInput("variable indices must be distinct".into()));
        }
        let h1 = build_shock_column(params, variable_indices[normalization])?;
        let policy = params.variables[variable_indices[normalization]].policy;
        Ok(DGPSpec {
            policy,
            scheme,
            variable_indices,
            response,
            normalization,
            innovation: normalization,
            h_col1: h1.iter().copied().collect(),
            iv,
        })
    }

    pub fn n_w(&self) -> usize {
        self.variable_indices.len()
    }

    pub fn h_col1(&self) -> Vector {
        Vector::from_vec(self.h_col1.clone())
    }

    pub fn with_scheme(&self, scheme: Scheme) -> DGPSpec {
        DGPSpec {
            scheme,
            ..self.clone()
        }
    }
}

const MAX_REDRAWS: usize = 100;
const MIN_IMPACT: f64 = 1e-6;

fn pick<R: Rng + ?Sized>(pool: &[usize], rng: &mut R, what: &str) -> Result<usize> {
    pool.choose(rng)
        .copied()
        .ok_or_else(|| Error::CategoryExhausted(what.to_string()))
}

/// Draws five observables: the policy variable, one output series, one price
/// series and two further series, with the response chosen among the four
/// non-policy series. The policy variable is ordered last (monetary) or first
/// (fiscal).
pub fn draw_dgp_spec<R: Rng + ?Sized>(
    params: &DFMParameters,
    policy: Policy,
    scheme: Scheme,
    iv_r2: f64,
    rng: &mut R,
) -> Result<DGPSpec> {
    if policy == Policy::None {
        return Err(Error::InvalidInput("policy must be monetary or fiscal".into()));
    }
    let policy_vars: Vec<usize> = (0..params.n_x)
        .filter(|&i| params.variables[i].policy == policy)
        .collect();
    if policy_vars.is_empty() {
        return Err(Error::CategoryExhausted(format!("no {} policy variable", policy.as_str())));
    }
    let iv = IvParams {
        rho_z: 0.1,
        sigma_nu2: calibrate_iv_noise(iv_r2)?,
    };
    let mut last_err = None;
    for _ in 0..MAX_REDRAWS {
        let pol = pick(&policy_vars, rng, "policy")?;
        let outputs: Vec<usize> = (0..params.n_x)
            .filter(|&i| i != pol && params.variables[i].output)
            .collect();
        let out = pick(&outputs, rng, "output series")?;
        let prices: Vec<usize> = (0..params.n_x)
            .filter(|&i| i != pol && i != out && params.variables[i].price)
            .collect();
        let price = pick(&prices, rng, "price series")?;
        let rest: Vec<usize> = (0..params.n_x)
            .filter(|&i| i != pol && i != out && i != price)
            .collect();
        if rest.len() < 2 {
            return Err(Error::CategoryExhausted("fewer than two remaining series".into()));
        }
        let extra: Vec<usize> = rest.choose_multiple(rng, 2).copied().collect();
        let mut others = vec![out, price, extra[0], extra[1]];
        others.shuffle(rng);
        let response_var = others[rng.random_range(0..4)];
        let ordering: Vec<usize> = match policy {
            Policy::Fiscal => std::iter::once(pol).chain(others.iter().copied()).collect(),
            _ => others.iter().copied().chain(std::iter::once(pol)).collect(),
        };
        let normalization = ordering.iter().position(|&i| i == pol).unwrap();
        let response = ordering.iter().position(|&i| i == response_var).unwrap();
        match DGPSpec::new(params, ordering, response, normalization, scheme, iv) {
            Ok(spec) => {
                let impact = super::population::normalization_impact(params, &spec);
                if impact >= MIN_IMPACT {
                    return Ok(spec);
                }
                last_err = Some(Error::WeakNormalization { impact });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::InvalidInput("spec draw failed".into())))
}
