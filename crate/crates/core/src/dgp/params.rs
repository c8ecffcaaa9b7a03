use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, companion, spectral_radius, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    None,
    Monetary,
    Fiscal,
}

impl Policy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::None => "none",
            Policy::Monetary => "monetary",
            Policy::Fiscal => "fiscal",
        }
    }

    pub fn parse(s: &str) -> Option<Policy> {
        match s {
            "none" => Some(Policy::None),
            "monetary" => Some(Policy::Monetary),
            "fiscal" => Some(Policy::Fiscal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub name: String,
    pub category: u32,
    pub policy: Policy,
    #[serde(default)]
    pub output: bool,
    #[serde(default)]
    pub price: bool,
}

/// The encompassing factor model
/// `f_t = sum_l Phi_l f_{t-l} + H eps_t`, `X_t = Lambda f_t + v_t`,
/// `v_{i,t} = sum_l Delta_{i,l} v_{i,t-l} + Xi_i xi_{i,t}`.
#[derive(Debug, Clone)]
pub struct DFMParameters {
    pub n_f: usize,
    pub n_x: usize,
    pub p_f: usize,
    pub q_v: usize,
    pub phi: Vec<Matrix>,
    pub sigma_eta: Matrix,
    pub lambda: Matrix,
    /// n_X x q_v.
    pub delta: Matrix,
    pub xi: Vector,
    pub variables: Vec<VariableInfo>,
}

pub const SCHEMA_VERSION: u64 = 1;

fn schema_err(field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        field: field.to_string(),
        message: message.into(),
    }
}

fn get<'a>(obj: &'a serde_json::Map<String, Value>, field: &str) -> Result<&'a Value> {
    obj.get(field).ok_or_else(|| schema_err(field, "missing"))
}

fn as_usize(v: &Value, field: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema_err(field, "expected a nonnegative integer"))
}

fn as_f64_vec(v: &Value, field: &str, len: usize) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema_err(field, "expected a list of numbers"))?;
    if arr.len() != len {
        return Err(schema_err(field, format!("expected {len} entries, found {}", arr.len())));
    }
    arr.iter()
        .map(|x| {
            x.as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| schema_err(field, "entries must be finite numbers"))
        })
        .collect()
}

fn as_matrix(v: &Value, field: &str, rows: usize, cols: usize) -> Result<Matrix> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema_err(field, "expected a list of rows"))?;
    if arr.len() != rows {
        return Err(schema_err(field, format!("expected {rows} rows, found {}", arr.len())));
    }
    let mut m = Matrix::zeros(rows, cols);
    for (i, row) in arr.iter().enumerate() {
        let r = as_f64_vec(row, field, cols)?;
        for (j, x) in r.into_iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    Ok(m)
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl DFMParameters {
    /// Parses and validates a parameter file body.
    pub fn from_json_str(text: &str) -> Result<DFMParameters> {
        let root: Value = serde_json::from_str(text).map_err(|e| Error::Corrupt {
            path: "<parameter file>".into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let obj = root
            .as_object()
            .ok_or_else(|| schema_err("<root>", "expected an object"))?;
        let schema = as_usize(get(obj, "schema")?, "schema")?;
        if schema as u64 != SCHEMA_VERSION {
            return Err(schema_err("schema", format!("unsupported version {schema}")));
        }
        let n_f = as_usize(get(obj, "n_f")?, "n_f")?;
        let n_x = as_usize(get(obj, "n_X")?, "n_X")?;
        let p_f = as_usize(get(obj, "p_f")?, "p_f")?;
        let q_v = as_usize(get(obj, "q_v")?, "q_v")?;
        if n_f == 0 || n_x == 0 || p_f == 0 {
            return Err(schema_err("n_f", "n_f, n_X and p_f must be positive"));
        }
        let phi_v = get(obj, "Phi")?
            .as_array()
            .ok_or_else(|| schema_err("Phi", "expected a list of lag matrices"))?;
        if phi_v.len() != p_f {
            return Err(schema_err("Phi", format!("expected {p_f} lag matrices, found {}", phi_v.len())));
        }
        let phi = phi_v
            .iter()
            .map(|m| as_matrix(m, "Phi", n_f, n_f))
            .collect::<Result<Vec<_>>>()?;
        let sigma_eta = as_matrix(get(obj, "Sigma_eta")?, "Sigma_eta", n_f, n_f)?;
        let lambda = as_matrix(get(obj, "Lambda")?, "Lambda", n_x, n_f)?;
        let delta = as_matrix(get(obj, "Delta")?, "Delta", n_x, q_v)?;
        let xi = Vector::from_vec(as_f64_vec(get(obj, "Xi")?, "Xi", n_x)?);
        let variables: Vec<VariableInfo> = serde_json::from_value(get(obj, "variables")?.clone())
            .map_err(|e| schema_err("variables", e.to_string()))?;
        if variables.len() != n_x {
            return Err(schema_err(
                "variables",
                format!("expected {n_x} entries, found {}", variables.len()),
            ));
        }
        let params = DFMParameters {
            n_f,
            n_x,
            p_f,
            q_v,
            phi,
            sigma_eta,
            lambda,
            delta,
            xi,
            variables,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn to_json_string(&self) -> String {
        let value = serde_json::json!({
            "schema": SCHEMA_VERSION,
            "n_f": self.n_f,
            "n_X": self.n_x,
            "p_f": self.p_f,
            "q_v": self.q_v,
            "Phi": self.phi.iter().map(matrix_rows).collect::<Vec<_>>(),
            "Sigma_eta": matrix_rows(&self.sigma_eta),
            "Lambda": matrix_rows(&self.lambda),
            "Delta": matrix_rows(&self.delta),
            "Xi": self.xi.iter().copied().collect::<Vec<_>>(),
            "variables": self.variables,
        });
        serde_json::to_string_pretty(&value).expect("parameter serialization cannot fail")
    }

    /// Checks stationarity, positive definiteness and sign constraints.
    pub fn validate(&self) -> Result<()> {
        let radius = spectral_radius(&self.factor_companion());
        if radius >= 1.0 {
            return Err(Error::NonStationary { radius });
        }
        cholesky_lower(&self.sigma_eta).map_err(|e| schema_err("Sigma_eta", e.to_string()))?;
        if self.xi.iter().any(|x| *x < 0.0) {
            return Err(schema_err("Xi", "standard deviations must be nonnegative"));
        }
        for i in 0..self.n_x {
            let r = spectral_radius(&self.idio_companion(i));
            if r >= 1.0 {
                return Err(schema_err(
                    "Delta",
                    format!("idiosyncratic AR of variable {i} is non-stationary (radius {r:.4})"),
                ));
            }
        }
        Ok(())
    }

    pub fn factor_companion(&self) -> Matrix {
        companion(&self.phi, self.n_f)
    }

    /// Companion matrix of the scalar AR(q_v) for variable `i` (1x1 zero if q_v = 0).
    pub fn idio_companion(&self, i: usize) -> Matrix {
        let lags: Vec<Matrix> = (0..self.q_v)
            .map(|l| Matrix::from_element(1, 1, self.delta[(i, l)]))
            .collect();
        companion(&lags, 1)
    }

    pub fn policy_variable(&self, policy: Policy) -> Option<usize> {
        self.variables.iter().position(|v| v.policy == policy)
    }
}

/// Reads and validates a parameter file.
pub fn load_dfm_params(path: impl AsRef<Path>) -> Result<DFMParameters> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    DFMParameters::from_json_str(&text).map_err(|e| match e {
        Error::Corrupt {
            line,
            column,
            message,
            ..
        } => Error::Corrupt {
            path: path.display().to_string(),
            line,
            column,
            message,
        },
        other => other,
    })
}
