use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dgp::{Policy, Scheme, DEFAULT_BURN_IN};
use crate::error::{Error, Result};
use crate::estimators::{default_lambda_grid, BvarPrior, EstimatorSettings, Method};

/// How the estimation lag length is chosen in each replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagRule {
    /// Always `p`.
    #[default]
    Fixed,
    /// `max(p_aic, p)` with the AIC searched over `1..=p_max_aic`.
    AicFloor,
}

/// Restrictions on drawn DGPs. A draw that violates them is discarded and
/// redrawn from the same stream.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpFilter {
    pub min_lag_tail_fraction: Option<f64>,
    pub max_invertibility: Option<f64>,
}

impl DgpFilter {
    pub fn is_active(&self) -> bool {
        self.min_lag_tail_fraction.is_some() || self.max_invertibility.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Policies assigned to DGPs in rotation (`dgp_id mod len`).
    pub policies: Vec<Policy>,
    pub scheme: Scheme,
    pub n_dgps: usize,
    pub t: usize,
    pub n_mc: usize,
    pub burn_in: usize,
    pub p: usize,
    pub lag_rule: LagRule,
    pub p_max_aic: usize,
    pub h_bar: usize,
    pub methods: Vec<Method>,
    pub lambda_grid: Vec<f64>,
    pub n_folds: usize,
    pub omega_grid: Vec<f64>,
    /// Method pairs `[a, b]` for head-to-head maps; empty means every pair of
    /// configured methods in listed order.
    pub headtohead: Vec<[Method; 2]>,
    pub iv_r2_monetary: f64,
    pub iv_r2_fiscal: f64,
    pub filter: DgpFilter,
    pub max_filter_draws: usize,
    pub prior: BvarPrior,
    /// DFM parameter file; the bundled synthetic calibration when absent.
    pub params_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub workers: usize,
    /// Also emit curves and maps separately for each policy.
    pub per_policy: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 1,
            policies: vec![Policy::Monetary, Policy::Fiscal],
            scheme: Scheme::ObservedShock,
            n_dgps: 100,
            t: 200,
            n_mc: 500,
            burn_in: DEFAULT_BURN_IN,
            p: 4,
            lag_rule: LagRule::Fixed,
            p_max_aic: 8,
            h_bar: 19,
            methods: vec![Method::Var, Method::Lp],
            lambda_grid: default_lambda_grid(),
            n_folds: 5,
            omega_grid: (0..=100).map(|i| i as f64 / 100.0).collect(),
            headtohead: Vec::new(),
            iv_r2_monetary: 0.3,
            iv_r2_fiscal: 0.2,
            filter: DgpFilter::default(),
            max_filter_draws: 1000,
            prior: BvarPrior::default(),
            params_path: None,
            output_dir: PathBuf::from("irflab-out"),
            workers: 1,
            per_policy: false,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mc < 2 {
            return Err(config_err("n_mc must be at least 2"));
        }
        if self.n_dgps == 0 {
            return Err(config_err("n_dgps must be positive"));
        }
        if self.policies.is_empty() || self.policies.contains(&Policy::None) {
            return Err(config_err("policies must be a nonempty list of monetary/fiscal"));
        }
        if self.methods.is_empty() {
            return Err(config_err("at least one method is required"));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(config_err("methods must not repeat"));
        }
        if self.methods.contains(&Method::SvarIv) && self.scheme != Scheme::Iv {
            return Err(config_err("svar_iv requires scheme = \"iv\""));
        }
        if self.omega_grid.is_empty() || self.omega_grid.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(config_err("omega_grid must be a nonempty subset of [0, 1]"));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l >= 0.0)) {
            return Err(config_err("lambda_grid must be nonempty and nonnegative"));
        }
        if self.p == 0 || self.n_folds < 2 {
            return Err(config_err("p must be positive and n_folds at least 2"));
        }
        if self.methods.contains(&Method::PenLp) && self.h_bar < 3 {
            return Err(config_err("pen_lp needs h_bar >= 3"));
        }
        if self.lag_rule == LagRule::AicFloor && self.p_max_aic == 0 {
            return Err(config_err("p_max_aic must be positive"));
        }
        if self.t < 50 {
            return Err(config_err("t must be at least 50"));
        }
        for r2 in [self.iv_r2_monetary, self.iv_r2_fiscal] {
            if !(r2 > 0.0 && r2 <= 1.0) {
                return Err(config_err("IV R^2 targets must lie in (0, 1]"));
            }
        }
        for [a, b] in &self.headtohead {
            if !self.methods.contains(a) || !self.methods.contains(b) {
                return Err(config_err(format!(
                    "head-to-head pair {}/{} uses an unconfigured method",
                    a.as_str(),
                    b.as_str()
                )));
            }
        }
        if self.filter.is_active() && self.max_filter_draws == 0 {
            return Err(config_err("max_filter_draws must be positive"));
        }
        Ok(())
    }

    pub fn policy_for(&self, dgp_id: usize) -> Policy {
        self.policies[dgp_id % self.policies.len()]
    }

    pub fn iv_r2(&self, policy: Policy) -> f64 {
        match policy {
            Policy::Fiscal => self.iv_r2_fiscal,
            _ => self.iv_r2_monetary,
        }
    }

    pub fn estimator_settings(&self) -> EstimatorSettings {
        EstimatorSettings {
            p: self.p,
            h_bar: self.h_bar,
            lambda_grid: self.lambda_grid.clone(),
            n_folds: self.n_folds,
            prior: self.prior.clone(),
        }
    }

    pub fn headtohead_pairs(&self) -> Vec<(Method, Method)> {
        if !self.headtohead.is_empty() {
            return self.headtohead.iter().map(|[a, b]| (*a, *b)).collect();
        }
        let m = &self.methods;
        let mut pairs = Vec::new();
        for i in 0..m.len() {
            for j in (i + 1)..m.len() {
                pairs.push((m[i], m[j]));
            }
        }
        pairs
    }

    /// Serialized form of every setting that affects results (worker count
    /// and output location excluded). Used to guard checkpoint resumption.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.workers = 0;
        c.output_dir = PathBuf::new();
        serde_json::to_string(&c).expect("config serializes")
    }

    /// Parses TOML text, applies `key=value` overrides (dotted keys address
    /// nested tables), and validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_err(format!("invalid TOML: {e}")))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `a.b.c=value` in a TOML table. Values are parsed as TOML and fall
/// back to a bare string.
pub fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| config_err(format!("override `{ov}` is not KEY=VALUE")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("override `{ov}` has an empty key")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("override `{ov}`: `{part}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}
