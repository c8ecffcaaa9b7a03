use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dgp::{DGPSpec, Policy, Scheme, SummaryStats};
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::numerics::quantile_sorted;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
pub const RESULTS_SCHEMA_VERSION: u32 = 1;
pub const RESULTS_HEADER: &str =
    "dgp_id,policy,scheme,method,horizon,mean,bias,variance,median_bias,iqr,n_ok,n_fail,scale";

/// Monte Carlo moments of one (DGP, method, horizon) cell. Moments are absent
/// when no replication succeeded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMoments {
    pub mean: Option<f64>,
    pub bias: Option<f64>,
    pub variance: Option<f64>,
    pub median_bias: Option<f64>,
    pub iqr: Option<f64>,
    pub n_ok: usize,
    pub n_fail: usize,
}

impl CellMoments {
    /// Moments of the successful draws `values` around `truth`.
    pub fn from_draws(values: &[f64], truth: f64, n_fail: usize) -> CellMoments {
        let n = values.len();
        if n == 0 {
            return CellMoments {
                mean: None,
                bias: None,
                variance: None,
                median_bias: None,
                iqr: None,
                n_ok: 0,
                n_fail,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = quantile_sorted(&sorted, 0.5);
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        CellMoments {
            mean: Some(mean),
            bias: Some(mean - truth),
            variance: Some(variance),
            median_bias: Some(median - truth),
            iqr: Some(iqr),
            n_ok: n,
            n_fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCells {
    pub method: Method,
    /// Indexed by horizon.
    pub horizons: Vec<CellMoments>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpResult {
    pub dgp_id: usize,
    pub policy: Policy,
    pub scheme: Scheme,
    pub spec: DGPSpec,
    /// Relative (unit-normalized) population responses.
    pub truth: Vec<f64>,
    /// `sqrt(mean_h truth_h^2)`.
    pub scale: f64,
    pub summary: SummaryStats,
    /// Number of discarded draws before this spec passed the DGP filter.
    pub rejected_draws: usize,
    pub methods: Vec<MethodCells>,
}

impl DgpResult {
    pub fn cells(&self, method: Method) -> Option<&[CellMoments]> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| m.horizons.as_slice())
    }
}

/// DGP that could not be processed at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortedDgp {
    pub dgp_id: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsStore {
    pub format_version: u32,
    pub config_fingerprint: String,
    pub dgps: Vec<DgpResult>,
    pub aborted: Vec<AbortedDgp>,
}

impl ResultsStore {
    pub fn new(config_fingerprint: String) -> ResultsStore {
        ResultsStore {
            format_version: CHECKPOINT_FORMAT_VERSION,
            config_fingerprint,
            dgps: Vec::new(),
            aborted: Vec::new(),
        }
    }

    pub fn is_done(&self, dgp_id: usize) -> bool {
        self.dgps.iter().any(|d| d.dgp_id == dgp_id) || self.aborted.iter().any(|a| a.dgp_id == dgp_id)
    }

    /// Flat table in results-file layout, rows ordered by DGP, method, horizon.
    pub fn table(&self) -> ResultsTable {
        let mut dgps: Vec<&DgpResult> = self.dgps.iter().collect();
        dgps.sort_by_key(|d| d.dgp_id);
        let mut rows = Vec::new();
        for d in dgps {
            for mc in &d.methods {
                for (h, c) in mc.horizons.iter().enumerate() {
                    rows.push(ResultRow {
                        dgp_id: d.dgp_id,
                        policy: d.policy,
                        scheme: d.scheme,
                        method: mc.method,
                        horizon: h,
                        mean: c.mean,
                        bias: c.bias,
                        variance: c.variance,
                        median_bias: c.median_bias,
                        iqr: c.iqr,
                        n_ok: c.n_ok,
                        n_fail: c.n_fail,
                        scale: d.scale,
                    });
                }
            }
        }
        ResultsTable { rows }
    }
}

pub fn checkpoint_write(store: &ResultsStore, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(store)
        .map_err(|e| Error::InvalidInput(format!("checkpoint serialization: {e}")))?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn checkpoint_read(path: &Path) -> Result<ResultsStore> {
    let text = std::fs::read_to_string(path)?;
    let store: ResultsStore = serde_json::from_str(&text).map_err(|e| Error::Corrupt {
        path: path.display().to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if store.format_version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Schema {
            field: "format_version".into(),
            message: format!(
                "unsupported checkpoint format {} (expected {CHECKPOINT_FORMAT_VERSION})",
                store.format_version
            ),
        });
    }
    Ok(store)
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dgp_id: usize,
    pub policy: Policy,
    pub scheme: Scheme,
    pub method: Method,
    pub horizon: usize,
    pub mean: Option<f64>,
    pub bias: Option<f64>,
    pub variance: Option<f64>,
    pub median_bias: Option<f64>,
    pub iqr: Option<f64>,
    pub n_ok: usize,
    pub n_fail: usize,
    pub scale: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultsTable {
    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        m.sort_by_key(|m| m.priority());
        m.dedup();
        m
    }

    pub fn max_horizon(&self) -> Option<usize> {
        self.rows.iter().map(|r| r.horizon).max()
    }

    pub fn dgp_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.rows.iter().map(|r| r.dgp_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn filter_policy(&self, policy: Policy) -> ResultsTable {
        ResultsTable {
            rows: self.rows.iter().filter(|r| r.policy == policy).cloned().collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# schema_version={RESULTS_SCHEMA_VERSION}\n{RESULTS_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.dgp_id,
                r.policy.as_str(),
                r.scheme.as_str(),
                r.method.as_str(),
                r.horizon,
                fmt_opt(r.mean),
                fmt_opt(r.bias),
                fmt_opt(r.variance),
                fmt_opt(r.median_bias),
                fmt_opt(r.iqr),
                r.n_ok,
                r.n_fail,
                r.scale
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ResultsTable> {
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, field: &str, msg: String| Error::Schema {
            field: field.to_string(),
            message: format!("line {}: {msg}", line + 1),
        };
        match lines.next() {
            Some((_, l)) if l.starts_with("# schema_version=") => {
                let v = l.trim_start_matches("# schema_version=").trim();
                if v != RESULTS_SCHEMA_VERSION.to_string() {
                    return Err(bad(0, "schema_version", format!("unsupported version `{v}`")));
                }
            }
            _ => return Err(bad(0, "schema_version", "missing schema version line".into())),
        }
        match lines.next() {
            Some((_, l)) if l.trim() == RESULTS_HEADER => {}
            _ => return Err(bad(1, "header", "unexpected header".into())),
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 13 {
                return Err(bad(i, "row", format!("expected 13 fields, found {}", f.len())));
            }
            let int = |k: usize, name: &str| -> Result<usize> {
                f[k].parse().map_err(|_| bad(i, name, format!("`{}` is not an integer", f[k])))
            };
            let opt = |k: usize, name: &str| -> Result<Option<f64>> {
                if f[k].is_empty() {
                    Ok(None)
                } else {
                    f[k].parse()
                        .map(Some)
                        .map_err(|_| bad(i, name, format!("`{}` is not a number", f[k])))
                }
            };
            rows.push(ResultRow {
                dgp_id: int(0, "dgp_id")?,
                policy: Policy::parse(f[1]).ok_or_else(|| bad(i, "policy", format!("`{}`", f[1])))?,
                scheme: Scheme::parse(f[2]).ok_or_else(|| bad(i, "scheme", format!("`{}`", f[2])))?,
                method: Method::parse(f[3]).ok_or_else(|| bad(i, "method", format!("`{}`", f[3])))?,
                horizon: int(4, "horizon")?,
                mean: opt(5, "mean")?,
                bias: opt(6, "bias")?,
                variance: opt(7, "variance")?,
                median_bias: opt(8, "median_bias")?,
                iqr: opt(9, "iqr")?,
                n_ok: int(10, "n_ok")?,
                n_fail: int(11, "n_fail")?,
                scale: f[12]
                    .parse()
                    .map_err(|_| bad(i, "scale", format!("`{}` is not a number", f[12])))?,
            });
        }
        Ok(ResultsTable { rows })
    }
}
