use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::store::{ResultRow, ResultsTable};
use crate::estimators::Method;
use crate::numerics::{quantile_sorted, Matrix};

/// `omega * bias^2 + (1 - omega) * variance`.
pub fn loss(bias: f64, variance: f64, omega: f64) -> f64 {
    omega * bias * bias + (1.0 - omega) * variance
}

/// Relative tolerance below which two average losses count as tied.
pub const TIE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    AbsBias,
    Std,
    AbsMedianBias,
    Iqr,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::AbsBias,
        Statistic::Std,
        Statistic::AbsMedianBias,
        Statistic::Iqr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Statistic::AbsBias => "abs_bias",
            Statistic::Std => "std",
            Statistic::AbsMedianBias => "abs_median_bias",
            Statistic::Iqr => "iqr",
        }
    }

    /// Statistic of a row divided by the DGP's scale.
    fn normalized(&self, r: &ResultRow) -> Option<f64> {
        let raw = match self {
            Statistic::AbsBias => r.bias.map(f64::abs),
            Statistic::Std => r.variance.map(f64::sqrt),
            Statistic::AbsMedianBias => r.median_bias.map(f64::abs),
            Statistic::Iqr => r.iqr,
        }?;
        Some(raw / r.scale)
    }
}

fn usable(r: &ResultRow) -> bool {
    if r.scale > 0.0 && r.scale.is_finite() {
        true
    } else {
        log::warn!("DGP {} has zero normalization scale; excluded", r.dgp_id);
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub method: Method,
    pub horizon: usize,
    /// Median across DGPs, absent when no DGP contributed.
    pub value: Option<f64>,
    pub n_dgps: usize,
}

/// Cross-DGP median of the scale-normalized statistic for each method and horizon.
pub fn aggregate_curves(table: &ResultsTable, stat: Statistic) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for r in table.rows.iter().filter(|r| usable(r)) {
        let entry = groups.entry((r.method.priority(), r.horizon)).or_default();
        if let Some(v) = stat.normalized(r) {
            entry.push(v);
        }
    }
    groups
        .into_iter()
        .map(|((m, h), mut v)| {
            v.sort_by(f64::total_cmp);
            CurvePoint {
                method: Method::ALL[m],
                horizon: h,
                value: (!v.is_empty()).then(|| quantile_sorted(&v, 0.5)),
                n_dgps: v.len(),
            }
        })
        .collect()
}

/// Normalized (bias, variance) per DGP for one method and horizon.
fn normalized_moments(table: &ResultsTable, method: Method) -> BTreeMap<(usize, usize), (f64, f64)> {
    table
        .rows
        .iter()
        .filter(|r| r.method == method && usable(r))
        .filter_map(|r| {
            let b = r.bias? / r.scale;
            let v = r.variance? / (r.scale * r.scale);
            Some(((r.dgp_id, r.horizon), (b, v)))
        })
        .collect()
}

/// Share of DGPs on which method `a` has strictly lower normalized loss than
/// `b`, for each horizon (rows) and weight (columns). Ties count for `b`.
pub fn headtohead_map(table: &ResultsTable, a: Method, b: Method, omega_grid: &[f64]) -> Matrix {
    let n_h = table.max_horizon().map_or(0, |h| h + 1);
    let ma = normalized_moments(table, a);
    let mb = normalized_moments(table, b);
    let mut wins = Matrix::zeros(n_h, omega_grid.len());
    let mut counts = vec![0usize; n_h];
    for (&(dgp, h), &(ba, va)) in &ma {
        let Some(&(bb, vb)) = mb.get(&(dgp, h)) else {
            continue;
        };
        counts[h] += 1;
        for (k, &w) in omega_grid.iter().enumerate() {
            if loss(ba, va, w) < loss(bb, vb, w) {
                wins[(h, k)] += 1.0;
            }
        }
    }
    for (h, &c) in counts.iter().enumerate() {
        if c > 0 {
            for k in 0..omega_grid.len() {
                wins[(h, k)] /= c as f64;
            }
        }
    }
    wins
}

/// Method with the lowest cross-DGP average normalized loss per horizon and
/// weight. Near-ties (relative `TIE_TOLERANCE`) go to the method earlier in
/// the fixed priority order.
pub fn best_method_map(table: &ResultsTable, omega_grid: &[f64]) -> Vec<Vec<Method>> {
    let methods = table.methods();
    let n_h = table.max_horizon().map_or(0, |h| h + 1);
    let moments: Vec<_> = methods.iter().map(|&m| normalized_moments(table, m)).collect();
    let mut out = Vec::with_capacity(n_h);
    for h in 0..n_h {
        let mut row = Vec::with_capacity(omega_grid.len());
        for &w in omega_grid {
            let mut best: Option<(Method, f64)> = None;
            for (m, mom) in methods.iter().zip(&moments) {
                let losses: Vec<f64> = mom
                    .iter()
                    .filter(|((_, hh), _)| *hh == h)
                    .map(|(_, &(b, v))| loss(b, v, w))
                    .collect();
                if losses.is_empty() {
                    continue;
                }
                let avg = losses.iter().sum::<f64>() / losses.len() as f64;
                best = match best {
                    None => Some((*m, avg)),
                    Some((bm, bl)) => {
                        if avg < bl - TIE_TOLERANCE * bl.abs().max(avg.abs()) {
                            Some((*m, avg))
                        } else {
                            Some((bm, bl))
                        }
                    }
                };
            }
            row.push(best.map_or(methods[0], |(m, _)| m));
        }
        out.push(row);
    }
    out
}

fn omega_header(omega_grid: &[f64]) -> String {
    let mut s = String::from("horizon");
    for w in omega_grid {
        let _ = write!(s, ",{w}");
    }
    s.push('\n');
    s
}

/// Horizon-by-weight matrix as CSV.
pub fn map_to_csv(map: &Matrix, omega_grid: &[f64]) -> String {
    let mut s = omega_header(omega_grid);
    for h in 0..map.nrows() {
        let _ = write!(s, "{h}");
        for k in 0..map.ncols() {
            let _ = write!(s, ",{}", map[(h, k)]);
        }
        s.push('\n');
    }
    s
}

pub fn method_map_to_csv(map: &[Vec<Method>], omega_grid: &[f64]) -> String {
    let mut s = omega_header(omega_grid);
    for (h, row) in map.iter().enumerate() {
        let _ = write!(s, "{h}");
        for m in row {
            let _ = write!(s, ",{}", m.as_str());
        }
        s.push('\n');
    }
    s
}

pub fn curves_to_csv(points: &[CurvePoint]) -> String {
    let mut s = String::from("method,horizon,value,n_dgps\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            p.method.as_str(),
            p.horizon,
            p.value.map(|v| v.to_string()).unwrap_or_default(),
            p.n_dgps
        );
    }
    s
}
