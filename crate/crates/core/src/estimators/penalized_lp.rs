use nalgebra::SVD;

use super::lp::{lp_design, lp_impact, lp_layout};
use super::{IRFEstimate, Method, Normalization};
use crate::dgp::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{bspline_basis, ols, Matrix, Vector};

/// `0` followed by 20 log-spaced points from 1e-3 to 1e5.
pub fn default_lambda_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..20).map(|i| 10f64.powf(-3.0 + 8.0 * i as f64 / 19.0)))
        .collect()
}

/// Third-difference operator, `(K-3) x K`.
pub fn third_difference(k: usize) -> Matrix {
    let mut d = Matrix::zeros(k.saturating_sub(3), k);
    for r in 0..k.saturating_sub(3) {
        d[(r, r)] = -1.0;
        d[(r, r + 1)] = 3.0;
        d[(r, r + 2)] = -3.0;
        d[(r, r + 3)] = 1.0;
    }
    d
}

/// Sufficient statistics of the horizon-by-horizon partialled-out regressions:
/// `sum x~^2`, `sum x~ y~`, `sum y~^2` per horizon.
#[derive(Debug, Clone)]
struct Moments {
    sxx: Vec<f64>,
    sxy: Vec<f64>,
    syy: Vec<f64>,
}

impl Moments {
    fn zeros(n: usize) -> Moments {
        Moments {
            sxx: vec![0.0; n],
            sxy: vec![0.0; n],
            syy: vec![0.0; n],
        }
    }

    /// Penalty scale: the average residualized impulse variation, which makes
    /// lambda invariant to the units of the response and the impulse.
    fn penalty_scale(&self) -> f64 {
        self.sxx.iter().sum::<f64>() / self.sxx.len() as f64
    }

    fn sse(&self, beta: &Vector) -> f64 {
        (0..self.sxx.len())
            .map(|h| self.syy[h] - 2.0 * beta[h] * self.sxy[h] + beta[h] * beta[h] * self.sxx[h])
            .sum()
    }
}

/// Penalized LP fit with the cross-validation record.
#[derive(Debug, Clone)]
pub struct PenalizedLpFit {
    pub basis: Matrix,
    pub penalty: Matrix,
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
    pub cv_scores: Vec<f64>,
    pub coefficients: Vector,
    /// Un-normalized responses `B b`.
    pub beta: Vector,
    /// LS-LP impact on the normalization variable.
    pub impact: f64,
    full: Moments,
}

impl PenalizedLpFit {
    /// Penalized least-squares objective on the full sample,
    /// `SSR + lambda * s * |D b|^2` with `s` the mean of `sum x~^2` over horizons.
    pub fn objective(&self, b: &Vector, lambda: f64) -> f64 {
        let beta = &self.basis * b;
        let db = &self.penalty * b;
        self.full.sse(&beta) + lambda * self.full.penalty_scale() * db.norm_squared()
    }

    /// Horizon-by-horizon LS responses (un-normalized).
    pub fn ls_beta(&self) -> Vector {
        Vector::from_fn(self.full.sxx.len(), |h, _| self.full.sxy[h] / self.full.sxx[h])
    }

    pub fn values(&self) -> Vec<f64> {
        self.beta.iter().map(|b| b / self.impact).collect()
    }
}

fn solve_spline(basis: &Matrix, penalty: &Matrix, m: &Moments, lambda: f64) -> Result<Vector> {
    let w = Vector::from_vec(m.sxx.clone());
    let bw = basis.transpose() * Matrix::from_diagonal(&w);
    let lhs = &bw * basis + penalty.transpose() * penalty * (lambda * m.penalty_scale());
    let rhs = basis.transpose() * Vector::from_vec(m.sxy.clone());
    let svd = SVD::new(lhs, true, true);
    let tol = 1e-12 * svd.singular_values.max();
    svd.solve(&rhs, tol)
        .map_err(|e| Error::InvalidInput(format!("penalized LP solve: {e}")))
}

/// Partials out controls within `fit_rows` and accumulates moments on
/// `fit_rows` (in-sample) and `eval_rows` (out-of-sample, using the in-sample
/// control coefficients).
fn partial_moments(
    y: &Matrix,
    x: &Matrix,
    fit_rows: &[usize],
    eval_rows: &[usize],
) -> Result<((f64, f64, f64), (f64, f64, f64))> {
    let k = x.ncols();
    let controls: Vec<usize> = (0..k).filter(|&c| c != 1).collect();
    let pick = |rows: &[usize]| -> (Matrix, Matrix) {
        let w = Matrix::from_fn(rows.len(), controls.len(), |r, c| x[(rows[r], controls[c])]);
        let yx = Matrix::from_fn(rows.len(), 2, |r, c| {
            if c == 0 {
                y[(rows[r], 0)]
            } else {
                x[(rows[r], 1)]
            }
        });
        (w, yx)
    };
    let (w_fit, yx_fit) = pick(fit_rows);
    let fit = ols(&yx_fit, &w_fit)?;
    let e = &fit.residuals;
    let ins = (
        e.column(1).norm_squared(),
        e.column(1).dot(&e.column(0)),
        e.column(0).norm_squared(),
    );
    let oos = if eval_rows.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let (w_ev, yx_ev) = pick(eval_rows);
        let e_ev = yx_ev - w_ev * fit.coefficients.transpose();
        (
            e_ev.column(1).norm_squared(),
            e_ev.column(1).dot(&e_ev.column(0)),
            e_ev.column(0).norm_squared(),
        )
    };
    Ok((ins, oos))
}

/// Fits the spline-penalized LP with lambda chosen by contiguous-block
/// cross-validation (guard band of `h_bar + p` observations around each
/// held-out block).
pub fn penalized_lp_fit(
    data: &Dataset,
    p: usize,
    h_bar: usize,
    lambda_grid: &[f64],
    n_folds: usize,
) -> Result<PenalizedLpFit> {
    if lambda_grid.is_empty() || lambda_grid.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidInput("lambda grid must be nonempty and nonnegative".into()));
    }
    if n_folds < 2 {
        return Err(Error::InvalidInput("need at least two folds".into()));
    }
    let basis = bspline_basis(h_bar, 3)?;
    let penalty = third_difference(basis.ncols());
    let (impulse, contemp) = lp_layout(data);
    let w = &data.observations;
    let t_total = w.nrows();
    let n_h = h_bar + 1;

    let designs = (0..=h_bar)
        .map(|h| lp_design(w, data.response_col(), h, impulse, &contemp, p))
        .collect::<Result<Vec<_>>>()?;

    let mut full = Moments::zeros(n_h);
    for (h, (y, x)) in designs.iter().enumerate() {
        let all: Vec<usize> = (0..y.nrows()).collect();
        let (ins, _) = partial_moments(y, x, &all, &[])?;
        full.sxx[h] = ins.0;
        full.sxy[h] = ins.1;
        full.syy[h] = ins.2;
    }

    // Row r of horizon h's design corresponds to time t = p + r.
    let n_base = t_total - p;
    let guard = h_bar + p;
    let mut folds: Vec<(Moments, Moments)> = Vec::with_capacity(n_folds);
    for f in 0..n_folds {
        let lo = p + f * n_base / n_folds;
        let hi = p + (f + 1) * n_base / n_folds;
        let mut train = Moments::zeros(n_h);
        let mut hold = Moments::zeros(n_h);
        for (h, (y, x)) in designs.iter().enumerate() {
            let times = (0..y.nrows()).map(|r| (r, p + r));
            let eval: Vec<usize> = times.clone().filter(|&(_, t)| t >= lo && t < hi).map(|(r, _)| r).collect();
            let fit: Vec<usize> = times
                .filter(|&(_, t)| t + guard < lo || t >= hi + guard)
                .map(|(r, _)| r)
                .collect();
            let (ins, oos) = partial_moments(y, x, &fit, &eval)?;
            train.sxx[h] = ins.0;
            train.sxy[h] = ins.1;
            train.syy[h] = ins.2;
            hold.sxx[h] = oos.0;
            hold.sxy[h] = oos.1;
            hold.syy[h] = oos.2;
        }
        folds.push((train, hold));
    }

    let mut cv_scores = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let mut score = 0.0;
        for (train, hold) in &folds {
            let b = solve_spline(&basis, &penalty, train, lambda)?;
            score += hold.sse(&(&basis * b));
        }
        cv_scores.push(score);
    }
    let mut best = 0;
    for (i, s) in cv_scores.iter().enumerate() {
        if *s < cv_scores[best] {
            best = i;
        }
    }
    let lambda = lambda_grid[best];
    let coefficients = solve_spline(&basis, &penalty, &full, lambda)?;
    let beta = &basis * &coefficients;
    let impact = lp_impact(data, p)?;
    Ok(PenalizedLpFit {
        basis,
        penalty,
        lambda,
        lambda_grid: lambda_grid.to_vec(),
        cv_scores,
        coefficients,
        beta,
        impact,
        full,
    })
}

pub fn penalized_lp_estimate(
    data: &Dataset,
    p: usize,
    h_bar: usize,
    lambda_grid: &[f64],
    n_folds: usize,
) -> Result<IRFEstimate> {
    let fit = penalized_lp_fit(data, p, h_bar, lambda_grid, n_folds)?;
    Ok(IRFEstimate {
        values: fit.values(),
        method: Method::PenLp,
        scheme: data.scheme,
        normalization: Normalization {
            index: data.normalization_col(),
            impact: fit.impact,
        },
    })
}
