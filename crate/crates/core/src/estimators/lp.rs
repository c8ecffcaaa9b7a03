use super::{check_impact, IRFEstimate, Method, Normalization};
use crate::dgp::{Dataset, Scheme};
use crate::error::{Error, Result};
use crate::numerics::{ols, Matrix};

/// Regressor layout of the LP for a given scheme: the impulse column and the
/// contemporaneous controls (columns of the full data matrix).
pub(crate) fn lp_layout(data: &Dataset) -> (usize, Vec<usize>) {
    match data.scheme {
        Scheme::ObservedShock | Scheme::Iv => (0, Vec::new()),
        Scheme::Recursive => (data.normalization_col(), (0..data.normalization_col()).collect()),
    }
}

/// Design `[1, x_t, q_t', w_{t-1}', ..., w_{t-p}']` and regressand `w_{t+h, target}`
/// over `t = p..T-1-h`.
pub(crate) fn lp_design(
    w: &Matrix,
    target: usize,
    h: usize,
    impulse: usize,
    contemp: &[usize],
    p: usize,
) -> Result<(Matrix, Matrix)> {
    let t_total = w.nrows();
    if t_total <= p + h {
        return Err(Error::InsufficientSample(format!(
            "{t_total} observations for horizon {h} with {p} lags"
        )));
    }
    let n = w.ncols();
    let rows = p..(t_total - h);
    let k = 2 + contemp.len() + n * p;
    let mut x = Matrix::zeros(rows.len(), k);
    let mut y = Matrix::zeros(rows.len(), 1);
    for (r, t) in rows.enumerate() {
        x[(r, 0)] = 1.0;
        x[(r, 1)] = w[(t, impulse)];
        for (c, &j) in contemp.iter().enumerate() {
            x[(r, 2 + c)] = w[(t, j)];
        }
        let base = 2 + contemp.len();
        for l in 1..=p {
            for j in 0..n {
                x[(r, base + (l - 1) * n + j)] = w[(t - l, j)];
            }
        }
        y[(r, 0)] = w[(t + h, target)];
    }
    Ok((y, x))
}

/// OLS coefficient on the impulse variable in the horizon-`h` LP.
pub fn lp_coefficient(
    w: &Matrix,
    target: usize,
    h: usize,
    impulse: usize,
    contemp: &[usize],
    p: usize,
) -> Result<f64> {
    let (y, x) = lp_design(w, target, h, impulse, contemp, p)?;
    Ok(ols(&y, &x)?.coefficients[(0, 1)])
}

/// Impact coefficient used to normalize LP-type estimates.
pub(crate) fn lp_impact(data: &Dataset, p: usize) -> Result<f64> {
    match data.scheme {
        Scheme::Recursive => Ok(1.0),
        _ => {
            let (impulse, contemp) = lp_layout(data);
            check_impact(lp_coefficient(
                &data.observations,
                data.normalization_col(),
                0,
                impulse,
                &contemp,
                p,
            )?)
        }
    }
}

/// Least-squares local projections, `h = 0..=h_bar`.
pub fn lp_estimate(data: &Dataset, p: usize, h_bar: usize) -> Result<IRFEstimate> {
    let (impulse, contemp) = lp_layout(data);
    let impact = lp_impact(data, p)?;
    let values = (0..=h_bar)
        .map(|h| {
            lp_coefficient(&data.observations, data.response_col(), h, impulse, &contemp, p)
                .map(|b| b / impact)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IRFEstimate {
        values,
        method: Method::Lp,
        scheme: data.scheme,
        normalization: Normalization {
            index: data.normalization_col(),
            impact,
        },
    })
}
