use nalgebra::SVD;

use super::{Matrix, Vector};
use crate::error::{Error, Result};

fn scale_of(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0)
}

/// Scaled KKT violation of `w` for `min w'Mw` over the unit simplex.
pub fn simplex_kkt_residual(m: &Matrix, w: &Vector) -> f64 {
    let grad = 2.0 * (m * w);
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 1e-10).collect();
    if support.is_empty() {
        return f64::INFINITY;
    }
    let lambda = support.iter().map(|&i| grad[i]).sum::<f64>() / support.len() as f64;
    let mut r = (w.sum() - 1.0).abs();
    for i in 0..w.len() {
        r = r.max(-w[i]);
        if w[i] > 1e-10 {
            r = r.max((grad[i] - lambda).abs());
        } else {
            r = r.max(lambda - grad[i]);
        }
    }
    r / scale_of(m)
}

/// Minimizes `w'Mw` subject to `w >= 0`, `sum(w) = 1`.
///
/// Primal active-set method started from equal weights; each equality-constrained
/// subproblem is solved by SVD least squares so singular `M` is fine.
pub fn simplex_qp(m: &Matrix) -> Result<Vector> {
    let r = m.nrows();
    if r == 0 || m.ncols() != r {
        return Err(Error::InvalidInput("simplex_qp needs a nonempty square matrix".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("simplex_qp matrix has non-finite entries".into()));
    }
    let scale = scale_of(m);
    if (m - m.transpose()).abs().max() > 1e-8 * scale {
        return Err(Error::InvalidInput("simplex_qp matrix is not symmetric".into()));
    }
    let m = (m + m.transpose()) * 0.5;
    let mut w = Vector::from_element(r, 1.0 / r as f64);
    let mut free = vec![true; r];

    for _ in 0..(20 * r + 200) {
        let idx: Vec<usize> = (0..r).filter(|&i| free[i]).collect();
        let nf = idx.len();
        let grad = &m * &w;
        // KKT system for the step p on the free face: [2M_FF 1; 1' 0][p; mu] = [-2g_F; 0]
        let mut kkt = Matrix::zeros(nf + 1, nf + 1);
        let mut rhs = Vector::zeros(nf + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                kkt[(a, b)] = 2.0 * m[(i, j)];
            }
            kkt[(a, nf)] = 1.0;
            kkt[(nf, a)] = 1.0;
            rhs[a] = -2.0 * grad[i];
        }
        let svd = SVD::new(kkt, true, true);
        let eps = 1e-13 * svd.singular_values.max().max(1.0);
        let sol = svd
            .solve(&rhs, eps)
            .map_err(|e| Error::InvalidInput(format!("simplex_qp step: {e}")))?;
        let step: Vec<f64> = (0..nf).map(|a| sol[a]).collect();
        let step_norm = step.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

        if step_norm <= 1e-13 {
            let g2 = 2.0 * &grad;
            let lambda = idx.iter().map(|&i| g2[i]).sum::<f64>() / nf as f64;
            let entering = (0..r)
                .filter(|&i| !free[i])
                .map(|i| (i, g2[i] - lambda))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match entering {
                Some((i, mult)) if mult < -1e-12 * scale => free[i] = true,
                _ => break,
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        for (a, &i) in idx.iter().enumerate() {
            if step[a] < 0.0 {
                let ratio = -w[i] / step[a];
                if ratio < alpha {
                    alpha = ratio;
                    blocking = Some(i);
                }
            }
        }
        for (a, &i) in idx.iter().enumerate() {
            w[i] += alpha * step[a];
        }
        if let Some(i) = blocking {
            w[i] = 0.0;
            free[i] = false;
        }
    }

    for v in w.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total = w.sum();
    w /= total;
    if simplex_kkt_residual(&m, &w) > 1e-8 {
        w = projected_gradient(&m, w);
    }
    Ok(w)
}

/// Euclidean projection onto the unit simplex (sort-based).
fn project_simplex(v: &Vector) -> Vector {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        css += x;
        let t = (css - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

// Fallback polish for numerically awkward inputs.
fn projected_gradient(m: &Matrix, mut w: Vector) -> Vector {
    let lip = 2.0 * m.norm().max(1e-300);
    for _ in 0..200_000 {
        let next = project_simplex(&(&w - (2.0 / lip) * (m * &w)));
        let diff = (&next - &w).abs().max();
        w = next;
        if diff < 1e-15 {
            break;
        }
    }
    let total = w.sum();
    w / total
}
