//! Bundled synthetic calibration of the encompassing factor model.
//!
//! The real calibration is estimated from a large macro panel that is not
//! shipped. Instead, `data/synthetic_dfm.json` is produced once by
//! [`synthetic_calibration`] with [`SYNTHETIC_SEED`]: six factors with two lags,
//! 40 standardized observables with AR(2) idiosyncratic components, a persistent
//! federal funds rate (monetary policy variable) and a government spending series
//! (fiscal policy variable).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::params::{DFMParameters, Policy, VariableInfo};
use crate::error::Result;
use crate::numerics::{solve_discrete_lyapunov, spectral_radius, Matrix, Vector};

pub const SYNTHETIC_SEED: u64 = 20_240_601;

pub const BUNDLED_JSON: &str = include_str!("../../data/synthetic_dfm.json");

/// Parses the bundled calibration file.
pub fn bundled() -> Result<DFMParameters> {
    DFMParameters::from_json_str(BUNDLED_JSON)
}

const N_F: usize = 6;
const N_X: usize = 40;
const FACTOR_RADIUS: f64 = 0.85;

// (category, count); categories 1-3 are output measures, 6 are prices.
const CATEGORY_LAYOUT: [(u32, usize); 13] = [
    (1, 5),
    (2, 4),
    (3, 3),
    (4, 3),
    (6, 7),
    (7, 2),
    (8, 2),
    (9, 2),
    (10, 2),
    (11, 2),
    (12, 2),
    (13, 2),
    (14, 2),
];

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn unit_ar2_variance(d1: f64, d2: f64) -> f64 {
    let a = Matrix::from_row_slice(2, 2, &[d1, d2, 1.0, 0.0]);
    let mut q = Matrix::zeros(2, 2);
    q[(0, 0)] = 1.0;
    solve_discrete_lyapunov(&a, &q).expect("stationary AR(2)")[(0, 0)]
}

fn draw_idio(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let d1 = rng.random_range(-0.5..0.6);
        let d2 = rng.random_range(-0.3..0.3);
        let a = Matrix::from_row_slice(2, 2, &[d1, d2, 1.0, 0.0]);
        if spectral_radius(&a) < 0.92 {
            return (d1, d2);
        }
    }
}

/// Generates the synthetic calibration from a seed.
pub fn synthetic_calibration(seed: u64) -> DFMParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut phi1 = Matrix::from_fn(N_F, N_F, |_, _| 0.0);
    let mut phi2 = Matrix::from_fn(N_F, N_F, |_, _| 0.0);
    for i in 0..N_F {
        for j in 0..N_F {
            phi1[(i, j)] = 0.25 * normal(&mut rng) + if i == j { 0.3 } else { 0.0 };
            phi2[(i, j)] = 0.2 * normal(&mut rng) + if i == j { -0.1 } else { 0.0 };
        }
    }
    let lags = vec![phi1.clone(), phi2.clone()];
    let radius = spectral_radius(&crate::numerics::companion(&lags, N_F));
    let s = FACTOR_RADIUS / radius;
    phi1 *= s;
    phi2 *= s * s;

    let g = Matrix::from_fn(N_F, N_F, |_, _| normal(&mut rng));
    let mut sigma_eta = &g * g.transpose() / N_F as f64 + Matrix::identity(N_F, N_F) * 0.3;
    sigma_eta = (&sigma_eta + sigma_eta.transpose()) * 0.5;

    let a = crate::numerics::companion(&[phi1.clone(), phi2.clone()], N_F);
    let mut q = Matrix::zeros(2 * N_F, 2 * N_F);
    q.view_mut((0, 0), (N_F, N_F)).copy_from(&sigma_eta);
    let var_f = solve_discrete_lyapunov(&a, &q)
        .expect("scaled factor VAR is stationary")
        .view((0, 0), (N_F, N_F))
        .into_owned();

    let mut variables = Vec::with_capacity(N_X);
    variables.push(VariableInfo {
        name: "fedfunds".into(),
        category: 5,
        policy: Policy::Monetary,
        output: false,
        price: false,
    });
    variables.push(VariableInfo {
        name: "gov_spending".into(),
        category: 4,
        policy: Policy::Fiscal,
        output: false,
        price: false,
    });
    for &(cat, count) in CATEGORY_LAYOUT.iter() {
        for k in 0..count {
            variables.push(VariableInfo {
                name: format!("c{cat:02}_{k}"),
                category: cat,
                policy: Policy::None,
                output: cat <= 3,
                price: cat == 6,
            });
        }
    }
    debug_assert_eq!(variables.len(), N_X);

    let mut lambda = Matrix::zeros(N_X, N_F);
    let mut delta = Matrix::zeros(N_X, 2);
    let mut xi = Vector::zeros(N_X);
    for i in 0..N_X {
        let raw = Vector::from_fn(N_F, |_, _| normal(&mut rng));
        let (r2, (d1, d2)) = match i {
            0 => (0.6, (1.1, -0.2)),
            1 => (0.35, (0.6, 0.1)),
            _ => (rng.random_range(0.05..0.6), draw_idio(&mut rng)),
        };
        let common = raw.dot(&(&var_f * &raw));
        let scaled = raw * (r2 / common).sqrt();
        lambda.row_mut(i).copy_from(&scaled.transpose());
        delta[(i, 0)] = d1;
        delta[(i, 1)] = d2;
        xi[i] = ((1.0 - r2) / unit_ar2_variance(d1, d2)).sqrt();
    }

    DFMParameters {
        n_f: N_F,
        n_x: N_X,
        p_f: 2,
        q_v: 2,
        phi: vec![phi1, phi2],
        sigma_eta,
        lambda,
        delta,
        xi,
        variables,
    }
}
