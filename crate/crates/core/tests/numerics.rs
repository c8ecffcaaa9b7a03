use irflab::numerics::*;
use irflab::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = random_matrix(rng, n, n);
    &g * g.transpose() + Matrix::identity(n, n) * 0.1
}

fn random_stable(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Matrix {
    let a = random_matrix(rng, n, n);
    let r = spectral_radius(&a);
    a * (radius / r)
}

#[test]
fn ols_identity_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_matrix(&mut rng, 30, 3);
    let fit = ols(&x, &x).unwrap();
    assert!((&fit.coefficients - Matrix::identity(3, 3)).amax() < 1e-10);
    assert!(fit.residuals.amax() < 1e-10);
}

#[test]
fn ols_intercept_only_is_mean() {
    let y = Matrix::from_column_slice(5, 1, &[1.0, 2.0, 4.0, 8.0, 10.0]);
    let x = Matrix::from_element(5, 1, 1.0);
    let fit = ols(&y, &x).unwrap();
    assert!((fit.coefficients[(0, 0)] - 5.0).abs() < 1e-12);
}

#[test]
fn ols_exact_bivariate_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_matrix(&mut rng, 6, 3);
    let b = Matrix::from_row_slice(2, 3, &[0.5, -1.0, 2.0, 1.5, 0.25, -0.75]);
    let y = &x * b.transpose();
    let fit = ols(&y, &x).unwrap();
    assert!((&fit.coefficients - &b).amax() < 1e-10);
}

#[test]
fn ols_matches_normal_equations_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_matrix(&mut rng, 80, 4);
    let y = random_matrix(&mut rng, 80, 2);
    let fit = ols(&y, &x).unwrap();
    let oracle = ((x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &y).transpose();
    assert!((&fit.coefficients - oracle).amax() < 1e-10);
    let cov = fit.residuals.transpose() * &fit.residuals / 80.0;
    assert!((&fit.residual_cov - cov).amax() < 1e-12);
    // orthogonality of residuals and regressors
    assert!((x.transpose() * &fit.residuals).amax() < 1e-8 * x.amax() * y.amax());
    let g = fit.gram_inverse();
    assert!((g * (x.transpose() * &x) - Matrix::identity(4, 4)).amax() < 1e-10);
}

#[test]
fn ols_refit_on_fitted_values_is_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = random_matrix(&mut rng, 50, 3);
    let y = random_matrix(&mut rng, 50, 1);
    let fit = ols(&y, &x).unwrap();
    let fitted = &y - &fit.residuals;
    let refit = ols(&fitted, &x).unwrap();
    assert!((&refit.coefficients - &fit.coefficients).amax() < 1e-10);
}

#[test]
fn ols_reports_collinear_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = random_matrix(&mut rng, 20, 4);
    let dup = x.column(1) * 2.0;
    x.set_column(3, &dup);
    let y = random_matrix(&mut rng, 20, 1);
    match ols(&y, &x) {
        Err(Error::RankDeficient { column }) => assert_eq!(column, 3),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn cholesky_examples() {
    let i = Matrix::identity(3, 3);
    assert!((cholesky_lower(&i).unwrap() - &i).amax() < 1e-15);
    let s = Matrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 2.0]);
    let l = cholesky_lower(&s).unwrap();
    let expected = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
    assert!((&l - expected).amax() < 1e-12);
    assert!((&l * l.transpose() - s).amax() < 1e-12);
}

#[test]
fn cholesky_reports_failing_minor() {
    let s = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
    match cholesky_lower(&s) {
        Err(Error::NotPositiveDefinite { minor }) => assert_eq!(minor, 3),
        other => panic!("expected failure, got {other:?}"),
    }
}

#[test]
fn cholesky_inverts_gram_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let mut l = random_matrix(&mut rng, 4, 4).lower_triangle();
        for i in 0..4 {
            l[(i, i)] = l[(i, i)].abs() + 0.5;
        }
        let back = cholesky_lower(&(&l * l.transpose())).unwrap();
        assert!((back - &l).amax() < 1e-10);
    }
}

#[test]
fn lyapunov_examples() {
    let q = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let s = solve_discrete_lyapunov(&Matrix::zeros(2, 2), &q).unwrap();
    assert!((s - &q).amax() < 1e-14);
    let s = solve_discrete_lyapunov(&Matrix::from_element(1, 1, 0.5), &Matrix::from_element(1, 1, 1.0)).unwrap();
    assert!((s[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
}

#[test]
fn lyapunov_matches_vectorized_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 3;
    let a = random_stable(&mut rng, n, 0.9);
    let q = Matrix::identity(n, n);
    let s = solve_discrete_lyapunov(&a, &q).unwrap();
    // vec(S) = (I - A kron A)^{-1} vec(Q)
    let big = Matrix::identity(n * n, n * n) - a.kronecker(&a);
    let vec_q = Vector::from_column_slice(q.as_slice());
    let vec_s = big.lu().solve(&vec_q).unwrap();
    let oracle = Matrix::from_column_slice(n, n, vec_s.as_slice());
    assert!((&s - &oracle).amax() < 1e-10 * oracle.amax());
    let resid = &a * &s * a.transpose() + &q - &s;
    assert!(resid.amax() < 1e-10 * s.amax());
}

#[test]
fn lyapunov_rejects_unit_root() {
    let a = Matrix::from_element(1, 1, 1.0);
    assert!(matches!(
        solve_discrete_lyapunov(&a, &Matrix::from_element(1, 1, 1.0)),
        Err(Error::NonStationary { .. })
    ));
}

#[test]
fn kalman_without_state_noise() {
    let a = Matrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]);
    let b = Matrix::zeros(2, 2);
    let c = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
    let d = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.8]);
    let kf = steady_state_kalman(&a, &b, &c, &d).unwrap();
    assert!(kf.state_cov.amax() < 1e-14);
    assert!(kf.gain.amax() < 1e-14);
    assert!((&kf.innovation_cov - &d * d.transpose()).amax() < 1e-14);
}

#[test]
fn kalman_scalar_exactly_observed_ar1() {
    // x_{t+1} = 0.5 x_t + e_{t+1}, y_t = x_t: the Wold innovation of y is e with
    // variance 1, and the predictor x_{t+1|t} = 0.5 y_t gives a - K c = 0.
    let a = Matrix::from_element(1, 1, 0.5);
    let b = Matrix::from_element(1, 1, 1.0);
    let c = Matrix::from_element(1, 1, 1.0);
    let d = Matrix::zeros(1, 1);
    let kf = steady_state_kalman(&a, &b, &c, &d).unwrap();
    // Riccati root: s = a^2 s + 1 - a^2 s^2 / s = 1
    assert!((kf.state_cov[(0, 0)] - 1.0).abs() < 1e-9);
    assert!((kf.innovation_cov[(0, 0)] - 1.0).abs() < 1e-9);
    assert!((0.5 - kf.gain[(0, 0)]).abs() < 1e-9);
}

#[test]
fn kalman_fixed_point_and_stability() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let a = random_stable(&mut rng, 4, 0.8);
        let b = random_matrix(&mut rng, 4, 3);
        let c = random_matrix(&mut rng, 2, 4);
        let d = random_matrix(&mut rng, 2, 3) * 0.5;
        let kf = steady_state_kalman(&a, &b, &c, &d).unwrap();
        let s = &kf.state_cov;
        let m = &a * s * c.transpose() + &b * d.transpose();
        let su = &c * s * c.transpose() + &d * d.transpose();
        let k = &m * su.clone().try_inverse().unwrap();
        assert!((&k - &kf.gain).amax() < 1e-9 * k.amax().max(1.0));
        let next = &a * s * a.transpose() + &b * b.transpose() - &k * m.transpose();
        assert!((&next - s).amax() < 1e-9 * s.amax());
        assert!((&su - &kf.innovation_cov).amax() < 1e-9 * su.amax());
        assert!(spectral_radius(&(&a - &kf.gain * &c)) < 1.0);
        assert!(cholesky_lower(&kf.innovation_cov).is_ok());
    }
}

#[test]
fn bspline_shape_and_partition() {
    let b = bspline_basis(19, 3).unwrap();
    assert_eq!(b.shape(), (20, 21));
    for h in 0..20 {
        assert!((b.row(h).sum() - 1.0).abs() < 1e-12);
        assert!(b.row(h).iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
    // compact support: each column is nonzero on a contiguous set spanning at
    // most degree + 1 knot intervals
    let spacing = 19.0 / 18.0;
    for k in 0..21 {
        let nz: Vec<usize> = (0..20).filter(|&h| b[(h, k)] > 1e-14).collect();
        if let (Some(&lo), Some(&hi)) = (nz.first(), nz.last()) {
            assert_eq!(nz.len(), hi - lo + 1);
            assert!((hi - lo) as f64 <= 4.0 * spacing + 1e-9);
        }
    }
    assert!(bspline_basis(2, 3).is_err());
}

#[test]
fn bspline_null_penalty_gives_quadratics() {
    // Coefficients that are quadratic in the basis index have zero third
    // differences; the implied responses are then exactly quadratic in h.
    let b = bspline_basis(19, 3).unwrap();
    let coef = Vector::from_fn(21, |k, _| 0.7 - 0.4 * k as f64 + 0.03 * (k * k) as f64);
    let beta = Matrix::from_column_slice(20, 1, (&b * coef).as_slice());
    let quad = Matrix::from_fn(20, 3, |h, j| (h as f64).powi(j as i32));
    let fit = ols(&beta, &quad).unwrap();
    assert!(fit.residuals.amax() < 1e-10);
}

#[test]
fn simplex_closed_forms() {
    let w = simplex_qp(&Matrix::identity(2, 2)).unwrap();
    assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
    let w = simplex_qp(&Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 10.0]))).unwrap();
    assert!((w[0] - 10.0 / 11.0).abs() < 1e-12);
    assert!((w[1] - 1.0 / 11.0).abs() < 1e-12);
    let w = simplex_qp(&Matrix::identity(40, 40)).unwrap();
    assert!(w.iter().all(|v| (v - 1.0 / 40.0).abs() < 1e-12));
}

/// Minimum of w'Mw over a simplex grid with the given resolution (R = 5).
fn grid_oracle(m: &Matrix, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    let r = 5;
    let mut idx = vec![0usize; r - 1];
    loop {
        let used: usize = idx.iter().sum();
        if used <= steps {
            let mut w = Vector::zeros(r);
            for (i, &k) in idx.iter().enumerate() {
                w[i] = k as f64 / steps as f64;
            }
            w[r - 1] = (steps - used) as f64 / steps as f64;
            best = best.min((w.transpose() * m * &w)[(0, 0)]);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == r - 1 {
                return best;
            }
            idx[pos] += 1;
            if idx.iter().sum::<usize>() <= steps {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn simplex_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..5 {
        let g = random_matrix(&mut rng, 5, 3);
        let m = &g * g.transpose();
        let w = simplex_qp(&m).unwrap();
        let obj = (w.transpose() * &m * &w)[(0, 0)];
        let oracle = grid_oracle(&m, 100);
        assert!(obj <= oracle + 1e-9, "{obj} vs {oracle}");
        assert!(oracle - obj < 1e-3 * m.amax().max(1.0));
        assert!(simplex_kkt_residual(&m, &w) <= 1e-8);
    }
}

#[test]
fn quantile_type7() {
    let v = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(quantile(&v, 0.5), 2.5);
    assert!((quantile(&v, 0.25) - 1.75).abs() < 1e-15);
    assert_eq!(quantile(&v, 0.0), 1.0);
    assert_eq!(quantile(&v, 1.0), 4.0);
    assert_eq!(quantile(&[3.0, 1.0, 9.0], 0.5), 3.0);
}

#[test]
fn companion_layout() {
    let a1 = Matrix::from_element(1, 1, 0.5);
    let a2 = Matrix::from_element(1, 1, 0.2);
    let c = companion(&[a1, a2], 1);
    assert_eq!(c, Matrix::from_row_slice(2, 2, &[0.5, 0.2, 1.0, 0.0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_output_on_simplex(seed in any::<u64>(), r in 2usize..12, rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_matrix(&mut rng, r, rank);
        let m = &g * g.transpose();
        let w = simplex_qp(&m).unwrap();
        prop_assert!(w.min() >= -1e-12);
        prop_assert!((w.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(simplex_kkt_residual(&m, &w) <= 1e-8);
    }

    #[test]
    fn cholesky_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_spd(&mut rng, n);
        let l = cholesky_lower(&s).unwrap();
        prop_assert!((&l * l.transpose() - &s).amax() <= 1e-10 * s.amax());
        prop_assert!((0..n).all(|i| l[(i, i)] > 0.0));
        prop_assert!((0..n).all(|i| (i + 1..n).all(|j| l[(i, j)] == 0.0)));
    }

    #[test]
    fn quantiles_are_monotone(v in prop::collection::vec(-1e3f64..1e3, 1..50), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantile(&v, lo) <= quantile(&v, hi));
    }

    #[test]
    fn lyapunov_residual_small(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_stable(&mut rng, n, 0.95);
        let q = random_spd(&mut rng, n);
        let s = solve_discrete_lyapunov(&a, &q).unwrap();
        let resid = &a * &s * a.transpose() + &q - &s;
        prop_assert!(resid.amax() <= 1e-10 * s.amax());
    }
}
