mod common;

use common::*;
use irflab::dgp::synthetic::{bundled, synthetic_calibration, BUNDLED_JSON, SYNTHETIC_SEED};
use irflab::dgp::*;
use irflab::numerics::{cholesky_lower, ols, spectral_radius, Matrix, Vector};
use irflab::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

#[test]
fn bundled_calibration_shape() {
    let p = bundled().unwrap();
    assert_eq!((p.n_f, p.p_f, p.q_v), (6, 2, 2));
    assert!(p.policy_variable(Policy::Monetary).is_some());
    assert!(p.policy_variable(Policy::Fiscal).is_some());
    assert!(spectral_radius(&p.factor_companion()) < 1.0);
}

#[test]
fn bundled_file_matches_generator() {
    let fresh = synthetic_calibration(SYNTHETIC_SEED);
    let file = bundled().unwrap();
    assert_eq!(fresh.to_json_string(), file.to_json_string());
}

/// Rewrites the bundled calibration file from the generator.
#[test]
#[ignore]
fn regenerate_bundled_calibration() {
    let p = synthetic_calibration(SYNTHETIC_SEED);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_dfm.json");
    std::fs::write(path, p.to_json_string()).unwrap();
}

fn bundled_value() -> Value {
    serde_json::from_str(BUNDLED_JSON).unwrap()
}

#[test]
fn missing_field_is_named() {
    let mut v = bundled_value();
    v.as_object_mut().unwrap().remove("Xi");
    match DFMParameters::from_json_str(&v.to_string()) {
        Err(Error::Schema { field, .. }) => assert_eq!(field, "Xi"),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn nonstationary_factors_rejected() {
    let mut v = bundled_value();
    // scale Phi_1 so that the factor companion has spectral radius 1.01
    let p = bundled().unwrap();
    let mut p1 = p.clone();
    let mut lo = 1.0;
    let mut hi = 5.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        p1.phi[0] = &p.phi[0] * mid;
        p1.phi[1] = &p.phi[1] * mid;
        if spectral_radius(&p1.factor_companion()) < 1.01 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let phi = v["Phi"].as_array_mut().unwrap();
    for lag in phi.iter_mut() {
        for row in lag.as_array_mut().unwrap() {
            for x in row.as_array_mut().unwrap() {
                *x = Value::from(x.as_f64().unwrap() * s);
            }
        }
    }
    assert!(matches!(
        DFMParameters::from_json_str(&v.to_string()),
        Err(Error::NonStationary { .. })
    ));
}

#[test]
fn corrupt_file_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"schema\": 1,\n  \"n_f\": [\n").unwrap();
    match load_dfm_params(&path) {
        Err(Error::Corrupt { line, .. }) => assert!(line >= 3),
        other => panic!("expected corrupt-file error, got {other:?}"),
    }
}

#[test]
fn json_round_trip() {
    let p = bundled().unwrap();
    let again = DFMParameters::from_json_str(&p.to_json_string()).unwrap();
    assert_eq!(p.to_json_string(), again.to_json_string());
}

#[test]
fn iv_noise_calibration() {
    assert_eq!(calibrate_iv_noise(1.0).unwrap(), 0.0);
    assert!((calibrate_iv_noise(0.5).unwrap() - 1.0).abs() < 1e-15);
    assert!((calibrate_iv_noise(0.25).unwrap() - 3.0).abs() < 1e-15);
    assert!(calibrate_iv_noise(0.0).is_err());
}

#[test]
fn drawn_specs_satisfy_protocol() {
    let p = bundled().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..10_000 {
        let policy = if k % 2 == 0 { Policy::Monetary } else { Policy::Fiscal };
        let s = draw_dgp_spec(&p, policy, Scheme::Recursive, 0.3, &mut rng).unwrap();
        let vars: Vec<&VariableInfo> = s.variable_indices.iter().map(|&i| &p.variables[i]).collect();
        assert_eq!(vars[s.normalization].policy, policy);
        assert!(vars.iter().any(|v| v.output));
        assert!(vars.iter().any(|v| v.price));
        assert_ne!(s.response, s.normalization);
        let expected_pos = if policy == Policy::Monetary { s.n_w() - 1 } else { 0 };
        assert_eq!(s.normalization, expected_pos);
        let mut sorted = s.variable_indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 5);
        assert!(normalization_impact(&p, &s).abs() >= 1e-6);
    }
}

#[test]
fn spec_draw_is_deterministic() {
    let p = bundled().unwrap();
    let a = draw_dgp_spec(&p, Policy::Fiscal, Scheme::Iv, 0.2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = draw_dgp_spec(&p, Policy::Fiscal, Scheme::Iv, 0.2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
    assert!((a.iv.sigma_nu2 - 4.0).abs() < 1e-12);
}

#[test]
fn shock_column_identity_case() {
    let p = dfm(
        vec![Matrix::zeros(2, 2)],
        Matrix::identity(2, 2),
        Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.7]),
        vec![0.5, 0.5],
        None,
    );
    let h1 = build_shock_column(&p, 0).unwrap();
    assert!((h1 - Vector::from_vec(vec![1.0, 0.0])).amax() < 1e-15);
    let h = complete_h(&p, &Vector::from_vec(vec![1.0, 0.0])).unwrap();
    assert!((&h * h.transpose() - Matrix::identity(2, 2)).amax() < 1e-14);
    assert!((h[(0, 0)] - 1.0).abs() < 1e-14 && h[(1, 0)].abs() < 1e-14);
}

#[test]
fn shock_column_maximizes_impact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 4;
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let sigma = &g * g.transpose() + Matrix::identity(n, n) * 0.2;
    let lambda = Matrix::from_fn(3, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let p = dfm(vec![Matrix::zeros(n, n)], sigma.clone(), lambda.clone(), vec![1.0; 3], None);
    let h1 = build_shock_column(&p, 1).unwrap();
    let row = lambda.row(1).transpose();
    let impact = row.dot(&h1);
    let closed = (row.transpose() * &sigma * &row)[(0, 0)].sqrt();
    assert!((impact - closed).abs() < 1e-10);
    // random points on the ellipsoid h' Sigma^{-1} h = 1 never beat it
    let chol = cholesky_lower(&sigma).unwrap();
    for _ in 0..10_000 {
        let u = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let h = &chol * (&u / u.norm());
        assert!(row.dot(&h) <= impact + 1e-12);
    }
    let h = complete_h(&p, &h1).unwrap();
    assert!((&h * h.transpose() - &sigma).amax() <= 1e-10 * sigma.amax());
    assert!((h.column(0) - &h1).amax() < 1e-12);
}

#[test]
fn scalar_observed_shock_irf() {
    let (rho, sigma) = (0.7, 0.5);
    let p = scalar_dfm(rho, sigma, 0.0);
    let s = spec_for(&p, vec![0], 0, 0, Scheme::ObservedShock);
    let t = true_irf(&p, &s, 10).unwrap();
    assert!(!t.normalized);
    for (h, v) in t.values.iter().enumerate() {
        assert!((v - sigma * rho.powi(h as i32)).abs() < 1e-14);
    }
    // relative to a unit impact
    assert!((t.relative()[0] - 1.0).abs() < 1e-14);
}

#[test]
fn iv_estimand_self_normalizes() {
    let p = bundled().unwrap();
    let s = draw_dgp_spec(&p, Policy::Monetary, Scheme::Iv, 0.3, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let s = DGPSpec {
        response: s.normalization,
        ..s
    };
    let t = true_irf(&p, &s, 5).unwrap();
    assert!((t.values[0] - 1.0).abs() < 1e-12);
}

#[test]
fn finite_var_when_invertible() {
    let p = invertible_dfm();
    let s = spec_for(&p, vec![0, 1, 2], 0, 2, Scheme::Recursive);
    let vi = var_infinity(&p, &s, 30).unwrap();
    for a in &vi.lags[p.p_f..] {
        assert!(a.amax() <= 1e-8);
    }
    // the VAR(p_f) lags reproduce the factor dynamics rotated into observables
    let lam = &p.lambda;
    let lam_inv = lam.clone().try_inverse().unwrap();
    for l in 0..p.p_f {
        let expected = lam * &p.phi[l] * &lam_inv;
        assert!((&vi.lags[l] - expected).amax() < 1e-8);
    }
    let inv = invertibility(&p, &s).unwrap();
    assert!((inv - 1.0).abs() < 1e-6);
}

#[test]
fn recursive_estimand_matches_structural_ratio() {
    let p = invertible_dfm();
    let rec = spec_for(&p, vec![0, 1, 2], 0, 2, Scheme::Recursive);
    let obs = rec.with_scheme(Scheme::ObservedShock);
    let a = true_irf(&p, &rec, 19).unwrap().relative();
    let b = true_irf(&p, &obs, 19).unwrap().relative();
    for h in 0..20 {
        assert!((a[h] - b[h]).abs() < 1e-6, "h = {h}: {} vs {}", a[h], b[h]);
    }
}

#[test]
fn invertibility_matches_finite_lag_projection() {
    let p = bundled().unwrap();
    let s = draw_dgp_spec(&p, Policy::Monetary, Scheme::ObservedShock, 0.3, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    let lags = 50;
    let gamma = observable_autocov(&p, &s.variable_indices, lags);
    let v = stacked_cov(&gamma, lags);
    let n = s.n_w();
    // Cov(eps_1t, w_{t-l}) is the impact vector for l = 0 and zero afterwards.
    let mut c = Vector::zeros(n * (lags + 1));
    for r in 0..n {
        c[r] = p.lambda.row(s.variable_indices[r]).transpose().dot(&s.h_col1());
    }
    let r2 = c.dot(&v.lu().solve(&c).unwrap());
    let model = invertibility(&p, &s).unwrap();
    assert!((model - r2).abs() < 1e-4, "{model} vs {r2}");
}

#[test]
fn var_infinity_matches_yule_walker() {
    let p = bundled().unwrap();
    let s = draw_dgp_spec(&p, Policy::Fiscal, Scheme::Recursive, 0.2, &mut ChaCha8Rng::seed_from_u64(33)).unwrap();
    let lags = 60;
    let gamma = observable_autocov(&p, &s.variable_indices, lags);
    let n = s.n_w();
    let v = stacked_cov(&gamma, lags - 1);
    let mut c12 = Matrix::zeros(n, n * lags);
    for k in 1..=lags {
        c12.view_mut((0, (k - 1) * n), (n, n)).copy_from(&gamma[k]);
    }
    let vinv = v.try_inverse().unwrap();
    let coef = &c12 * &vinv;
    let sigma_u = &gamma[0] - &coef * c12.transpose();
    let vi = var_infinity(&p, &s, 50).unwrap();
    assert!((&vi.sigma_u - &sigma_u).amax() < 1e-4 * sigma_u.amax());
    for k in 0..3 {
        let yw = coef.view((0, k * n), (n, n));
        assert!((&vi.lags[k] - yw).amax() < 1e-4, "lag {}", k + 1);
    }
    // geometric tail decay beyond lag 10
    let norms: Vec<f64> = vi.lags.iter().map(|a| a.norm()).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = (10..50).map(|l| (l as f64, norms[l].max(1e-300).ln())).unzip();
    let xm = Matrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let fit = ols(&Matrix::from_column_slice(y.len(), 1, &y), &xm).unwrap();
    assert!(fit.coefficients[(0, 1)] < 0.0);
}

#[test]
fn noisier_measurement_lowers_invertibility() {
    let p = bundled().unwrap();
    let s = draw_dgp_spec(&p, Policy::Monetary, Scheme::ObservedShock, 0.3, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let base = invertibility(&p, &s).unwrap();
    let mut noisy = p.clone();
    noisy.xi *= 100.0;
    let lower = invertibility(&noisy, &s).unwrap();
    assert!(lower < base);
    assert!((0.0..=1.0).contains(&base));
}

#[test]
fn summary_stats_scalar_cases() {
    let rho = 0.6;
    let p = scalar_dfm(rho, 1.0, 0.0);
    let mut s = spec_for(&p, vec![0], 0, 0, Scheme::Iv);
    s.iv.sigma_nu2 = 9.0;
    let st = summary_stats(&p, &s, 19, 50, 200).unwrap();
    assert!((st.lrv_ratio - (1.0 + rho) / (1.0 - rho)).abs() < 1e-10);
    // the zero higher lags make the companion defective, so eigenvalues are only accurate to ~1e-6
    assert!((st.largest_eigenvalue - rho).abs() < 1e-5);
    // first-stage R^2 = 1 / ((1 + 9) Var(y)) with Var(y) = 1 / (1 - rho^2)
    let r2 = (1.0 - rho * rho) / 10.0;
    assert!((st.iv_f_stat - 200.0 * r2 / (1.0 - r2)).abs() < 1e-8);

    let wn = scalar_dfm(0.0, 1.0, 0.0);
    let mut s = spec_for(&wn, vec![0], 0, 0, Scheme::Iv);
    s.iv.sigma_nu2 = 9.0;
    let st = summary_stats(&wn, &s, 19, 50, 200).unwrap();
    assert!((st.iv_f_stat - 22.22).abs() < 0.01);
    assert!((st.lrv_ratio - 1.0).abs() < 1e-12);
    assert!(st.largest_eigenvalue.abs() < 1e-6);
}

#[test]
fn irf_shape_statistics() {
    let theta: Vec<f64> = (0..20).map(|h| 1.0 + 0.1 * h as f64 - 0.01 * (h * h) as f64).collect();
    let (extrema, arg, ratio, r2) = irf_shape_stats(&theta);
    assert_eq!(extrema, 1);
    assert_eq!(arg, 5);
    assert!((-1.0..=1.0).contains(&ratio));
    assert!((r2 - 1.0).abs() < 1e-10);
}

#[test]
fn measurement_free_observables_reproduce_factors() {
    // Xi = 0 and Lambda = I: the observables are the factors, so the structural
    // shocks can be backed out exactly and checked for unit covariance.
    let phi = Matrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
    let sigma = Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let p = dfm(vec![phi.clone()], sigma, Matrix::identity(2, 2), vec![0.0, 0.0], None);
    let s = spec_for(&p, vec![0, 1], 0, 1, Scheme::ObservedShock);
    let t = 1_000_000;
    let d = simulate_data(&p, &s, t, 100, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let h = complete_h(&p, &s.h_col1()).unwrap();
    let h_inv = h.try_inverse().unwrap();
    let mut cov = Matrix::zeros(2, 2);
    for r in 1..t {
        let f = d.observations.fixed_view::<1, 2>(r, 1).transpose();
        let f_prev = d.observations.fixed_view::<1, 2>(r - 1, 1).transpose();
        let e = &h_inv * (Vector::from_column_slice(f.as_slice()) - &phi * Vector::from_column_slice(f_prev.as_slice()));
        // first structural shock is also the leading observed column
        assert!((e[0] - d.observations[(r, 0)]).abs() < 1e-9);
        cov += &e * e.transpose();
    }
    cov /= (t - 1) as f64;
    let se = (2.0 / t as f64).sqrt();
    assert!((cov[(0, 0)] - 1.0).abs() < 3.0 * se);
    assert!((cov[(1, 1)] - 1.0).abs() < 3.0 * se);
    assert!(cov[(0, 1)].abs() < 3.0 / (t as f64).sqrt());
}

#[test]
fn simulation_is_deterministic_across_threads() {
    let p = bundled().unwrap();
    let s = draw_dgp_spec(&p, Policy::Monetary, Scheme::Iv, 0.3, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let here = simulate_data(&p, &s, 200, 100, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
    let (p2, s2) = (p.clone(), s.clone());
    let there = std::thread::spawn(move || {
        simulate_data(&p2, &s2, 200, 100, &mut ChaCha8Rng::seed_from_u64(77)).unwrap()
    })
    .join()
    .unwrap();
    assert_eq!(here, there);
    assert_eq!(here.observations.shape(), (200, 6));
    assert!(simulate_data(&p, &s, 20, 100, &mut ChaCha8Rng::seed_from_u64(77)).is_err());
}

#[test]
fn long_sample_observed_shock_moments() {
    // Regressing the response on the observed shock recovers the impact response.
    let p = bundled().unwrap();
    let s = draw_dgp_spec(&p, Policy::Monetary, Scheme::ObservedShock, 0.3, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let t = 200_000;
    let d = simulate_data(&p, &s, t, 100, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    let truth = true_irf(&p, &s, 2).unwrap();
    let x = d.observations.columns(0, 1).into_owned();
    for h in 0..=2 {
        let y = d.observations.view((h, d.response_col()), (t - h, 1)).into_owned();
        let xh = x.rows(0, t - h).into_owned();
        let fit = ols(&y, &xh).unwrap();
        let se = (fit.residual_cov[(0, 0)] / (t - h) as f64).sqrt();
        assert!((fit.coefficients[(0, 0)] - truth.values[h]).abs() < 4.0 * se, "h = {h}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn estimands_and_stats_are_well_formed(seed in any::<u64>(), fiscal in any::<bool>()) {
        let p = bundled().unwrap();
        let policy = if fiscal { Policy::Fiscal } else { Policy::Monetary };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = draw_dgp_spec(&p, policy, Scheme::Recursive, 0.3, &mut rng).unwrap();
        let st = summary_stats(&p, &s, 19, 50, 200).unwrap();
        prop_assert!((0.0..=1.0).contains(&st.invertibility));
        prop_assert!((-1.0..=1.0).contains(&st.avg_over_max_abs));
        prop_assert!((0.0..=1.0).contains(&st.quadratic_r2));
        prop_assert!((0.0..=1.0).contains(&st.lag_tail_fraction));
        prop_assert!(st.largest_eigenvalue < 1.0);
        let rec = true_irf(&p, &s, 19).unwrap().relative();
        if s.response == s.normalization {
            prop_assert!((rec[0] - 1.0).abs() < 1e-12);
        }
        prop_assert!(rec.iter().all(|v| v.is_finite()));
        let iv = true_irf(&p, &s.with_scheme(Scheme::Iv), 19).unwrap();
        let obs = true_irf(&p, &s.with_scheme(Scheme::ObservedShock), 19).unwrap();
        for h in 0..20 {
            prop_assert!((iv.values[h] - obs.relative()[h]).abs() < 1e-12);
        }
    }
}
