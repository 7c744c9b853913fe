mod common;

use common::*;
use magel::fields::{curl_residual, det_field, f_to_g, g_to_f, grad_rows, renormalize_m, sphere_residual};
use magel::spectral::{MatrixField, TorusGrid, VectorField};
use proptest::prelude::*;

#[test]
fn derivative_examples() {
    let g = grid2(64);
    let d = g.derivative(&g.sample(|x| x[0].sin()), &[1, 0]).unwrap();
    assert!(max_diff(&d, &g.sample(|x| x[0].cos())) <= 1e-12);
    let d = g.derivative(&g.sample(|x| x[0].sin() * x[1].sin()), &[1, 1]).unwrap();
    assert!(max_diff(&d, &g.sample(|x| x[0].cos() * x[1].cos())) <= 1e-12);
    let c = g.sample(|_| 3.0);
    for m in [[1, 0], [0, 1], [2, 1], [3, 0], [1, 3]] {
        assert!(g.derivative(&c, &m).unwrap().max_abs() <= 1e-12);
    }
    assert!(g.derivative(&c, &[1]).is_err());
}

#[test]
fn derivative_in_three_dimensions() {
    let g = TorusGrid::new(3, 16).unwrap();
    let f = g.sample(|x| (x[0] + 2.0 * x[2]).sin() * x[1].cos());
    let d = g.derivative(&f, &[0, 1, 1]).unwrap();
    let want = g.sample(|x| -2.0 * (x[0] + 2.0 * x[2]).cos() * x[1].sin());
    assert!(max_diff(&d, &want) <= 1e-12);
}

#[test]
fn laplacian_examples() {
    let g = grid2(64);
    let s = g.sample(|x| x[0].sin());
    assert!(max_diff(&g.laplacian(&s), &s.scaled(-1.0)) <= 1e-12);
    assert!(max_diff(&g.inverse_laplacian_zero_mean(&s.scaled(-1.0)).unwrap(), &s) <= 1e-12);
    assert!(g.inverse_laplacian_zero_mean(&g.sample(|x| 1.0 + x[0].sin())).is_err());
}

#[test]
fn leray_examples() {
    let g = grid2(64);
    let grad = VectorField { comps: vec![g.sample(|x| -x[0].sin()), g.zeros()] };
    assert!(g.leray_project(&grad).max_abs() <= 1e-12);
    let shear = VectorField { comps: vec![g.sample(|x| x[1].sin()), g.zeros()] };
    assert!(g.leray_project(&shear).sub(&shear).max_abs() <= 1e-12);
    let sx = VectorField { comps: vec![g.sample(|x| x[0].sin()), g.zeros()] };
    assert!(g.leray_project(&sx).max_abs() <= 1e-12);
}

#[test]
fn truncation_examples() {
    let g = grid2(64);
    assert!(g.truncate(&g.sample(|x| (3.0 * x[0]).sin()), 2.0).max_abs() <= 1e-12);
    let f = g.sample(|x| x[0].sin() + (3.0 * x[0]).sin());
    assert!(max_diff(&g.truncate(&f, 2.0), &g.sample(|x| x[0].sin())) <= 1e-12);
}

#[test]
fn truncation_is_idempotent_on_spectra() {
    let g = grid2(32);
    let f = random_scalar(&g, 10, 3, 1);
    for k in [1.0, 2.5, 4.0, 7.3, 15.0] {
        let mut once = g.forward(&f);
        g.truncate_spectrum(&mut once, k);
        let mut twice = once.clone();
        g.truncate_spectrum(&mut twice, k);
        assert_eq!(once.coeffs, twice.coeffs);
        let t1 = g.truncate(&f, k);
        assert!(max_diff(&g.truncate(&t1, k), &t1) <= 1e-14);
    }
}

#[test]
fn dealias_examples() {
    let g = grid2(64);
    let f = random_scalar(&g, 21, 5, 2);
    assert!(max_diff(&g.dealias(&f), &f) <= 1e-12);
    for n in [8, 16, 64] {
        let gn = grid2(n);
        let k = (n / 2 - 1) as f64;
        assert!(gn.dealias(&gn.sample(|x| (k * x[0]).sin())).max_abs() <= 1e-12);
    }
    // 2k ≤ n/3
    let k = 10.0;
    let sq = g.sample(|x| (k * x[0]).sin().powi(2));
    let want = g.sample(|x| 0.5 * (1.0 - (2.0 * k * x[0]).cos()));
    assert!(max_diff(&g.dealias(&sq), &want) <= 1e-12);
}

#[test]
fn constant_field_norms() {
    let g = grid2(16);
    let c = g.sample(|_| 1.5);
    let vol = (2.0 * std::f64::consts::PI).powi(2);
    assert!((g.inner(&c, &c) - 2.25 * vol).abs() < 1e-12);
    assert!((g.spectral_l2_sq(&g.forward(&c)) - 2.25 * vol).abs() < 1e-12);
}

#[test]
fn deformation_algebra_examples() {
    let g = grid2(8);
    let id = MatrixField::identity(2, g.len());
    assert_eq!(f_to_g(&id).unwrap().max_abs(), 0.0);
    let shear = MatrixField::constant(2, &[1.0, 0.2, 0.0, 1.0], g.len());
    let gm = f_to_g(&shear).unwrap();
    let want = MatrixField::constant(2, &[0.0, -0.2, 0.0, 0.0], g.len());
    assert!(gm.sub(&want).max_abs() < 1e-15);
    for f in [id, shear, MatrixField::constant(2, &[2.0, 0.0, 0.0, 0.5], g.len())] {
        assert!(det_field(&f).values.iter().all(|d| (d - 1.0).abs() < 1e-15));
    }
}

#[test]
fn curl_examples() {
    let g = grid2(32);
    let psi = random_vector(&g, 2, 6, 4);
    assert!(curl_residual(&g, &grad_rows(&g, &psi)) <= 1e-11);
    let mut gm = MatrixField::zeros(2, g.len());
    *gm.get_mut(0, 1) = g.sample(|x| x[0].sin());
    assert!((curl_residual(&g, &gm) - 1.0).abs() < 1e-12);
    assert_eq!(curl_residual(&g, &MatrixField::zeros(2, g.len())), 0.0);
}

#[test]
fn sphere_examples() {
    let g = grid2(16);
    let ez = VectorField::constant(&[0.0, 0.0, 1.0], g.len());
    assert_eq!(sphere_residual(&ez), 0.0);
    let w = VectorField { comps: vec![g.sample(|x| x[0].cos()), g.sample(|x| x[0].sin()), g.zeros()] };
    assert!(sphere_residual(&w) <= 1e-15);
    let long = ez.scaled(1.1);
    assert!((sphere_residual(&long) - 0.1).abs() < 1e-15);
    assert_eq!(renormalize_m(&long).unwrap(), ez);
    assert!(renormalize_m(&ez.scaled(0.1)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(seed in 0u64..100_000, band in 1usize..12) {
        let g = grid2(32);
        let f = random_scalar(&g, band, seed, 3);
        let grid_sum = g.inner(&f, &f);
        let spec_sum = g.spectral_l2_sq(&g.forward(&f));
        prop_assert!((grid_sum - spec_sum).abs() <= 1e-12 * grid_sum);
    }

    #[test]
    fn leray_is_a_projection(seed in 0u64..100_000) {
        let g = grid2(32);
        let u = random_vector(&g, 2, 8, seed);
        let p = g.leray_project(&u);
        prop_assert!(g.divergence(&p).max_abs() <= 1e-11 * u.max_abs());
        prop_assert!(g.leray_project(&p).sub(&p).max_abs() <= 1e-12 * u.max_abs());
        // orthogonal: ⟨u − Pu, Pu⟩ = 0
        let ip = g.inner_vec(&u.sub(&p), &p);
        prop_assert!(ip.abs() <= 1e-12 * g.inner_vec(&u, &u));
    }

    #[test]
    fn truncation_never_grows_norms(seed in 0u64..100_000, k in 0.5f64..12.0) {
        let g = grid2(32);
        let f = random_scalar(&g, 10, seed, 4);
        let t = g.truncate(&f, k);
        prop_assert!(g.inner(&t, &t) <= g.inner(&f, &f) * (1.0 + 1e-13));
    }

    #[test]
    fn deformation_round_trip(seed in 0u64..100_000, scale in 0.0f64..0.3) {
        let g = grid2(16);
        let f = random_matrix(&g, 3, seed, scale / 3.0);
        if let Ok(gm) = f_to_g(&f) {
            prop_assert!(g_to_f(&gm).unwrap().sub(&f).max_abs() <= 1e-13);
        }
    }

    #[test]
    fn mixed_partials_commute(seed in 0u64..100_000) {
        let g = grid2(32);
        let f = random_scalar(&g, 8, seed, 5);
        let a = g.partial(&g.partial(&f, 0), 1);
        let b = g.derivative(&f, &[1, 1]).unwrap();
        prop_assert!(max_diff(&a, &b) <= 1e-11 * f.max_abs().max(1.0));
    }
}
