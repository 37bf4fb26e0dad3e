mod common;

use cofbl::linalg::*;
use cofbl::rng::{complex_normal, rng_from_seed};
use cofbl::signal::ConvolutionDictionary;
use common::*;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn cg_identity_and_diagonal() {
    let b = DMatrix::from_column_slice(4, 1, &[c(1.0), c(-2.0), c(3.0), Complex64::new(0.0, 1.0)]);
    let (w, rep) = cg_solve(&DenseOperator::identity(4), &b, &CgOptions::default()).unwrap();
    assert_eq!(rep.iterations, vec![1]);
    assert!(rel_err(&w, &b) < 1e-15);

    let d = DenseOperator::from_real_diagonal(&[1.0, 2.0, 4.0, 8.0]);
    let (w, _) = cg_solve(&d, &DMatrix::from_element(4, 1, c(1.0)), &CgOptions::with_tol(1e-14)).unwrap();
    let want = DMatrix::from_column_slice(4, 1, &[c(1.0), c(0.5), c(0.25), c(0.125)]);
    assert!(rel_err(&w, &want) < 1e-12);
}

#[test]
fn cg_matches_dense_lu_solve() {
    let a = random_hpd(8, 11);
    let b = random_matrix(8, 3, 12);
    let (w, rep) = cg_solve(&DenseOperator::new(a.clone()), &b, &CgOptions::with_tol(1e-12)).unwrap();
    assert!(rep.all_converged());
    let lu = a.lu().solve(&b).unwrap();
    assert!(rel_err(&w, &lu) < 1e-8);
}

#[test]
fn cg_terminates_within_dimension() {
    for k in [2usize, 5, 9, 16] {
        let a = random_hpd(k, 100 + k as u64);
        let b = random_matrix(k, 2, 200 + k as u64);
        let (_, rep) = cg_solve(&DenseOperator::new(a), &b, &CgOptions::with_tol(1e-12)).unwrap();
        assert!(rep.all_converged(), "k = {k}");
        assert!(
            rep.iterations.iter().all(|&it| it <= k),
            "k = {k}: {:?}",
            rep.iterations
        );
    }
}

#[test]
fn cg_parallel_is_bit_identical() {
    let a = DenseOperator::new(random_hpd(12, 3));
    let b = random_matrix(12, 7, 4);
    let seq = cg_solve(&a, &b, &CgOptions::with_tol(1e-9)).unwrap();
    let par = cg_solve(
        &a,
        &b,
        &CgOptions {
            parallel: true,
            ..CgOptions::with_tol(1e-9)
        },
    )
    .unwrap();
    assert_eq!(seq, par);
}

#[test]
fn single_probe_on_identity_gives_ones() {
    let probes = ProbeMatrix::rademacher(5, 1, 9);
    let e = estimate_diagonal(|u| Ok(u.clone()), &probes).unwrap();
    assert_eq!(e.values, vec![1.0; 5]);
    assert!(probes.entries().iter().all(|&u| u == 1.0 || u == -1.0));
}

#[test]
fn probe_estimate_of_known_diagonal() {
    let d = [1.0, 2.0, 3.0, 4.0];
    let probes = ProbeMatrix::rademacher(4, 10_000, 21);
    let e = estimate_diagonal(|u| Ok(DVector::from_fn(4, |i, _| u[i] * d[i])), &probes).unwrap();
    // A diagonal inverse makes every probe product exact.
    for i in 0..4 {
        assert!((e.values[i] - d[i]).abs() < 1e-12);
    }
}

#[test]
fn probe_estimate_matches_dense_inverse() {
    let a = random_hpd(6, 33);
    let inv = a.clone().try_inverse().unwrap();
    let probes = ProbeMatrix::rademacher(6, 50_000, 34);
    let (w, _) = cg_solve(
        &DenseOperator::new(a),
        &probes.to_complex(),
        &CgOptions::with_tol(1e-12),
    )
    .unwrap();
    let e = diagonal_from_solutions(&probes, &w).unwrap();
    let se = e.stderr.unwrap();
    for i in 0..6 {
        let exact = inv[(i, i)].re;
        assert!(
            (e.values[i] - exact).abs() <= 3.0 * se[i],
            "entry {i}: {} vs {exact} (se {})",
            e.values[i],
            se[i]
        );
    }
}

#[test]
fn diagonal_estimator_errors() {
    let probes = ProbeMatrix::rademacher(3, 0, 1);
    assert!(estimate_diagonal(|u| Ok(u.clone()), &probes).is_err());
    let probes = ProbeMatrix::rademacher(3, 2, 1);
    assert!(estimate_diagonal(|u| Ok(u.map(|z| z * f64::NAN)), &probes).is_err());
}

#[test]
fn normal_operator_tiny_dense_case() {
    let dict = ConvolutionDictionary::from_taps(1, 2, vec![vec![c(1.0), c(0.0)]]).unwrap();
    let x = kron_dictionary(&[vec![c(1.0), c(0.0)]], 1, 2);
    assert_eq!(x.shape(), (3, 2));
    let v = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)];
    let got = apply_normal_operator(&dict, &[1.0, 1.0], 1.0, &v).unwrap();
    let vv = DVector::from_vec(v.clone());
    let want = &vv + x.ad_mul(&x) * &vv;
    for i in 0..2 {
        assert!((got[i] - want[i]).norm() < 1e-14);
    }
    assert_eq!(
        apply_normal_operator(&dict, &[1.0, 1.0], 1.0, &[c(0.0); 2]).unwrap(),
        vec![c(0.0); 2]
    );
    assert!(apply_normal_operator(&dict, &[1.0, 0.0], 1.0, &v).is_err());
}

#[test]
fn normal_operator_matches_dense_product() {
    let taps = random_taps(2, 8, 5);
    let dict = ConvolutionDictionary::from_taps(2, 4, taps.clone()).unwrap();
    let x = kron_dictionary(&taps, 2, 4);
    let mut rng = rng_from_seed(6);
    let psi_inv: Vec<f64> = (0..16).map(|i| 0.5 + i as f64 * 0.25).collect();
    let v: Vec<Complex64> = (0..16).map(|_| complex_normal(&mut rng, 1.0)).collect();
    let got = DVector::from_vec(apply_normal_operator(&dict, &psi_inv, 0.7, &v).unwrap());
    let vv = DVector::from_vec(v);
    let want = x.ad_mul(&x) * &vv * c(0.7) + DVector::from_fn(16, |i, _| vv[i] * psi_inv[i]);
    assert!((&got - &want).norm() / want.norm() < 1e-10);
}

fn adjoint_gap<O: LinearOperator>(op: &O, seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u: Vec<Complex64> = (0..op.ncols()).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let v: Vec<Complex64> = (0..op.nrows()).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let lhs = inner(&op.apply(&u), &v);
        let rhs = inner(&u, &op.adjoint(&v));
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1e-300));
    }
    worst
}

#[test]
fn operators_are_adjoint_consistent() {
    let dict = ConvolutionDictionary::from_taps(3, 7, random_taps(2, 5, 8)).unwrap();
    assert!(adjoint_gap(&dict, 1) < 1e-10);
    let psi_inv: Vec<f64> = (0..dict.ncols()).map(|i| 1.0 + i as f64).collect();
    let normal = NormalOperator::new(&dict, psi_inv.clone(), 2.0).unwrap();
    assert!(adjoint_gap(&normal, 2) < 1e-10);
    let active: Vec<usize> = (0..dict.ncols()).step_by(3).collect();
    let inv: Vec<f64> = active.iter().map(|&i| psi_inv[i]).collect();
    let restricted = NormalOperator::restricted(&dict, active, inv, 2.0).unwrap();
    assert!(adjoint_gap(&restricted, 3) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn normal_operator_agrees_with_dense(
        n_tx in 1usize..3, n_rx in 1usize..3, len in 1usize..6, n_range in 1usize..9,
        noise_precision in 0.0f64..3.0, seed in any::<u64>(),
    ) {
        let taps = random_taps(n_tx, len, seed);
        let dict = ConvolutionDictionary::from_taps(n_rx, n_range, taps.clone()).unwrap();
        let x = kron_dictionary(&taps, n_rx, n_range);
        let n = dict.ncols();
        let psi_inv: Vec<f64> = (0..n).map(|i| 0.1 + (i % 5) as f64).collect();
        let v = random_matrix(n, 1, seed ^ 0xabc);
        let got = DVector::from_vec(apply_normal_operator(&dict, &psi_inv, noise_precision, v.as_slice()).unwrap());
        let want = x.ad_mul(&x) * &v * c(noise_precision) + DMatrix::from_fn(n, 1, |i, _| v[(i, 0)] * psi_inv[i]);
        prop_assert!((DMatrix::from_column_slice(n, 1, got.as_slice()) - &want).norm() <= 1e-10 * want.norm().max(1e-300));
    }
}
