#![allow(dead_code)]

use cofbl::rng::{complex_normal, rng_from_seed};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = rng_from_seed(seed);
    DMatrix::from_fn(rows, cols, |_, _| complex_normal(&mut rng, 1.0))
}

pub fn random_taps(n_tx: usize, len: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let m = random_matrix(len, n_tx, seed);
    (0..n_tx).map(|n| m.column(n).iter().copied().collect()).collect()
}

/// Hermitian positive definite with a controlled spectrum.
pub fn random_hpd(n: usize, seed: u64) -> DMatrix<Complex64> {
    let a = random_matrix(n, n, seed);
    a.ad_mul(&a) + DMatrix::identity(n, n) * c(n as f64)
}

/// `I_M ⊗ [X_1 … X_N]` with `X_n[i, j] = x_n[i − j]`, built entry by entry.
pub fn kron_dictionary(taps: &[Vec<Complex64>], n_rx: usize, n_range: usize) -> DMatrix<Complex64> {
    let len = taps[0].len();
    let rows = len + n_range - 1;
    let mut x = DMatrix::zeros(rows, taps.len() * n_range);
    for (n, t) in taps.iter().enumerate() {
        for i in 0..rows {
            for j in 0..n_range {
                if i >= j && i - j < len {
                    x[(i, n * n_range + j)] = t[i - j];
                }
            }
        }
    }
    DMatrix::<Complex64>::identity(n_rx, n_rx).kronecker(&x)
}

pub fn rel_err(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}
