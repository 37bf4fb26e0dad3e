use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::ConvolutionDictionary;

/// Bayesian CRB on `E||Ĥ − H||_F²` for Gaussian rows with known variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcrbResult {
    /// `K · Tr[(A^H A/σ² + Ψ^{-1})^{-1}]`.
    pub total: f64,
    /// `total / (NMR · K)`, the bound on the per-entry mean squared error.
    pub per_entry: f64,
}

fn check(psi: &[f64], noise_var: f64) -> Result<()> {
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    if psi.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("prior variances must be positive".into()));
    }
    Ok(())
}

fn trace_inverse(gram: &DMatrix<Complex64>, psi: &[f64], noise_var: f64) -> Result<f64> {
    let mut c = gram / Complex64::new(noise_var, 0.0);
    for (i, &p) in psi.iter().enumerate() {
        c[(i, i)] += 1.0 / p;
    }
    let l = crate::linalg::cholesky_lower(&c).ok_or(Error::NotPositiveDefinite)?;
    Ok(
        crate::linalg::inverse_diagonal_from_factor(&crate::linalg::lower_inverse(&l))
            .iter()
            .sum(),
    )
}

fn result(trace: f64, n: usize, k: usize) -> BcrbResult {
    let total = trace * k as f64;
    BcrbResult {
        total,
        per_entry: total / (n * k) as f64,
    }
}

/// Bound for an arbitrary dense dictionary.
pub fn bcrb_dense(dense: &DMatrix<Complex64>, noise_var: f64, psi: &[f64], k: usize) -> Result<BcrbResult> {
    check(psi, noise_var)?;
    if psi.len() != dense.ncols() {
        return Err(Error::Dimension("psi length differs from dictionary width".into()));
    }
    let tr = trace_inverse(&crate::linalg::gram(dense), psi, noise_var)?;
    Ok(result(tr, psi.len(), k))
}

/// Bound for the stacked convolution dictionary. Its Gram matrix is block diagonal
/// with one `NR x NR` block per receiver, so only those blocks are inverted.
pub fn bcrb(dict: &ConvolutionDictionary, noise_var: f64, psi: &[f64], k: usize) -> Result<BcrbResult> {
    check(psi, noise_var)?;
    let layout = dict.layout();
    if psi.len() != layout.nmr() {
        return Err(Error::Dimension("psi length differs from NMR".into()));
    }
    let blocks = dict.blocks();
    let nr = layout.n_tx * layout.n_range;
    let mut x = DMatrix::zeros(dict.block_rows(), nr);
    for (n, b) in blocks.iter().enumerate() {
        x.columns_mut(n * layout.n_range, layout.n_range)
            .copy_from(&b.to_dense());
    }
    let gram = crate::linalg::gram(&x);
    let mut tr = 0.0;
    for m in 0..layout.n_rx {
        tr += trace_inverse(&gram, &psi[m * nr..(m + 1) * nr], noise_var)?;
    }
    Ok(result(tr, psi.len(), k))
}
