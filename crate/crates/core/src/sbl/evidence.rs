use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::cholesky_lower;

/// `−K log|Σ_y| − Σ_k y_kᴴ Σ_y⁻¹ y_k` with `Σ_y = σ² I + A diag(ψ) Aᴴ` (dense; small problems).
pub fn log_evidence(dense: &DMatrix<Complex64>, noise_var: f64, psi: &[f64], y: &DMatrix<Complex64>) -> Result<f64> {
    if psi.len() != dense.ncols() || y.nrows() != dense.nrows() {
        return Err(Error::Dimension("evidence inputs do not conform".into()));
    }
    let mut scaled = dense.clone();
    for (j, &p) in psi.iter().enumerate() {
        scaled.column_mut(j).scale_mut(p);
    }
    let mut cov = scaled * dense.adjoint();
    for i in 0..cov.nrows() {
        cov[(i, i)] += noise_var;
    }
    let l = cholesky_lower(&cov).ok_or(Error::NotPositiveDefinite)?;
    let log_det: f64 = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    let white = l.solve_lower_triangular(y).ok_or(Error::NotPositiveDefinite)?;
    let quad: f64 = white.iter().map(|z| z.norm_sqr()).sum();
    Ok(-(y.ncols() as f64) * log_det - quad)
}
