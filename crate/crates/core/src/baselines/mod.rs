//! Reference estimators, the Bayesian Cramér–Rao bound and error metrics.

mod bcrb;
mod mfocuss;
mod somp;

pub use bcrb::{bcrb, bcrb_dense, BcrbResult};
pub use mfocuss::{mfocuss, MfocussOptions, MfocussReport};
pub use somp::somp;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::signal::DENSE_CAP;

/// `||Ĥ − H||_F² / ||H||_F²`.
pub fn nmse(truth: &DMatrix<Complex64>, estimate: &DMatrix<Complex64>) -> Result<f64> {
    if truth.shape() != estimate.shape() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            truth.shape(),
            estimate.shape()
        )));
    }
    let den: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    if den == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let num: f64 = truth.iter().zip(estimate.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(num / den)
}

/// `10 log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn dense_of<D: LinearOperator + ?Sized>(dict: &D) -> Result<DMatrix<Complex64>> {
    if dict.ncols() > DENSE_CAP {
        return Err(Error::DenseCap {
            size: dict.ncols(),
            cap: DENSE_CAP,
        });
    }
    Ok(dict.to_dense())
}
