//! Covariance-free sparse Bayesian learning for simultaneously sparse MIMO
//! clutter channel impulse responses.
//!
//! Modules, bottom-up:
//! - [`linalg`]: CG solves, probe diagonal estimation, the regularized normal operator.
//! - [`signal`]: LFM waveforms and the stacked convolution dictionary.
//! - [`scene`]: synthetic sparse CCIR matrices and noisy measurements.
//! - [`sbl`]: the EM estimator with full-inversion and covariance-free E-steps.
//! - [`baselines`]: SOMP, M-FOCUSS, the Bayesian CRB and error metrics.

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod sbl;
pub mod scene;
pub mod signal;

pub use error::{Error, Result};
pub use num_complex::Complex64;
