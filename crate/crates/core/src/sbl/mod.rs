//! Sparse Bayesian learning by EM with full-inversion and covariance-free E-steps.

mod em;
mod estep;
mod evidence;
pub mod mstep;
mod state;

pub use em::{
    classify_support, lift_state, run_em, AutoOutput, AutoSelect, EmTrace, IterationRecord, IterationView, SblConfig,
    SblEstimator, SblOutput, SblProblem,
};
pub use estep::{estep_covfree, estep_full, CovFreeOptions, EStepContext, EStepMode, PosteriorEstimate};
pub use evidence::log_evidence;
pub use mstep::{mstep_group, mstep_joint, mstep_jointgroup, mstep_row};
pub use state::HyperparamState;
