//! The estimators a benchmark can run, behind one calling convention.

use std::time::Duration;

use nalgebra::DMatrix;
use num_complex::Complex64;

use cofbl::baselines::{mfocuss, somp, MfocussOptions};
use cofbl::sbl::{CovFreeOptions, EStepMode, SblConfig, SblEstimator, SblProblem};
use cofbl::scene::SparsityKind;
use cofbl::signal::{ConvolutionDictionary, Layout};

use crate::config::{MfocussSpec, SblSpec};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    SblFull,
    CoFbl,
    CoFgbl,
    CoFjbl,
    CoFjgbl,
    Somp,
    Mfocuss,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::SblFull,
        Algorithm::CoFbl,
        Algorithm::CoFgbl,
        Algorithm::CoFjbl,
        Algorithm::CoFjgbl,
        Algorithm::Somp,
        Algorithm::Mfocuss,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::SblFull => "SBL-full",
            Algorithm::CoFbl => "CoFBL",
            Algorithm::CoFgbl => "CoFGBL",
            Algorithm::CoFjbl => "CoFJBL",
            Algorithm::CoFjgbl => "CoFJGBL",
            Algorithm::Somp => "SOMP",
            Algorithm::Mfocuss => "MFOCUSS",
        }
    }

    /// Case-insensitive lookup by display name.
    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name().eq_ignore_ascii_case(s.trim()))
    }

    /// Sparsity model and E-step of the SBL variants; `None` for the baselines.
    pub fn sbl_kind(&self, d: usize) -> Option<(SparsityKind, EStepMode)> {
        match self {
            Algorithm::SblFull => Some((SparsityKind::Row, EStepMode::Full)),
            Algorithm::CoFbl => Some((SparsityKind::Row, EStepMode::CovFree)),
            Algorithm::CoFgbl => Some((SparsityKind::Group(d), EStepMode::CovFree)),
            Algorithm::CoFjbl => Some((SparsityKind::Joint, EStepMode::CovFree)),
            Algorithm::CoFjgbl => Some((SparsityKind::JointGroup(d), EStepMode::CovFree)),
            Algorithm::Somp | Algorithm::Mfocuss => None,
        }
    }
}

/// One estimation problem with the side information the baselines need.
pub struct Problem<'a> {
    pub dict: &'a ConvolutionDictionary,
    pub layout: Layout,
    pub y: &'a DMatrix<Complex64>,
    pub noise_var: f64,
    /// True number of active rows (SOMP's oracle stopping rule).
    pub support_size: usize,
    /// Seeds the probe draws of the covariance-free E-step.
    pub seed: u64,
    /// Cluster length of the grouped SBL variants.
    pub group_len: usize,
}

pub fn sbl_config(spec: &SblSpec, mode: EStepMode, seed: u64, max_iter: usize) -> SblConfig {
    SblConfig {
        mode,
        eps: spec.eps,
        max_iter,
        prune_threshold: spec.prune_threshold,
        seed,
        covfree: CovFreeOptions {
            n_probes: spec.n_probes,
            cg_tol: spec.cg_tol,
            cg_max_iter: spec.cg_max_iter,
            jacobi: spec.jacobi,
            warm_start: spec.warm_start,
            ..CovFreeOptions::default()
        },
        ..SblConfig::default()
    }
}

/// Runs `alg` and returns its CCIR estimate.
pub fn estimate(alg: Algorithm, p: &Problem<'_>, sbl: &SblSpec, mf: &MfocussSpec) -> Result<DMatrix<Complex64>> {
    match alg.sbl_kind(p.group_len) {
        Some(_) => Ok(estimate_checkpoints(alg, p, sbl, &[sbl.max_iter])?.remove(0).0),
        None if alg == Algorithm::Somp => Ok(somp(p.y, p.dict, p.layout, p.support_size)?.values),
        None => {
            let opts = MfocussOptions {
                p: mf.p,
                lambda: mf.lambda_scale * p.noise_var,
                max_iter: mf.max_iter,
                tol: mf.tol,
                weight_floor: mf.weight_floor,
            };
            Ok(mfocuss(p.y, p.dict, p.layout, &opts)?.0.values)
        }
    }
}

/// SBL estimates after each of `checkpoints` EM iterations, with the elapsed
/// time (setup included). A run that stops early repeats its final estimate.
pub fn estimate_checkpoints(
    alg: Algorithm,
    p: &Problem<'_>,
    sbl: &SblSpec,
    checkpoints: &[usize],
) -> Result<Vec<(DMatrix<Complex64>, Duration)>> {
    let (kind, mode) = alg
        .sbl_kind(p.group_len)
        .ok_or_else(|| crate::error::BenchError::Runtime(format!("{} has no EM iterations", alg.name())))?;
    let max_iter = checkpoints.iter().copied().max().unwrap_or(sbl.max_iter).max(1);
    let estimator = SblEstimator::new(sbl_config(sbl, mode, p.seed, max_iter));
    let problem = SblProblem::new(p.dict, p.layout, p.y, p.noise_var)?;
    let init = cofbl::sbl::HyperparamState::initial(kind, p.layout)?;
    let mut taken: Vec<Option<(DMatrix<Complex64>, Duration)>> = vec![None; checkpoints.len()];
    let out = estimator.run_from(&problem, init, &mut |view| {
        for (slot, _) in checkpoints.iter().enumerate().filter(|(_, &c)| c == view.iteration) {
            let mut mean = view.posterior.mean.clone();
            for (row, &psi) in view.state.expand().iter().enumerate() {
                if psi == 0.0 {
                    mean.row_mut(row).fill(Complex64::new(0.0, 0.0));
                }
            }
            taken[slot] = Some((mean, view.elapsed));
        }
    })?;
    let wall = out.trace.wall_time();
    Ok(taken
        .into_iter()
        .map(|t| t.unwrap_or_else(|| (out.estimate.values.clone(), wall)))
        .collect())
}
