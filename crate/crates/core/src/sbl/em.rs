use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::estep::{CovFreeOptions, EStepContext, EStepMode, PosteriorEstimate};
use super::mstep;
use super::state::HyperparamState;
use crate::error::{Error, Result};
use crate::linalg::{LinearOperator, ProbeMatrix};
use crate::rng::derive_seed;
use crate::scene::{conforms, CcirMatrix, SparsityKind, SparsityModel};
use crate::signal::{Layout, DENSE_CAP};

/// EM settings shared by every sparsity model.
#[derive(Debug, Clone, PartialEq)]
pub struct SblConfig {
    pub mode: EStepMode,
    /// Relative stopping tolerance on `||Δψ|| / ||ψ||`.
    pub eps: f64,
    pub max_iter: usize,
    /// Entries at or below `prune_threshold * max(ψ)` leave the active set.
    pub prune_threshold: f64,
    /// Seeds the per-iteration probe draws.
    pub seed: u64,
    pub covfree: CovFreeOptions,
    pub dense_cap: usize,
}

impl Default for SblConfig {
    fn default() -> Self {
        Self {
            mode: EStepMode::CovFree,
            eps: 1e-6,
            max_iter: 200,
            prune_threshold: 1e-6,
            seed: 0,
            covfree: CovFreeOptions::default(),
            dense_cap: DENSE_CAP,
        }
    }
}

impl SblConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.prune_threshold >= 0.0 && self.prune_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "prune threshold {} outside [0, 1)",
                self.prune_threshold
            )));
        }
        if self.mode == EStepMode::CovFree && !self.covfree.exact_diagonal && self.covfree.n_probes == 0 {
            return Err(Error::InvalidArgument(
                "covariance-free mode needs at least one probe".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `||ψ_new − ψ_old|| / ||ψ_old||`.
    pub psi_change: f64,
    /// `||Y − A M||_F²` for the posterior mean of this iteration.
    pub data_fit: f64,
    /// Wall time since the start of the run, including setup.
    pub elapsed: Duration,
    pub n_active: usize,
    pub cg_iterations: usize,
    pub cg_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    /// Every hyperparameter was pruned; the estimate is zero.
    pub all_pruned: bool,
    /// Iterations in which at least one CG column missed its tolerance.
    pub cg_failures: usize,
    pub setup: Duration,
}

impl EmTrace {
    pub fn wall_time(&self) -> Duration {
        self.records.last().map_or(self.setup, |r| r.elapsed)
    }
}

/// What an observer sees after each M-step.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub posterior: &'a PosteriorEstimate,
    pub state: &'a HyperparamState,
    pub elapsed: Duration,
}

/// Measurements and the dictionary that produced them.
pub struct SblProblem<'a, D: LinearOperator + ?Sized> {
    pub dict: &'a D,
    pub layout: Layout,
    pub y: &'a DMatrix<Complex64>,
    pub noise_var: f64,
}

impl<'a, D: LinearOperator + ?Sized> SblProblem<'a, D> {
    pub fn new(dict: &'a D, layout: Layout, y: &'a DMatrix<Complex64>, noise_var: f64) -> Result<Self> {
        if layout.nmr() != dict.ncols() {
            return Err(Error::Dimension(format!(
                "layout has {} rows, dictionary has {} columns",
                layout.nmr(),
                dict.ncols()
            )));
        }
        Ok(Self {
            dict,
            layout,
            y,
            noise_var,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SblOutput {
    pub estimate: CcirMatrix,
    pub state: HyperparamState,
    pub trace: EmTrace,
}

/// Two-phase model selection: a Row-model burn-in, then the structure that best
/// explains the emerging support.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoSelect {
    pub burn_in: usize,
    /// Rows with `ψ > support_threshold * max(ψ)` count as support.
    pub support_threshold: f64,
    /// Structures to consider besides Row.
    pub candidates: Vec<SparsityKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoOutput {
    pub selected: SparsityKind,
    pub burn_in: SblOutput,
    pub output: SblOutput,
}

/// The SBL estimator: immutable settings, one independent run per call.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SblEstimator {
    pub config: SblConfig,
}

fn fro_sq(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let num: f64 = new.iter().zip(old).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: f64 = old.iter().map(|b| b * b).sum();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

impl SblEstimator {
    pub fn new(config: SblConfig) -> Self {
        Self { config }
    }

    /// Runs EM from `ψ = 1`.
    pub fn run<D: LinearOperator + ?Sized>(
        &self,
        problem: &SblProblem<'_, D>,
        kind: SparsityKind,
    ) -> Result<SblOutput> {
        let init = HyperparamState::initial(kind, problem.layout)?;
        self.run_from(problem, init, &mut |_| {})
    }

    /// Runs EM from `init`, calling `observer` after every iteration.
    pub fn run_from<D: LinearOperator + ?Sized>(
        &self,
        problem: &SblProblem<'_, D>,
        init: HyperparamState,
        observer: &mut dyn FnMut(&IterationView<'_>),
    ) -> Result<SblOutput> {
        let cfg = &self.config;
        cfg.validate()?;
        let layout = problem.layout;
        if init.layout != layout || init.len() != init.kind.hyper_count(layout) {
            return Err(Error::Dimension(
                "initial hyperparameters do not match the layout".into(),
            ));
        }
        if init
            .active
            .iter()
            .zip(&init.psi)
            .any(|(&a, &p)| a && !(p > 0.0 && p.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "active initial hyperparameters must be positive".into(),
            ));
        }
        let start = Instant::now();
        let dense = cfg.mode == EStepMode::Full || cfg.covfree.exact_diagonal;
        let ctx = EStepContext::new(problem.dict, problem.y, problem.noise_var, dense, cfg.dense_cap)?;
        let k = problem.y.ncols();
        let nmr = layout.nmr();

        let mut trace = EmTrace {
            setup: start.elapsed(),
            ..EmTrace::default()
        };
        let mut state = init;
        let mut mean = DMatrix::zeros(nmr, k);

        for iteration in 1..=cfg.max_iter {
            let psi_full = state.expand();
            if state.n_active() == 0 {
                break;
            }
            let post = match cfg.mode {
                EStepMode::Full => ctx.full(&psi_full)?,
                EStepMode::CovFree => {
                    let probes = (!cfg.covfree.exact_diagonal).then(|| {
                        ProbeMatrix::rademacher(nmr, cfg.covfree.n_probes, derive_seed(cfg.seed, &[iteration as u64]))
                    });
                    let guess = (cfg.covfree.warm_start && iteration > 1).then_some(&mean);
                    ctx.covfree(&psi_full, probes.as_ref(), guess, &cfg.covfree)?
                }
            };
            let mut next = HyperparamState::from_update(
                state.kind,
                layout,
                mstep::update(state.kind, layout, &post, k),
                iteration,
            );
            next.retain_pruned(&state);
            next.prune(cfg.prune_threshold);

            let residual = problem.y - problem.dict.apply_matrix(&post.mean);
            let (cg_iterations, cg_converged) = post
                .cg
                .as_ref()
                .map_or((0, true), |r| (r.max_iterations(), r.all_converged()));
            if !cg_converged {
                trace.cg_failures += 1;
            }
            let change = relative_change(&next.psi, &state.psi);
            let elapsed = start.elapsed();
            trace.records.push(IterationRecord {
                iteration,
                psi_change: change,
                data_fit: fro_sq(&residual),
                elapsed,
                n_active: next.n_active(),
                cg_iterations,
                cg_converged,
            });
            observer(&IterationView {
                iteration,
                posterior: &post,
                state: &next,
                elapsed,
            });
            trace.iterations = iteration;
            mean = post.mean;
            state = next;
            if change < cfg.eps {
                trace.converged = true;
                break;
            }
        }

        // Rows pruned by the last M-step carry no prior mass.
        for (row, &p) in state.expand().iter().enumerate() {
            if p == 0.0 {
                mean.row_mut(row).fill(Complex64::new(0.0, 0.0));
            }
        }
        trace.all_pruned = state.n_active() == 0;
        let level = state.n_active() * state.kind.units_per_atom();
        let estimate = CcirMatrix::from_values(mean, layout, SparsityModel::new(state.kind, level));
        Ok(SblOutput { estimate, state, trace })
    }

    /// Row-model burn-in, structure classification, then EM under the selected model.
    pub fn run_auto<D: LinearOperator + ?Sized>(
        &self,
        problem: &SblProblem<'_, D>,
        auto: &AutoSelect,
    ) -> Result<AutoOutput> {
        let layout = problem.layout;
        let burn = SblEstimator::new(SblConfig {
            max_iter: auto.burn_in,
            ..self.config.clone()
        });
        let burn_in = burn.run(problem, SparsityKind::Row)?;
        let selected = classify_support(&burn_in.state.psi, layout, auto.support_threshold, &auto.candidates);
        let init = lift_state(&burn_in.state, selected, layout)?;
        let rest = SblEstimator::new(SblConfig {
            max_iter: self.config.max_iter.saturating_sub(auto.burn_in).max(1),
            seed: derive_seed(self.config.seed, &[u64::MAX]),
            ..self.config.clone()
        });
        let output = rest.run_from(problem, init, &mut |_| {})?;
        Ok(AutoOutput {
            selected,
            burn_in,
            output,
        })
    }
}

/// Picks the scanner-accepted structure with the fewest hyperparameters; Row always qualifies.
pub fn classify_support(row_psi: &[f64], layout: Layout, threshold: f64, candidates: &[SparsityKind]) -> SparsityKind {
    let max = row_psi.iter().copied().fold(0.0, f64::max);
    let support: Vec<usize> = (0..row_psi.len()).filter(|&i| row_psi[i] > threshold * max).collect();
    candidates
        .iter()
        .copied()
        .filter(|k| conforms(&support, *k, layout))
        .chain(std::iter::once(SparsityKind::Row))
        .min_by_key(|k| k.hyper_count(layout))
        .unwrap_or(SparsityKind::Row)
}

/// Averages row-level variances over the atoms of `kind`.
pub fn lift_state(row_state: &HyperparamState, kind: SparsityKind, layout: Layout) -> Result<HyperparamState> {
    kind.validate(layout)?;
    let full = row_state.expand();
    let values = (0..kind.hyper_count(layout))
        .map(|a| {
            let rows = kind.atom_rows(a, layout);
            rows.iter().map(|&r| full[r]).sum::<f64>() / rows.len() as f64
        })
        .collect();
    Ok(HyperparamState::from_update(kind, layout, values, row_state.iteration))
}

/// Convenience wrapper: one EM run with the given model, mode and stopping rule.
#[allow(clippy::too_many_arguments)]
pub fn run_em<D: LinearOperator + ?Sized>(
    dict: &D,
    layout: Layout,
    y: &DMatrix<Complex64>,
    noise_var: f64,
    kind: SparsityKind,
    mode: EStepMode,
    eps: f64,
    max_iter: usize,
    prune_threshold: f64,
    seed: u64,
) -> Result<(CcirMatrix, EmTrace)> {
    let estimator = SblEstimator::new(SblConfig {
        mode,
        eps,
        max_iter,
        prune_threshold,
        seed,
        ..SblConfig::default()
    });
    let out = estimator.run(&SblProblem::new(dict, layout, y, noise_var)?, kind)?;
    Ok((out.estimate, out.trace))
}
