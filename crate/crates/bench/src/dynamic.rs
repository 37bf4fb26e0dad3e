//! Slot-by-slot tracking of a CCIR whose support changes over time.
//!
//! Each slot's EM run starts from the previous slot's hyperparameters, raised to
//! at least `revive_floor · max(ψ)` so that pruned entries can come back.

use std::time::Instant;

use rayon::prelude::*;

use cofbl::rng::derive_seed;
use cofbl::sbl::{HyperparamState, SblEstimator, SblProblem};
use cofbl::scene::{evolve_scene, simulate, SupportChange};
use cofbl::signal::build_dictionary;

use crate::algorithms::{sbl_config, Algorithm};
use crate::config::{DynamicSpec, ExperimentSpec};
use crate::error::{BenchError, Result};
use crate::results::{mean, ResultRow, ResultTable};
use crate::scenes::{squared_error, support_scene, TrialSeeds};
use crate::sweep::Outcome;

/// Warm start for the next slot.
pub fn revive(state: &HyperparamState, floor: f64) -> HyperparamState {
    let max = state.psi.iter().copied().fold(0.0, f64::max);
    if !(max > 0.0) {
        return HyperparamState::initial(state.kind, state.layout).unwrap_or_else(|_| state.clone());
    }
    let values = state.psi.iter().map(|&p| p.max(floor * max)).collect();
    HyperparamState::from_update(state.kind, state.layout, values, 0)
}

fn run_trial(spec: &ExperimentSpec, d: &DynamicSpec, algs: &[Algorithm], trial: usize) -> Result<Outcome> {
    let setup = spec.point(None, None)?;
    let dict = build_dictionary(&setup.radar)?;
    let layout = setup.radar.layout();
    let seeds = TrialSeeds::new(spec.master_seed, 0, trial);
    let base = support_scene(&setup, &seeds, setup.mismatch)?;
    let schedule: Vec<SupportChange> = d
        .changes
        .iter()
        .map(|c| SupportChange {
            start_slot: c.slot - 1,
            fraction: c.fraction,
        })
        .collect();
    let slots = evolve_scene(&base, d.n_slots, &schedule, derive_seed(seeds.scene, &[3]))?;

    let mut out = Outcome {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    let mut states: Vec<Option<HyperparamState>> = vec![None; algs.len()];
    for (s, truth) in slots.iter().enumerate() {
        let slot_seeds = TrialSeeds::new(spec.master_seed, s, trial);
        let meas = simulate(&dict, truth, setup.snr_db, slot_seeds.noise)?;
        let problem = SblProblem::new(&dict, layout, &meas.y, meas.noise_variance)?;
        for (a, &alg) in algs.iter().enumerate() {
            let (kind, mode) = alg
                .sbl_kind(setup.estimator_group_len)
                .ok_or_else(|| BenchError::Config(format!("{} cannot track", alg.name())))?;
            let (init, iters) = match &states[a] {
                Some(prev) => (revive(prev, d.revive_floor), d.iterations_per_slot),
                None => (HyperparamState::initial(kind, layout)?, d.first_slot_iterations),
            };
            let estimator = SblEstimator::new(sbl_config(&spec.sbl, mode, slot_seeds.estimator, iters));
            let mut row = ResultRow {
                sweep_name: "time_slots".into(),
                sweep_value: (s + 1) as f64,
                algorithm: alg.name().into(),
                trial,
                nmse: None,
                wall_ms: None,
                bcrb: None,
                sq_error: None,
                bcrb_total: None,
            };
            let start = Instant::now();
            match estimator.run_from(&problem, init, &mut |_| {}) {
                Ok(res) => {
                    row.wall_ms = spec.record_wall_time.then(|| start.elapsed().as_secs_f64() * 1e3);
                    row.nmse = Some(cofbl::baselines::nmse(&truth.values, &res.estimate.values)?);
                    row.sq_error = Some(squared_error(&truth.values, &res.estimate.values));
                    states[a] = Some(res.state);
                }
                Err(e) => {
                    out.failures
                        .push(format!("slot {} {} trial {trial}: {e}", s + 1, alg.name()));
                    states[a] = None;
                }
            }
            out.rows.push(row);
        }
    }
    Ok(out)
}

pub(crate) fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let d = spec
        .dynamic
        .as_ref()
        .ok_or_else(|| BenchError::Config("missing [dynamic] section".into()))?;
    let algs = spec.parsed_algorithms()?;
    let parts: Vec<(usize, Result<Outcome>)> = (0..spec.trials)
        .into_par_iter()
        .map(|t| (t, run_trial(spec, d, &algs, t)))
        .collect();
    let mut out = Outcome {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (t, p) in parts {
        match p {
            Ok(p) => {
                out.rows.extend(p.rows);
                out.failures.extend(p.failures);
            }
            Err(e) => out.failures.push(format!("trial {t}: {e}")),
        }
    }
    Ok(out)
}

/// Per-phase summary of a tracking run for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    /// First and last slot (1-based, inclusive).
    pub first: usize,
    pub last: usize,
    /// Mean NMSE over the last (up to) ten slots of the phase.
    pub steady: f64,
    /// Mean NMSE over slots `first + 10 ..= first + 14` (clipped to the phase).
    pub after_ten: f64,
}

/// Splits the slot-wise mean NMSE of `algorithm` into the phases of `d`.
pub fn phase_summaries(table: &ResultTable, algorithm: &str, d: &DynamicSpec) -> Vec<PhaseSummary> {
    let curve = |slot: usize| table.get(slot as f64, algorithm).and_then(|r| r.mean_nmse);
    let mut starts: Vec<usize> = std::iter::once(1).chain(d.changes.iter().map(|c| c.slot)).collect();
    starts.sort_unstable();
    starts.dedup();
    let mut out = Vec::new();
    for (i, &first) in starts.iter().enumerate() {
        let last = starts.get(i + 1).map_or(d.n_slots, |n| n - 1);
        let tail: Vec<f64> = (last.saturating_sub(9).max(first)..=last).filter_map(curve).collect();
        let early: Vec<f64> = ((first + 10).min(last)..=(first + 14).min(last))
            .filter_map(curve)
            .collect();
        out.push(PhaseSummary {
            first,
            last,
            steady: mean(&tail).unwrap_or(f64::NAN),
            after_ten: mean(&early).unwrap_or(f64::NAN),
        });
    }
    out
}
