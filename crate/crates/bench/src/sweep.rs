//! Monte-Carlo NMSE sweeps (also the timing experiment, which is an
//! `em_iterations` sweep with wall times).

use std::time::Instant;

use rayon::prelude::*;

use cofbl::baselines::nmse;
use cofbl::signal::{build_dictionary, ConvolutionDictionary};

use crate::algorithms::{estimate, estimate_checkpoints, Algorithm, Problem};
use crate::config::{ExperimentSpec, PointSetup, SweepName};
use crate::error::Result;
use crate::results::ResultRow;
use crate::scenes::{make_scene, squared_error, TrialScene, TrialSeeds};

/// A sweep point (or the single point of a checkpoint sweep) under one series value.
pub(crate) struct Cell {
    pub series: Option<f64>,
    /// Index into the sweep values; seeds the noise.
    pub point: usize,
    /// `None` for checkpoint sweeps, whose values are EM iterations.
    pub value: Option<f64>,
    pub setup: PointSetup,
    pub dict: ConvolutionDictionary,
}

pub(crate) fn cells(spec: &ExperimentSpec) -> Result<Vec<Cell>> {
    let checkpoints = spec.sweep.name == SweepName::EmIterations;
    let values: Vec<Option<f64>> = if checkpoints {
        vec![None]
    } else {
        spec.sweep.values.iter().map(|&v| Some(v)).collect()
    };
    let mut out = Vec::new();
    for series in spec.series_values() {
        for (point, &value) in values.iter().enumerate() {
            let setup = spec.point(series, value)?;
            let dict = build_dictionary(&setup.radar)?;
            out.push(Cell {
                series,
                point,
                value,
                setup,
                dict,
            });
        }
    }
    Ok(out)
}

pub(crate) struct Outcome {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<String>,
}

fn failed_rows(
    spec: &ExperimentSpec,
    cell: &Cell,
    trial: usize,
    algs: &[Algorithm],
    values: &[f64],
    err: &str,
) -> Outcome {
    let mut out = Outcome {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for &alg in algs {
        for &v in values {
            let label = spec.label(alg.name(), cell.series);
            out.failures
                .push(format!("{}={v} {label} trial {trial}: {err}", spec.sweep.name.as_str()));
            out.rows.push(blank_row(spec, v, label, trial));
        }
    }
    out
}

fn blank_row(spec: &ExperimentSpec, value: f64, algorithm: String, trial: usize) -> ResultRow {
    ResultRow {
        sweep_name: spec.sweep.name.as_str().to_string(),
        sweep_value: value,
        algorithm,
        trial,
        nmse: None,
        wall_ms: None,
        bcrb: None,
        sq_error: None,
        bcrb_total: None,
    }
}

fn run_trial(spec: &ExperimentSpec, algs: &[Algorithm], cell: &Cell, trial: usize) -> Outcome {
    let checkpoints: Vec<usize> = match cell.value {
        None => spec.sweep.values.iter().map(|&v| v as usize).collect(),
        Some(_) => Vec::new(),
    };
    let values: Vec<f64> = match cell.value {
        Some(v) => vec![v],
        None => spec.sweep.values.clone(),
    };
    let seeds = TrialSeeds::new(spec.master_seed, cell.point, trial);
    let scene = match make_scene(&cell.dict, &cell.setup, &spec.scene, &seeds) {
        Ok(s) => s,
        Err(e) => return failed_rows(spec, cell, trial, algs, &values, &format!("scene: {e}")),
    };
    let bound = if spec.bcrb {
        match scene.bcrb(&cell.dict) {
            Ok(b) => b,
            Err(e) => return failed_rows(spec, cell, trial, algs, &values, &format!("bcrb: {e}")),
        }
    } else {
        None
    };
    let problem = Problem {
        dict: &cell.dict,
        layout: cell.setup.radar.layout(),
        y: &scene.meas.y,
        noise_var: scene.meas.noise_variance,
        support_size: scene.support_size,
        seed: seeds.estimator,
        group_len: cell.setup.estimator_group_len,
    };
    let mut out = Outcome {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for &alg in algs {
        let label = spec.label(alg.name(), cell.series);
        let result: std::result::Result<Vec<(f64, nalgebra::DMatrix<num_complex::Complex64>, f64)>, String> =
            if checkpoints.is_empty() {
                let start = Instant::now();
                estimate(alg, &problem, &spec.sbl, &spec.mfocuss)
                    .map(|h| vec![(values[0], h, start.elapsed().as_secs_f64() * 1e3)])
                    .map_err(|e| e.to_string())
            } else {
                estimate_checkpoints(alg, &problem, &spec.sbl, &checkpoints)
                    .map(|v| {
                        v.into_iter()
                            .zip(&values)
                            .map(|((h, t), &x)| (x, h, t.as_secs_f64() * 1e3))
                            .collect()
                    })
                    .map_err(|e| e.to_string())
            };
        match result {
            Ok(estimates) => {
                for (value, h, ms) in estimates {
                    out.rows.push(score(
                        spec,
                        &scene,
                        bound,
                        value,
                        label.clone(),
                        trial,
                        &h,
                        ms,
                        &mut out.failures,
                    ));
                }
            }
            Err(e) => {
                for &v in &values {
                    out.failures
                        .push(format!("{}={v} {label} trial {trial}: {e}", spec.sweep.name.as_str()));
                    out.rows.push(blank_row(spec, v, label.clone(), trial));
                }
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn score(
    spec: &ExperimentSpec,
    scene: &TrialScene,
    bound: Option<f64>,
    value: f64,
    label: String,
    trial: usize,
    h: &nalgebra::DMatrix<num_complex::Complex64>,
    ms: f64,
    failures: &mut Vec<String>,
) -> ResultRow {
    let mut row = blank_row(spec, value, label, trial);
    match nmse(&scene.truth.values, h) {
        Ok(v) if v.is_finite() => {
            row.nmse = Some(v);
            row.sq_error = Some(squared_error(&scene.truth.values, h));
            row.wall_ms = spec.record_wall_time.then_some(ms);
            row.bcrb_total = bound;
            row.bcrb = bound.zip(scene.prior_energy()).map(|(b, e)| b / e);
        }
        Ok(v) => failures.push(format!(
            "{}={value} {} trial {trial}: non-finite NMSE {v}",
            row.sweep_name, row.algorithm
        )),
        Err(e) => failures.push(format!(
            "{}={value} {} trial {trial}: {e}",
            row.sweep_name, row.algorithm
        )),
    }
    row
}

pub(crate) fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let algs = spec.parsed_algorithms()?;
    let cells = cells(spec)?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    let parts: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(c, t)| run_trial(spec, &algs, &cells[c], t))
        .collect();
    let mut out = Outcome {
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for p in parts {
        out.rows.extend(p.rows);
        out.failures.extend(p.failures);
    }
    Ok(out)
}
