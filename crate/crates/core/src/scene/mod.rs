//! Synthetic sparse CCIR scenes and noisy MMV measurements.

mod io;
mod structure;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::index::sample;

pub use io::{read_ccir, write_ccir};
pub use structure::{conforms, SparsityKind};

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::rng::{complex_normal, derive_seed, rng_from_seed};
use crate::signal::Layout;

/// A sparsity structure and how many level units are active.
///
/// `level` counts rows for [`SparsityKind::Row`]/[`SparsityKind::Group`] and range
/// bins for [`SparsityKind::Joint`]/[`SparsityKind::JointGroup`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparsityModel {
    pub kind: SparsityKind,
    pub level: usize,
}

impl SparsityModel {
    pub fn new(kind: SparsityKind, level: usize) -> Self {
        Self { kind, level }
    }

    /// Number of atoms (hyperparameter groups) that are active.
    pub fn active_atoms(&self) -> Result<usize> {
        let unit = self.kind.units_per_atom();
        if !self.level.is_multiple_of(unit) {
            return Err(Error::Infeasible(format!(
                "sparsity level {} is not a multiple of the group length {unit}",
                self.level
            )));
        }
        Ok(self.level / unit)
    }
}

/// A row-sparse `NMR x K` channel matrix with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct CcirMatrix {
    pub values: DMatrix<Complex64>,
    /// Sorted indices of the non-zero rows.
    pub support: Vec<usize>,
    pub model: SparsityModel,
    pub layout: Layout,
    pub seed: Option<u64>,
}

impl CcirMatrix {
    pub fn zeros(layout: Layout, n_pulses: usize, model: SparsityModel) -> Self {
        Self {
            values: DMatrix::zeros(layout.nmr(), n_pulses),
            support: Vec::new(),
            model,
            layout,
            seed: None,
        }
    }

    /// Wraps an estimate; the support is every row with a non-zero entry.
    pub fn from_values(values: DMatrix<Complex64>, layout: Layout, model: SparsityModel) -> Self {
        let support = (0..values.nrows())
            .filter(|&i| values.row(i).iter().any(|z| z.norm_sqr() > 0.0))
            .collect();
        Self {
            values,
            support,
            model,
            layout,
            seed: None,
        }
    }

    pub fn n_pulses(&self) -> usize {
        self.values.ncols()
    }

    /// True when rows off the support are exactly zero and rows on it are non-zero in every column.
    pub fn is_consistent(&self) -> bool {
        let mut on = vec![false; self.values.nrows()];
        self.support.iter().for_each(|&i| on[i] = true);
        (0..self.values.nrows()).all(|i| {
            let row = self.values.row(i);
            if on[i] {
                row.iter().all(|z| z.norm_sqr() > 0.0)
            } else {
                row.iter().all(|z| z.norm_sqr() == 0.0)
            }
        })
    }
}

fn draw_rows(values: &mut DMatrix<Complex64>, rows: &[usize], seed: u64) {
    let mut rng = rng_from_seed(seed);
    for &i in rows {
        for k in 0..values.ncols() {
            values[(i, k)] = complex_normal(&mut rng, 1.0);
        }
    }
}

fn rows_of_atoms(kind: SparsityKind, layout: Layout, atoms: &[usize]) -> Vec<usize> {
    let mut rows: Vec<usize> = atoms.iter().flat_map(|&a| kind.atom_rows(a, layout)).collect();
    rows.sort_unstable();
    rows
}

/// Draws a sparse CCIR matrix: support uniform over the model's atoms, entries
/// i.i.d. unit-variance complex Gaussian.
pub fn synth_ccir(layout: Layout, n_pulses: usize, model: SparsityModel, seed: u64) -> Result<CcirMatrix> {
    model.kind.validate(layout)?;
    let n_atoms = model.active_atoms()?;
    let total = model.kind.hyper_count(layout);
    if n_atoms > total {
        return Err(Error::Infeasible(format!(
            "sparsity level {} exceeds the {} available units",
            model.level,
            total * model.kind.units_per_atom()
        )));
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let atoms = sample(&mut rng, total, n_atoms).into_vec();
    let support = rows_of_atoms(model.kind, layout, &atoms);
    let mut values = DMatrix::zeros(layout.nmr(), n_pulses);
    draw_rows(&mut values, &support, derive_seed(seed, &[1]));
    Ok(CcirMatrix {
        values,
        support,
        model,
        layout,
        seed: Some(seed),
    })
}

/// Noisy measurements `Y = A H + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub y: DMatrix<Complex64>,
    pub noise: DMatrix<Complex64>,
    /// Per-entry noise variance; zero when noise is disabled.
    pub noise_variance: f64,
    pub snr_db: f64,
    pub noise_seed: u64,
    pub truth: CcirMatrix,
}

fn noise_matrix(rows: usize, cols: usize, variance: f64, seed: u64) -> DMatrix<Complex64> {
    if variance == 0.0 {
        return DMatrix::zeros(rows, cols);
    }
    let mut rng = rng_from_seed(seed);
    let mut v = DMatrix::zeros(rows, cols);
    for k in 0..cols {
        for i in 0..rows {
            v[(i, k)] = complex_normal(&mut rng, variance);
        }
    }
    v
}

/// Simulates measurements at a block SNR of `snr_db`:
/// `σ² = ||A H||_F² / (rows · K · 10^(snr/10))`. `+∞` disables noise.
pub fn simulate<D: LinearOperator + ?Sized>(
    dict: &D,
    h: &CcirMatrix,
    snr_db: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    if dict.ncols() != h.values.nrows() {
        return Err(Error::Dimension(format!(
            "dictionary has {} columns, CCIR has {} rows",
            dict.ncols(),
            h.values.nrows()
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!("snr_db = {snr_db}")));
    }
    let signal = dict.apply_matrix(&h.values);
    let power = signal.norm_squared();
    let variance = if snr_db == f64::INFINITY {
        0.0
    } else {
        if power == 0.0 {
            return Err(Error::ZeroSignal);
        }
        power / (signal.len() as f64 * 10f64.powf(snr_db / 10.0))
    };
    let noise = noise_matrix(signal.nrows(), signal.ncols(), variance, seed);
    Ok(MeasurementSet {
        y: signal + &noise,
        noise,
        noise_variance: variance,
        snr_db,
        noise_seed: seed,
        truth: h.clone(),
    })
}

/// Simulates measurements with a fixed per-entry noise variance.
pub fn simulate_with_noise_variance<D: LinearOperator + ?Sized>(
    dict: &D,
    h: &CcirMatrix,
    noise_variance: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    if dict.ncols() != h.values.nrows() {
        return Err(Error::Dimension("dictionary and CCIR dimensions differ".into()));
    }
    if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
        return Err(Error::InvalidArgument(format!("noise variance {noise_variance}")));
    }
    let signal = dict.apply_matrix(&h.values);
    let power = signal.norm_squared();
    let noise = noise_matrix(signal.nrows(), signal.ncols(), noise_variance, seed);
    let snr_db = 10.0 * (power / (signal.len() as f64 * noise_variance)).log10();
    Ok(MeasurementSet {
        y: signal + &noise,
        noise,
        noise_variance,
        snr_db,
        noise_seed: seed,
        truth: h.clone(),
    })
}

/// `ceil(x)` that ignores floating-point noise just above an integer.
fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Adds `ceil(fraction · |support|)` active rows outside the current support.
pub fn perturb_support(h: &CcirMatrix, mismatch_fraction: f64, seed: u64) -> Result<CcirMatrix> {
    if !(0.0..=1.0).contains(&mismatch_fraction) {
        return Err(Error::InvalidArgument(format!(
            "mismatch fraction {mismatch_fraction} not in [0, 1]"
        )));
    }
    let extra = ceil_count(mismatch_fraction * h.support.len() as f64);
    if extra == 0 {
        return Ok(h.clone());
    }
    let mut on = vec![false; h.values.nrows()];
    h.support.iter().for_each(|&i| on[i] = true);
    let free: Vec<usize> = (0..on.len()).filter(|&i| !on[i]).collect();
    if extra > free.len() {
        return Err(Error::Infeasible(format!(
            "{extra} extra rows requested, {} free",
            free.len()
        )));
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut added: Vec<usize> = sample(&mut rng, free.len(), extra)
        .into_iter()
        .map(|j| free[j])
        .collect();
    added.sort_unstable();
    let mut out = h.clone();
    draw_rows(&mut out.values, &added, derive_seed(seed, &[1]));
    out.support.extend(added);
    out.support.sort_unstable();
    Ok(out)
}

/// A change of the active sparsity level taking effect at `start_slot` (0-based).
///
/// `fraction` is relative: `-0.1` removes 10 %. Successive changes compound, so
/// two `-0.1` steps leave `ceil(0.81 · s)` units active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportChange {
    pub start_slot: usize,
    pub fraction: f64,
}

/// Per-slot CCIR matrices whose support follows `schedule`.
///
/// Removed or added units are whole atoms of the scene's model; entries of all
/// active rows are redrawn every slot.
pub fn evolve_scene(h: &CcirMatrix, n_slots: usize, schedule: &[SupportChange], seed: u64) -> Result<Vec<CcirMatrix>> {
    let kind = h.model.kind;
    let layout = h.layout;
    if !conforms(&h.support, kind, layout) {
        return Err(Error::Infeasible(
            "initial support does not follow its sparsity model".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[0].start_slot > w[1].start_slot) {
        return Err(Error::InvalidArgument("schedule must be sorted by start slot".into()));
    }
    let total_atoms = kind.hyper_count(layout);
    let mut active: Vec<usize> = (0..total_atoms)
        .filter(|&a| {
            kind.atom_rows(a, layout)
                .iter()
                .all(|r| h.support.binary_search(r).is_ok())
        })
        .collect();
    let initial = active.len() as f64;
    let mut factor = 1.0;
    let mut next = 0;
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let mut slots = Vec::with_capacity(n_slots);
    for slot in 0..n_slots {
        while next < schedule.len() && schedule[next].start_slot <= slot {
            factor *= 1.0 + schedule[next].fraction;
            next += 1;
            if factor < -1e-12 {
                return Err(Error::Infeasible("schedule removes more rows than exist".into()));
            }
            let target = ceil_count(initial * factor);
            if target > total_atoms {
                return Err(Error::Infeasible("schedule adds more rows than fit".into()));
            }
            if target < active.len() {
                let drop: Vec<usize> = sample(&mut rng, active.len(), active.len() - target).into_vec();
                let mut keep = vec![true; active.len()];
                drop.into_iter().for_each(|j| keep[j] = false);
                active = active.iter().zip(&keep).filter(|(_, &k)| k).map(|(&a, _)| a).collect();
            } else if target > active.len() {
                let free: Vec<usize> = (0..total_atoms).filter(|a| !active.contains(a)).collect();
                let add = sample(&mut rng, free.len(), target - active.len());
                active.extend(add.into_iter().map(|j| free[j]));
                active.sort_unstable();
            }
        }
        let support = rows_of_atoms(kind, layout, &active);
        let mut values = DMatrix::zeros(layout.nmr(), h.n_pulses());
        let slot_seed = derive_seed(seed, &[1, slot as u64]);
        draw_rows(&mut values, &support, slot_seed);
        slots.push(CcirMatrix {
            values,
            support,
            model: SparsityModel::new(kind, active.len() * kind.units_per_atom()),
            layout,
            seed: Some(slot_seed),
        });
    }
    Ok(slots)
}
