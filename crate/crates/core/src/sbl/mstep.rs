//! Hyperparameter updates.
//!
//! Each update averages the posterior second moment `|M(i,k)|² + Σ(i,i)` over the
//! rows and pulses that share a hyperparameter. Sums are accumulated row by row
//! (ascending antenna pair, then row) and pulse by pulse, so the degenerate cases
//! reproduce the row update bit for bit.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::estep::PosteriorEstimate;
use super::state::HyperparamState;
use crate::scene::SparsityKind;
use crate::signal::Layout;

fn row_energy(mean: &DMatrix<Complex64>, row: usize) -> f64 {
    mean.row(row).iter().fold(0.0, |acc, z| acc + z.norm_sqr())
}

fn atom_average(mean: &DMatrix<Complex64>, diag: &[f64], rows: impl Iterator<Item = usize>, k: usize) -> f64 {
    let mut sum_sq = 0.0;
    let mut sum_diag = 0.0;
    let mut count = 0usize;
    for row in rows {
        sum_sq += row_energy(mean, row);
        sum_diag += diag[row];
        count += 1;
    }
    sum_sq / (count * k) as f64 + sum_diag / count as f64
}

/// `ψ_i = Σ(i,i) + (1/K) Σ_k |M(i,k)|²`.
pub fn row_update(mean: &DMatrix<Complex64>, diag: &[f64], k: usize) -> Vec<f64> {
    (0..mean.nrows())
        .map(|i| row_energy(mean, i) / k as f64 + diag[i])
        .collect()
}

/// Average over aligned blocks of `d` rows.
pub fn group_update(mean: &DMatrix<Complex64>, diag: &[f64], k: usize, d: usize) -> Vec<f64> {
    (0..mean.nrows() / d)
        .map(|i| atom_average(mean, diag, i * d..(i + 1) * d, k))
        .collect()
}

/// Average of range bin `i` over all antenna pairs.
pub fn joint_update(mean: &DMatrix<Complex64>, diag: &[f64], k: usize, layout: Layout) -> Vec<f64> {
    (0..layout.n_range)
        .map(|i| atom_average(mean, diag, SparsityKind::Joint.atom_rows(i, layout).into_iter(), k))
        .collect()
}

/// Average over `d` range bins and all antenna pairs.
pub fn joint_group_update(mean: &DMatrix<Complex64>, diag: &[f64], k: usize, layout: Layout, d: usize) -> Vec<f64> {
    let kind = SparsityKind::JointGroup(d);
    (0..layout.n_range / d)
        .map(|i| atom_average(mean, diag, kind.atom_rows(i, layout).into_iter(), k))
        .collect()
}

/// Dispatches to the update of `kind`.
pub fn update(kind: SparsityKind, layout: Layout, post: &PosteriorEstimate, k: usize) -> Vec<f64> {
    match kind {
        SparsityKind::Row => row_update(&post.mean, &post.diag, k),
        SparsityKind::Group(d) => group_update(&post.mean, &post.diag, k, d),
        SparsityKind::Joint => joint_update(&post.mean, &post.diag, k, layout),
        SparsityKind::JointGroup(d) => joint_group_update(&post.mean, &post.diag, k, layout, d),
    }
}

pub fn mstep_row(post: &PosteriorEstimate, k: usize) -> HyperparamState {
    let layout = Layout::flat(post.mean.nrows());
    HyperparamState::from_update(SparsityKind::Row, layout, row_update(&post.mean, &post.diag, k), 0)
}

pub fn mstep_group(post: &PosteriorEstimate, k: usize, d: usize) -> HyperparamState {
    let layout = Layout::flat(post.mean.nrows());
    HyperparamState::from_update(
        SparsityKind::Group(d),
        layout,
        group_update(&post.mean, &post.diag, k, d),
        0,
    )
}

pub fn mstep_joint(post: &PosteriorEstimate, k: usize, n_tx: usize, n_rx: usize, n_range: usize) -> HyperparamState {
    let layout = Layout::new(n_tx, n_rx, n_range);
    HyperparamState::from_update(
        SparsityKind::Joint,
        layout,
        joint_update(&post.mean, &post.diag, k, layout),
        0,
    )
}

pub fn mstep_jointgroup(
    post: &PosteriorEstimate,
    k: usize,
    n_tx: usize,
    n_rx: usize,
    n_range: usize,
    d: usize,
) -> HyperparamState {
    let layout = Layout::new(n_tx, n_rx, n_range);
    let values = joint_group_update(&post.mean, &post.diag, k, layout, d);
    HyperparamState::from_update(SparsityKind::JointGroup(d), layout, values, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbl::EStepMode;

    fn post(mean: DMatrix<Complex64>, diag: Vec<f64>) -> PosteriorEstimate {
        PosteriorEstimate {
            mean,
            diag,
            mode: EStepMode::Full,
            cg: None,
        }
    }

    #[test]
    fn zero_posterior_gives_zero_variances() {
        let p = post(DMatrix::zeros(4, 2), vec![0.0; 4]);
        let s = mstep_row(&p, 2);
        assert_eq!(s.psi, vec![0.0; 4]);
        assert_eq!(s.n_active(), 0);
    }

    #[test]
    fn row_update_arithmetic() {
        let mean = DMatrix::from_row_slice(1, 2, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]);
        let s = mstep_row(&post(mean, vec![0.5]), 2);
        assert_eq!(s.psi, vec![1.5]);
    }

    #[test]
    fn single_group_is_global_average() {
        let mean = DMatrix::from_fn(4, 3, |i, k| Complex64::new(i as f64, k as f64));
        let diag = vec![0.1, 0.2, 0.3, 0.4];
        let g = group_update(&mean, &diag, 3, 4);
        let want = mean.norm_squared() / 12.0 + 1.0 / 4.0;
        assert!((g[0] - want).abs() < 1e-14);
    }
}
