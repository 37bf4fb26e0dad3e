use nalgebra::DMatrix;
use num_complex::Complex64;

use super::dense_of;
use crate::error::{Error, Result};
use crate::linalg::{ad_mul, gram, mul, mul_adjoint_self, LinearOperator};
use crate::scene::{CcirMatrix, SparsityKind, SparsityModel};
use crate::signal::Layout;

/// Consecutive objective increases that count as divergence.
const DIVERGENCE_RUN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfocussOptions {
    /// Diversity exponent in `(0, 1]`.
    pub p: f64,
    /// Tikhonov regularization `λ ≥ 0`.
    pub lambda: f64,
    pub max_iter: usize,
    /// Relative change `||Ĥ_new − Ĥ||_F / ||Ĥ||_F` that stops the iteration.
    pub tol: f64,
    /// Rows whose weight falls below `weight_floor · max weight` are zeroed for good.
    pub weight_floor: f64,
}

impl Default for MfocussOptions {
    fn default() -> Self {
        Self {
            p: 0.8,
            lambda: 1e-3,
            max_iter: 200,
            tol: 1e-8,
            weight_floor: f64::EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MfocussReport {
    pub iterations: usize,
    pub converged: bool,
    /// The objective grew over ten consecutive iterations; the estimate is the
    /// best iterate seen.
    pub diverged: bool,
    pub residual_norm: f64,
    /// `||Y − AX||_F² + (2λ/p) Σ_i ||x_i||^p`, which each step should not increase.
    pub objective: f64,
}

fn hermitian_solve(mut g: DMatrix<Complex64>, lambda: f64, rhs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    for i in 0..g.nrows() {
        g[(i, i)] += lambda;
    }
    if let Some(x) = crate::linalg::hermitian_solve(&g, rhs) {
        return Ok(x);
    }
    // Singular when λ = 0: fall back to the pseudo-inverse.
    g.svd(true, true).solve(rhs, 1e-12).map_err(|_| Error::RankDeficient)
}

/// Row and column sets of `a` that share no nonzero entry with the rest, so
/// each least-squares step splits into independent problems. Columns without a
/// nonzero entry are left out; their estimate is zero.
fn diagonal_blocks(a: &DMatrix<Complex64>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (m, n) = a.shape();
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..m {
            if a[(i, j)] != Complex64::new(0.0, 0.0) {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, m + j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut blocks: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for v in 0..m + n {
        let r = root(&mut parent, v);
        let k = match blocks.iter().position(|b| b.0 == r) {
            Some(k) => k,
            None => {
                blocks.push((r, Vec::new(), Vec::new()));
                blocks.len() - 1
            }
        };
        if v < m {
            blocks[k].1.push(v);
        } else {
            blocks[k].2.push(v - m);
        }
    }
    blocks
        .into_iter()
        .filter(|b| !b.1.is_empty() && !b.2.is_empty())
        .map(|b| (b.1, b.2))
        .collect()
}

/// One diagonal block of the dictionary with its measurements.
struct Block {
    cols: Vec<usize>,
    a: DMatrix<Complex64>,
    y: DMatrix<Complex64>,
}

/// One weighted regularized least-squares step:
/// `X = W Bᴴ(BBᴴ + λI)⁻¹ Y` or `W (BᴴB + λI)⁻¹ Bᴴ Y` with `B = A W`, whichever system
/// is smaller, solved block by block.
fn focuss_step(blocks: &[Block], n: usize, w: &[f64], active: &[bool], lambda: f64) -> Result<DMatrix<Complex64>> {
    let mut x = DMatrix::zeros(n, blocks.first().map_or(0, |b| b.y.ncols()));
    for blk in blocks {
        let local: Vec<usize> = (0..blk.cols.len()).filter(|&j| active[blk.cols[j]]).collect();
        if local.is_empty() {
            continue;
        }
        let mut b = blk.a.select_columns(&local);
        for (j, &l) in local.iter().enumerate() {
            b.column_mut(j).scale_mut(w[blk.cols[l]]);
        }
        let q = if local.len() <= b.nrows() {
            hermitian_solve(gram(&b), lambda, &ad_mul(&b, &blk.y))?
        } else {
            ad_mul(&b, &hermitian_solve(mul_adjoint_self(&b), lambda, &blk.y)?)
        };
        for (j, &l) in local.iter().enumerate() {
            let i = blk.cols[l];
            x.row_mut(i).copy_from(&(q.row(j) * Complex64::new(w[i], 0.0)));
        }
    }
    Ok(x)
}

/// MMV FOCUSS: reweighted least squares with weights `||Ĥ_i||^{1−p/2}`.
pub fn mfocuss<D: LinearOperator + ?Sized>(
    y: &DMatrix<Complex64>,
    dict: &D,
    layout: Layout,
    opts: &MfocussOptions,
) -> Result<(CcirMatrix, MfocussReport)> {
    if !(opts.p > 0.0 && opts.p <= 1.0) {
        return Err(Error::InvalidArgument(format!("p must lie in (0, 1], got {}", opts.p)));
    }
    if !(opts.lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be non-negative, got {}",
            opts.lambda
        )));
    }
    if y.nrows() != dict.nrows() || layout.nmr() != dict.ncols() {
        return Err(Error::Dimension(
            "measurements, dictionary and layout do not conform".into(),
        ));
    }
    let a = dense_of(dict)?;
    let n = a.ncols();
    let residual_of = |x: &DMatrix<Complex64>| (y - mul(&a, x)).norm();
    // Each step minimizes a quadratic majorizer of this objective.
    let objective_of = |x: &DMatrix<Complex64>, res: f64| {
        let penalty: f64 = (0..n).map(|i| x.row(i).norm().powf(opts.p)).sum();
        res * res + 2.0 * opts.lambda / opts.p * penalty
    };

    let blocks: Vec<Block> = diagonal_blocks(&a)
        .into_iter()
        .map(|(rows, cols)| Block {
            a: a.select_rows(&rows).select_columns(&cols),
            y: y.select_rows(&rows),
            cols,
        })
        .collect();

    let mut w = vec![1.0; n];
    let mut active = vec![true; n];
    let mut x = focuss_step(&blocks, n, &w, &active, opts.lambda)?;
    let mut res = residual_of(&x);
    let mut obj = objective_of(&x, res);
    let (mut best, mut best_res, mut best_obj) = (x.clone(), res, obj);
    let mut rising = 0;
    let mut report = MfocussReport {
        iterations: 0,
        converged: false,
        diverged: false,
        residual_norm: res,
        objective: obj,
    };
    for it in 1..=opts.max_iter {
        report.iterations = it;
        let norms: Vec<f64> = (0..n).map(|i| x.row(i).norm()).collect();
        let exponent = 1.0 - opts.p / 2.0;
        let max_w = norms.iter().map(|v| v.powf(exponent)).fold(0.0, f64::max);
        if max_w == 0.0 {
            report.converged = true;
            break;
        }
        for i in 0..n {
            w[i] = norms[i].powf(exponent);
        }
        for i in 0..n {
            active[i] &= w[i] > opts.weight_floor * max_w;
        }
        let next = focuss_step(&blocks, n, &w, &active, opts.lambda)?;
        let scale = x.norm();
        let change = (&next - &x).norm() / if scale > 0.0 { scale } else { 1.0 };
        let next_res = residual_of(&next);
        let next_obj = objective_of(&next, next_res);
        rising = if next_obj > obj { rising + 1 } else { 0 };
        x = next;
        res = next_res;
        obj = next_obj;
        if obj < best_obj {
            (best_res, best_obj) = (res, obj);
            best = x.clone();
        }
        if !obj.is_finite() || rising >= DIVERGENCE_RUN {
            report.diverged = true;
            x = best.clone();
            (res, obj) = (best_res, best_obj);
            break;
        }
        if change < opts.tol {
            report.converged = true;
            break;
        }
    }
    report.residual_norm = res;
    report.objective = obj;
    let level = (0..n).filter(|&i| x.row(i).iter().any(|z| z.norm_sqr() > 0.0)).count();
    let h = CcirMatrix::from_values(x, layout, SparsityModel::new(SparsityKind::Row, level));
    Ok((h, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseOperator;

    #[test]
    fn zero_measurements_give_zero() {
        let a = DenseOperator::identity(4);
        let (h, rep) = mfocuss(&DMatrix::zeros(4, 2), &a, Layout::flat(4), &MfocussOptions::default()).unwrap();
        assert!(h.values.iter().all(|z| z.norm_sqr() == 0.0));
        assert!(!rep.diverged);
    }

    #[test]
    fn rejects_bad_parameters() {
        let a = DenseOperator::identity(2);
        let y = DMatrix::zeros(2, 1);
        let bad = MfocussOptions {
            p: 0.0,
            ..MfocussOptions::default()
        };
        assert!(mfocuss(&y, &a, Layout::flat(2), &bad).is_err());
        let bad = MfocussOptions {
            lambda: -1.0,
            ..MfocussOptions::default()
        };
        assert!(mfocuss(&y, &a, Layout::flat(2), &bad).is_err());
    }

    #[test]
    fn diagonal_blocks_of_interleaved_pattern() {
        // Rows {0, 2} x columns {1, 3}, rows {1} x columns {0}; column 2 is empty.
        let one = Complex64::new(1.0, 0.0);
        let mut a = DMatrix::zeros(3, 4);
        a[(0, 1)] = one;
        a[(2, 3)] = one;
        a[(2, 1)] = one;
        a[(1, 0)] = one;
        assert_eq!(diagonal_blocks(&a), vec![(vec![0, 2], vec![1, 3]), (vec![1], vec![0])]);
    }
}
