use nalgebra::DMatrix;
use num_complex::Complex64;

use super::dense_of;
use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::scene::{CcirMatrix, SparsityKind, SparsityModel};
use crate::signal::Layout;

/// Relative pivot size below which an active subdictionary counts as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Least squares `min ||Y − Φ X||_F` by QR; fails when `Φ` loses rank.
pub(crate) fn least_squares(phi: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let qr = phi.clone().qr();
    let r = qr.r();
    let max = (0..r.ncols()).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if r.ncols() > r.nrows() || (0..r.ncols()).any(|i| r[(i, i)].norm() <= RANK_TOL * max) || max == 0.0 {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().ad_mul(y);
    r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)
}

/// Simultaneous orthogonal matching pursuit with a fixed number of rows.
///
/// Each step adds the column maximizing `Σ_k |<a_i, r_k>|` and refits all active
/// rows by least squares.
pub fn somp<D: LinearOperator + ?Sized>(
    y: &DMatrix<Complex64>,
    dict: &D,
    layout: Layout,
    target_sparsity: usize,
) -> Result<CcirMatrix> {
    let n = dict.ncols();
    if target_sparsity > n || layout.nmr() != n {
        return Err(Error::InvalidArgument(format!(
            "target sparsity {target_sparsity} with {n} columns"
        )));
    }
    if y.nrows() != dict.nrows() {
        return Err(Error::Dimension("measurement rows differ from dictionary rows".into()));
    }
    let a = dense_of(dict)?;
    let mut selected: Vec<usize> = Vec::with_capacity(target_sparsity);
    let mut chosen = vec![false; n];
    let mut residual = y.clone();
    let mut coef = DMatrix::zeros(0, y.ncols());
    for _ in 0..target_sparsity {
        let corr = crate::linalg::ad_mul(&a, &residual);
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for i in (0..n).filter(|&i| !chosen[i]) {
            let score: f64 = corr.row(i).iter().map(|z| z.norm()).sum();
            if score > best_score {
                best_score = score;
                best = Some(i);
            }
        }
        let i = best.ok_or(Error::RankDeficient)?;
        chosen[i] = true;
        selected.push(i);
        let phi = a.select_columns(&selected);
        coef = least_squares(&phi, y)?;
        residual = y - &phi * &coef;
    }
    let mut values = DMatrix::zeros(n, y.ncols());
    for (j, &i) in selected.iter().enumerate() {
        values.row_mut(i).copy_from(&coef.row(j));
    }
    let mut support = selected;
    support.sort_unstable();
    Ok(CcirMatrix {
        values,
        support,
        model: SparsityModel::new(SparsityKind::Row, target_sparsity),
        layout,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseOperator;

    #[test]
    fn identity_dictionary_recovers_rows() {
        let a = DenseOperator::identity(6);
        let mut y = DMatrix::zeros(6, 2);
        y[(1, 0)] = Complex64::new(3.0, 0.0);
        y[(1, 1)] = Complex64::new(0.0, -1.0);
        y[(4, 1)] = Complex64::new(2.0, 2.0);
        let h = somp(&y, &a, Layout::flat(6), 2).unwrap();
        assert_eq!(h.support, vec![1, 4]);
        assert!((&h.values - &y).norm() < 1e-12);
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        let mut m = DMatrix::zeros(3, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        let y = DMatrix::from_element(3, 1, Complex64::new(1.0, 0.0));
        assert_eq!(
            somp(&y, &DenseOperator::new(m), Layout::flat(2), 2),
            Err(Error::RankDeficient)
        );
    }
}
