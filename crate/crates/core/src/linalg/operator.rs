use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// A complex linear map with an explicit adjoint.
///
/// Implementors must satisfy `<apply(u), v> == <u, adjoint(v)>` for all conforming
/// `u`, `v`. Buffers passed to the `*_into` methods are overwritten, not accumulated.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]);
    fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]);

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.nrows()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.ncols()];
        self.adjoint_into(y, &mut out);
        out
    }

    /// Applies the operator to every column of `x`.
    fn apply_matrix(&self, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.nrows(), x.ncols());
        for j in 0..x.ncols() {
            self.apply_into(x.column(j).as_slice(), out.column_mut(j).as_mut_slice());
        }
        out
    }

    fn adjoint_matrix(&self, y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.ncols(), y.ncols());
        for j in 0..y.ncols() {
            self.adjoint_into(y.column(j).as_slice(), out.column_mut(j).as_mut_slice());
        }
        out
    }

    /// Squared Euclidean norm of every column.
    fn column_norms_sq(&self) -> Vec<f64> {
        let n = self.ncols();
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        let mut col = vec![Complex64::new(0.0, 0.0); self.nrows()];
        (0..n)
            .map(|j| {
                e[j] = Complex64::new(1.0, 0.0);
                self.apply_into(&e, &mut col);
                e[j] = Complex64::new(0.0, 0.0);
                col.iter().map(|z| z.norm_sqr()).sum()
            })
            .collect()
    }

    /// Dense materialization by probing with unit vectors.
    fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.ncols();
        let mut dense = DMatrix::zeros(self.nrows(), n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply_into(&e, dense.column_mut(j).as_mut_slice());
            e[j] = Complex64::new(0.0, 0.0);
        }
        dense
    }
}

/// `<a, b> = a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// An explicitly stored matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n))
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let v = DVector::from_iterator(d.len(), d.iter().map(|&x| Complex64::new(x, 0.0)));
        Self::new(DMatrix::from_diagonal(&v))
    }
}

impl LinearOperator for DenseOperator {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let (rows, cols) = self.matrix.shape();
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for j in 0..cols {
            let xj = x[j];
            if xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            let col = self.matrix.column(j);
            for i in 0..rows {
                out[i] += col[i] * xj;
            }
        }
    }

    fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = inner(self.matrix.column(j).as_slice(), y);
        }
    }

    fn to_dense(&self) -> DMatrix<Complex64> {
        self.matrix.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, rng_from_seed};

    #[test]
    fn dense_operator_adjoint_is_consistent() {
        let mut rng = rng_from_seed(11);
        let a = DMatrix::from_fn(5, 7, |_, _| complex_normal(&mut rng, 1.0));
        let op = DenseOperator::new(a);
        for _ in 0..100 {
            let u: Vec<_> = (0..7).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let v: Vec<_> = (0..5).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let lhs = inner(&op.apply(&u), &v);
            let rhs = inner(&u, &op.adjoint(&v));
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn probing_materialization_matches_storage() {
        let mut rng = rng_from_seed(12);
        let a = DMatrix::from_fn(4, 3, |_, _| complex_normal(&mut rng, 1.0));
        struct Wrap(DenseOperator);
        impl LinearOperator for Wrap {
            fn nrows(&self) -> usize {
                self.0.nrows()
            }
            fn ncols(&self) -> usize {
                self.0.ncols()
            }
            fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
                self.0.apply_into(x, out)
            }
            fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]) {
                self.0.adjoint_into(y, out)
            }
        }
        let w = Wrap(DenseOperator::new(a.clone()));
        assert_eq!(w.to_dense(), a);
    }
}
