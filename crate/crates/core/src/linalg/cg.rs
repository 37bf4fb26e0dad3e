use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::operator::{inner, LinearOperator};
use crate::error::{Error, Result};

/// Stopping rule and optional Jacobi preconditioning for [`cg_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct CgOptions {
    /// Relative residual target `||C w - b|| <= tol * ||b||`.
    pub tol: f64,
    /// Iteration cap per column; `None` means the operator dimension.
    pub max_iter: Option<usize>,
    /// Inverse of the operator diagonal, used as a Jacobi preconditioner.
    pub jacobi: Option<Vec<f64>>,
    /// Solve right-hand sides on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: None,
            jacobi: None,
            parallel: false,
        }
    }
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Per-column convergence record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CgReport {
    pub iterations: Vec<usize>,
    pub final_residual_norm: Vec<f64>,
    pub converged: Vec<bool>,
}

impl CgReport {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn max_iterations(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }
}

struct ColumnResult {
    x: Vec<Complex64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn solve_column<C: LinearOperator + ?Sized>(
    op: &C,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    tol: f64,
    max_iter: usize,
    jacobi: Option<&[f64]>,
) -> ColumnResult {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return ColumnResult {
            x: vec![zero; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let mut x = vec![zero; n];
    let mut r = b.to_vec();
    if let Some(x0) = x0 {
        x.copy_from_slice(x0);
        let mut cx = vec![zero; n];
        op.apply_into(&x, &mut cx);
        r.iter_mut().zip(&cx).for_each(|(ri, ci)| *ri -= ci);
    }
    let target = tol * b_norm;
    let precondition = |r: &[Complex64], z: &mut Vec<Complex64>| match jacobi {
        Some(m) => z.iter_mut().zip(r).zip(m).for_each(|((zi, ri), mi)| *zi = ri * *mi),
        None => z.copy_from_slice(r),
    };

    let mut z = vec![zero; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut cp = vec![zero; n];
    let mut rz = inner(&r, &z).re;
    let mut res = norm(&r);
    let mut it = 0;
    while res > target && it < max_iter {
        op.apply_into(&p, &mut cp);
        let curvature = inner(&p, &cp).re;
        if curvature <= 0.0 || !curvature.is_finite() {
            break;
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= cp[i] * alpha;
        }
        it += 1;
        res = norm(&r);
        if res <= target {
            break;
        }
        precondition(&r, &mut z);
        let rz_next = inner(&r, &z).re;
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + p[i] * beta;
        }
    }
    ColumnResult {
        x,
        iterations: it,
        residual: res,
        converged: res <= target,
    }
}

/// Solves `C W = B` column by column with (optionally Jacobi-preconditioned)
/// conjugate gradients. `C` must be Hermitian positive definite.
///
/// Hitting `max_iter` is not an error: the best iterate is returned and the
/// column is flagged in the report.
pub fn cg_solve<C: LinearOperator + ?Sized>(
    op: &C,
    b: &DMatrix<Complex64>,
    opts: &CgOptions,
) -> Result<(DMatrix<Complex64>, CgReport)> {
    cg_solve_from(op, b, None, opts)
}

/// [`cg_solve`] started from `x0` instead of zero. The stopping rule is still
/// relative to `||b||`.
pub fn cg_solve_from<C: LinearOperator + ?Sized>(
    op: &C,
    b: &DMatrix<Complex64>,
    x0: Option<&DMatrix<Complex64>>,
    opts: &CgOptions,
) -> Result<(DMatrix<Complex64>, CgReport)> {
    let n = op.ncols();
    if let Some(x0) = x0 {
        if x0.shape() != b.shape() {
            return Err(Error::Dimension(
                "initial guess shape differs from right-hand side".into(),
            ));
        }
        if x0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("CG initial guess"));
        }
    }
    if op.nrows() != n {
        return Err(Error::Dimension(format!(
            "CG operator must be square, got {}x{}",
            op.nrows(),
            n
        )));
    }
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, operator has {}",
            b.nrows(),
            n
        )));
    }
    if b.ncols() == 0 {
        return Err(Error::InvalidArgument(
            "at least one right-hand side is required".into(),
        ));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "CG tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("CG right-hand side"));
    }
    if let Some(m) = &opts.jacobi {
        if m.len() != n {
            return Err(Error::Dimension("Jacobi preconditioner length".into()));
        }
    }
    let max_iter = opts.max_iter.unwrap_or(n);
    let jacobi = opts.jacobi.as_deref();
    let solve = |j: usize| {
        let guess = x0.map(|x| x.column(j));
        solve_column(
            op,
            b.column(j).as_slice(),
            guess.as_ref().map(|g| g.as_slice()),
            opts.tol,
            max_iter,
            jacobi,
        )
    };
    let columns: Vec<ColumnResult> = if opts.parallel {
        (0..b.ncols()).into_par_iter().map(solve).collect()
    } else {
        (0..b.ncols()).map(solve).collect()
    };

    let mut w = DMatrix::zeros(n, b.ncols());
    let mut report = CgReport::default();
    for (j, col) in columns.into_iter().enumerate() {
        w.column_mut(j).as_mut_slice().copy_from_slice(&col.x);
        report.iterations.push(col.iterations);
        report.final_residual_norm.push(col.residual);
        report.converged.push(col.converged);
    }
    Ok((w, report))
}
