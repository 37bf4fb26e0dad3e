//! Complex linear-algebra kernels: operator abstraction, conjugate gradient with
//! multiple right-hand sides, probe-based diagonal estimation and the regularized
//! normal operator used by the covariance-free E-step.

mod cg;
mod dense;
mod diag;
mod normal;
mod operator;

pub use cg::{cg_solve, cg_solve_from, CgOptions, CgReport};
pub use dense::{
    ad_mul, cholesky_lower, gram, hermitian_solve, inverse_diagonal_from_factor, lower_inverse, mul, mul_adjoint_self,
};
pub use diag::{diagonal_from_solutions, estimate_diagonal, DiagEstimate, ProbeMatrix, DIAG_FLOOR};
pub use normal::{apply_normal_operator, NormalOperator};
pub use operator::{inner, DenseOperator, LinearOperator};

pub use num_complex::Complex64;
