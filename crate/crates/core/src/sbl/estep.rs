use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::HyperparamState;
use crate::error::{Error, Result};
use crate::linalg::{
    ad_mul, cg_solve_from, cholesky_lower, diagonal_from_solutions, inverse_diagonal_from_factor, lower_inverse, mul,
    CgOptions, CgReport, LinearOperator, NormalOperator, ProbeMatrix, DIAG_FLOOR,
};
use crate::signal::DENSE_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EStepMode {
    /// Dense Cholesky inversion of the posterior precision.
    Full,
    /// Conjugate gradients plus probe-based diagonal estimation.
    CovFree,
}

impl EStepMode {
    pub fn name(&self) -> &'static str {
        match self {
            EStepMode::Full => "full",
            EStepMode::CovFree => "covfree",
        }
    }
}

/// Posterior mean and (estimated) posterior variances of every row.
///
/// Rows outside the active set have zero mean and zero variance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEstimate {
    pub mean: DMatrix<Complex64>,
    pub diag: Vec<f64>,
    pub mode: EStepMode,
    /// Convergence of the CG solves; `None` in full mode.
    pub cg: Option<CgReport>,
}

/// Covariance-free E-step settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CovFreeOptions {
    pub n_probes: usize,
    pub cg_tol: f64,
    pub cg_max_iter: Option<usize>,
    pub jacobi: bool,
    /// Replace the probe estimate by the exact diagonal (dense; small problems only).
    pub exact_diagonal: bool,
    /// Start the posterior-mean solves from the previous iteration's mean.
    pub warm_start: bool,
    pub parallel: bool,
}

impl Default for CovFreeOptions {
    fn default() -> Self {
        Self {
            n_probes: 20,
            cg_tol: 1e-6,
            cg_max_iter: None,
            jacobi: false,
            exact_diagonal: false,
            warm_start: true,
            parallel: false,
        }
    }
}

/// Quantities shared by every E-step of one EM run.
pub struct EStepContext<'a, D: LinearOperator + ?Sized> {
    dict: &'a D,
    noise_var: f64,
    /// `A^H Y / σ²`.
    xhy: DMatrix<Complex64>,
    gram: Option<DMatrix<Complex64>>,
    col_norms: Vec<f64>,
}

impl<'a, D: LinearOperator + ?Sized> EStepContext<'a, D> {
    /// `dense` requests the Gram matrix `A^H A`, needed by the full E-step and the
    /// exact-diagonal debug mode; it fails above `dense_cap` columns.
    pub fn new(dict: &'a D, y: &DMatrix<Complex64>, noise_var: f64, dense: bool, dense_cap: usize) -> Result<Self> {
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        if y.nrows() != dict.nrows() {
            return Err(Error::Dimension(format!(
                "measurements have {} rows, dictionary has {}",
                y.nrows(),
                dict.nrows()
            )));
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("measurements"));
        }
        let gram = if dense {
            if dict.ncols() > dense_cap {
                return Err(Error::DenseCap {
                    size: dict.ncols(),
                    cap: dense_cap,
                });
            }
            let a = dict.to_dense();
            Some(crate::linalg::gram(&a))
        } else {
            None
        };
        let xhy = dict.adjoint_matrix(y) / Complex64::new(noise_var, 0.0);
        Ok(Self {
            dict,
            noise_var,
            xhy,
            gram,
            col_norms: dict.column_norms_sq(),
        })
    }

    pub fn n_pulses(&self) -> usize {
        self.xhy.ncols()
    }

    fn active(psi: &[f64]) -> Vec<usize> {
        (0..psi.len()).filter(|&i| psi[i] > 0.0).collect()
    }

    fn check_psi(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.dict.ncols() {
            return Err(Error::Dimension(format!(
                "psi has {} entries, expected {}",
                psi.len(),
                self.dict.ncols()
            )));
        }
        if psi.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidArgument(
                "prior variances must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Cholesky factor of the posterior precision restricted to `active`.
    /// Cholesky factor of the restricted posterior precision.
    fn dense_precision(&self, psi: &[f64], active: &[usize]) -> Result<DMatrix<Complex64>> {
        let gram = self.gram.as_ref().ok_or_else(|| {
            Error::InvalidArgument("dense E-step requested on a context built without the Gram matrix".into())
        })?;
        let n = active.len();
        let s = 1.0 / self.noise_var;
        let mut c = DMatrix::from_fn(n, n, |i, j| gram[(active[i], active[j])] * s);
        for (i, &a) in active.iter().enumerate() {
            c[(i, i)] += 1.0 / psi[a];
        }
        cholesky_lower(&c).ok_or(Error::NotPositiveDefinite)
    }

    fn scatter(&self, active: &[usize], mean_a: &DMatrix<Complex64>, diag_a: &[f64]) -> (DMatrix<Complex64>, Vec<f64>) {
        let mut mean = DMatrix::zeros(self.dict.ncols(), self.n_pulses());
        let mut diag = vec![0.0; self.dict.ncols()];
        for (i, &a) in active.iter().enumerate() {
            mean.row_mut(a).copy_from(&mean_a.row(i));
            diag[a] = diag_a[i];
        }
        (mean, diag)
    }

    fn gather_rhs(&self, active: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(active.len(), self.n_pulses(), |i, k| self.xhy[(active[i], k)])
    }

    /// `Σ = (A^H A/σ² + Ψ^{-1})^{-1}`, `M = Σ A^H Y/σ²` by dense inversion.
    pub fn full(&self, psi: &[f64]) -> Result<PosteriorEstimate> {
        self.check_psi(psi)?;
        let active = Self::active(psi);
        if active.is_empty() {
            return Ok(self.empty(EStepMode::Full));
        }
        // Σ = L⁻ᴴ L⁻¹ with C = L Lᴴ.
        let linv = lower_inverse(&self.dense_precision(psi, &active)?);
        let mean_a = ad_mul(&linv, &mul(&linv, &self.gather_rhs(&active)));
        let diag_a = inverse_diagonal_from_factor(&linv);
        let (mean, diag) = self.scatter(&active, &mean_a, &diag_a);
        Ok(PosteriorEstimate {
            mean,
            diag,
            mode: EStepMode::Full,
            cg: None,
        })
    }

    /// Solves `C [W | M] = [U | A^H Y/σ²]` by CG and estimates `diag(C^{-1})` from the
    /// probe solutions. `probes` must have `NMR` rows; only active rows are used.
    /// `guess` (an `NMR x K` mean) seeds the mean solves.
    pub fn covfree(
        &self,
        psi: &[f64],
        probes: Option<&ProbeMatrix>,
        guess: Option<&DMatrix<Complex64>>,
        opts: &CovFreeOptions,
    ) -> Result<PosteriorEstimate> {
        self.check_psi(psi)?;
        let active = Self::active(psi);
        if active.is_empty() {
            return Ok(self.empty(EStepMode::CovFree));
        }
        let probes = match (opts.exact_diagonal, probes) {
            (true, _) => None,
            (false, Some(p)) => {
                if p.dim() != self.dict.ncols() {
                    return Err(Error::Dimension(format!(
                        "probes have {} rows, expected {}",
                        p.dim(),
                        self.dict.ncols()
                    )));
                }
                Some(p.restrict_rows(&active))
            }
            (false, None) => {
                return Err(Error::InvalidArgument(
                    "covariance-free E-step needs probes or the exact diagonal".into(),
                ));
            }
        };
        let psi_inv: Vec<f64> = active.iter().map(|&a| 1.0 / psi[a]).collect();
        let op = NormalOperator::restricted(self.dict, active.clone(), psi_inv, 1.0 / self.noise_var)?;

        let n_probe_cols = probes.as_ref().map_or(0, |p| p.count());
        let k = self.n_pulses();
        let mut z = DMatrix::zeros(active.len(), n_probe_cols + k);
        if let Some(p) = &probes {
            z.columns_mut(0, n_probe_cols).copy_from(&p.to_complex());
        }
        z.columns_mut(n_probe_cols, k).copy_from(&self.gather_rhs(&active));

        let cg_opts = CgOptions {
            tol: opts.cg_tol,
            max_iter: opts.cg_max_iter,
            jacobi: opts.jacobi.then(|| op.inverse_diagonal(&self.col_norms)),
            parallel: opts.parallel,
        };
        let x0 = guess.map(|g| {
            let mut x0 = DMatrix::zeros(z.nrows(), z.ncols());
            for (i, &a) in active.iter().enumerate() {
                for j in 0..k {
                    x0[(i, n_probe_cols + j)] = g[(a, j)];
                }
            }
            x0
        });
        let (w, report) = cg_solve_from(&op, &z, x0.as_ref(), &cg_opts)?;
        let mean_a = w.columns(n_probe_cols, k).into_owned();

        let diag_a: Vec<f64> = match &probes {
            Some(p) => {
                let est = diagonal_from_solutions(p, &w.columns(0, n_probe_cols).into_owned())?;
                est.values.into_iter().map(|v| v.max(DIAG_FLOOR)).collect()
            }
            None => {
                let chol = self.dense_precision(psi, &active)?;
                inverse_diagonal_from_factor(&lower_inverse(&chol))
            }
        };
        let (mean, diag) = self.scatter(&active, &mean_a, &diag_a);
        Ok(PosteriorEstimate {
            mean,
            diag,
            mode: EStepMode::CovFree,
            cg: Some(report),
        })
    }

    fn empty(&self, mode: EStepMode) -> PosteriorEstimate {
        PosteriorEstimate {
            mean: DMatrix::zeros(self.dict.ncols(), self.n_pulses()),
            diag: vec![0.0; self.dict.ncols()],
            mode,
            cg: None,
        }
    }
}

/// One full-inversion E-step.
pub fn estep_full<D: LinearOperator + ?Sized>(
    dict: &D,
    noise_var: f64,
    state: &HyperparamState,
    y: &DMatrix<Complex64>,
) -> Result<PosteriorEstimate> {
    EStepContext::new(dict, y, noise_var, true, DENSE_CAP)?.full(&state.expand())
}

/// One covariance-free E-step. With `probes = None` the exact diagonal is used.
pub fn estep_covfree<D: LinearOperator + ?Sized>(
    dict: &D,
    noise_var: f64,
    state: &HyperparamState,
    y: &DMatrix<Complex64>,
    probes: Option<&ProbeMatrix>,
    cg_tol: f64,
    cg_max_iter: Option<usize>,
) -> Result<PosteriorEstimate> {
    let opts = CovFreeOptions {
        cg_tol,
        cg_max_iter,
        exact_diagonal: probes.is_none(),
        ..CovFreeOptions::default()
    };
    EStepContext::new(dict, y, noise_var, probes.is_none(), DENSE_CAP)?.covfree(&state.expand(), probes, None, &opts)
}
