use num_complex::Complex64;

use super::operator::LinearOperator;
use crate::error::{Error, Result};

/// `C v = noise_precision * A^H (A v) + psi_inv ⊙ v`, optionally restricted to a
/// subset of columns of `A` (the active set of an SBL run).
///
/// `A^H A` is never formed; each application costs one forward and one adjoint
/// application of the dictionary.
pub struct NormalOperator<'a, D: LinearOperator + ?Sized> {
    dict: &'a D,
    psi_inv: Vec<f64>,
    noise_precision: f64,
    active: Option<Vec<usize>>,
}

impl<'a, D: LinearOperator + ?Sized> NormalOperator<'a, D> {
    /// Full-dimension operator; `psi_inv.len()` must equal `dict.ncols()`.
    pub fn new(dict: &'a D, psi_inv: Vec<f64>, noise_precision: f64) -> Result<Self> {
        if psi_inv.len() != dict.ncols() {
            return Err(Error::Dimension(format!(
                "psi_inv has {} entries, dictionary has {} columns",
                psi_inv.len(),
                dict.ncols()
            )));
        }
        Self::validate(&psi_inv, noise_precision)?;
        Ok(Self {
            dict,
            psi_inv,
            noise_precision,
            active: None,
        })
    }

    /// Operator on the columns listed in `active`; `psi_inv[j]` belongs to `active[j]`.
    pub fn restricted(dict: &'a D, active: Vec<usize>, psi_inv: Vec<f64>, noise_precision: f64) -> Result<Self> {
        if psi_inv.len() != active.len() {
            return Err(Error::Dimension("psi_inv and active set lengths differ".into()));
        }
        if active.iter().any(|&i| i >= dict.ncols()) {
            return Err(Error::Dimension("active index out of range".into()));
        }
        Self::validate(&psi_inv, noise_precision)?;
        Ok(Self {
            dict,
            psi_inv,
            noise_precision,
            active: Some(active),
        })
    }

    fn validate(psi_inv: &[f64], noise_precision: f64) -> Result<()> {
        if let Some(bad) = psi_inv.iter().find(|&&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "inverse prior variance must be positive and finite, got {bad}; prune collapsed entries first"
            )));
        }
        if !(noise_precision >= 0.0) || !noise_precision.is_finite() {
            return Err(Error::InvalidArgument(format!("noise precision {noise_precision}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.psi_inv.len()
    }

    /// Inverse of the operator diagonal, for Jacobi preconditioning.
    pub fn inverse_diagonal(&self, column_norms_sq: &[f64]) -> Vec<f64> {
        let norm_of = |j: usize| match &self.active {
            Some(a) => column_norms_sq[a[j]],
            None => column_norms_sq[j],
        };
        (0..self.dim())
            .map(|j| 1.0 / (self.noise_precision * norm_of(j) + self.psi_inv[j]))
            .collect()
    }
}

impl<D: LinearOperator + ?Sized> LinearOperator for NormalOperator<'_, D> {
    fn nrows(&self) -> usize {
        self.dim()
    }

    fn ncols(&self) -> usize {
        self.dim()
    }

    fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        let zero = Complex64::new(0.0, 0.0);
        let mut y = vec![zero; self.dict.nrows()];
        match &self.active {
            None => {
                self.dict.apply_into(x, &mut y);
                self.dict.adjoint_into(&y, out);
            }
            Some(active) => {
                let mut full = vec![zero; self.dict.ncols()];
                for (&i, &xi) in active.iter().zip(x) {
                    full[i] = xi;
                }
                self.dict.apply_into(&full, &mut y);
                self.dict.adjoint_into(&y, &mut full);
                for (o, &i) in out.iter_mut().zip(active) {
                    *o = full[i];
                }
            }
        }
        for ((o, xi), p) in out.iter_mut().zip(x).zip(&self.psi_inv) {
            *o = *o * self.noise_precision + xi * *p;
        }
    }

    fn adjoint_into(&self, y: &[Complex64], out: &mut [Complex64]) {
        self.apply_into(y, out)
    }
}

/// Applies `noise_precision * A^H A v + psi_inv ⊙ v` without forming `A^H A`.
pub fn apply_normal_operator<D: LinearOperator + ?Sized>(
    dict: &D,
    psi_inv: &[f64],
    noise_precision: f64,
    v: &[Complex64],
) -> Result<Vec<Complex64>> {
    if v.len() != dict.ncols() {
        return Err(Error::Dimension(format!(
            "vector has {} entries, expected {}",
            v.len(),
            dict.ncols()
        )));
    }
    let op = NormalOperator::new(dict, psi_inv.to_vec(), noise_precision)?;
    Ok(op.apply(v))
}
