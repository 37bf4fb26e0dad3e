use crate::error::Result;
use crate::scene::SparsityKind;
use crate::signal::Layout;

/// Prior variances of one sparsity model.
///
/// `psi` has one entry per hyperparameter (`NMR`, `NMR/d`, `R` or `R/d`). Pruned
/// entries are marked inactive and hold `0.0`; every active entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperparamState {
    pub kind: SparsityKind,
    pub layout: Layout,
    pub psi: Vec<f64>,
    pub active: Vec<bool>,
    pub iteration: usize,
}

impl HyperparamState {
    /// All variances set to one.
    pub fn initial(kind: SparsityKind, layout: Layout) -> Result<Self> {
        kind.validate(layout)?;
        let n = kind.hyper_count(layout);
        Ok(Self {
            kind,
            layout,
            psi: vec![1.0; n],
            active: vec![true; n],
            iteration: 0,
        })
    }

    /// Wraps freshly updated values; non-positive or non-finite entries become inactive.
    pub fn from_update(kind: SparsityKind, layout: Layout, values: Vec<f64>, iteration: usize) -> Self {
        let active: Vec<bool> = values.iter().map(|&v| v > 0.0 && v.is_finite()).collect();
        let psi = values
            .iter()
            .zip(&active)
            .map(|(&v, &a)| if a { v } else { 0.0 })
            .collect();
        Self {
            kind,
            layout,
            psi,
            active,
            iteration,
        }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Deactivates entries at or below `relative * max(psi)`.
    pub fn prune(&mut self, relative: f64) {
        let max = self.psi.iter().copied().fold(0.0, f64::max);
        let cut = relative * max;
        for (p, a) in self.psi.iter_mut().zip(self.active.iter_mut()) {
            if !*a || *p <= cut {
                *a = false;
                *p = 0.0;
            }
        }
    }

    /// Keeps entries inactive that `previous` had already pruned.
    pub fn retain_pruned(&mut self, previous: &HyperparamState) {
        for ((p, a), &was) in self.psi.iter_mut().zip(self.active.iter_mut()).zip(&previous.active) {
            if !was {
                *a = false;
                *p = 0.0;
            }
        }
    }

    /// Full `NMR`-length diagonal of the prior covariance; pruned rows are zero.
    pub fn expand(&self) -> Vec<f64> {
        (0..self.layout.nmr())
            .map(|row| self.psi[self.kind.hyper_index(row, self.layout)])
            .collect()
    }
}
