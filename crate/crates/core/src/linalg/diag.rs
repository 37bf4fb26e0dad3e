use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{rademacher, rng_from_seed};

/// Lower bound applied to probe-based variance estimates before they reach an M-step.
pub const DIAG_FLOOR: f64 = 1e-12;

/// Columns of i.i.d. Rademacher entries used to probe an implicit inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMatrix {
    entries: DMatrix<f64>,
    seed: u64,
}

impl ProbeMatrix {
    /// Draws `count` probe vectors of length `dim`. Entries are filled column by column.
    pub fn rademacher(dim: usize, count: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut entries = DMatrix::zeros(dim, count);
        for j in 0..count {
            for i in 0..dim {
                entries[(i, j)] = rademacher(&mut rng);
            }
        }
        Self { entries, seed }
    }

    /// Keeps only the listed rows, in order.
    pub fn restrict_rows(&self, rows: &[usize]) -> Self {
        let entries = DMatrix::from_fn(rows.len(), self.count(), |i, j| self.entries[(rows[i], j)]);
        Self {
            entries,
            seed: self.seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn count(&self) -> usize {
        self.entries.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.entries.column(j).into_owned()
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.entries.map(|x| Complex64::new(x, 0.0))
    }
}

/// Probe estimate of `diag(C^{-1})` with its Monte-Carlo standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagEstimate {
    pub values: Vec<f64>,
    /// Sample standard error per entry; `None` with a single probe.
    pub stderr: Option<Vec<f64>>,
}

/// `e = (1/L) sum_l u_l ⊙ w_l` given probes `u_l` and solutions `w_l = C^{-1} u_l`.
///
/// Only the real part is kept. For complex Hermitian `C` the per-probe
/// imaginary parts are zero-mean cross terms, not round-off.
pub fn diagonal_from_solutions(probes: &ProbeMatrix, solutions: &DMatrix<Complex64>) -> Result<DiagEstimate> {
    let (dim, count) = (probes.dim(), probes.count());
    if count == 0 {
        return Err(Error::InvalidArgument(
            "diagonal estimation needs at least one probe".into(),
        ));
    }
    if solutions.shape() != (dim, count) {
        return Err(Error::Dimension(format!(
            "probe solutions are {:?}, probes are {:?}",
            solutions.shape(),
            (dim, count)
        )));
    }
    if solutions.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("probe solutions"));
    }
    let u = probes.entries();
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    for j in 0..count {
        for i in 0..dim {
            let s = u[(i, j)] * solutions[(i, j)].re;
            sum[i] += s;
            sum_sq[i] += s * s;
        }
    }
    let l = count as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / l).collect();
    let stderr = (count > 1).then(|| {
        values
            .iter()
            .zip(&sum_sq)
            .map(|(mean, sq)| {
                let var = ((sq - l * mean * mean) / (l - 1.0)).max(0.0);
                (var / l).sqrt()
            })
            .collect()
    });
    Ok(DiagEstimate { values, stderr })
}

/// Estimates `diag(C^{-1})` from probes, calling `solve(u)` for `w = C^{-1} u`.
pub fn estimate_diagonal<F>(mut solve: F, probes: &ProbeMatrix) -> Result<DiagEstimate>
where
    F: FnMut(&DVector<Complex64>) -> Result<DVector<Complex64>>,
{
    if probes.count() == 0 {
        return Err(Error::InvalidArgument(
            "diagonal estimation needs at least one probe".into(),
        ));
    }
    let mut w = DMatrix::zeros(probes.dim(), probes.count());
    for j in 0..probes.count() {
        let u = probes.column(j).map(|x| Complex64::new(x, 0.0));
        let sol = solve(&u)?;
        if sol.len() != probes.dim() {
            return Err(Error::Dimension("solver output length".into()));
        }
        w.set_column(j, &sol);
    }
    diagonal_from_solutions(probes, &w)
}
