//! Sparsity structures and an independent support scanner.

use crate::error::{Error, Result};
use crate::signal::Layout;

/// Which rows of a CCIR matrix share a prior variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SparsityKind {
    /// One hyperparameter per row.
    Row,
    /// Aligned blocks of `d` consecutive rows.
    Group(usize),
    /// One hyperparameter per range bin, shared by all antenna pairs.
    Joint,
    /// Aligned blocks of `d` range bins, shared by all antenna pairs.
    JointGroup(usize),
}

impl SparsityKind {
    pub fn name(&self) -> &'static str {
        match self {
            SparsityKind::Row => "row",
            SparsityKind::Group(_) => "group",
            SparsityKind::Joint => "joint",
            SparsityKind::JointGroup(_) => "joint_group",
        }
    }

    pub fn group_len(&self) -> usize {
        match *self {
            SparsityKind::Group(d) | SparsityKind::JointGroup(d) => d,
            _ => 1,
        }
    }

    /// Checks that the structure fits the layout.
    pub fn validate(&self, layout: Layout) -> Result<()> {
        let d = self.group_len();
        if d == 0 {
            return Err(Error::Infeasible("group length must be at least 1".into()));
        }
        match self {
            SparsityKind::Group(_) if !layout.nmr().is_multiple_of(d) => Err(Error::Infeasible(format!(
                "group length {d} does not divide NMR = {}",
                layout.nmr()
            ))),
            SparsityKind::JointGroup(_) if !layout.n_range.is_multiple_of(d) => Err(Error::Infeasible(format!(
                "group length {d} does not divide R = {}",
                layout.n_range
            ))),
            _ => Ok(()),
        }
    }

    /// Number of hyperparameters: `NMR`, `NMR/d`, `R` or `R/d`.
    pub fn hyper_count(&self, layout: Layout) -> usize {
        match *self {
            SparsityKind::Row => layout.nmr(),
            SparsityKind::Group(d) => layout.nmr() / d,
            SparsityKind::Joint => layout.n_range,
            SparsityKind::JointGroup(d) => layout.n_range / d,
        }
    }

    /// Hyperparameter that governs CCIR row `row`.
    pub fn hyper_index(&self, row: usize, layout: Layout) -> usize {
        match *self {
            SparsityKind::Row => row,
            SparsityKind::Group(d) => row / d,
            SparsityKind::Joint => layout.bin_of(row),
            SparsityKind::JointGroup(d) => layout.bin_of(row) / d,
        }
    }

    /// Rows governed by hyperparameter `atom`, in ascending antenna-pair order.
    pub fn atom_rows(&self, atom: usize, layout: Layout) -> Vec<usize> {
        let pairs = || (0..layout.n_rx).flat_map(move |m| (0..layout.n_tx).map(move |n| layout.pair_offset(m, n)));
        match *self {
            SparsityKind::Row => vec![atom],
            SparsityKind::Group(d) => (atom * d..(atom + 1) * d).collect(),
            SparsityKind::Joint => pairs().map(|off| off + atom).collect(),
            SparsityKind::JointGroup(d) => pairs().flat_map(|off| off + atom * d..off + (atom + 1) * d).collect(),
        }
    }

    /// Sparsity-level units covered by one atom (rows for Row/Group, bins for Joint/JointGroup).
    pub fn units_per_atom(&self) -> usize {
        self.group_len()
    }
}

/// Returns true when `support` is a union of whole atoms of `kind`.
///
/// Works from a dense membership mask and the layout arithmetic alone; it does not
/// consult how the support was generated.
pub fn conforms(support: &[usize], kind: SparsityKind, layout: Layout) -> bool {
    let nmr = layout.nmr();
    if kind.validate(layout).is_err() || support.iter().any(|&i| i >= nmr) {
        return false;
    }
    let mut mask = vec![false; nmr];
    support.iter().for_each(|&i| mask[i] = true);
    let (n_pairs, r) = (layout.n_pairs(), layout.n_range);
    // bin_active[b] is Some(state) when all pairs agree on bin b.
    let bin_state = |b: usize| -> Option<bool> {
        let first = mask[b];
        (1..n_pairs).all(|p| mask[p * r + b] == first).then_some(first)
    };
    let blocks_uniform = |flags: &[bool], d: usize| flags.chunks(d).all(|c| c.iter().all(|&x| x == c[0]));
    match kind {
        SparsityKind::Row => true,
        SparsityKind::Group(d) => blocks_uniform(&mask, d),
        SparsityKind::Joint => (0..r).all(|b| bin_state(b).is_some()),
        SparsityKind::JointGroup(d) => {
            let bins: Option<Vec<bool>> = (0..r).map(bin_state).collect();
            bins.is_some_and(|b| blocks_uniform(&b, d))
        }
    }
}
