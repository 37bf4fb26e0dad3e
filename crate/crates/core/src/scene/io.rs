//! Plain-text CCIR fixtures.
//!
//! ```text
//! ccir v1
//! layout <n_tx> <n_rx> <n_range>
//! pulses <K>
//! model <row|group|joint|joint_group> <d> <level>
//! seed <u64|none>
//! support <count>
//! row <index> <re_0> <im_0> ... <re_{K-1}> <im_{K-1}>
//! ```
//!
//! One `row` line per support row, ascending. Floats use Rust's shortest
//! round-trip formatting, so a write/read cycle is exact.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CcirMatrix, SparsityKind, SparsityModel};
use crate::error::{Error, Result};
use crate::signal::Layout;

pub fn write_ccir(h: &CcirMatrix) -> String {
    let mut out = String::from("ccir v1\n");
    let l = h.layout;
    let _ = writeln!(out, "layout {} {} {}", l.n_tx, l.n_rx, l.n_range);
    let _ = writeln!(out, "pulses {}", h.n_pulses());
    let _ = writeln!(
        out,
        "model {} {} {}",
        h.model.kind.name(),
        h.model.kind.group_len(),
        h.model.level
    );
    match h.seed {
        Some(s) => {
            let _ = writeln!(out, "seed {s}");
        }
        None => out.push_str("seed none\n"),
    }
    let _ = writeln!(out, "support {}", h.support.len());
    for &i in &h.support {
        let _ = write!(out, "row {i}");
        for z in h.values.row(i).iter() {
            let _ = write!(out, " {} {}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn fields<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<&'a str>)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| parse_err(0, format!("missing `{key}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(key) {
        return Err(parse_err(no, format!("expected `{key}`")));
    }
    Ok((no, parts.collect()))
}

fn num<T: std::str::FromStr>(no: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(no, format!("bad number `{s}`")))
}

pub fn read_ccir(text: &str) -> Result<CcirMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "ccir v1")) => {}
        _ => return Err(parse_err(1, "missing `ccir v1` header")),
    }
    let (no, f) = fields(&mut lines, "layout")?;
    if f.len() != 3 {
        return Err(parse_err(no, "layout needs three counts"));
    }
    let layout = Layout::new(num(no, f[0])?, num(no, f[1])?, num(no, f[2])?);
    let (no, f) = fields(&mut lines, "pulses")?;
    let k: usize = num(no, f.first().copied().unwrap_or(""))?;
    let (no, f) = fields(&mut lines, "model")?;
    if f.len() != 3 {
        return Err(parse_err(no, "model needs kind, group length and level"));
    }
    let d: usize = num(no, f[1])?;
    let kind = match f[0] {
        "row" => SparsityKind::Row,
        "group" => SparsityKind::Group(d),
        "joint" => SparsityKind::Joint,
        "joint_group" => SparsityKind::JointGroup(d),
        other => return Err(parse_err(no, format!("unknown model `{other}`"))),
    };
    let model = SparsityModel::new(kind, num(no, f[2])?);
    let (no, f) = fields(&mut lines, "seed")?;
    let seed = match f.first().copied() {
        Some("none") => None,
        Some(s) => Some(num(no, s)?),
        None => return Err(parse_err(no, "seed value missing")),
    };
    let (no, f) = fields(&mut lines, "support")?;
    let count: usize = num(no, f.first().copied().unwrap_or(""))?;

    let mut values = DMatrix::zeros(layout.nmr(), k);
    let mut support = Vec::with_capacity(count);
    for _ in 0..count {
        let (no, f) = fields(&mut lines, "row")?;
        if f.len() != 1 + 2 * k {
            return Err(parse_err(no, format!("row needs an index and {} numbers", 2 * k)));
        }
        let i: usize = num(no, f[0])?;
        if i >= layout.nmr() || support.last().is_some_and(|&p| p >= i) {
            return Err(parse_err(no, "row indices must be ascending and in range"));
        }
        for kk in 0..k {
            values[(i, kk)] = Complex64::new(num(no, f[1 + 2 * kk])?, num(no, f[2 + 2 * kk])?);
        }
        support.push(i);
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(no, "trailing content"));
    }
    Ok(CcirMatrix {
        values,
        support,
        model,
        layout,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::synth_ccir;

    #[test]
    fn round_trip_is_exact() {
        let h = synth_ccir(
            Layout::new(2, 2, 8),
            3,
            SparsityModel::new(SparsityKind::JointGroup(2), 4),
            17,
        )
        .unwrap();
        let text = write_ccir(&h);
        assert_eq!(read_ccir(&text).unwrap(), h);
    }

    #[test]
    fn malformed_input_is_reported() {
        assert!(read_ccir("nope").is_err());
        let h = synth_ccir(Layout::flat(4), 1, SparsityModel::new(SparsityKind::Row, 1), 2).unwrap();
        let text = write_ccir(&h).replace("support 1", "support 2");
        assert!(matches!(read_ccir(&text), Err(Error::Parse { .. })));
    }
}
