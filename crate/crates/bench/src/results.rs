//! Per-trial rows, their aggregation, and the CSV files that carry them.

use std::path::Path;

use crate::error::{BenchError, Result};

/// Column order of `results.csv`.
pub const RESULTS_HEADER: [&str; 7] = [
    "sweep_name",
    "sweep_value",
    "algorithm",
    "trial",
    "nmse",
    "wall_ms",
    "bcrb",
];
pub const SCNR_HEADER: [&str; 5] = ["sweep_name", "sweep_value", "scenario", "trial", "scnr_db"];

/// One (sweep point, algorithm, trial) outcome. `nmse = None` marks a failed trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub algorithm: String,
    pub trial: usize,
    pub nmse: Option<f64>,
    pub wall_ms: Option<f64>,
    /// Bayesian CRB normalized by the prior's expected energy, comparable to NMSE.
    pub bcrb: Option<f64>,
    /// Unnormalized `||Ĥ - H||_F²` and bound; not written to CSV.
    pub sq_error: Option<f64>,
    pub bcrb_total: Option<f64>,
}

/// Output SCNR of one MVDR scenario in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ScnrRow {
    pub sweep_value: f64,
    pub scenario: String,
    pub trial: usize,
    pub scnr_db: f64,
}

/// Aggregate over the trials of one (sweep value, algorithm) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sweep_value: f64,
    pub algorithm: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_nmse: Option<f64>,
    /// Standard error of the mean; needs at least two trials.
    pub stderr: Option<f64>,
    pub mean_wall_ms: Option<f64>,
    pub bcrb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub sweep_name: String,
    pub rows: Vec<SummaryRow>,
}

pub fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// Standard error of the mean (sample standard deviation over `sqrt(n)`).
pub fn stderr(x: &[f64]) -> Option<f64> {
    let m = mean(x)?;
    let n = x.len();
    (n >= 2).then(|| (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt())
}

/// Labels in order of first appearance.
pub fn labels_of<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.iter().any(|o| o == n) {
            out.push(n.to_string());
        }
    }
    out
}

impl ResultTable {
    pub fn from_rows(rows: &[ResultRow]) -> Self {
        let sweep_name = rows.first().map(|r| r.sweep_name.clone()).unwrap_or_default();
        let mut values: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let labels = labels_of(rows.iter().map(|r| r.algorithm.as_str()));
        let mut out = Vec::new();
        for &v in &values {
            for label in &labels {
                let cell: Vec<&ResultRow> = rows
                    .iter()
                    .filter(|r| r.sweep_value == v && &r.algorithm == label)
                    .collect();
                if cell.is_empty() {
                    continue;
                }
                let ok: Vec<f64> = cell.iter().filter_map(|r| r.nmse).collect();
                let wall: Vec<f64> = cell.iter().filter_map(|r| r.wall_ms).collect();
                let bound: Vec<f64> = cell.iter().filter_map(|r| r.bcrb).collect();
                out.push(SummaryRow {
                    sweep_value: v,
                    algorithm: label.clone(),
                    trials: ok.len(),
                    failures: cell.len() - ok.len(),
                    mean_nmse: mean(&ok),
                    stderr: stderr(&ok),
                    mean_wall_ms: mean(&wall),
                    bcrb: mean(&bound),
                });
            }
        }
        Self { sweep_name, rows: out }
    }

    pub fn get(&self, value: f64, algorithm: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == value && r.algorithm == algorithm)
    }

    pub fn labels(&self) -> Vec<String> {
        labels_of(self.rows.iter().map(|r| r.algorithm.as_str()))
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().map(|r| r.sweep_value).collect();
        v.dedup();
        v
    }
}

/// Paired comparison of two labels over shared trials: mean and standard error
/// of `nmse(b) - nmse(a)` at one sweep value.
pub fn paired_difference(rows: &[ResultRow], value: f64, a: &str, b: &str) -> Option<(f64, f64)> {
    let pick = |label: &str| -> Vec<(usize, f64)> {
        rows.iter()
            .filter(|r| r.sweep_value == value && r.algorithm == label)
            .filter_map(|r| r.nmse.map(|n| (r.trial, n)))
            .collect()
    };
    let (ra, rb) = (pick(a), pick(b));
    let diffs: Vec<f64> = ra
        .iter()
        .filter_map(|(t, x)| rb.iter().find(|(u, _)| u == t).map(|(_, y)| y - x))
        .collect();
    Some((mean(&diffs)?, stderr(&diffs)?))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| BenchError::Runtime(format!("line {line}: bad number `{field}`")))
}

/// Sorts rows by sweep value, then by `label_order`, then by trial.
pub fn sort_rows(rows: &mut [ResultRow], label_order: &[String]) {
    let rank = |l: &str| label_order.iter().position(|x| x == l).unwrap_or(usize::MAX);
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then(rank(&a.algorithm).cmp(&rank(&b.algorithm)))
            .then(a.algorithm.cmp(&b.algorithm))
            .then(a.trial.cmp(&b.trial))
    });
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.algorithm.clone(),
            r.trial.to_string(),
            opt(r.nmse),
            opt(r.wall_ms),
            opt(r.bcrb),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != RESULTS_HEADER {
        return Err(BenchError::Runtime(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| BenchError::Runtime(format!("line {line}: bad {what}"));
        rows.push(ResultRow {
            sweep_name: rec[0].to_string(),
            sweep_value: rec[1].parse().map_err(|_| bad("sweep_value"))?,
            algorithm: rec[2].to_string(),
            trial: rec[3].parse().map_err(|_| bad("trial"))?,
            nmse: parse_opt(&rec[4], line)?,
            wall_ms: parse_opt(&rec[5], line)?,
            bcrb: parse_opt(&rec[6], line)?,
            sq_error: None,
            bcrb_total: None,
        });
    }
    Ok(rows)
}

pub fn write_summary_csv(path: &Path, table: &ResultTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "sweep_name",
        "sweep_value",
        "algorithm",
        "trials",
        "failures",
        "mean_nmse",
        "nmse_db",
        "stderr",
        "mean_wall_ms",
        "bcrb",
    ])?;
    for r in &table.rows {
        w.write_record([
            table.sweep_name.clone(),
            r.sweep_value.to_string(),
            r.algorithm.clone(),
            r.trials.to_string(),
            r.failures.to_string(),
            opt(r.mean_nmse),
            opt(r.mean_nmse.map(|m| 10.0 * m.log10())),
            opt(r.stderr),
            opt(r.mean_wall_ms),
            opt(r.bcrb),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scnr_csv(path: &Path, sweep_name: &str, rows: &[ScnrRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SCNR_HEADER)?;
    for r in rows {
        w.write_record([
            sweep_name.to_string(),
            r.sweep_value.to_string(),
            r.scenario.clone(),
            r.trial.to_string(),
            r.scnr_db.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scnr_csv(path: &Path) -> Result<(String, Vec<ScnrRow>)> {
    let mut rd = csv::Reader::from_path(path)?;
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != SCNR_HEADER {
        return Err(BenchError::Runtime(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut name = String::new();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| BenchError::Runtime(format!("line {}: bad {what}", i + 2));
        name = rec[0].to_string();
        rows.push(ScnrRow {
            sweep_value: rec[1].parse().map_err(|_| bad("sweep_value"))?,
            scenario: rec[2].to_string(),
            trial: rec[3].parse().map_err(|_| bad("trial"))?,
            scnr_db: rec[4].parse().map_err(|_| bad("scnr_db"))?,
        });
    }
    Ok((name, rows))
}

/// Mean SCNR per (sweep value, scenario), averaged in linear scale.
pub fn scnr_means(rows: &[ScnrRow]) -> Vec<(f64, String, f64)> {
    let mut values: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let labels = labels_of(rows.iter().map(|r| r.scenario.as_str()));
    let mut out = Vec::new();
    for &v in &values {
        for l in &labels {
            let lin: Vec<f64> = rows
                .iter()
                .filter(|r| r.sweep_value == v && &r.scenario == l)
                .map(|r| 10f64.powf(r.scnr_db / 10.0))
                .collect();
            if let Some(m) = mean(&lin) {
                out.push((v, l.clone(), 10.0 * m.log10()));
            }
        }
    }
    out
}
