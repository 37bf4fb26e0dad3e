//! Experiment dispatch and the files a run leaves behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{ExperimentKind, ExperimentSpec, SweepName};
use crate::error::{BenchError, Result};
use crate::plot::{line_chart, Series};
use crate::results::{
    read_results_csv, read_scnr_csv, scnr_means, sort_rows, write_results_csv, write_scnr_csv, write_summary_csv,
    ResultRow, ResultTable, ScnrRow,
};
use crate::{dynamic, mvdr, sweep};

/// Build identification recorded in manifests.
pub const BUILD_DESCRIBE: &str = env!("COFBL_BUILD_DESCRIBE");

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub spec: ExperimentSpec,
    /// Sorted by sweep value, curve label and trial.
    pub rows: Vec<ResultRow>,
    pub table: ResultTable,
    /// MVDR experiments only.
    pub scnr: Vec<ScnrRow>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Curve labels in reporting order: series-major, then configured algorithm order.
pub fn label_order(spec: &ExperimentSpec) -> Vec<String> {
    let mut out = Vec::new();
    for series in spec.series_values() {
        for a in &spec.algorithms {
            let name = crate::algorithms::Algorithm::parse(a).map_or(a.as_str(), |x| x.name());
            out.push(spec.label(name, series));
            if spec.kind == ExperimentKind::Mvdr {
                for f in spec.mvdr.iter().flat_map(|m| &m.mismatch_fractions) {
                    out.push(format!("{name}@mismatch={f}"));
                }
            }
        }
    }
    out
}

/// Runs the experiment in memory on a pool of `threads` workers (0 = rayon default).
pub fn execute(spec: &ExperimentSpec, threads: usize) -> Result<RunOutput> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Runtime(format!("thread pool: {e}")))?;
    let (mut rows, scnr, failures, warnings) = pool.install(|| -> Result<_> {
        Ok(match spec.kind {
            ExperimentKind::Sweep | ExperimentKind::Timing => {
                let o = sweep::run(spec)?;
                (o.rows, Vec::new(), o.failures, Vec::new())
            }
            ExperimentKind::Dynamic => {
                let o = dynamic::run(spec)?;
                (o.rows, Vec::new(), o.failures, Vec::new())
            }
            ExperimentKind::Mvdr => {
                let o = mvdr::run(spec)?;
                (o.rows, o.scnr, o.failures, o.warnings)
            }
        })
    })?;
    sort_rows(&mut rows, &label_order(spec));
    let table = ResultTable::from_rows(&rows);
    let mut warnings = warnings;
    warnings.sort();
    let mut failures = failures;
    failures.sort();
    if let (ExperimentKind::Mvdr, Some(m)) = (spec.kind, &spec.mvdr) {
        let means = scnr_means(&scnr);
        let order = mvdr::scenario_labels(m);
        for &v in &spec.sweep.values {
            if !mvdr::ordering_holds(&means, v, &order) {
                warnings.push(format!("snr={v}: mean SCNR does not follow {}", order.join(" >= ")));
            }
        }
    }
    Ok(RunOutput {
        spec: spec.clone(),
        rows,
        table,
        scnr,
        failures,
        warnings,
    })
}

/// Runs the experiment and writes every artifact into the spec's output directory.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize, config_path: Option<&Path>) -> Result<RunOutput> {
    let dir = spec.output_dir();
    fs::create_dir_all(&dir)?;
    let out = execute(spec, threads)?;
    write_artifacts(&out, &dir, config_path, threads)?;
    Ok(out)
}

pub fn write_artifacts(
    out: &RunOutput,
    dir: &Path,
    config_path: Option<&Path>,
    threads: usize,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![
        dir.join("results.csv"),
        dir.join("summary.csv"),
        dir.join("manifest.txt"),
    ];
    write_results_csv(&written[0], &out.rows)?;
    write_summary_csv(&written[1], &out.table)?;
    fs::write(&written[2], manifest(out, config_path, threads))?;
    if !out.scnr.is_empty() {
        let p = dir.join("scnr.csv");
        write_scnr_csv(&p, "snr", &out.scnr)?;
        written.push(p);
    }
    written.extend(plot_dir(dir)?);
    if out.spec.kind == ExperimentKind::Timing {
        let p = dir.join("timing.txt");
        fs::write(&p, timing_table(&out.table))?;
        written.push(p);
    }
    Ok(written)
}

fn manifest(out: &RunOutput, config_path: Option<&Path>, threads: usize) -> String {
    let spec = &out.spec;
    let mut s = String::new();
    let _ = writeln!(s, "tool: cofbl-bench {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "build: {BUILD_DESCRIBE}");
    let _ = writeln!(s, "experiment: {} ({:?})", spec.name, spec.kind);
    if let Some(p) = config_path {
        let _ = writeln!(s, "config: {}", p.display());
    }
    let _ = writeln!(s, "master_seed: {}", spec.master_seed);
    let _ = writeln!(s, "trials: {}", spec.trials);
    let _ = writeln!(s, "algorithms: {}", spec.algorithms.join(", "));
    let _ = writeln!(
        s,
        "threads: {}",
        if threads == 0 {
            "default".to_string()
        } else {
            threads.to_string()
        }
    );
    let _ = writeln!(
        s,
        "seeds: scene = derive_seed(master, [1, trial]); mismatch = derive_seed(master, [2, trial]); \
         noise = derive_seed(master, [3, point, trial]); estimator = derive_seed(master, [4, point, trial]); \
         point = sweep index (slot index for dynamic runs)"
    );
    let _ = writeln!(s, "rows: {}", out.rows.len());
    let _ = writeln!(s, "failures: {}", out.failures.len());
    for f in &out.failures {
        let _ = writeln!(s, "  - {f}");
    }
    let _ = writeln!(s, "warnings: {}", out.warnings.len());
    for w in &out.warnings {
        let _ = writeln!(s, "  - {w}");
    }
    let _ = writeln!(s, "\n[spec]\n{}", spec.to_toml());
    s
}

/// Timing table: accuracy (100·NMSE) and mean wall time per checkpoint.
pub fn timing_table(table: &ResultTable) -> String {
    let labels = table.labels();
    let mut s = String::from("iterations");
    for l in &labels {
        let _ = write!(s, " | {l} accuracy (%) | {l} time (s)");
    }
    s.push('\n');
    for v in table.sweep_values() {
        let _ = write!(s, "{v}");
        for l in &labels {
            let r = table.get(v, l);
            let acc = r
                .and_then(|r| r.mean_nmse)
                .map_or("-".into(), |m| format!("{:.2}", 100.0 * m));
            let t = r
                .and_then(|r| r.mean_wall_ms)
                .map_or("-".into(), |m| format!("{:.2}", m / 1e3));
            let _ = write!(s, " | {acc} | {t}");
        }
        s.push('\n');
    }
    s
}

fn axis_label(sweep_name: &str) -> String {
    SweepName::parse(sweep_name).map_or(sweep_name.to_string(), |n| n.label().to_string())
}

/// NMSE (and wall-time) plots of a results table.
pub fn plots_for(table: &ResultTable) -> Vec<(&'static str, String)> {
    let x = axis_label(&table.sweep_name);
    let labels = table.labels();
    let curve = |l: &str, f: &dyn Fn(&crate::results::SummaryRow) -> Option<f64>| -> Vec<(f64, f64)> {
        table
            .rows
            .iter()
            .filter(|r| r.algorithm == l)
            .filter_map(|r| f(r).map(|y| (r.sweep_value, y)))
            .collect()
    };
    let mut nmse: Vec<Series> = labels
        .iter()
        .map(|l| Series {
            label: l.clone(),
            points: curve(l, &|r| r.mean_nmse.map(|m| 10.0 * m.log10())),
            dashed: false,
        })
        .collect();
    if let Some(first) = labels.first() {
        let bound = curve(first, &|r| r.bcrb.map(|b| 10.0 * b.log10()));
        if !bound.is_empty() {
            nmse.push(Series {
                label: "BCRB".into(),
                points: bound,
                dashed: true,
            });
        }
    }
    let mut out = vec![("nmse.svg", line_chart("Normalized MSE", &x, "NMSE (dB)", &nmse))];
    let wall: Vec<Series> = labels
        .iter()
        .map(|l| Series {
            label: l.clone(),
            points: curve(l, &|r| r.mean_wall_ms),
            dashed: false,
        })
        .filter(|s| !s.points.is_empty())
        .collect();
    if !wall.is_empty() {
        out.push(("wall_ms.svg", line_chart("Mean wall time", &x, "wall time (ms)", &wall)));
    }
    out
}

pub fn scnr_plot(rows: &[ScnrRow]) -> String {
    let means = scnr_means(rows);
    let labels = crate::results::labels_of(means.iter().map(|m| m.1.as_str()));
    let series: Vec<Series> = labels
        .iter()
        .map(|l| Series {
            label: l.clone(),
            points: means.iter().filter(|m| &m.1 == l).map(|m| (m.0, m.2)).collect(),
            dashed: l == "clairvoyant",
        })
        .collect();
    line_chart("MVDR output SCNR", "SNR (dB)", "SCNR (dB)", &series)
}

/// Regenerates every plot of a results directory from its CSV files.
pub fn plot_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let rows = read_results_csv(&dir.join("results.csv"))?;
    let table = ResultTable::from_rows(&rows);
    let mut written = Vec::new();
    for (name, svg) in plots_for(&table) {
        let p = dir.join(name);
        fs::write(&p, svg)?;
        written.push(p);
    }
    let scnr = dir.join("scnr.csv");
    if scnr.exists() {
        let (_, rows) = read_scnr_csv(&scnr)?;
        let p = dir.join("scnr.svg");
        fs::write(&p, scnr_plot(&rows))?;
        written.push(p);
    }
    Ok(written)
}

/// `replot <results.csv>`: rewrites the plots next to the CSV.
pub fn replot(results_csv: &Path) -> Result<Vec<PathBuf>> {
    if !results_csv.is_file() {
        return Err(BenchError::Config(format!("{} not found", results_csv.display())));
    }
    let dir = results_csv
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    if results_csv.file_name() != Some(std::ffi::OsStr::new("results.csv")) {
        // Plot from an arbitrarily named CSV into its directory.
        let rows = read_results_csv(results_csv)?;
        let table = ResultTable::from_rows(&rows);
        let mut written = Vec::new();
        for (name, svg) in plots_for(&table) {
            let p = dir.join(name);
            fs::write(&p, svg)?;
            written.push(p);
        }
        return Ok(written);
    }
    plot_dir(dir)
}

/// Config files in `dir` with their names and descriptions.
pub fn list_configs(dir: &Path) -> Result<Vec<(PathBuf, std::result::Result<ExperimentSpec, String>)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| BenchError::Config(format!("cannot list {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let spec = ExperimentSpec::load(&p).map_err(|e| e.to_string());
            (p, spec)
        })
        .collect())
}
