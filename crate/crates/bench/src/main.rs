use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cofbl_bench::config::{ExperimentSpec, Overrides};
use cofbl_bench::run::{list_configs, replot, run_experiment};
use cofbl_bench::BenchError;

#[derive(Parser)]
#[command(
    name = "cofbl-bench",
    version,
    about = "Monte-Carlo experiments for covariance-free SBL"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: results/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated algorithm list, e.g. CoFBL,SOMP.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// List the configs in a directory.
    ListConfigs {
        #[arg(long, default_value = "configs")]
        dir: PathBuf,
    },
    /// Regenerate plots from a results CSV.
    Replot { results: PathBuf },
}

fn run(cli: Cli) -> Result<bool, BenchError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            algorithms,
            trials,
            threads,
        } => {
            let mut spec = ExperimentSpec::load(&config)?;
            spec.apply(&Overrides {
                seed,
                out,
                algorithms,
                trials,
            })?;
            if spec.long_running {
                eprintln!("note: {} is a long-running configuration", spec.name);
            }
            let started = std::time::Instant::now();
            let out = run_experiment(&spec, threads, Some(&config))?;
            let dir = spec.output_dir();
            println!(
                "{}: {} rows, {} failures, {} warnings in {:.1} s -> {}",
                spec.name,
                out.rows.len(),
                out.failures.len(),
                out.warnings.len(),
                started.elapsed().as_secs_f64(),
                dir.display()
            );
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            for f in &out.failures {
                eprintln!("failure: {f}");
            }
            Ok(out.ok())
        }
        Command::ListConfigs { dir } => {
            for (path, spec) in list_configs(&dir)? {
                match spec {
                    Ok(s) => {
                        let tag = if s.long_running { " [long]" } else { "" };
                        println!("{:<28} {}{tag} - {}", path.display(), s.name, s.description);
                    }
                    Err(e) => println!("{:<28} INVALID: {e}", path.display()),
                }
            }
            Ok(true)
        }
        Command::Replot { results } => {
            for p in replot(&results)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
