use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use slabkin::commands::{
    cmd_fit, cmd_limit, cmd_run, cmd_sweep, cmd_verify, default_workers, FaultMode,
};
use slabkin::config::load_config;
use slabkin::error::{CliError, Result};
use slabkin::io::{ensure_dir, read_text, records_from_csv, to_json, write_text};

#[derive(Parser)]
#[command(
    name = "slabkin",
    version,
    about = "Deterministic solver and verification harness for dissipative kinetic slab problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run: record CSV, optional snapshots, JSON summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rerun the base config across relaxation scales and tabulate rates.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated relaxation scales, each in (0, 1].
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Worker threads (default: machine parallelism).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare kinetic runs against the diffusion profile across scales.
    Limit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated relaxation scales, each in (0, 1].
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Worker threads (default: machine parallelism).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the deterministic invariant suites; nonzero exit on any failure.
    Verify {
        /// Directory for the JSON report (optional).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the randomized cases.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Inject a deliberate fault (available: flip-weight-sign).
        #[arg(long)]
        fault: Option<String>,
    },
    /// Re-fit a decay rate from an existing record CSV over [t0, t1].
    Fit {
        /// Record CSV produced by `run`.
        csv: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        /// Record column to fit.
        #[arg(long, default_value = "norm_f_minus_Mc")]
        column: String,
        /// Write the fit JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let summary = cmd_run(&cfg, &out)?;
            print!("{}", to_json(&summary)?);
            Ok(())
        }
        Command::Sweep {
            config,
            out,
            eps,
            workers,
        } => {
            let cfg = load_config(&config)?;
            let workers = workers.unwrap_or_else(default_workers);
            let summary = cmd_sweep(&cfg, &eps, &out, workers)?;
            print!("{}", to_json(&summary)?);
            if summary.partial {
                return Err(CliError::Numerical(
                    "one or more sweep members failed; see sweep.json".to_string(),
                ));
            }
            Ok(())
        }
        Command::Limit {
            config,
            out,
            eps,
            workers,
        } => {
            let cfg = load_config(&config)?;
            let workers = workers.unwrap_or_else(default_workers);
            let summary = cmd_limit(&cfg, &eps, &out, workers)?;
            print!("{}", to_json(&summary)?);
            if summary.partial {
                return Err(CliError::Numerical(
                    "one or more limit members failed; see limit.json".to_string(),
                ));
            }
            Ok(())
        }
        Command::Verify { out, seed, fault } => {
            let fault = fault.as_deref().map(FaultMode::parse).transpose()?;
            let report = cmd_verify(seed, fault, out.as_deref())?;
            for case in &report.cases {
                let status = if case.passed { "PASS" } else { "FAIL" };
                println!(
                    "{status} {}/{} residual {:.3e} bound {:.3e}",
                    case.suite, case.case, case.residual, case.bound
                );
            }
            let failed = report.cases.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Verification(format!(
                    "{failed} of {} cases failed",
                    report.cases.len()
                )));
            }
            println!("verification passed ({} cases)", report.cases.len());
            Ok(())
        }
        Command::Fit {
            csv,
            t0,
            t1,
            column,
            out,
        } => {
            let records = records_from_csv(&read_text(&csv)?)?;
            let fit = cmd_fit(&records, &column, (t0, t1))?;
            let text = to_json(&fit)?;
            print!("{text}");
            if let Some(dir) = out {
                ensure_dir(&dir)?;
                write_text(&dir.join("fit.json"), &text)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = dispatch(cli.command);
    // Wall-clock goes to stderr only; stdout and files stay deterministic.
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
