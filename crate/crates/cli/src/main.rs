//! `qi-cd-eval`: sweeps, figure data and self-tests for the conversion
//! receiver error-probability library.

mod config;
mod csv_out;
mod error;
mod figures;
mod quantities;
mod selftest;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Config;
use error::{CliError, CliResult};
use sweep::Report;

const THREADS_ENV: &str = "QI_CD_THREADS";

#[derive(Parser)]
#[command(
    name = "qi-cd-eval",
    version,
    about = "Error probabilities of quantum-illumination receivers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the data files behind one figure.
    Figure {
        /// One of fig1, fig2a, fig2b, fig2c, fig5, fig7, fig8.
        id: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (overrides `output` in the config; default `.`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config entry, e.g. `--set n_s=1e-4`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Add linear probability columns where representable.
        #[arg(long)]
        linear: bool,
        /// Stamp the header with the current time instead of a fixed one.
        #[arg(long)]
        now: bool,
    },
    /// Tabulate the configured quantities over an M grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        now: bool,
    },
    /// Run the reduced invariant suites of every module.
    Selftest,
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::validation(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::validation(format!("thread pool: {e}")))
}

fn print_manifest(report: &Report) -> CliResult<()> {
    for (path, rows) in &report.files {
        println!("wrote {} ({rows} rows)", path.display());
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    if report.converged {
        Ok(())
    } else {
        Err(CliError::NonConvergence(
            "some quadratures or exponent estimates did not converge; see the *_converged columns"
                .into(),
        ))
    }
}

fn load(config: Option<&PathBuf>, sets: &[String], linear: bool) -> CliResult<Config> {
    let mut c = Config::load(config.map(PathBuf::as_path))?.with_overrides(sets)?;
    c.linear |= linear;
    Ok(c)
}

fn selftest() -> CliResult<()> {
    let reports = selftest::run();
    let mut failed = 0;
    for r in &reports {
        let status = if r.failures.is_empty() {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "{status} {:<15} {:>3} checks {:>10.1} ms",
            r.name, r.checks, r.millis
        );
        for f in &r.failures {
            println!("     {}: {f}", r.name);
        }
        failed += usize::from(!r.failures.is_empty());
    }
    let total: f64 = reports.iter().map(|r| r.millis).sum();
    println!(
        "{} of {} suites passed in {:.1} ms",
        reports.len() - failed,
        reports.len(),
        total
    );
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::validation(format!(
            "{failed} selftest suite(s) failed"
        )))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Figure {
            id,
            config,
            out,
            sets,
            linear,
            now,
        } => {
            let c = load(config.as_ref(), &sets, linear)?;
            let dir = out
                .or_else(|| c.output.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            let report = figures::run_figure(&id, &c, &dir, &csv_out::timestamp(now)?)?;
            print_manifest(&report)
        }
        Command::Sweep {
            config,
            sets,
            linear,
            now,
        } => {
            let c = load(Some(&config), &sets, linear)?;
            let report = sweep::run_sweep(&c, &csv_out::timestamp(now)?)?;
            print_manifest(&report)
        }
        Command::Selftest => selftest(),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors; 2 is reserved for non-convergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
