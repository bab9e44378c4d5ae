//! `hopmp`: batch runner for the verification suites.
//!
//! Exit codes: 0 all suites pass, 1 a violation or refutation was found,
//! 2 configuration error, 3 numerical failure.

mod config;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use config::{ConfigError, Overrides};
use suites::Status;

#[derive(Parser, Debug)]
#[command(name = "hopmp", version, about = "Run maximum-principle verification suites on a configured problem")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Suite to run (repeatable; replaces the configured list).
    #[arg(long = "suite", value_name = "NAME")]
    suites: Vec<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized probes.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn config_error(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("hopmp: configuration error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        suites: cli.suites.clone(),
        out: cli.out.clone(),
        seed: cli.seed,
    };
    let run = match config::load(&cli.config).and_then(|c| config::resolve(c, &overrides)) {
        Ok(r) => r,
        Err(e) => return config_error(e),
    };
    let reference = match suites::reference(&run) {
        Ok(r) => r,
        Err(e @ hopmp::Error::NoClosedForm(_)) => {
            return config_error(format!("reference: {e}; set [reference] control"))
        }
        Err(e) if Status::of_error(&e) == Status::ConfigError => return config_error(format!("reference: {e}")),
        Err(e) => {
            eprintln!("hopmp: numerical failure on the reference trajectory: {e}");
            return ExitCode::from(3);
        }
    };
    let results: Vec<suites::SuiteResult> = run
        .suites
        .iter()
        .map(|&name| {
            let r = suites::run_suite(name, &run, &reference);
            if !cli.quiet {
                println!("{:<16} {}", r.name, r.status.label());
            }
            r
        })
        .collect();

    let generated = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let write = || -> Result<(), ConfigError> {
        let io = |e: std::io::Error| ConfigError(format!("cannot write to {}: {e}", run.out_dir.display()));
        std::fs::create_dir_all(&run.out_dir).map_err(io)?;
        let text = report::render(&run, &reference, &results, generated);
        std::fs::write(run.out_dir.join(&run.report_name), text).map_err(io)?;
        let csv = report::trajectory_csv(&run.triple, &reference.trajectory, run.t_intervals)
            .map_err(|e| ConfigError(format!("trajectory export: {e}")))?;
        std::fs::write(run.out_dir.join(&run.trajectory_name), csv).map_err(io)?;
        if let Some(name) = &run.mu_prime_name {
            if let Some(rows) = results.iter().find_map(|r| r.mu_grid.as_ref()) {
                std::fs::write(run.out_dir.join(name), report::mu_grid_csv(rows)).map_err(io)?;
            }
        }
        Ok(())
    };
    if let Err(e) = write() {
        return config_error(e);
    }
    let code = report::exit_code(&results);
    if !cli.quiet {
        println!("report: {}", run.out_dir.join(&run.report_name).display());
        println!("exit code {code}");
    }
    ExitCode::from(code as u8)
}
