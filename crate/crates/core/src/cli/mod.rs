//! Command-line front end.
//!
//! Exit codes: 0 when every asserted identity holds, 1 on an identity
//! violation or failed computation, 2 on an invalid scenario or argument.

mod output;
mod runner;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

pub use output::write_atomic;
pub use runner::{run, tol, Check, JobReport, RunReport, Status, Timings};
pub use scenario::{Job, JobKind, Scenario, ScenarioError, JOB_KINDS};

/// Environment variable that takes precedence over `--threads`.
pub const THREADS_ENV: &str = "NULLPLANE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "nullplane", version, about = "Null-plane modular structure of the free scalar field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every job of a scenario and write reports into a directory.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; NULLPLANE_THREADS overrides this.
        #[arg(long)]
        threads: Option<usize>,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Parse and validate a scenario without running it.
    Validate { scenario: PathBuf },
    /// Print the supported job kinds.
    ListJobs,
}

/// Reason for a non-zero exit.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Violation(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Violation(_) => 1,
        }
    }
}

pub fn load(path: &Path) -> Result<(Scenario, String), Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Failure::Invalid(format!("{} is not UTF-8", path.display())))?;
    let scenario = Scenario::parse(text).map_err(|e| Failure::Invalid(e.0))?;
    let digest = Sha256::digest(&bytes);
    let hex = digest.iter().map(|b| format!("{b:02x}")).collect();
    Ok((scenario, hex))
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Invalid(format!("{THREADS_ENV} must be a positive integer, got `{s}`")))?,
        ),
        Err(_) => flag,
    };
    match n {
        Some(0) => Err(Failure::Invalid("thread count must be positive".into())),
        n => Ok(n),
    }
}

fn run_command(scenario: &Path, out: &Path, threads: Option<usize>, tol_scale: f64) -> Result<(), Failure> {
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        return Err(Failure::Invalid(format!("--tol-scale must be positive and finite, got {tol_scale}")));
    }
    if let Some(n) = thread_count(threads)? {
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (scenario, sha) = load(scenario)?;
    let scenario = scenario.with_tol_scale(tol_scale);
    std::fs::create_dir_all(out).map_err(|e| Failure::Invalid(format!("cannot create {}: {e}", out.display())))?;
    let io = |e: anyhow::Error| Failure::Violation(format!("writing outputs: {e:#}"));
    let (report, timings) = run(&scenario, sha, tol_scale, out, |line| eprintln!("{line}")).map_err(io)?;
    let summary = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_atomic(&out.join("summary.json"), summary.as_bytes()).map_err(io)?;
    let times = serde_json::to_string_pretty(&timings).expect("timings serialize") + "\n";
    write_atomic(&out.join("timings.json"), times.as_bytes()).map_err(io)?;
    match report.status {
        Status::Ok => Ok(()),
        Status::Violation => Err(Failure::Violation("identity violation".into())),
        Status::Invalid => Err(Failure::Invalid("invalid job input".into())),
    }
}

/// Parses the process arguments and runs the chosen command.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out, threads, tol_scale } => run_command(&scenario, &out, threads, tol_scale),
        Command::Validate { scenario } => load(&scenario).map(|(s, _)| {
            println!("{} job(s) valid", s.jobs.len());
            for j in &s.jobs {
                println!("  {} ({})", j.name, j.kind.label());
            }
        }),
        Command::ListJobs => {
            for (kind, about) in JOB_KINDS {
                println!("{kind:<14} {about}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Invalid(m) => eprintln!("error: {m}"),
                Failure::Violation(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
