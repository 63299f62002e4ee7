//! `fb-lab`: command-line front end for the free boundary laboratory.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod out;

use commands::{cone, minimize, profile, stability, sweep, varifold};

#[derive(Parser)]
#[command(name = "fb-lab", version, about = "Numerical laboratory for one-phase free boundaries")]
struct Cli {
    /// Worker threads; defaults to all cores for `sweep` and 1 otherwise.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the p-Legendre profile and write theta,f,fdot,residual.
    Profile(profile::ProfileArgs),
    /// Double-cone summary, or a point sample of the solution.
    Cone(cone::ConeArgs),
    /// Second variation on the cone, the flatness criterion and the 2D log test.
    #[command(subcommand)]
    Stability(stability::StabilityCmd),
    /// Discrete varifold analysis of triangle meshes.
    #[command(subcommand)]
    Varifold(varifold::VarifoldCmd),
    /// Minimize the discretized functional from a JSON config.
    Minimize2d(minimize::MinimizeArgs),
    /// Evaluate a command over a cartesian parameter grid.
    Sweep(sweep::SweepArgs),
}

/// Invalid input exits with 2, numerical failure with 3.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<fblab_core::Error> for Failure {
    fn from(e: fblab_core::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(format!("I/O: {e}"))
    }
}

fn run(command: Command) -> Result<String, Failure> {
    match command {
        Command::Profile(a) => profile::run(a),
        Command::Cone(a) => cone::run(a),
        Command::Stability(c) => stability::run(c),
        Command::Varifold(c) => varifold::run(c),
        Command::Minimize2d(a) => minimize::run(a),
        Command::Sweep(a) => sweep::run(a),
    }
}

#[cfg(feature = "parallel")]
fn with_threads(threads: usize, command: Command) -> Result<String, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| run(command))
}

#[cfg(not(feature = "parallel"))]
fn with_threads(_threads: usize, command: Command) -> Result<String, Failure> {
    run(command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // Zero lets the pool pick the number of cores.
    let threads = cli.threads.unwrap_or(if matches!(cli.command, Command::Sweep(_)) { 0 } else { 1 });
    match with_threads(threads, cli.command) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(3)
        }
    }
}
