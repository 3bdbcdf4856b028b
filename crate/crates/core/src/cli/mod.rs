//! Command-line front end: `fracpoh <command> <config.toml> [--out DIR]`.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ConfigError, RunConfig};

/// Worker-count override for the thread pool.
pub const THREADS_ENV: &str = "FRACPOH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fracpoh", version, about = "Restricted fractional Laplacian solver and Pohozaev-identity checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve (-Δ)^s u = f(u) and write u.csv, solve_report.json.
    Solve(Args),
    /// Solve, then check the identity, the scaling derivative and the log profile.
    Verify(Args),
    /// Power-law exponent scan.
    Scan(Args),
    /// Solve and extract the boundary trace u/δ^s.
    Trace(Args),
    /// Operator checks: symmetry, definiteness, oracle agreement, Jacobian.
    Diagnostics(Args),
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn configure_threads() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => log::warn!("ignoring {THREADS_ENV}={v}: expected a positive integer"),
        }
    }
    // rayon work splitting does not change results; faer's parallel kernels can
    faer::set_global_parallelism(faer::Par::Seq);
}

/// Parses `args`, runs the command, returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { commands::EXIT_CONFIG } else { 0 };
        }
    };
    configure_threads();
    let (args, cmd): (&Args, fn(RunConfig, Option<&std::path::Path>) -> i32) = match &cli.command {
        Command::Solve(a) => (a, commands::cmd_solve),
        Command::Verify(a) => (a, commands::cmd_verify),
        Command::Scan(a) => (a, commands::cmd_scan),
        Command::Trace(a) => (a, commands::cmd_trace),
        Command::Diagnostics(a) => (a, commands::cmd_diagnostics),
    };
    let cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.0);
            return commands::EXIT_CONFIG;
        }
    };
    cmd(cfg, args.out.as_deref())
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}
