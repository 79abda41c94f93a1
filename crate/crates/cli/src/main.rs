use std::path::PathBuf;
use std::process::ExitCode;

use ac_dynbc_cli::run::{dispatch, exit_code, Command, RunOptions};
use clap::{Parser, Subcommand};

/// Allen–Cahn solver with dynamic boundary conditions and nonsmooth potentials.
#[derive(Debug, Parser)]
#[command(name = "ac-dynbc", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; the AC_DYNBC_OUT environment variable takes precedence.
    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,
    /// Comma-separated snapshot times for `solve`.
    #[arg(long, global = true, value_delimiter = ',')]
    snapshots: Vec<f64>,
    /// Worker threads for concurrent runs (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Suppress the summary printed to stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Integrate one trajectory and write diagnostics and snapshots.
    Solve,
    /// Continuous dependence on the data.
    Contdep,
    /// Convergence as the regularization parameter eps goes to zero.
    SweepEps,
    /// Convergence as the surface diffusion nu goes to zero.
    SweepNu,
    /// Manufactured-solution convergence orders.
    Mms,
    /// Energy dissipation along an unforced run.
    Energy,
    /// Property suite and compatibility check of the configured graphs.
    GraphCheck,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let out = std::env::var_os("AC_DYNBC_OUT").map(PathBuf::from).unwrap_or(cli.out);
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Contdep => Command::Contdep,
        Cmd::SweepEps => Command::SweepEps,
        Cmd::SweepNu => Command::SweepNu,
        Cmd::Mms => Command::Mms,
        Cmd::Energy => Command::Energy,
        Cmd::GraphCheck => Command::GraphCheck,
    };
    let opts = RunOptions {
        config,
        out,
        snapshots: cli.snapshots,
        quiet: cli.quiet,
    };
    let code = match dispatch(command, &opts) {
        Ok(passed) => {
            if !passed {
                eprintln!("{}: one or more checks failed", command.name());
            }
            exit_code(passed)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
