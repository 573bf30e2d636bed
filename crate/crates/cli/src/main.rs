use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfisher::io::GridOverride;
use qfisher_cli::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "qfisher", version, about = "Fisher information / quantum potential identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Static identities on a state file.
    VerifyIdentities(Args),
    /// Crank–Nicolson evolution with continuity, Hamilton–Jacobi and entropy-rate residuals.
    Evolve(Args),
    /// Extreme-physical-information ground state for given multipliers.
    Epi(Args),
    /// Maximum-entropy density for one mean constraint.
    Maxent(Args),
    /// Multiplier sweep with Fisher–Euler and Legendre checks.
    Sweep(Args),
    /// Heat-field checks and the coherence suite.
    Thermal(Args),
    /// Print every check name with its equation tag.
    ListChecks,
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    xmin: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xmax: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    #[arg(long)]
    no_truncation_check: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::ListChecks => {
            print!("{}", qfisher::report::list_checks());
            return ExitCode::SUCCESS;
        }
        Cmd::VerifyIdentities(a) => (Command::VerifyIdentities, a),
        Cmd::Evolve(a) => (Command::Evolve, a),
        Cmd::Epi(a) => (Command::Epi, a),
        Cmd::Maxent(a) => (Command::Maxent, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Thermal(a) => (Command::Thermal, a),
    };
    let config = RunConfig {
        command,
        input: args.input,
        out: args.out,
        grid: GridOverride {
            xmin: args.xmin,
            xmax: args.xmax,
            n: args.n,
        },
        tol_scale: args.tol_scale,
        truncation_check: !args.no_truncation_check,
    };
    ExitCode::from(run(&config) as u8)
}
