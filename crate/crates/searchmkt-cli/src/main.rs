use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use searchmkt_cli::commands::{self, Context};
use searchmkt_cli::config::{Format, RunConfig};
use searchmkt_cli::{CliError, Outcome};

#[derive(Parser)]
#[command(
    name = "searchmkt",
    version,
    about = "Equilibrium analysis for markets where search advice is sold"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Artifact format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Simulation seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// For simulate: also write per-episode traces next to the artifact.
    #[arg(long, global = true)]
    trace: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Market-structure thresholds of the prior.
    Thresholds,
    /// Equilibrium payoff set and welfare ranges at one search cost.
    PayoffSet,
    /// Monte Carlo estimates of on-path payoffs.
    Simulate,
    /// Check that a payoff profile is supported by the strategy automaton.
    Verify,
    /// Scan broker guarantees for the minimax fixed point.
    Minimax,
    /// Iterate the payoff-set operator on a grid until it stabilizes.
    Aps,
    /// Tabulate thresholds, values, and regimes across search costs.
    Sweep,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome { verification_failed: false }) => ExitCode::SUCCESS,
        Ok(Outcome { verification_failed: true }) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::usage("--config <path> is required"))?;
    let cfg = RunConfig::load(&path)?;
    let ctx = Context {
        out: cli.out.or_else(|| cfg.out.clone()),
        format: cli.format.or(cfg.format).unwrap_or(Format::Json),
        seed: cli.seed.or(cfg.seed).unwrap_or(0),
        trace: cli.trace || cfg.trace.unwrap_or(false),
        cfg,
    };
    match cli.cmd {
        Cmd::Thresholds => commands::thresholds(&ctx),
        Cmd::PayoffSet => commands::payoff_set(&ctx),
        Cmd::Simulate => commands::simulate(&ctx),
        Cmd::Verify => commands::verify(&ctx),
        Cmd::Minimax => commands::minimax(&ctx),
        Cmd::Aps => commands::aps(&ctx),
        Cmd::Sweep => commands::sweep(&ctx),
    }
}
