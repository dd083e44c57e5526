//! `netshare`: energy-optimal base-station activation under network sharing.
//!
//! Exit codes: 0 success, 1 validation or model error (or a failed Monte Carlo check),
//! 2 I/O error, 3 an infeasible strategy when `--strict` is set.

mod commands;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netshare::domain::{EnergyProfile, LoadModel};

use commands::{Ctx, Outcome};
use manifest::{RunManifest, StrategyKind};

#[derive(Parser)]
#[command(name = "netshare", version, about = "Energy-optimal base-station activation under network sharing")]
struct Cli {
    /// Run manifest (TOML).
    #[arg(long, global = true, env = "NETSHARE_MANIFEST")]
    manifest: Option<PathBuf>,
    /// Time slot of the scenario to solve.
    #[arg(long, global = true, env = "NETSHARE_SLOT")]
    slot: Option<usize>,
    /// Strategies to run; repeat or separate with commas.
    #[arg(long, global = true, value_enum, value_delimiter = ',', env = "NETSHARE_STRATEGY")]
    strategy: Vec<StrategyKind>,
    /// Base-station power profile: hlp, llp or custom.
    #[arg(long, global = true, env = "NETSHARE_ENERGY_PROFILE")]
    energy_profile: Option<EnergyProfile>,
    /// Rescale serving probabilities to sum to one.
    #[arg(long, global = true, env = "NETSHARE_NORMALIZE_P")]
    normalize_p: bool,
    /// Users loading a base station: per-operator-literal or aggregate.
    #[arg(long, global = true, env = "NETSHARE_LOAD_MODEL")]
    load_model: Option<LoadModel>,
    /// Exit with code 3 when any strategy is infeasible.
    #[arg(long, global = true, env = "NETSHARE_STRICT")]
    strict: bool,
    #[arg(long, global = true, env = "NETSHARE_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "NETSHARE_OUT")]
    out: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model or scenario without solving.
    Validate,
    /// Optimize every selected strategy for one model or scenario slot.
    Solve,
    /// Optimize every slot of a scenario day and summarize the savings.
    Sweep,
    /// Compare analytical values with Monte Carlo estimates.
    Montecarlo,
    /// Write the synthetic diurnal scenario and a run manifest into the output directory.
    Fixture {
        /// Time slots per day; the peak keeps its time of day.
        #[arg(long, default_value_t = 96)]
        slots_per_day: usize,
    },
}

fn manifest(cli: &Cli) -> anyhow::Result<RunManifest> {
    let mut m = match &cli.manifest {
        Some(p) => RunManifest::load(p)?,
        None => RunManifest::default(),
    };
    if cli.slot.is_some() {
        m.slot = cli.slot;
    }
    if !cli.strategy.is_empty() {
        m.strategies = cli.strategy.clone();
    }
    if cli.energy_profile.is_some() {
        m.energy_profile = cli.energy_profile;
    }
    if cli.normalize_p {
        m.normalize_serving_probs = Some(true);
    }
    if cli.load_model.is_some() {
        m.load_model = cli.load_model;
    }
    if let Some(s) = cli.seed {
        m.seed = s;
    }
    if let Some(o) = &cli.out {
        m.output_dir = o.clone();
    }
    Ok(m)
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let ctx = Ctx {
        manifest: manifest(cli)?,
        strict: cli.strict,
    };
    match cli.command {
        Command::Validate => commands::validate(&ctx),
        Command::Solve => commands::solve(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Montecarlo => commands::montecarlo(&ctx),
        Command::Fixture { slots_per_day } => commands::fixture(&ctx, slots_per_day),
    }
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Ok(Outcome::Infeasible) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(if commands::is_io(&e) { 2 } else { 1 })
        }
    }
}
