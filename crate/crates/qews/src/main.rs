use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qews::{load_config, run, Command};

/// Photon emission by modulated free-electron wavepackets into one cavity mode.
#[derive(Parser)]
#[command(name = "qews", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One electron on the vacuum: final state, photon statistics, Wigner data.
    Single(Common),
    /// Iterative multi-electron build-up of one beam event.
    Buildup(Common),
    /// Monte Carlo average over beam events.
    Ensemble(Common),
    /// Analytic vs numerical bunching factors and density profiles.
    Bunching(Common),
    /// Classical point-particle emission and its quantum counterpart.
    Classical(Common),
    /// Wigner function of a stored state, or of the single-electron state.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// Density-matrix JSON to analyse.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// List the built-in figure presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset, e.g. fig5a.
    #[arg(long)]
    preset: Option<String>,
    /// Override a config key: --set beam.n_e=20
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed for random beam modes.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensembles and Wigner grids.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common, input) = match cli.command {
        Cmd::Single(c) => (Command::Single, c, None),
        Cmd::Buildup(c) => (Command::Buildup, c, None),
        Cmd::Ensemble(c) => (Command::Ensemble, c, None),
        Cmd::Bunching(c) => (Command::Bunching, c, None),
        Cmd::Classical(c) => (Command::Classical, c, None),
        Cmd::Wigner { common, input } => (Command::Wigner, common, input),
        Cmd::Presets => {
            for n in qews::presets::names() {
                println!("{n}");
            }
            return ExitCode::SUCCESS;
        }
    };
    let result = load_config(
        common.preset.as_deref(),
        common.config.as_deref(),
        &common.overrides,
        common.seed,
    )
    .and_then(|mut cfg| {
        if let Some(p) = input {
            cfg.wigner.input = Some(p.display().to_string());
        }
        run(cmd, &cfg, common.jobs.max(1), &common.out)
    });
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qews: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
