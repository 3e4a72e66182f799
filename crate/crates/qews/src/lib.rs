//! File formats, presets and subcommands of the `qews` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

use std::path::Path;

pub use commands::Context;
pub use config::RunConfig;
pub use error::CliError;

use output::OutDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Single,
    Buildup,
    Ensemble,
    Bunching,
    Classical,
    Wigner,
}

/// Loads a config from a preset name or a file, then applies `key=value`
/// overrides and an optional seed.
pub fn load_config(
    preset: Option<&str>,
    file: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<RunConfig, CliError> {
    let mut doc = match (preset, file) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config("give either --preset or --config, not both".into()))
        }
        (Some(name), None) => {
            let text = presets::get(name).ok_or_else(|| {
                let known: Vec<&str> = presets::names().collect();
                CliError::Config(format!("unknown preset '{name}'; known: {}", known.join(", ")))
            })?;
            config::parse(text)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            config::parse(&text)?
        }
        (None, None) => serde_json::json!({}),
    };
    for o in overrides {
        let (k, v) = config::split_override(o)?;
        config::apply_override(&mut doc, k, v)?;
    }
    if let Some(s) = seed {
        doc["seed"] = serde_json::json!(s);
    }
    config::from_value(doc)
}

/// Runs `cmd` and writes its outputs plus `summary.json` under `out`.
pub fn run(
    cmd: Command,
    cfg: &RunConfig,
    jobs: usize,
    out: &Path,
) -> Result<serde_json::Value, CliError> {
    let ctx = Context::new(jobs)?;
    let mut dir = OutDir::create(out)?;
    let mut summary = match cmd {
        Command::Single => commands::cmd_single(&ctx, cfg, &mut dir)?,
        Command::Buildup => commands::cmd_buildup(&ctx, cfg, &mut dir)?,
        Command::Ensemble => commands::cmd_ensemble(&ctx, cfg, &mut dir)?,
        Command::Bunching => commands::cmd_bunching(&ctx, cfg, &mut dir)?,
        Command::Classical => commands::cmd_classical(&ctx, cfg, &mut dir)?,
        Command::Wigner => commands::cmd_wigner(&ctx, cfg, &mut dir)?,
    };
    if summary.get("metadata").is_none() {
        let params = commands::params_value(cfg)?;
        summary["metadata"] = output::metadata(&params, cfg.seed, "summary");
    }
    dir.write_json("summary.json", &summary)?;
    Ok(summary)
}
