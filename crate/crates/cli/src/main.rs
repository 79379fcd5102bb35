use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsch_cli::{execute, info, CliError, Overrides, Preset, RunConfig};

/// Navier-Stokes-Cahn-Hilliard experiments on periodic boxes.
#[derive(Parser)]
#[command(name = "nsch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the initial-condition and inequality-suite seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for CSV, JSON and checkpoint outputs.
    #[arg(long, global = true, default_value = ".")]
    output: PathBuf,

    /// Drop convection, Korteweg forcing and the cubic nonlinearity.
    #[arg(long, global = true)]
    linearized: bool,

    /// Pin the model constants to the reference values (`--paper-mode false` to lift).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    paper_mode: Option<bool>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the preset named by the config's `experiment` field.
    Run,
    /// Energy-law residual against the time step.
    EnergyCheck,
    /// Amplitude sweep of the critical norm X.
    Smallness,
    /// Decay-exponent fits on Gaussian data.
    DecayStudy,
    /// Randomized functional-inequality checks.
    IneqSuite,
    /// Print presets, generators, exit codes and an example config.
    Info,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config", "a configuration file is required"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config("--config", format!("cannot read {}: {e}", path.display())))?;
    let mut config = RunConfig::from_json(&text)?;
    config.apply(&Overrides {
        seed: cli.seed,
        linearized: cli.linearized,
        paper_mode: cli.paper_mode,
    });
    config.validate()?;
    Ok(config)
}

fn dispatch(cli: &Cli) -> Result<serde_json::Value, CliError> {
    let preset = match cli.command {
        Command::Info => return Ok(info()),
        Command::Run => None,
        Command::EnergyCheck => Some(Preset::EnergyCheck),
        Command::Smallness => Some(Preset::Smallness),
        Command::DecayStudy => Some(Preset::DecayStudy),
        Command::IneqSuite => Some(Preset::IneqSuite),
    };
    let config = load(cli)?;
    let preset = preset.unwrap_or(config.experiment);
    let report = execute(&config, preset, &cli.output)?;
    if let Some(e) = report.failure() {
        return Err(e);
    }
    Ok(serde_json::json!({
        "status": "ok",
        "preset": preset.name(),
        "report": cli.output.join(&config.outputs.json),
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
