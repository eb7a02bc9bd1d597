use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dynpictures_cli::{run_experiment, CliError, ExperimentConfig};

/// Log verbosity, in `env_logger` filter syntax.
const LOG_ENV: &str = "DYNPICTURES_LOG";

#[derive(Parser)]
#[command(name = "dynpictures", version, about = "Classical and quantum dynamical-picture experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory, replacing the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-path edit applied before validation, e.g. `numerics.samples=11`.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, overrides } => ExperimentConfig::load(&config, &overrides)
            .and_then(|cfg| run_experiment(&cfg, out.as_deref()))
            .map(|r| println!("{}", serde_json::to_string_pretty(&r.summary).expect("summaries serialize"))),
        Command::Validate { config, overrides } => ExperimentConfig::load(&config, &overrides).map(|cfg| {
            println!("{}", serde_json::to_string_pretty(&cfg).expect("configs serialize"));
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynpictures: {e}");
            if let CliError::Numeric(inner) = &e {
                log::debug!("{inner:?}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
