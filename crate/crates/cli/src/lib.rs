//! Command-line front end for docuscle: reads a JSON run config, runs one
//! command and writes a JSON or CSV report.

pub mod commands;
pub mod config;
pub mod output;

use std::path::Path;

pub use config::{parse_config, ConfigError, RunConfig};
pub use output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<docuscle::Error> for CliError {
    fn from(e: docuscle::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl CliError {
    /// 2 for configuration problems, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Exact,
    Simulate,
    Scan,
    Violate,
    Convergence,
}

/// Runs `command` and renders its report.
pub fn execute(command: Command, config: &RunConfig, format: Format) -> Result<String, CliError> {
    match command {
        Command::Exact => output::render_single(&commands::cmd_exact(config)?, format),
        Command::Simulate => output::render_single(&commands::cmd_simulate(config)?, format),
        Command::Violate => output::render_single(&commands::cmd_violate(config)?, format),
        Command::Scan => {
            let summary = commands::cmd_scan(config)?;
            match format {
                Format::Json => output::to_json(&summary),
                Format::Csv => output::to_csv(summary.rows().iter().map(output::ScanRow::from)),
            }
        }
        Command::Convergence => {
            let report = commands::cmd_convergence(config)?;
            match format {
                Format::Json => output::to_json(&report),
                Format::Csv => output::to_csv(report.rows.iter()),
            }
        }
    }
}

/// Reads the config (`-` for stdin), applies the seed override, runs the
/// command and writes the report to `out` or stdout. Unknown top-level keys
/// are returned so the caller can warn about them.
pub fn run(
    command: Command,
    config_path: &Path,
    out: Option<&Path>,
    format: Format,
    seed: Option<u64>,
) -> Result<Vec<String>, CliError> {
    let text = if config_path == Path::new("-") {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(config_path)
    }
    .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", config_path.display())))?;
    let mut config = parse_config(&text)?;
    if seed.is_some() {
        config.seed = seed;
    }
    let rendered = execute(command, &config, format).map_err(|e| match e {
        CliError::Config(c) => CliError::Config(c.locate_in(&text)),
        other => other,
    })?;
    match out {
        Some(path) => output::write_atomic(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(config::unknown_fields(&text))
}
