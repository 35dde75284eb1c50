use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use docuscle_cli::{run, Command, Format};

/// Exact evaluations, beam simulations, equivalence scans and LTP violation
/// searches for the docuscle retrieval model.
///
/// Exit status: 0 on success, 2 for an invalid config, 3 for a runtime error.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run config; `-` reads stdin
    #[arg(long)]
    config: PathBuf,
    /// Report path (written atomically); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the config's `seed`
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(
        cli.command,
        &cli.config,
        cli.out.as_deref(),
        cli.format,
        cli.seed,
    ) {
        Ok(unknown) => {
            for key in unknown {
                eprintln!("warning: ignoring unknown config field `{key}`");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("docuscle: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
