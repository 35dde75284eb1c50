//! Report rendering and atomic file output.

use std::io::Write;
use std::path::Path;

use docuscle::experiments::DimScan;
use serde::Serialize;

use crate::config::ConfigError;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Pretty JSON with a trailing newline. Floats use the shortest
/// representation that parses back to the same value.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Single-object reports only have a JSON form.
pub fn render_single<T: Serialize>(value: &T, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(value),
        Format::Csv => Err(ConfigError::field(
            "format",
            "csv output is available for scan and convergence only",
        )
        .into()),
    }
}

pub fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Runtime(format!("cannot write csv row: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("cannot finish csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

/// Flat per-dimension scan row; skip reasons are summed into `skipped`.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub dim: usize,
    pub trials: u64,
    pub agree: u64,
    pub tie: u64,
    pub disagree: u64,
    pub skipped: u64,
    pub worst_tie_gap: f64,
    pub max_abs_ltp_residual: f64,
    pub reversed_disagree: u64,
}

impl From<&DimScan> for ScanRow {
    fn from(d: &DimScan) -> Self {
        Self {
            dim: d.dim,
            trials: d.trials,
            agree: d.agree,
            tie: d.tie,
            disagree: d.disagree,
            skipped: d.skipped,
            worst_tie_gap: d.worst_tie_gap,
            max_abs_ltp_residual: d.max_abs_ltp_residual,
            reversed_disagree: d.reversed_disagree,
        }
    }
}

/// Writes to a temporary file in the target directory, then renames it over
/// `path`, so readers never see a partial report.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
