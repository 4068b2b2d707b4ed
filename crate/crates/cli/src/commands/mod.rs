//! Subcommand implementations and shared option plumbing.

pub mod classify;
pub mod confidence;
pub mod evaluate;
pub mod group;
pub mod simulate;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;

use biouncert::cohort::ConfidenceKind;
use biouncert::eval::{render_report, ReportFormat, StudyReport};

/// Commands either fully succeed or succeed with failed report cells
/// (exit code 3).
pub enum CmdOutcome {
    Success,
    CellsFailed,
}

/// Argument-level problems exit 2; runtime problems exit 1.
pub enum CmdError {
    Usage(String),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for CmdError {
    fn from(err: anyhow::Error) -> Self {
        CmdError::Run(err)
    }
}

impl From<biouncert::Error> for CmdError {
    fn from(err: biouncert::Error) -> Self {
        CmdError::Run(err.into())
    }
}

pub type CmdResult = Result<CmdOutcome, CmdError>;

pub fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

/// Flag value wins over config-file value wins over the built-in default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Seed precedence: flag, config file, BIOUNCERT_SEED, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CmdError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var("BIOUNCERT_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| usage(format!("BIOUNCERT_SEED must be a 64-bit integer, got {text:?}"))),
        Err(_) => Ok(0),
    }
}

/// Loads and validates a JSON config file; unknown keys are rejected by the
/// per-command config types.
pub fn load_config<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T, CmdError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", p.display())))
        }
    }
}

/// Runs `body` inside a rayon pool with the requested thread count
/// (0 = all available). Results are independent of the level chosen.
pub fn with_jobs<T>(jobs: usize, body: impl FnOnce() -> T + Send) -> Result<T, CmdError>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("cannot build thread pool")?;
    Ok(pool.install(body))
}

pub fn parse_format(s: &str) -> Result<ReportFormat, CmdError> {
    ReportFormat::parse(s).ok_or_else(|| usage(format!("unknown format {s:?}; use csv, json, or md")))
}

pub fn parse_kinds(text: &str) -> Result<Vec<ConfidenceKind>, CmdError> {
    let kinds: Result<Vec<_>, _> = text
        .split(',')
        .map(|k| {
            ConfidenceKind::parse(k.trim())
                .ok_or_else(|| usage(format!("unknown confidence kind {k:?}; use iou or invcv")))
        })
        .collect();
    let kinds = kinds?;
    if kinds.is_empty() {
        return Err(usage("at least one confidence kind required"));
    }
    Ok(kinds)
}

/// Writes a rendered report to `--out` or stdout.
pub fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), CmdError> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)
                        .with_context(|| format!("cannot create {}", parent.display()))?;
                }
            }
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .context("cannot write to stdout")?;
        }
    }
    Ok(())
}

pub fn emit_report(report: &StudyReport, format: ReportFormat, out: &Option<PathBuf>) -> CmdResult {
    emit(&render_report(report, format), out)?;
    if report.has_failures() {
        Ok(CmdOutcome::CellsFailed)
    } else {
        Ok(CmdOutcome::Success)
    }
}

pub fn check_dir_exists(dir: &Path) -> Result<(), CmdError> {
    if !dir.is_dir() {
        return Err(usage(format!("{} is not a directory", dir.display())));
    }
    Ok(())
}
