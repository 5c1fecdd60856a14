//! Command-line harness around the `conefo` solvers: solve a model, compare
//! variants, generate certified instances and regenerate the data behind the
//! desk-scale experiments.

use std::path::{Path, PathBuf};

use serde_json::json;

pub mod commands;
pub mod config;
pub mod experiments;

pub use commands::{cmd_bench, cmd_reproduce, cmd_solve, cmd_testgen};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {reason}")]
    MissingFile { path: PathBuf, reason: String },
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("unknown figure id {0:?}")]
    UnknownFigure(String),
    #[error(transparent)]
    Model(#[from] conefo::models::ModelError),
    #[error(transparent)]
    Testgen(#[from] conefo::testgen::TestgenError),
    #[error("solve failed: {0}")]
    Solve(String),
    #[error("cannot write {path}: {reason}")]
    Output { path: PathBuf, reason: String },
}

impl From<conefo::solvers::SolveError> for CliError {
    fn from(e: conefo::solvers::SolveError) -> Self {
        CliError::Solve(e.to_string())
    }
}

impl From<conefo::continuation::ContinuationError> for CliError {
    fn from(e: conefo::continuation::ContinuationError) -> Self {
        CliError::Solve(e.to_string())
    }
}

impl CliError {
    pub(crate) fn missing(path: &Path, e: std::io::Error) -> Self {
        CliError::MissingFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    }

    /// 2 for bad input, 1 for failures during a run.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingFile { .. } | CliError::Config(_) | CliError::UnknownFigure(_) | CliError::Model(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::MissingFile { .. } => "missing_file",
            CliError::Config(_) => "config",
            CliError::UnknownFigure(_) => "unknown_figure",
            CliError::Model(_) => "model",
            CliError::Testgen(_) => "testgen",
            CliError::Solve(_) => "solve",
            CliError::Output { .. } => "output",
        }
    }

    /// Machine-readable form printed on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let path = match self {
            CliError::MissingFile { path, .. } | CliError::Output { path, .. } => Some(path.display().to_string()),
            _ => None,
        };
        json!({
            "schema": conefo::models::SCHEMA,
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "path": path,
            }
        })
    }
}

/// `20 log10(sqrt(n1 n2) / ||x - x0||_F)` for images with pixels in `[0, 1]`.
///
/// Returns `+inf` when the images coincide and `None` when the sizes differ.
pub fn compute_psnr(x: &[f64], x0: &[f64]) -> Option<f64> {
    if x.len() != x0.len() {
        return None;
    }
    let err = conefo::linops::space::dist(x, x0);
    if err == 0.0 {
        return Some(f64::INFINITY);
    }
    Some(20.0 * ((x.len() as f64).sqrt() / err).log10())
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub(crate) fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let err = |path: &Path, e: std::io::Error| CliError::Output {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| err(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| err(&path, e))?;
    Ok(path)
}
