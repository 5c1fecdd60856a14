//! Run configuration files.
//!
//! A config is a JSON object. Relative paths inside it are resolved against
//! the directory holding the config. Command-line flags override the
//! corresponding fields after loading.

use std::path::{Path, PathBuf};

use conefo::continuation::{ContinuationOptions, Schedule};
use conefo::solvers::{SolverOptions, StepPolicy, TestMode, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub variant: Variant,
    pub tol: f64,
    pub max_iters: usize,
    pub backtracking: bool,
    /// Fixed Lipschitz estimate; the initial estimate with backtracking.
    pub lipschitz: Option<f64>,
    pub test: TestMode,
    pub restart: Option<usize>,
    /// Use the one-forward-one-adjoint implementation for `at`.
    pub cached: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            variant: Variant::At,
            tol: 1e-8,
            max_iters: 10_000,
            backtracking: true,
            lipschitz: None,
            test: TestMode::Hybrid,
            restart: None,
            cached: true,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> Result<SolverOptions, CliError> {
        let step = if self.backtracking {
            match StepPolicy::backtracking() {
                StepPolicy::Backtracking {
                    alpha, beta, gamma, ..
                } => StepPolicy::Backtracking {
                    l0: self.lipschitz,
                    alpha,
                    beta,
                    gamma,
                    test: self.test,
                },
                p => p,
            }
        } else {
            let lipschitz = self.lipschitz.ok_or_else(|| {
                CliError::Config("a fixed step needs solver.lipschitz".into())
            })?;
            StepPolicy::Fixed { lipschitz }
        };
        Ok(SolverOptions {
            variant: self.variant,
            step,
            max_iters: self.max_iters,
            tol: self.tol,
            restart: self.restart,
            ..Default::default()
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub schedule: Schedule,
    pub fixed_center: bool,
    pub mu_factor: f64,
    pub tol0: f64,
    pub tol_decay: f64,
    pub final_tol: f64,
    pub max_outer: usize,
    pub outer_tol: f64,
    pub warm_start: bool,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        let o = ContinuationOptions::default();
        ContinuationConfig {
            schedule: o.schedule,
            fixed_center: o.fixed_center,
            mu_factor: o.mu_factor,
            tol0: o.tol0,
            tol_decay: o.tol_decay,
            final_tol: o.final_tol,
            max_outer: o.max_outer,
            outer_tol: o.outer_tol,
            warm_start: o.warm_start,
        }
    }
}

impl ContinuationConfig {
    pub fn options(&self, cached: bool) -> ContinuationOptions {
        ContinuationOptions {
            schedule: self.schedule,
            fixed_center: self.fixed_center,
            mu_factor: self.mu_factor,
            tol0: self.tol0,
            tol_decay: self.tol_decay,
            final_tol: self.final_tol,
            max_outer: self.max_outer,
            outer_tol: self.outer_tol,
            warm_start: self.warm_start,
            cached,
            reference: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestgenKind {
    BasisPursuit,
    Lasso,
    Dantzig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestgenConfig {
    pub kind: TestgenKind,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub dynamic_range_db: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Smoothing of the Dantzig certificate; 0 certifies the original problem.
    pub mu: f64,
    pub attempts: usize,
}

impl Default for TestgenConfig {
    fn default() -> Self {
        TestgenConfig {
            kind: TestgenKind::Lasso,
            m: 32,
            n: 128,
            s: 6,
            dynamic_range_db: 20.0,
            epsilon: 0.05,
            delta: 0.02,
            mu: 0.0,
            attempts: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Gap,
    RelErr,
    Psnr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    /// Model description, or an instance bundle from `testgen`.
    pub problem: Option<PathBuf>,
    /// Reference solution as a matrix file (a single row or column).
    pub reference: Option<PathBuf>,
    /// Overrides the smoothing parameter of the problem.
    pub mu: Option<f64>,
    pub solver: SolverConfig,
    pub continuation: Option<ContinuationConfig>,
    /// Variants compared by `bench`; all six when empty.
    pub variants: Vec<Variant>,
    pub testgen: TestgenConfig,
    pub metrics: Vec<Metric>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema: conefo::models::SCHEMA.to_string(),
            problem: None,
            reference: None,
            mu: None,
            solver: SolverConfig::default(),
            continuation: None,
            variants: Vec::new(),
            testgen: TestgenConfig::default(),
            metrics: vec![Metric::Gap, Metric::RelErr],
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema != conefo::models::SCHEMA {
            return Err(CliError::Config(format!("unsupported schema {:?}", cfg.schema)));
        }
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.problem, &mut cfg.reference].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks that every referenced file exists.
    pub fn check_files(&self) -> Result<(), CliError> {
        for p in [&self.problem, &self.reference].into_iter().flatten() {
            if !p.exists() {
                return Err(CliError::MissingFile {
                    path: p.clone(),
                    reason: "no such file".into(),
                });
            }
        }
        Ok(())
    }
}
