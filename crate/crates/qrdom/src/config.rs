//! Run configuration: a flat `key = value` file plus programmatic overrides.
//!
//! The schema is small and strict: unknown keys are rejected so a typo in an
//! archived run file fails loudly instead of silently using a default.
//! `#` starts a comment, blank lines are skipped, and later assignments win,
//! so command-line overrides can simply be applied after the file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::directions::SequenceKind;
use crate::driver::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::LinearSolveOptions;
use crate::mesh::StructuredMesh;
use crate::problems::{problem1_with_scattering, problem2, ProblemSpec, PROBLEM_NAMES};
use crate::transport::PhaseCoefficients;

/// Everything a run needs: problem selection, mesh, iteration controls, and
/// output location.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: String,
    pub kappa: f64,
    /// Scattering coefficient; `None` uses the problem's canonical value
    /// (problem 1: `2 kappa`; problem 2 has none and requires a value).
    pub sigma_s: Option<f64>,
    /// Phase-function overrides; `None` keeps the canonical `a0 = 1`,
    /// `a1 = 1/2`. Overriding away from the canonical pair drops the exact
    /// solution, since the manufactured source no longer balances.
    pub a0: Option<f64>,
    pub a1: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    pub tol_inner: f64,
    pub tol_outer: f64,
    pub linear_tol: f64,
    pub batch_size: usize,
    pub min_batches: usize,
    pub max_source_iterations: usize,
    pub workers: usize,
    pub sequence: SequenceKind,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: "problem1".into(),
            kappa: 1.0,
            sigma_s: None,
            a0: None,
            a1: None,
            nx: 32,
            ny: 32,
            tol_inner: 1e-5,
            tol_outer: 1e-5,
            linear_tol: 1e-12,
            batch_size: 32,
            min_batches: 4,
            max_source_iterations: 200,
            workers: 0,
            sequence: SequenceKind::ReverseHalton,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value for {key}: '{value}'")))
}

impl RunConfig {
    /// Reads a configuration file on top of the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config = Self::default();
        config.apply_file(path)?;
        Ok(config)
    }

    /// Applies every assignment in `path` to this configuration.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!(
            "cannot read config file {}: {e}",
            path.display()
        )))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected 'key = value', got '{}'",
                    path.display(),
                    lineno + 1,
                    line
                ))
            })?;
            self.apply_pair(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = value.to_string(),
            "kappa" => self.kappa = parse_value(key, value)?,
            "sigma_s" => self.sigma_s = Some(parse_value(key, value)?),
            "a0" => self.a0 = Some(parse_value(key, value)?),
            "a1" => self.a1 = Some(parse_value(key, value)?),
            "nx" => self.nx = parse_value(key, value)?,
            "ny" => self.ny = parse_value(key, value)?,
            "tol_inner" => self.tol_inner = parse_value(key, value)?,
            "tol_outer" => self.tol_outer = parse_value(key, value)?,
            "linear_tol" => self.linear_tol = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "min_batches" => self.min_batches = parse_value(key, value)?,
            "max_source_iterations" => self.max_source_iterations = parse_value(key, value)?,
            "workers" => self.workers = parse_value(key, value)?,
            "sequence" => self.sequence = SequenceKind::parse(value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => {
                return Err(Error::Config(format!(
                    "unknown config key '{key}' (see the schema in the crate docs)"
                )))
            }
        }
        Ok(())
    }

    /// Checks ranges and the problem name.
    pub fn validate(&self) -> Result<()> {
        if !PROBLEM_NAMES.contains(&self.problem.as_str()) {
            return Err(Error::Config(format!(
                "unknown problem '{}'; valid options: {}",
                self.problem,
                PROBLEM_NAMES.join(", ")
            )));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config(format!(
                "mesh needs nx, ny >= 1, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.tol_inner > 0.0 && self.tol_outer > 0.0 && self.linear_tol > 0.0) {
            return Err(Error::Config("all tolerances must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Builds the problem this configuration selects, applying coefficient
    /// overrides. Exact-solution fields are kept only when the overrides
    /// leave the manufactured balance intact.
    pub fn build_problem(&self) -> Result<ProblemSpec> {
        self.validate()?;
        let mut spec = match self.problem.as_str() {
            "problem1" => {
                let sigma_s = self.sigma_s.unwrap_or(2.0 * self.kappa);
                problem1_with_scattering(self.kappa, sigma_s)?
            }
            "problem2" => {
                let sigma_s = self.sigma_s.ok_or_else(|| {
                    Error::Config("problem2 requires sigma_s to be set".into())
                })?;
                problem2(self.kappa, sigma_s)?
            }
            _ => unreachable!("validate checked the name"),
        };
        if self.a0.is_some() || self.a1.is_some() {
            let a0 = self.a0.unwrap_or(spec.phase.a0());
            let a1 = self.a1.unwrap_or(spec.phase.a1());
            let canonical = match self.problem.as_str() {
                // Problem 1's moments above order zero vanish, so any a1
                // still balances; problem 2 needs the exact pair.
                "problem1" => a0 == 1.0,
                _ => a0 == 1.0 && a1 == 0.5,
            };
            spec.phase = PhaseCoefficients::new(a0, a1)?;
            if !canonical {
                spec.exact = None;
            }
        }
        Ok(spec)
    }

    /// The mesh this configuration asks for, on the problem's domain.
    pub fn build_mesh(&self) -> Result<Arc<StructuredMesh>> {
        let (a, b, c, d) = self.build_problem()?.bounds;
        StructuredMesh::new(a, b, c, d, self.nx, self.ny)
    }

    /// The driver settings this configuration exports.
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            batch_size: self.batch_size,
            min_batches: self.min_batches,
            tol_inner: self.tol_inner,
            tol_outer: self.tol_outer,
            max_source_steps: self.max_source_iterations,
            workers: self.workers,
            sequence: self.sequence,
            linear: LinearSolveOptions {
                tol: self.linear_tol,
                ..LinearSolveOptions::default()
            },
            ..SolverConfig::default()
        }
    }
}
