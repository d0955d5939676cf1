//! Run configuration. Stored as TOML with every numeric field written as a
//! decimal string, e.g. `lambda = "-1"`.

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::functional::CouplingParams;
use crate::geometry::ModelParams;
use crate::separation::SweepSchedule;
use crate::solver::{InitKind, SolveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Both components, `lambda < 0`.
    Competitive,
    /// Both components solved independently; requires `lambda = 0`.
    Decoupled,
    /// First component only, second frozen at zero.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde_as(as = "DisplayFromStr")]
    pub dim: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub m: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub n: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub cells: usize,
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde_as(as = "DisplayFromStr")]
    pub mu1: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub mu2: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub alpha: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub beta: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub lambda: f64,
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde_as(as = "DisplayFromStr")]
    pub max_iters: usize,
    #[serde_as(as = "DisplayFromStr")]
    pub grad_tol: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub armijo_slope: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub armijo_backtrack: f64,
    pub positivity_enforced: bool,
    #[serde_as(as = "DisplayFromStr")]
    pub seed: u64,
    pub init: InitKind,
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde_as(as = "DisplayFromStr")]
    pub start: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub end: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub format: Format,
    pub output_dir: PathBuf,
    pub model: ModelSection,
    pub coupling: CouplingSection,
    pub solver: SolverSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = SolveOptions::default();
        Self {
            mode: Mode::Competitive,
            format: Format::Csv,
            output_dir: PathBuf::from("critsep_out"),
            model: ModelSection { dim: 4, m: 2, n: 3, cells: 2048 },
            coupling: CouplingSection { mu1: 1.0, mu2: 1.0, alpha: 2.0, beta: 2.0, lambda: -1.0 },
            solver: SolverSection {
                max_iters: opts.max_iters,
                grad_tol: opts.grad_tol,
                armijo_slope: opts.armijo_slope,
                armijo_backtrack: opts.armijo_backtrack,
                positivity_enforced: opts.positivity_enforced,
                seed: opts.seed,
                init: InitKind::Bumps,
            },
            sweep: SweepSection { start: -1.0, end: -1e4, points: 20 },
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical TOML form with `output_dir` blanked, so the
    /// same run written to two places carries the same digest.
    pub fn digest(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.dim, m.m, m.n, m.cells)
    }

    pub fn coupling_params(&self) -> Result<CouplingParams> {
        let c = &self.coupling;
        CouplingParams::new(c.mu1, c.mu2, c.alpha, c.beta, c.lambda, self.model.dim)
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        SolveOptions {
            max_iters: s.max_iters,
            grad_tol: s.grad_tol,
            armijo_slope: s.armijo_slope,
            armijo_backtrack: s.armijo_backtrack,
            positivity_enforced: s.positivity_enforced,
            seed: s.seed,
        }
    }

    pub fn schedule(&self) -> Result<SweepSchedule> {
        SweepSchedule::geometric(self.sweep.start, self.sweep.end, self.sweep.points)
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        self.coupling_params()?;
        self.solve_options().validate()?;
        let lambda = self.coupling.lambda;
        match self.mode {
            Mode::Competitive if !(lambda < 0.0) => {
                return Err(Error::Config(format!("competitive mode needs lambda < 0, got {lambda}")));
            }
            Mode::Decoupled if lambda != 0.0 => {
                return Err(Error::Config(format!("decoupled mode needs lambda = 0, got {lambda}")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Sweep settings are only checked by the sweep command.
    pub fn validate_sweep(&self) -> Result<()> {
        self.schedule().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = RunConfig::default();
        let text = c.to_toml().unwrap();
        assert!(text.contains("lambda = \"-1\""), "{text}");
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn awkward_floats_round_trip() {
        let mut c = RunConfig { model: ModelSection { dim: 5, m: 3, n: 3, cells: 300 }, ..RunConfig::default() };
        c.coupling.alpha = 5.0 / 3.0;
        c.coupling.beta = 10.0 / 3.0 - 5.0 / 3.0;
        c.coupling.lambda = -0.1 - 0.2;
        c.solver.grad_tol = 3.3e-9;
        c.sweep.end = -12345.678;
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        back.validate().unwrap();
    }

    #[test]
    fn numbers_must_be_strings() {
        let text = RunConfig::default().to_toml().unwrap().replace("lambda = \"-1\"", "lambda = -1");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn mode_checks() {
        let mut c = RunConfig::default();
        c.coupling.lambda = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.mode = Mode::Decoupled;
        c.validate().unwrap();
        c.coupling.lambda = -1.0;
        assert!(c.validate().is_err());
        c.mode = Mode::Single;
        c.validate().unwrap();
    }

    #[test]
    fn digest_is_stable() {
        let c = RunConfig::default();
        assert_eq!(c.digest().unwrap(), c.clone().digest().unwrap());
        let mut d = c.clone();
        d.output_dir = PathBuf::from("elsewhere");
        assert_eq!(c.digest().unwrap(), d.digest().unwrap());
        d.solver.seed = 1;
        assert_ne!(c.digest().unwrap(), d.digest().unwrap());
    }
}
