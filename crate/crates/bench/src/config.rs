//! JSON run configuration.

use std::path::{Path, PathBuf};

use mgr_poromech::{FluidProps, LinearSolverConfig, NewtonConfig, RockProps};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::problems::{LayeredSpec, ProblemFile, StaircaseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Staircase(StaircaseSpec),
    Layered(LayeredSpec),
    /// Problem description stored in a separate JSON file.
    FromFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Write cell and node snapshots every this many steps (0 disables).
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Cells per edge of the staircase runs in the refinement study.
    pub refinement_sizes: Vec<usize>,
    pub hbgs_sweeps: usize,
    pub ilu_fill: usize,
    /// A step is past the transition once its max pressure rate falls to
    /// this fraction of the first step's.
    pub transition_fraction: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            refinement_sizes: vec![8, 16, 32],
            hbgs_sweeps: 3,
            ilu_fill: 1,
            transition_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub rock: RockProps,
    #[serde(default)]
    pub fluid: FluidProps,
    /// Time step sizes (s).
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub solver: LinearSolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub study: StudyConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg = Self::parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses without the semantic checks of [`RunConfig::validate`].
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            BenchError::Config(format!("field `{path}`: {inner}"))
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let cfg = Self::parse_file(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a config file, resolving a relative problem file
    /// against the config's directory. No semantic checks.
    pub fn parse_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let ProblemSpec::FromFile { path: p } = &mut cfg.problem {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_settings()?;
        match &self.problem {
            ProblemSpec::Staircase(s) => s.validate(),
            ProblemSpec::Layered(l) => l.validate(),
            ProblemSpec::FromFile { .. } => Ok(()),
        }
    }

    /// Checks everything except the problem geometry.
    pub fn validate_settings(&self) -> Result<()> {
        if self.schedule.is_empty() {
            return Err(BenchError::Config("field `schedule`: must not be empty".into()));
        }
        if let Some(i) = self.schedule.iter().position(|&dt| !(dt > 0.0 && dt.is_finite())) {
            return Err(BenchError::Config(format!(
                "field `schedule[{i}]`: time steps must be positive"
            )));
        }
        self.newton
            .validate()
            .map_err(|e| BenchError::Config(format!("field `newton`: {e}")))?;
        self.solver
            .gmres
            .validate()
            .map_err(|e| BenchError::Config(format!("field `solver.gmres`: {e}")))?;
        self.solver
            .mgr
            .f_amg
            .validate()
            .and_then(|_| self.solver.mgr.coarse_amg.validate())
            .map_err(|e| BenchError::Config(format!("field `solver.mgr`: {e}")))?;
        if self.solver.mgr.levels.is_empty() {
            return Err(BenchError::Config(
                "field `solver.mgr.levels`: must not be empty".into(),
            ));
        }
        self.fluid
            .validate()
            .map_err(|e| BenchError::Config(format!("field `fluid`: {e}")))?;
        if !(self.study.transition_fraction > 0.0 && self.study.transition_fraction < 1.0) {
            return Err(BenchError::Config(
                "field `study.transition_fraction`: must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Loads the problem file of a `from_file` problem.
    pub fn problem_file(&self) -> Result<Option<ProblemFile>> {
        match &self.problem {
            ProblemSpec::FromFile { path } => Ok(Some(ProblemFile::load(path)?)),
            _ => Ok(None),
        }
    }
}
