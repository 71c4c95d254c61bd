use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchError, Result};
use crate::contingency::PenaltyConfig;
use crate::env::EnvConfig;
use crate::planner::PlannerConfig;
use crate::qlearn::TrainConfig;

/// Everything that determines a training and evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Independent evaluation repetitions, each with its own spawn seeds.
    pub eval_repetitions: usize,
    /// Moving-average window for curve data.
    pub plot_window: usize,
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub penalty: PenaltyConfig,
    pub planner: PlannerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs/default"),
            eval_repetitions: 4,
            plot_window: 100,
            env: EnvConfig::default(),
            train: TrainConfig::default(),
            penalty: PenaltyConfig::default(),
            planner: PlannerConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.train.validate()?;
        self.penalty.validate()?;
        self.planner.validate()?;
        if self.eval_repetitions == 0 || self.plot_window == 0 {
            return Err(BenchError::Config("eval_repetitions and plot_window must be positive".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}
