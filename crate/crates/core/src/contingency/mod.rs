//! Contingency-policy learning.
//!
//! A contingency agent is trained alongside the optimal agent with an extra
//! terminal penalty `-alpha / (M + delta)`, where `M` is the L1 distance
//! between the ego-speed density of its episode and the density of the
//! optimal agent's most recent buffered observations. A fraction `beta` of
//! its episodes start from pre-intersection states drawn out of the optimal
//! agent's buffer.

mod density;
mod training;

pub use density::{build_density, feature, trajectory_metric, Binning, FeatureHistogram};
pub use training::{
    play_episode, sample_initial_state, train_concurrent, train_episode, Agent, AgentSpec, EpisodeRecord,
    EpisodeTrace, InitialState, Role, TrainOutcome,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvError;
use crate::qlearn::QError;
use crate::replay::ReplayError;

#[derive(Debug, Error)]
pub enum ContingencyError {
    #[error("cannot build a density from zero samples")]
    EmptySamples,
    #[error("histograms use different binnings")]
    BinningMismatch,
    #[error("invalid binning [{lo}, {hi}] with {bins} bins")]
    InvalidBinning { lo: f64, hi: f64, bins: usize },
    #[error("bin masses must be non-negative with a positive total, one per bin")]
    InvalidMasses,
    #[error("invalid penalty config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Learner(#[from] QError),
}

pub type Result<T> = std::result::Result<T, ContingencyError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenaltyConfig {
    pub alpha: f64,
    pub delta: f64,
    /// Fraction of contingency episodes started from hand-off states.
    pub beta: f64,
    /// Number of recent optimal-agent observations forming the reference density.
    pub k_ref: usize,
    /// Histogram bins over `[0, v_max]`.
    pub bins: usize,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { alpha: 3.0, delta: 0.1, beta: 0.5, k_ref: 100, bins: 30 }
    }
}

impl PenaltyConfig {
    /// `alpha = 0` is accepted: it switches the penalty off.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(ContingencyError::InvalidConfig(msg.to_string()));
        if !(self.alpha >= 0.0) {
            return bad("alpha must be non-negative");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be positive");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1]");
        }
        if self.k_ref == 0 || self.bins == 0 {
            return bad("k_ref and bins must be positive");
        }
        Ok(())
    }
}

/// `-alpha / (metric + delta)`.
pub fn penalty(metric: f64, cfg: &PenaltyConfig) -> f64 {
    -cfg.alpha / (metric + cfg.delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_values() {
        let cfg = PenaltyConfig::default();
        assert_eq!(penalty(0.0, &cfg), -30.0);
        assert!((penalty(2.0, &cfg) - (-3.0 / 2.1)).abs() < 1e-12);
        assert!(penalty(1e12, &cfg) < 0.0 && penalty(1e12, &cfg) > -1e-11);
        let mut prev = penalty(0.0, &cfg);
        for k in 1..=200 {
            let p = penalty(k as f64 * 0.01, &cfg);
            assert!(p > prev && p < 0.0);
            prev = p;
        }
    }

    #[test]
    fn config_validation() {
        assert!(PenaltyConfig::default().validate().is_ok());
        assert!(PenaltyConfig { beta: 1.5, ..Default::default() }.validate().is_err());
        assert!(PenaltyConfig { delta: 0.0, ..Default::default() }.validate().is_err());
        assert!(PenaltyConfig { alpha: 0.0, ..Default::default() }.validate().is_ok());
    }
}
