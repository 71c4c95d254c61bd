//! Hierarchical controller.
//!
//! At every step the controller scores each available policy by simulating
//! it greedily to the end of the episode under each plausible behaviour
//! vector, then acts with the policy that collides least often. Kinematics
//! are known to the planner; behaviours are not.

mod belief;

pub use belief::{belief_update, Belief, BeliefUpdate, BehaviourSet};

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contingency::EpisodeTrace;
use crate::env::{Action, EnvError, EnvParams, EnvState, Simulator};
use crate::qlearn::Policy;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("empty policy portfolio")]
    EmptyPortfolio,
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PlannerError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Sampled rollouts per policy per decision when not enumerating.
    pub m_plan: usize,
    /// Episodes per controller in one evaluation repetition.
    pub m_eval: usize,
    /// Speed tolerance for keeping a behaviour hypothesis, m/s.
    pub eps_v: f64,
    /// Enumerate every plausible behaviour vector when there are at most this many.
    pub enumerate_max: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { m_plan: 32, m_eval: 200, eps_v: 0.5, enumerate_max: 16 }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_plan == 0 || self.m_eval == 0 {
            return Err(PlannerError::InvalidConfig("budgets must be at least 1".into()));
        }
        if !(self.eps_v > 0.0) {
            return Err(PlannerError::InvalidConfig("eps_v must be positive".into()));
        }
        Ok(())
    }
}

/// Greedy playout of `policy` from `start` with the hidden behaviours replaced
/// by `params`. Returns whether it ends in a collision.
pub fn rollout<P: Policy + ?Sized>(sim: &Simulator, policy: &P, params: &EnvParams, start: &EnvState) -> Result<bool> {
    let mut state = start.with_params(params.clone());
    while !sim.is_terminal(&state) {
        let a = policy.act(&sim.observe(&state));
        let out = sim.step(&state, a)?;
        if out.done {
            return Ok(out.collision);
        }
        state = out.next_state;
    }
    Ok(sim.check_collision(&state))
}

/// Mean of `fails` over the plausible behaviour vectors: every one of them,
/// equally weighted, when there are at most `enumerate_max`; otherwise
/// `m_plan` independent draws.
pub fn estimate_failure_with<R, F>(belief: &Belief, cfg: &PlannerConfig, rng: &mut R, mut fails: F) -> Result<f64>
where
    R: Rng,
    F: FnMut(&EnvParams) -> Result<bool>,
{
    let (hits, total) = if belief.combinations() <= cfg.enumerate_max {
        let all = belief.enumerate();
        let mut hits = 0usize;
        for params in &all {
            hits += fails(params)? as usize;
        }
        (hits, all.len())
    } else {
        let mut hits = 0usize;
        for _ in 0..cfg.m_plan {
            hits += fails(&belief.sample_params(rng))? as usize;
        }
        (hits, cfg.m_plan)
    };
    Ok(hits as f64 / total as f64)
}

pub fn estimate_failure<P, R>(
    sim: &Simulator,
    policy: &P,
    belief: &Belief,
    start: &EnvState,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<f64>
where
    P: Policy + ?Sized,
    R: Rng,
{
    estimate_failure_with(belief, cfg, rng, |params| rollout(sim, policy, params, start))
}

/// Index of the lowest estimate; ties go to the earlier policy, so the
/// optimal policy should be listed first.
pub fn select_policy(estimates: &[f64]) -> Result<usize> {
    if estimates.is_empty() {
        return Err(PlannerError::EmptyPortfolio);
    }
    let mut best = 0;
    for (i, &e) in estimates.iter().enumerate().skip(1) {
        if e < estimates[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Planner state at one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerStep {
    pub step: u32,
    /// Belief used for this decision.
    pub belief: Belief,
    pub estimates: Vec<f64>,
    pub chosen: usize,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerEpisode {
    pub trace: EpisodeTrace,
    pub steps: Vec<PlannerStep>,
    /// (step, target) pairs where the belief had to be reset.
    pub mismatches: Vec<(u32, usize)>,
}

impl PlannerEpisode {
    pub fn chosen(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.chosen).collect()
    }

    /// Planner trace as CSV: step, one belief column per target, one estimate
    /// column per policy, chosen policy name, acceleration.
    pub fn write_csv<W: Write>(&self, w: W, policy_names: &[&str]) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let n_targets = self.steps.first().map_or(0, |s| s.belief.n());
        let mut header = vec!["step".to_string()];
        header.extend((0..n_targets).map(|i| format!("belief_{i}")));
        header.extend(policy_names.iter().map(|p| format!("p_fail_{p}")));
        header.extend(["chosen".to_string(), "accel".to_string()]);
        out.write_record(&header)?;
        for s in &self.steps {
            let mut row = vec![s.step.to_string()];
            row.extend(s.belief.sets().iter().map(|set| set.to_string()));
            row.extend(s.estimates.iter().map(|e| e.to_string()));
            row.push(policy_names.get(s.chosen).map_or_else(|| s.chosen.to_string(), |n| n.to_string()));
            row.push(s.action.accel().to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs one episode under `true_params` with the hierarchical controller:
/// estimate, select, act, step, then update the belief from the new
/// observation.
pub fn run_episode<R: Rng>(
    sim: &Simulator,
    portfolio: &[&dyn Policy],
    true_params: &EnvParams,
    spawn_seed: u64,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<PlannerEpisode> {
    if portfolio.is_empty() {
        return Err(PlannerError::EmptyPortfolio);
    }
    let start = sim.reset(true_params, spawn_seed)?;
    run_episode_from(sim, portfolio, start, cfg, rng)
}

pub fn run_episode_from<R: Rng>(
    sim: &Simulator,
    portfolio: &[&dyn Policy],
    start: EnvState,
    cfg: &PlannerConfig,
    rng: &mut R,
) -> Result<PlannerEpisode> {
    if portfolio.is_empty() {
        return Err(PlannerError::EmptyPortfolio);
    }
    let mut state = start;
    let mut belief = Belief::uniform(state.targets.len());
    let mut observations = vec![sim.observe_noisy(&state, rng)];
    let (mut actions, mut rewards, mut steps, mut mismatches) = (vec![], vec![], vec![], vec![]);
    let (mut collision, mut success) = (false, false);

    while !sim.is_terminal(&state) {
        let estimates = portfolio
            .iter()
            .map(|p| estimate_failure(sim, *p, &belief, &state, cfg, rng))
            .collect::<Result<Vec<_>>>()?;
        let chosen = select_policy(&estimates)?;
        let obs = observations.last().expect("non-empty");
        let action = portfolio[chosen].act(obs);
        let out = sim.step(&state, action)?;
        let next_obs = sim.observe_noisy(&out.next_state, rng);
        let update = belief_update(&belief, sim, &state, &next_obs, cfg.eps_v);
        mismatches.extend(update.mismatches.iter().map(|&i| (state.t, i)));
        steps.push(PlannerStep { step: state.t, belief, estimates, chosen, action });
        belief = update.belief;
        actions.push(action);
        rewards.push(out.reward);
        observations.push(next_obs);
        collision = out.collision;
        success = out.success;
        state = out.next_state;
        if out.done {
            break;
        }
    }

    Ok(PlannerEpisode {
        trace: EpisodeTrace {
            observations,
            actions,
            rewards,
            cum_offset: 0.0,
            collision,
            success,
            handoff: false,
        },
        steps,
        mismatches,
    })
}
