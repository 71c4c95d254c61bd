//! Alternating training of the optimal and contingency agents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::density::{build_density, feature, trajectory_metric, Binning};
use super::{penalty, PenaltyConfig, Result};
use crate::env::{Action, Behaviour, EnvParams, EnvState, Observation, Simulator};
use crate::qlearn::{act, Learner, QNetwork, TrainConfig};
use crate::replay::{ReplayBuffer, ReplayError, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Optimal,
    Contingency,
}

impl Role {
    pub fn id(self) -> &'static str {
        match self {
            Role::Optimal => "pi_star",
            Role::Contingency => "pi1",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "pi_star" => Some(Role::Optimal),
            "pi1" => Some(Role::Contingency),
            _ => None,
        }
    }
}

/// How an agent starts its episodes and whether it receives the penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentSpec {
    pub role: Role,
    pub beta: f64,
    pub attribute_penalty: bool,
}

impl AgentSpec {
    pub fn optimal() -> Self {
        Self { role: Role::Optimal, beta: 0.0, attribute_penalty: false }
    }

    pub fn contingency(beta: f64) -> Self {
        Self { role: Role::Contingency, beta, attribute_penalty: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub state: EnvState,
    /// Return already accumulated before `state`; counts toward logged scores only.
    pub cum_offset: f64,
    pub handoff: bool,
}

/// Draws from `(1 - beta) p(s0) + beta p(handoff)`. Falls back to `p(s0)` when
/// no buffer is given or its hand-off pool is empty. The coin and the reset
/// seed are drawn unconditionally so that equal `beta` means equal RNG use.
pub fn sample_initial_state<R: Rng>(
    beta: f64,
    sim: &Simulator,
    params: &EnvParams,
    optimal_buffer: Option<&ReplayBuffer>,
    rng: &mut R,
) -> Result<InitialState> {
    let use_handoff = rng.gen::<f64>() < beta;
    let reset_seed: u64 = rng.gen();
    if use_handoff {
        if let Some(buffer) = optimal_buffer {
            match buffer.sample_handoff_state(sim, params, rng) {
                Ok((state, cum_offset)) => return Ok(InitialState { state, cum_offset, handoff: true }),
                Err(ReplayError::HandoffPoolEmpty) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(InitialState { state: sim.reset(params, reset_seed)?, cum_offset: 0.0, handoff: false })
}

/// One played episode. `observations` has one more entry than `actions`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub observations: Vec<Observation>,
    pub actions: Vec<Action>,
    /// Environment rewards, without any penalty.
    pub rewards: Vec<f64>,
    pub cum_offset: f64,
    pub collision: bool,
    pub success: bool,
    pub handoff: bool,
}

impl EpisodeTrace {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Environment return plus the starting offset.
    pub fn raw_score(&self) -> f64 {
        self.cum_offset + self.rewards.iter().sum::<f64>()
    }

    pub fn features(&self) -> Vec<f64> {
        self.observations.iter().map(feature).collect()
    }
}

/// Plays one epsilon-greedy episode; `epsilon(t)` gives the rate at step `t`.
pub fn play_episode<R: Rng>(
    sim: &Simulator,
    net: &QNetwork,
    init: InitialState,
    epsilon: impl Fn(u64) -> f64,
    rng: &mut R,
) -> Result<EpisodeTrace> {
    let mut state = init.state;
    let mut observations = vec![sim.observe_noisy(&state, rng)];
    let mut actions = Vec::new();
    let mut rewards = Vec::new();
    let (mut collision, mut success) = (false, false);
    // A hand-off state may already be terminal; such an episode has no steps.
    while !sim.is_terminal(&state) {
        let obs = observations.last().expect("non-empty");
        let a = act(net, obs, epsilon(actions.len() as u64), rng);
        let out = sim.step(&state, a)?;
        actions.push(a);
        rewards.push(out.reward);
        state = out.next_state;
        observations.push(sim.observe_noisy(&state, rng));
        collision = out.collision;
        success = out.success;
        if out.done {
            break;
        }
    }
    Ok(EpisodeTrace {
        observations,
        actions,
        rewards,
        cum_offset: init.cum_offset,
        collision,
        success,
        handoff: init.handoff,
    })
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub policy: Role,
    /// Per-policy episode index.
    pub episode: u64,
    /// Per-policy environment steps after this episode.
    pub total_steps: u64,
    /// Environment return including the hand-off offset, excluding the penalty.
    pub raw_score: f64,
    pub penalized_score: f64,
    /// Distance to the reference density; `None` when no reference existed yet.
    pub metric: Option<f64>,
    pub epsilon: f64,
    pub steps: u64,
    pub handoff_init: bool,
    pub collision: bool,
    pub success: bool,
}

/// Learner, replay buffer and private RNG stream of one agent.
#[derive(Debug, Clone)]
pub struct Agent {
    pub spec: AgentSpec,
    pub learner: Learner,
    pub buffer: ReplayBuffer,
    /// Gradient updates run only while set; episodes are still played and stored.
    pub updates_enabled: bool,
    rng: ChaCha8Rng,
    env_steps: u64,
    episodes: u64,
}

impl Agent {
    pub fn new(spec: AgentSpec, sim: &Simulator, cfg: &TrainConfig, seed: u64, stream: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let learner = Learner::new(sim.config().obs_dim(), sim.config().v_max, cfg.clone(), &mut rng)?;
        let buffer = ReplayBuffer::new(cfg.buffer_capacity)?;
        Ok(Self { spec, learner, buffer, updates_enabled: true, rng, env_steps: 0, episodes: 0 })
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn episodes(&self) -> u64 {
        self.episodes
    }

    pub fn network(&self) -> &QNetwork {
        self.learner.online()
    }
}

/// Plays, stores and learns from one episode.
///
/// The reference density comes from `reference` (the agent's own buffer when
/// `None`) and is built before this episode is stored. Hand-off states come
/// from `handoff_source`. When the spec attributes the penalty, it is added
/// to the reward of the final transition only.
pub fn train_episode(
    agent: &mut Agent,
    sim: &Simulator,
    params: &EnvParams,
    pcfg: &PenaltyConfig,
    reference: Option<&ReplayBuffer>,
    handoff_source: Option<&ReplayBuffer>,
) -> Result<EpisodeRecord> {
    let binning = Binning::new(0.0, sim.config().v_max, pcfg.bins)?;
    let cfg = agent.learner.config().clone();
    let init = sample_initial_state(agent.spec.beta, sim, params, handoff_source, &mut agent.rng)?;
    let start = agent.env_steps;
    let trace = play_episode(sim, agent.learner.online(), init, |t| cfg.epsilon(start + t), &mut agent.rng)?;

    let reference = reference.unwrap_or(&agent.buffer);
    let metric = if reference.is_empty() {
        None
    } else {
        let ref_hist = build_density(&reference.recent_feature_samples(pcfg.k_ref, feature)?, binning)?;
        let ep_hist = build_density(&trace.features(), binning)?;
        Some(trajectory_metric(&ep_hist, &ref_hist)?)
    };
    let pen = match metric {
        Some(m) if agent.spec.attribute_penalty => penalty(m, pcfg),
        _ => 0.0,
    };

    let steps = trace.len();
    let mut cum = trace.cum_offset;
    for t in 0..steps {
        let mut reward = trace.rewards[t];
        if t + 1 == steps {
            reward += pen;
        }
        agent.buffer.push(Transition {
            obs: trace.observations[t].clone(),
            action: trace.actions[t],
            reward,
            next_obs: trace.observations[t + 1].clone(),
            done: t + 1 == steps,
            cum_reward_before: cum,
        });
        cum += trace.rewards[t];
    }

    let warm = cfg.learning_starts.max(cfg.batch_size);
    for _ in 0..steps {
        if !agent.updates_enabled || agent.buffer.len() < warm {
            break;
        }
        let batch = agent.buffer.sample_batch(cfg.batch_size, &mut agent.rng)?;
        agent.learner.train_step(&batch)?;
    }

    agent.env_steps += steps as u64;
    agent.episodes += 1;
    let raw_score = trace.raw_score();
    Ok(EpisodeRecord {
        policy: agent.spec.role,
        episode: agent.episodes - 1,
        total_steps: agent.env_steps,
        raw_score,
        penalized_score: raw_score + if steps > 0 { pen } else { 0.0 },
        metric,
        epsilon: cfg.epsilon(start),
        steps: steps as u64,
        handoff_init: trace.handoff,
        collision: trace.collision,
        success: trace.success,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub optimal: QNetwork,
    pub contingency: QNetwork,
    pub log: Vec<EpisodeRecord>,
}

/// RNG streams of the two agents; distinct so the optimal agent's run does not
/// depend on the contingency settings.
const OPTIMAL_STREAM: u64 = 1;
const CONTINGENCY_STREAM: u64 = 2;

/// Trains both agents in the all-aggressive environment, alternating
/// episodes from the start. The contingency agent's gradient updates begin
/// once the optimal agent's buffer is full (or the optimal agent has exhausted
/// its step budget). `on_episode` is called after every logged episode.
pub fn train_concurrent(
    sim: &Simulator,
    tcfg: &TrainConfig,
    pcfg: &PenaltyConfig,
    seed: u64,
    mut on_episode: impl FnMut(&EpisodeRecord),
) -> Result<TrainOutcome> {
    pcfg.validate()?;
    let params = EnvParams::all(sim.config().n_targets, Behaviour::Aggressive);
    let mut optimal = Agent::new(AgentSpec::optimal(), sim, tcfg, seed, OPTIMAL_STREAM)?;
    let mut contingency = Agent::new(AgentSpec::contingency(pcfg.beta), sim, tcfg, seed, CONTINGENCY_STREAM)?;
    let budget = tcfg.total_steps;
    let mut log = Vec::new();

    while optimal.env_steps < budget || contingency.env_steps < budget {
        if optimal.env_steps < budget {
            let rec = train_episode(&mut optimal, sim, &params, pcfg, None, None)?;
            on_episode(&rec);
            log.push(rec);
        }
        contingency.updates_enabled = optimal.buffer.is_full() || optimal.env_steps >= budget;
        if contingency.env_steps < budget {
            let rec = train_episode(
                &mut contingency,
                sim,
                &params,
                pcfg,
                Some(&optimal.buffer),
                Some(&optimal.buffer),
            )?;
            on_episode(&rec);
            log.push(rec);
        }
    }

    Ok(TrainOutcome {
        optimal: optimal.learner.into_network(),
        contingency: contingency.learner.into_network(),
        log,
    })
}
