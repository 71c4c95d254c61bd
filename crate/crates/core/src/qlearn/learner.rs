//! Double Q-learning against a periodically synced target network.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{argmax, Activation, Dense, ForwardCache, Gradients, QNetwork};
use super::{QError, Result};
use crate::env::{Action, Observation};
use crate::replay::Transition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    /// Gradient steps between target-network syncs.
    pub target_sync: u64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
    /// Environment steps per agent.
    pub total_steps: u64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: Optimizer,
    /// Global gradient-norm bound; 0 disables clipping.
    pub grad_clip: f64,
    pub buffer_capacity: usize,
    /// Buffer size before gradient updates begin.
    pub learning_starts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            gamma: 0.99,
            batch_size: 64,
            target_sync: 1_000,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_steps: 100_000,
            total_steps: 300_000,
            hidden: vec![64, 64],
            activation: Activation::Relu,
            optimizer: Optimizer::Adam,
            grad_clip: 0.0,
            buffer_capacity: 50_000,
            learning_starts: 1_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(QError::InvalidConfig(msg.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.eps_start) || !(0.0..=1.0).contains(&self.eps_end) {
            return bad("epsilon bounds must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.target_sync == 0 || self.buffer_capacity == 0 {
            return bad("batch size, sync period and capacity must be positive");
        }
        if !(self.learning_rate >= 0.0) || !(self.grad_clip >= 0.0) {
            return bad("learning rate and gradient clip must be non-negative");
        }
        Ok(())
    }

    /// Linear decay from `eps_start` to `eps_end` over `eps_decay_steps`.
    pub fn epsilon(&self, step: u64) -> f64 {
        if self.eps_decay_steps == 0 || step >= self.eps_decay_steps {
            return self.eps_end;
        }
        let frac = step as f64 / self.eps_decay_steps as f64;
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

/// Epsilon-greedy action; greedy ties go to the lowest action index.
/// No randomness is consumed when `eps == 0`.
pub fn act<R: Rng>(net: &QNetwork, obs: &Observation, eps: f64, rng: &mut R) -> Action {
    if eps > 0.0 && rng.gen::<f64>() < eps {
        return Action::new(rng.gen_range(0..Action::COUNT)).expect("in range");
    }
    Action::new(argmax(&net.q_values(obs))).expect("output dimension equals action count")
}

/// Frozen copy of the online parameters.
#[derive(Debug, Clone)]
pub struct TargetNetwork {
    net: QNetwork,
    staleness: u64,
}

impl TargetNetwork {
    pub fn new(online: &QNetwork) -> Self {
        Self { net: online.clone(), staleness: 0 }
    }

    pub fn net(&self) -> &QNetwork {
        &self.net
    }

    /// Gradient steps since the last sync.
    pub fn staleness(&self) -> u64 {
        self.staleness
    }

    pub fn sync(&mut self, online: &QNetwork) {
        self.net = online.clone();
        self.staleness = 0;
    }
}

/// Bootstrap target `r + gamma * Q_target(o', argmax_a Q_online(o', a))`,
/// or `r` on terminal transitions.
pub fn double_q_target(online: &QNetwork, target: &QNetwork, t: &Transition, gamma: f64) -> f64 {
    if t.done {
        return t.reward;
    }
    let next = online.features(&t.next_obs);
    let chosen = argmax(&online.forward(&next));
    t.reward + gamma * target.forward(&next)[chosen]
}

/// Mean squared TD error over the batch and its gradient with respect to the
/// online parameters. The bootstrap target is treated as a constant.
pub fn td_loss(
    online: &QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(QError::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grads = online.zero_gradients();
    let mut cache = ForwardCache::default();
    let mut d_out = vec![0.0; online.output_dim()];
    let mut loss = 0.0;
    for t in batch {
        let y = double_q_target(online, target, t, gamma);
        online.forward_cached(&online.features(&t.obs), &mut cache);
        let q = cache.output()[t.action.index()];
        let diff = q - y;
        if !diff.is_finite() {
            return Err(QError::NonFinite(format!(
                "TD error is {diff} (q = {q}, target = {y}, reward = {})",
                t.reward
            )));
        }
        loss += diff * diff / n;
        d_out.iter_mut().for_each(|d| *d = 0.0);
        d_out[t.action.index()] = 2.0 * diff / n;
        online.backward(&cache, &d_out, &mut grads);
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone)]
struct AdamState {
    m: Gradients,
    v: Gradients,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Online network, target network and optimizer state of one agent.
#[derive(Debug, Clone)]
pub struct Learner {
    online: QNetwork,
    target: TargetNetwork,
    cfg: TrainConfig,
    updates: u64,
    adam: Option<AdamState>,
}

impl Learner {
    pub fn new<R: Rng>(obs_dim: usize, speed_scale: f64, cfg: TrainConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut sizes = vec![obs_dim];
        sizes.extend(&cfg.hidden);
        sizes.push(Action::COUNT);
        let online = QNetwork::new(&sizes, cfg.activation, speed_scale, rng);
        Ok(Self::from_network(online, cfg))
    }

    pub fn from_network(online: QNetwork, cfg: TrainConfig) -> Self {
        let target = TargetNetwork::new(&online);
        let adam = (cfg.optimizer == Optimizer::Adam).then(|| AdamState {
            m: online.zero_gradients(),
            v: online.zero_gradients(),
            t: 0,
        });
        Self { online, target, cfg, updates: 0, adam }
    }

    pub fn online(&self) -> &QNetwork {
        &self.online
    }

    pub fn target(&self) -> &TargetNetwork {
        &self.target
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn into_network(self) -> QNetwork {
        self.online
    }

    /// One gradient step on `batch`; the target syncs every `target_sync` steps.
    pub fn train_step(&mut self, batch: &[&Transition]) -> Result<f64> {
        let (loss, mut grads) = td_loss(&self.online, self.target.net(), batch, self.cfg.gamma)?;
        if !grads.is_finite() {
            return Err(QError::NonFinite("gradient".into()));
        }
        if self.cfg.grad_clip > 0.0 {
            let norm = grads.norm();
            if norm > self.cfg.grad_clip {
                grads.scale(self.cfg.grad_clip / norm);
            }
        }
        let lr = self.cfg.learning_rate;
        match &mut self.adam {
            None => self.online.apply_update(&grads, lr),
            Some(state) => {
                state.t += 1;
                let bc1 = 1.0 - ADAM_BETA1.powi(state.t);
                let bc2 = 1.0 - ADAM_BETA2.powi(state.t);
                let layers = self.online.layers.iter_mut().zip(&grads.layers);
                let moments = state.m.layers.iter_mut().zip(state.v.layers.iter_mut());
                for ((p, g), (m, v)) in layers.zip(moments) {
                    adam_update(&mut p.weights, &g.weights, &mut m.weights, &mut v.weights, lr, bc1, bc2);
                    adam_update(&mut p.bias, &g.bias, &mut m.bias, &mut v.bias, lr, bc1, bc2);
                }
            }
        }
        self.updates += 1;
        self.target.staleness += 1;
        if self.updates % self.cfg.target_sync == 0 {
            self.target.sync(&self.online);
        }
        Ok(loss)
    }
}

fn adam_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, bc1: f64, bc2: f64) {
    for i in 0..p.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + ADAM_EPS);
    }
}

/// Builds a single-layer linear network from explicit weights. Test helper.
pub fn linear_network(weights: Vec<f64>, bias: Vec<f64>, speed_scale: f64) -> QNetwork {
    let out_dim = bias.len();
    let in_dim = weights.len() / out_dim;
    QNetwork::from_layers(vec![Dense { in_dim, out_dim, weights, bias }], Activation::Relu, speed_scale)
}
