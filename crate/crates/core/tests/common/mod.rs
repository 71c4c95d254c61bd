//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use hcplan_core::env::{Action, Observation, TargetObs};
use hcplan_core::qlearn::{double_q_target, td_loss, Activation, Learner, Optimizer, QNetwork, TrainConfig};
use hcplan_core::replay::{ReplayBuffer, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_obs<R: Rng>(rng: &mut R, n_targets: usize) -> Observation {
    Observation {
        ego_speed: rng.gen_range(0.0..15.0),
        ego_dist_to_conflict: rng.gen_range(-10.0..45.0),
        targets: (0..n_targets)
            .map(|_| TargetObs { dist_to_conflict: rng.gen_range(-10.0..75.0), speed: rng.gen_range(0.0..15.0) })
            .collect(),
    }
}

pub fn random_transition<R: Rng>(rng: &mut R, n_targets: usize) -> Transition {
    Transition {
        obs: random_obs(rng, n_targets),
        action: Action::new(rng.gen_range(0..Action::COUNT)).unwrap(),
        reward: if rng.gen_bool(0.1) { -5.0 } else { -0.1 },
        next_obs: random_obs(rng, n_targets),
        done: rng.gen_bool(0.2),
        cum_reward_before: 0.0,
    }
}

/// Worst relative error `|g - g_fd| / max(|g|, |g_fd|)` over `cases` random
/// networks and batches, with central differences on the squared
/// TD error against fixed targets. Components
/// where both gradients are below `floor` count as agreeing.
pub fn gradient_check(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Near the cube root of machine epsilon: balances truncation and rounding error.
    let h = 1e-5;
    let floor = 1e-7;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let n_targets = rng.gen_range(0..3);
        let obs_dim = 2 + 2 * n_targets;
        let hidden: Vec<usize> = (0..rng.gen_range(1..3)).map(|_| rng.gen_range(3..12)).collect();
        let mut sizes = vec![obs_dim];
        sizes.extend(&hidden);
        sizes.push(Action::COUNT);
        let activation = if case % 2 == 0 { Activation::Relu } else { Activation::Tanh };
        let mut online = QNetwork::new(&sizes, activation, 15.0, &mut rng);
        let target = QNetwork::new(&sizes, activation, 15.0, &mut rng);
        // Fresh networks have zero biases; jitter every parameter so no ReLU
        // sits exactly on its kink.
        for i in 0..online.param_count() {
            online.set_param(i, online.param(i) + rng.gen_range(-0.1..0.1));
        }
        let batch: Vec<Transition> = (0..rng.gen_range(1..17)).map(|_| random_transition(&mut rng, n_targets)).collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let gamma = rng.gen_range(0.5..1.0);
        let (loss, grads) = td_loss(&online, &target, &refs, gamma).unwrap();
        // The bootstrap targets are constants of the loss, so they are frozen
        // at the unperturbed parameters.
        let ys: Vec<f64> = batch.iter().map(|t| double_q_target(&online, &target, t, gamma)).collect();
        let fixed_loss = |net: &QNetwork| {
            batch.iter().zip(&ys).map(|(t, y)| (net.q_values(&t.obs)[t.action.index()] - y).powi(2)).sum::<f64>()
                / batch.len() as f64
        };
        assert!((fixed_loss(&online) - loss).abs() <= 1e-12 * loss.max(1.0));
        let analytic = grads.flat();
        let mut probe = online.clone();
        for (i, &g) in analytic.iter().enumerate() {
            let base = online.param(i);
            probe.set_param(i, base + h);
            let up = fixed_loss(&probe);
            probe.set_param(i, base - h);
            let down = fixed_loss(&probe);
            probe.set_param(i, base);
            let numeric = (up - down) / (2.0 * h);
            let scale = g.abs().max(numeric.abs());
            if scale > floor {
                worst = worst.max((g - numeric).abs() / scale);
            }
        }
    }
    worst
}

/// Five-state chain: states 0 and 4 are terminal (entering them pays 0.5 and
/// 1.0), the agent starts in 1..=3. Actions 0..3 step left, 3..6 step right;
/// within each group the action costs 0, 0.1 and 0.2.
pub const CHAIN_GAMMA: f64 = 0.6;

fn chain_step(s: usize, a: usize) -> (usize, f64, bool) {
    let next = if a < 3 { s - 1 } else { s + 1 };
    let cost = -0.1 * (a % 3) as f64;
    let reward = cost
        + match next {
            0 => 0.5,
            4 => 1.0,
            _ => 0.0,
        };
    (next, reward, next == 0 || next == 4)
}

/// Exact action values by value iteration, `q[s][a]` for s in 1..=3.
pub fn chain_value_iteration() -> Vec<Vec<f64>> {
    let mut v = [0.0f64; 5];
    for _ in 0..200 {
        for s in 1..=3 {
            v[s] = (0..Action::COUNT)
                .map(|a| {
                    let (n, r, done) = chain_step(s, a);
                    r + if done { 0.0 } else { CHAIN_GAMMA * v[n] }
                })
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    (0..=4)
        .map(|s| {
            if s == 0 || s == 4 {
                return vec![0.0; Action::COUNT];
            }
            (0..Action::COUNT)
                .map(|a| {
                    let (n, r, done) = chain_step(s, a);
                    r + if done { 0.0 } else { CHAIN_GAMMA * v[n] }
                })
                .collect()
        })
        .collect()
}

fn chain_obs(s: usize) -> Observation {
    Observation { ego_speed: s as f64, ego_dist_to_conflict: 0.0, targets: vec![] }
}

/// Trains a learner on every chain transition and returns its Q-values,
/// indexed like [`chain_value_iteration`].
pub fn chain_learned_q(seed: u64) -> Vec<Vec<f64>> {
    let cfg = TrainConfig {
        learning_rate: 1e-3,
        gamma: CHAIN_GAMMA,
        batch_size: 32,
        target_sync: 100,
        hidden: vec![32, 32],
        optimizer: Optimizer::Adam,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = Learner::new(2, 4.0, cfg, &mut rng).unwrap();
    let mut buffer = ReplayBuffer::new(1000).unwrap();
    for s in 1..=3 {
        for a in 0..Action::COUNT {
            let (n, r, done) = chain_step(s, a);
            for _ in 0..4 {
                buffer.push(Transition {
                    obs: chain_obs(s),
                    action: Action::new(a).unwrap(),
                    reward: r,
                    next_obs: chain_obs(n),
                    done,
                    cum_reward_before: 0.0,
                });
            }
        }
    }
    for _ in 0..20000 {
        let batch = buffer.sample_batch(32, &mut rng).unwrap();
        learner.train_step(&batch).unwrap();
    }
    let net = learner.into_network();
    (0..=4).map(|s| if s == 0 || s == 4 { vec![0.0; Action::COUNT] } else { net.q_values(&chain_obs(s)) }).collect()
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

/// `sum (observed - expected)^2 / expected` against uniform cell probabilities.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Whether `count` successes in `n` trials lie within `k` binomial standard
/// deviations of `n p`.
pub fn within_sigma(count: usize, n: usize, p: f64, k: f64) -> bool {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - mean).abs() <= k * sd
}
