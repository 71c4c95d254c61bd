//! Fixed-capacity FIFO experience store.
//!
//! Besides uniform minibatch sampling, the buffer serves two contingency
//! training needs: the feature samples of the most recent observations (the
//! reference density) and uniform draws over stored pre-intersection
//! observations (hand-off states).

use std::collections::VecDeque;
use std::io::{Read, Write};

use rand::Rng;
use thiserror::Error;

use crate::env::{Action, EnvError, EnvParams, EnvState, Observation, Simulator, TargetObs};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("buffer holds {size} transitions, cannot sample {requested}")]
    Underfull { size: usize, requested: usize },
    #[error("buffer is empty")]
    Empty,
    #[error("handoff pool empty: no stored observation precedes the conflict zone")]
    HandoffPoolEmpty,
    #[error("capacity must be positive")]
    ZeroCapacity,
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ReplayError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_obs: Observation,
    pub done: bool,
    /// Undiscounted return accumulated in the episode before this step.
    pub cum_reward_before: f64,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(ReplayError::ZeroCapacity);
        }
        Ok(Self { capacity, items: VecDeque::with_capacity(capacity.min(1 << 16)), pushed: 0 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    /// Total number of transitions ever pushed.
    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
        self.pushed += 1;
    }

    /// Oldest first.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Transition> + ExactSizeIterator {
        self.items.iter()
    }

    /// `n` uniform draws with replacement.
    pub fn sample_batch<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if self.items.is_empty() || self.items.len() < n {
            return Err(ReplayError::Underfull { size: self.items.len(), requested: n });
        }
        let size = self.items.len();
        Ok((0..n).map(|_| &self.items[rng.gen_range(0..size)]).collect())
    }

    /// `feature` applied to the observations of the `k` most recent
    /// transitions, oldest first.
    pub fn recent_feature_samples<F>(&self, k: usize, feature: F) -> Result<Vec<f64>>
    where
        F: Fn(&Observation) -> f64,
    {
        if self.items.is_empty() {
            return Err(ReplayError::Empty);
        }
        let skip = self.items.len().saturating_sub(k);
        Ok(self.items.iter().skip(skip).map(|t| feature(&t.obs)).collect())
    }

    /// Uniform draw over stored transitions whose observation precedes the
    /// conflict zone, reconstructed as a full state under `params`.
    pub fn sample_handoff_state<R: Rng>(
        &self,
        sim: &Simulator,
        params: &EnvParams,
        rng: &mut R,
    ) -> Result<(EnvState, f64)> {
        let eligible = self.items.iter().filter(|t| t.obs.ego_dist_to_conflict > 0.0).count();
        if eligible == 0 {
            return Err(ReplayError::HandoffPoolEmpty);
        }
        let pick = rng.gen_range(0..eligible);
        let t = self
            .items
            .iter()
            .filter(|t| t.obs.ego_dist_to_conflict > 0.0)
            .nth(pick)
            .expect("pick < eligible");
        let state = sim.state_from_observation(&t.obs, params)?;
        Ok((state, t.cum_reward_before))
    }

    /// Writes a versioned snapshot: header, then one packed little-endian
    /// record per transition, oldest first.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let n_targets = self.items.front().map_or(0, |t| t.obs.targets.len());
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.capacity as u64).to_le_bytes())?;
        w.write_all(&self.pushed.to_le_bytes())?;
        w.write_all(&(n_targets as u32).to_le_bytes())?;
        w.write_all(&(self.items.len() as u64).to_le_bytes())?;
        for t in &self.items {
            if t.obs.targets.len() != n_targets || t.next_obs.targets.len() != n_targets {
                return Err(ReplayError::Snapshot("inconsistent target count".into()));
            }
            write_obs(&mut w, &t.obs)?;
            w.write_all(&(t.action.index() as u8).to_le_bytes())?;
            w.write_all(&t.reward.to_le_bytes())?;
            write_obs(&mut w, &t.next_obs)?;
            w.write_all(&[t.done as u8])?;
            w.write_all(&t.cum_reward_before.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(ReplayError::Snapshot("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != SNAPSHOT_VERSION {
            return Err(ReplayError::Snapshot(format!("unsupported version {version}")));
        }
        let capacity = read_u64(&mut r)? as usize;
        let pushed = read_u64(&mut r)?;
        let n_targets = read_u32(&mut r)? as usize;
        let len = read_u64(&mut r)? as usize;
        if len > capacity {
            return Err(ReplayError::Snapshot("length exceeds capacity".into()));
        }
        let mut buf = Self::new(capacity)?;
        for _ in 0..len {
            let obs = read_obs(&mut r, n_targets)?;
            let mut a = [0u8; 1];
            r.read_exact(&mut a)?;
            let action = Action::new(a[0] as usize)?;
            let reward = read_f64(&mut r)?;
            let next_obs = read_obs(&mut r, n_targets)?;
            let mut d = [0u8; 1];
            r.read_exact(&mut d)?;
            let cum_reward_before = read_f64(&mut r)?;
            buf.items.push_back(Transition { obs, action, reward, next_obs, done: d[0] != 0, cum_reward_before });
        }
        buf.pushed = pushed;
        Ok(buf)
    }
}

const SNAPSHOT_MAGIC: &[u8; 8] = b"HCPREPLY";
const SNAPSHOT_VERSION: u32 = 1;

fn write_obs<W: Write>(w: &mut W, o: &Observation) -> std::io::Result<()> {
    w.write_all(&o.ego_speed.to_le_bytes())?;
    w.write_all(&o.ego_dist_to_conflict.to_le_bytes())?;
    for t in &o.targets {
        w.write_all(&t.dist_to_conflict.to_le_bytes())?;
        w.write_all(&t.speed.to_le_bytes())?;
    }
    Ok(())
}

fn read_obs<R: Read>(r: &mut R, n_targets: usize) -> std::io::Result<Observation> {
    let ego_speed = read_f64(r)?;
    let ego_dist_to_conflict = read_f64(r)?;
    let targets = (0..n_targets)
        .map(|_| Ok(TargetObs { dist_to_conflict: read_f64(r)?, speed: read_f64(r)? }))
        .collect::<std::io::Result<Vec<_>>>()?;
    Ok(Observation { ego_speed, ego_dist_to_conflict, targets })
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
