//! Per-target behaviour hypotheses, pruned by one-step speed predictions.

use std::fmt;

use rand::Rng;

use crate::env::{Behaviour, EnvParams, EnvState, Observation, Simulator};

/// Subset of `{cooperative, aggressive}`, stored as a two-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BehaviourSet(u8);

impl BehaviourSet {
    pub const FULL: BehaviourSet = BehaviourSet(0b11);
    pub const EMPTY: BehaviourSet = BehaviourSet(0);

    fn bit(b: Behaviour) -> u8 {
        1 << b.code()
    }

    pub fn only(b: Behaviour) -> Self {
        Self(Self::bit(b))
    }

    pub fn contains(self, b: Behaviour) -> bool {
        self.0 & Self::bit(b) != 0
    }

    pub fn insert(&mut self, b: Behaviour) {
        self.0 |= Self::bit(b);
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: BehaviourSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Behaviour> {
        Behaviour::ALL.into_iter().filter(move |&b| self.contains(b))
    }
}

impl fmt::Display for BehaviourSet {
    /// `{0,1}`, `{0}`, `{1}` or `{}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|b| b.code().to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// Still-plausible behaviours per target.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Belief {
    sets: Vec<BehaviourSet>,
}

impl Belief {
    /// Every behaviour plausible for every target.
    pub fn uniform(n: usize) -> Self {
        Self { sets: vec![BehaviourSet::FULL; n] }
    }

    pub fn from_sets(sets: Vec<BehaviourSet>) -> Self {
        assert!(sets.iter().all(|s| !s.is_empty()), "belief sets must be non-empty");
        Self { sets }
    }

    pub fn sets(&self) -> &[BehaviourSet] {
        &self.sets
    }

    pub fn n(&self) -> usize {
        self.sets.len()
    }

    /// Number of plausible behaviour vectors.
    pub fn combinations(&self) -> usize {
        self.sets.iter().map(|s| s.len()).product()
    }

    pub fn admits(&self, params: &EnvParams) -> bool {
        params.n() == self.n() && params.behaviours().iter().zip(&self.sets).all(|(&b, s)| s.contains(b))
    }

    /// All plausible behaviour vectors in lexicographic order.
    pub fn enumerate(&self) -> Vec<EnvParams> {
        let mut out: Vec<Vec<Behaviour>> = vec![Vec::with_capacity(self.n())];
        for set in &self.sets {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    set.iter().map(move |b| {
                        let mut v = prefix.clone();
                        v.push(b);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(EnvParams::new).collect()
    }

    /// Independent uniform draw from each target's set.
    pub fn sample_params<R: Rng>(&self, rng: &mut R) -> EnvParams {
        let behaviours = self
            .sets
            .iter()
            .map(|s| {
                let options: Vec<Behaviour> = s.iter().collect();
                if options.len() == 1 {
                    options[0]
                } else {
                    options[rng.gen_range(0..options.len())]
                }
            })
            .collect();
        EnvParams::new(behaviours)
    }

    /// Compact form such as `{0,1};{1}`.
    pub fn label(&self) -> String {
        self.sets.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefUpdate {
    pub belief: Belief,
    /// Targets whose every hypothesis was contradicted and whose set was reset.
    pub mismatches: Vec<usize>,
}

/// Keeps behaviour `b` for target `i` when the speed predicted by one step of
/// `b` from `prev` lies strictly within `eps_v` of the observed speed. A set
/// emptied this way is reset to both behaviours and reported.
pub fn belief_update(
    belief: &Belief,
    sim: &Simulator,
    prev: &EnvState,
    obs: &Observation,
    eps_v: f64,
) -> BeliefUpdate {
    let dt = sim.config().dt;
    let v_max = sim.config().v_max;
    let mut sets = belief.sets.clone();
    let mut mismatches = Vec::new();
    for (i, set) in sets.iter_mut().enumerate() {
        let (Some(target), Some(seen)) = (prev.targets.get(i), obs.targets.get(i)) else {
            continue;
        };
        let mut kept = BehaviourSet::EMPTY;
        for b in set.iter() {
            let predicted = (target.speed + sim.target_accel(target, &prev.ego, b) * dt).clamp(0.0, v_max);
            if (predicted - seen.speed).abs() < eps_v {
                kept.insert(b);
            }
        }
        if kept.is_empty() {
            log::warn!("target {i}: no behaviour model explains observed speed {:.3}; resetting belief", seen.speed);
            mismatches.push(i);
            kept = BehaviourSet::FULL;
        }
        *set = kept;
    }
    BeliefUpdate { belief: Belief { sets }, mismatches }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, VehicleState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sim() -> Simulator {
        Simulator::new(EnvConfig::default()).unwrap()
    }

    fn state(ego_pos: f64, targets: &[(f64, f64)], codes: &[u8]) -> EnvState {
        EnvState {
            ego: VehicleState { path_pos: ego_pos, speed: 6.0 },
            targets: targets.iter().map(|&(p, v)| VehicleState { path_pos: p, speed: v }).collect(),
            params: EnvParams::from_codes(codes).unwrap(),
            t: 0,
        }
    }

    #[test]
    fn uniform_at_start() {
        let b = Belief::uniform(3);
        assert!(b.sets().iter().all(|&s| s == BehaviourSet::FULL));
        assert_eq!(b.combinations(), 8);
        assert_eq!(b.label(), "{0,1};{0,1};{0,1}");
    }

    #[test]
    fn cooperative_slowdown_eliminates_aggressive() {
        let sim = sim();
        // Ego 20 m from the zone: within d_coop, cooperation active.
        let prev = state(20.0, &[(10.0, 12.0)], &[0]);
        let next = sim.step(&prev, crate::env::Action::new(3).unwrap()).unwrap().next_state;
        let obs = sim.observe(&next);
        let up = belief_update(&Belief::uniform(1), &sim, &prev, &obs, 0.5);
        assert_eq!(up.belief.sets()[0], BehaviourSet::only(Behaviour::Cooperative));
        assert!(up.mismatches.is_empty());
    }

    #[test]
    fn indistinguishable_when_ego_far() {
        let sim = sim();
        let prev = state(0.0, &[(10.0, 12.0), (20.0, 12.0)], &[0, 1]);
        let next = sim.step(&prev, crate::env::Action::new(3).unwrap()).unwrap().next_state;
        let up = belief_update(&Belief::uniform(2), &sim, &prev, &sim.observe(&next), 0.5);
        assert_eq!(up.belief, Belief::uniform(2));
    }

    #[test]
    fn contradiction_resets_and_reports() {
        let sim = sim();
        let prev = state(0.0, &[(10.0, 12.0)], &[1]);
        let mut obs = sim.observe(&prev);
        obs.targets[0].speed = 3.0;
        let up = belief_update(&Belief::uniform(1), &sim, &prev, &obs, 0.5);
        assert_eq!(up.mismatches, vec![0]);
        assert_eq!(up.belief, Belief::uniform(1));
    }

    #[test]
    fn singleton_sets_sample_deterministically() {
        let b = Belief::from_sets(vec![BehaviourSet::only(Behaviour::Aggressive), BehaviourSet::only(Behaviour::Cooperative)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(b.sample_params(&mut rng).label(), "10");
        }
        assert_eq!(b.enumerate().len(), 1);
    }

    #[test]
    fn samples_respect_sets() {
        let b = Belief::from_sets(vec![BehaviourSet::FULL, BehaviourSet::only(Behaviour::Cooperative)]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert!(b.admits(&b.sample_params(&mut rng)));
        }
        let labels: Vec<String> = b.enumerate().iter().map(|p| p.label()).collect();
        assert_eq!(labels, ["00", "10"]);
    }
}
