//! Intersection-crossing simulator.
//!
//! The ego vehicle and every target move along fixed 1-D paths. Each target
//! path crosses the ego path in a single conflict zone of length
//! `conflict_len`. Positions are measured in meters along each vehicle's own
//! path; the conflict zone starts at `ego_start_dist` on the ego path and at
//! `spawn_max` on every target path, so a target spawned at path position `p`
//! is `spawn_max - p` meters from the zone.
//!
//! Target behaviour is latent: aggressive targets (code 1) track their
//! desired speed regardless of the ego, cooperative targets (code 0) brake
//! while the ego is close to the zone but never drop below `v_floor`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("target count must be positive, got {0}")]
    InvalidTargetCount(usize),
    #[error("behaviour code must be 0 or 1, got {0}")]
    InvalidBehaviour(u8),
    #[error("expected {expected} targets, got {got}")]
    TargetCountMismatch { expected: usize, got: usize },
    #[error("acceleration index {0} is outside the action set")]
    InvalidAction(usize),
    #[error("cannot step a terminal state (t = {0})")]
    Terminal(u32),
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, EnvError>;

/// Longitudinal accelerations available to the ego, in m/s².
pub const ACCELERATIONS: [f64; 6] = [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0];

/// Environment constants. Every field has a default and can be overridden
/// from the experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Simulation timestep in seconds.
    pub dt: f64,
    /// Episode horizon in steps.
    pub t_max: u32,
    pub n_targets: usize,
    pub conflict_len: f64,
    /// Distance from the ego start to the conflict zone.
    pub ego_start_dist: f64,
    /// Closest target spawn distance before the zone.
    pub spawn_min: f64,
    /// Farthest target spawn distance before the zone.
    pub spawn_max: f64,
    pub v_max: f64,
    pub v_ego_init: f64,
    /// Speed aggressive targets track.
    pub v_des: f64,
    /// Lower end of the uniform target spawn speed range.
    pub target_speed_min: f64,
    /// Upper end of the uniform target spawn speed range.
    pub target_speed_max: f64,
    /// Cooperative targets never brake below this speed.
    pub v_floor: f64,
    /// Cooperative targets yield while the ego is within this distance of the zone.
    pub d_coop: f64,
    /// Bound on the target speed-tracking acceleration.
    pub target_accel_max: f64,
    /// Braking rate of a yielding cooperative target.
    pub coop_decel: f64,
    pub reward_collision: f64,
    pub reward_step: f64,
    /// Half-width of uniform observation noise; 0 means noiseless.
    pub obs_noise: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            dt: 0.5,
            t_max: 30,
            n_targets: 2,
            conflict_len: 8.0,
            ego_start_dist: 40.0,
            spawn_min: 30.0,
            spawn_max: 70.0,
            v_max: 15.0,
            v_ego_init: 8.0,
            v_des: 12.0,
            target_speed_min: 2.0,
            target_speed_max: 12.0,
            v_floor: 2.0,
            d_coop: 25.0,
            target_accel_max: 3.0,
            coop_decel: 3.0,
            reward_collision: -5.0,
            reward_step: -0.1,
            obs_noise: 0.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(EnvError::InvalidConfig(msg.to_string()));
        if !(self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if self.t_max == 0 {
            return bad("t_max must be positive");
        }
        if !(self.conflict_len > 0.0) {
            return bad("conflict_len must be positive");
        }
        if !(self.spawn_min >= 0.0 && self.spawn_min < self.spawn_max) {
            return bad("spawn window must satisfy 0 <= spawn_min < spawn_max");
        }
        if !(self.v_max > 0.0) || !(0.0..=self.v_max).contains(&self.v_ego_init) {
            return bad("speeds must satisfy 0 <= v_ego_init <= v_max");
        }
        if !(self.v_floor > 0.0 && self.v_floor <= self.v_des && self.v_des <= self.v_max) {
            return bad("speeds must satisfy 0 < v_floor <= v_des <= v_max");
        }
        if !(0.0 <= self.target_speed_min
            && self.target_speed_min <= self.target_speed_max
            && self.target_speed_max <= self.v_max)
        {
            return bad("speeds must satisfy 0 <= target_speed_min <= target_speed_max <= v_max");
        }
        if self.obs_noise < 0.0 {
            return bad("obs_noise must be non-negative");
        }
        Ok(())
    }

    /// Dimension of the observation feature vector fed to value networks.
    pub fn obs_dim(&self) -> usize {
        2 + 2 * self.n_targets
    }
}

/// Behaviour code of one target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Behaviour {
    Cooperative = 0,
    Aggressive = 1,
}

impl Behaviour {
    pub const ALL: [Behaviour; 2] = [Behaviour::Cooperative, Behaviour::Aggressive];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Behaviour::Cooperative),
            1 => Ok(Behaviour::Aggressive),
            other => Err(EnvError::InvalidBehaviour(other)),
        }
    }
}

/// The hidden dynamics parameters: one behaviour per target.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EnvParams {
    behaviours: Vec<Behaviour>,
}

impl EnvParams {
    pub fn new(behaviours: Vec<Behaviour>) -> Self {
        Self { behaviours }
    }

    pub fn from_codes(codes: &[u8]) -> Result<Self> {
        let behaviours = codes
            .iter()
            .map(|&c| Behaviour::from_code(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { behaviours })
    }

    pub fn all(n: usize, behaviour: Behaviour) -> Self {
        Self { behaviours: vec![behaviour; n] }
    }

    /// Every behaviour combination for `n` targets, in lexicographic order
    /// with target 0 as the most significant position.
    pub fn enumerate(n: usize) -> Vec<Self> {
        (0..1usize << n)
            .map(|bits| {
                let behaviours = (0..n)
                    .map(|i| {
                        if bits >> (n - 1 - i) & 1 == 1 {
                            Behaviour::Aggressive
                        } else {
                            Behaviour::Cooperative
                        }
                    })
                    .collect();
                Self { behaviours }
            })
            .collect()
    }

    pub fn n(&self) -> usize {
        self.behaviours.len()
    }

    pub fn behaviours(&self) -> &[Behaviour] {
        &self.behaviours
    }

    pub fn get(&self, i: usize) -> Behaviour {
        self.behaviours[i]
    }

    /// Compact label such as `"10"` (target 0 aggressive, target 1 cooperative).
    pub fn label(&self) -> String {
        self.behaviours.iter().map(|b| char::from(b'0' + b.code())).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Meters along the vehicle's path.
    pub path_pos: f64,
    /// Meters per second, within `[0, v_max]`.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub ego: VehicleState,
    pub targets: Vec<VehicleState>,
    pub params: EnvParams,
    pub t: u32,
}

impl EnvState {
    /// Same kinematics under different hidden behaviours.
    pub fn with_params(&self, params: EnvParams) -> Self {
        Self { params, ..self.clone() }
    }

    /// Bitwise fingerprint of the state, used to check that planning leaves
    /// the real environment untouched.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.ego.path_pos.to_bits().hash(&mut h);
        self.ego.speed.to_bits().hash(&mut h);
        for v in &self.targets {
            v.path_pos.to_bits().hash(&mut h);
            v.speed.to_bits().hash(&mut h);
        }
        self.params.hash(&mut h);
        self.t.hash(&mut h);
        h.finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetObs {
    pub dist_to_conflict: f64,
    pub speed: f64,
}

/// What the agent sees: kinematics only, never the behaviour codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub ego_speed: f64,
    /// Distance to the conflict-zone entry; negative once the ego has entered.
    pub ego_dist_to_conflict: f64,
    pub targets: Vec<TargetObs>,
}

impl Observation {
    /// Normalized network input: distances over 100 m, speeds over `v_max`.
    pub fn features(&self, v_max: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 + 2 * self.targets.len());
        self.write_features(v_max, &mut out);
        out
    }

    pub fn write_features(&self, v_max: f64, out: &mut Vec<f64>) {
        out.clear();
        out.push(self.ego_speed / v_max);
        out.push(self.ego_dist_to_conflict / DIST_SCALE);
        for t in &self.targets {
            out.push(t.dist_to_conflict / DIST_SCALE);
            out.push(t.speed / v_max);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.ego_speed.is_finite()
            && self.ego_dist_to_conflict.is_finite()
            && self
                .targets
                .iter()
                .all(|t| t.dist_to_conflict.is_finite() && t.speed.is_finite())
    }
}

const DIST_SCALE: f64 = 100.0;

/// Index into [`ACCELERATIONS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Action(usize);

impl Action {
    pub const COUNT: usize = ACCELERATIONS.len();

    pub fn new(index: usize) -> Result<Self> {
        if index < Self::COUNT {
            Ok(Self(index))
        } else {
            Err(EnvError::InvalidAction(index))
        }
    }

    pub fn from_accel(accel: f64) -> Option<Self> {
        ACCELERATIONS.iter().position(|&a| a == accel).map(Self)
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..Self::COUNT).map(Self)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn accel(self) -> f64 {
        ACCELERATIONS[self.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub done: bool,
    pub collision: bool,
    pub success: bool,
}

/// Stateless simulator: all operations are pure functions of their inputs.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: EnvConfig,
}

impl Simulator {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    fn ego_zone_start(&self) -> f64 {
        self.cfg.ego_start_dist
    }

    fn target_zone_start(&self) -> f64 {
        self.cfg.spawn_max
    }

    pub fn ego_dist(&self, ego: &VehicleState) -> f64 {
        self.ego_zone_start() - ego.path_pos
    }

    pub fn target_dist(&self, target: &VehicleState) -> f64 {
        self.target_zone_start() - target.path_pos
    }

    /// Inside the zone: `-conflict_len < dist <= 0`.
    fn occupies(&self, dist: f64) -> bool {
        dist <= 0.0 && dist > -self.cfg.conflict_len
    }

    fn passed(&self, dist: f64) -> bool {
        dist <= -self.cfg.conflict_len
    }

    pub fn ego_passed(&self, state: &EnvState) -> bool {
        self.passed(self.ego_dist(&state.ego))
    }

    /// Initial state: ego at the fixed start, targets uniform over the spawn
    /// window and the spawn speed range.
    pub fn reset(&self, params: &EnvParams, seed: u64) -> Result<EnvState> {
        if params.n() == 0 {
            return Err(EnvError::InvalidTargetCount(0));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = self.cfg.spawn_max - self.cfg.spawn_min;
        let (lo, hi) = (self.cfg.target_speed_min, self.cfg.target_speed_max);
        let targets = (0..params.n())
            .map(|_| {
                let path_pos = rng.gen_range(0.0..window);
                let speed = if lo < hi { rng.gen_range(lo..=hi) } else { lo };
                VehicleState { path_pos, speed }
            })
            .collect();
        Ok(EnvState {
            ego: VehicleState { path_pos: 0.0, speed: self.cfg.v_ego_init },
            targets,
            params: params.clone(),
            t: 0,
        })
    }

    /// Acceleration a target applies given the current ego state.
    pub fn target_accel(&self, target: &VehicleState, ego: &VehicleState, b: Behaviour) -> f64 {
        let c = &self.cfg;
        let track = ((c.v_des - target.speed) / c.dt).clamp(-c.target_accel_max, c.target_accel_max);
        if b == Behaviour::Aggressive {
            return track;
        }
        let ego_dist = self.ego_dist(ego);
        let target_dist = self.target_dist(target);
        let yielding = ego_dist <= c.d_coop && !self.passed(ego_dist) && !self.passed(target_dist);
        if !yielding {
            return track;
        }
        // Brake toward the floor speed without undershooting it.
        let to_floor = (c.v_floor - target.speed) / c.dt;
        (-c.coop_decel).max(to_floor).min(track)
    }

    fn advance(&self, v: &VehicleState, accel: f64) -> VehicleState {
        let speed = (v.speed + accel * self.cfg.dt).clamp(0.0, self.cfg.v_max);
        VehicleState {
            path_pos: v.path_pos + 0.5 * (v.speed + speed) * self.cfg.dt,
            speed,
        }
    }

    pub fn check_collision(&self, state: &EnvState) -> bool {
        if !self.occupies(self.ego_dist(&state.ego)) {
            return false;
        }
        state.targets.iter().any(|t| self.occupies(self.target_dist(t)))
    }

    pub fn reward(&self, _prev: &EnvState, _action: Action, next: &EnvState) -> f64 {
        if self.check_collision(next) {
            self.cfg.reward_collision
        } else {
            self.cfg.reward_step
        }
    }

    pub fn is_terminal(&self, state: &EnvState) -> bool {
        self.check_collision(state) || self.ego_passed(state) || state.t >= self.cfg.t_max
    }

    pub fn step(&self, state: &EnvState, action: Action) -> Result<StepOutcome> {
        if state.targets.len() != state.params.n() {
            return Err(EnvError::TargetCountMismatch {
                expected: state.params.n(),
                got: state.targets.len(),
            });
        }
        if self.is_terminal(state) {
            return Err(EnvError::Terminal(state.t));
        }
        let ego = self.advance(&state.ego, action.accel());
        let targets = state
            .targets
            .iter()
            .zip(state.params.behaviours())
            .map(|(t, &b)| self.advance(t, self.target_accel(t, &state.ego, b)))
            .collect();
        let next_state = EnvState {
            ego,
            targets,
            params: state.params.clone(),
            t: state.t + 1,
        };
        let collision = self.check_collision(&next_state);
        let success = !collision && self.ego_passed(&next_state);
        let done = collision || success || next_state.t >= self.cfg.t_max;
        let reward = self.reward(state, action, &next_state);
        Ok(StepOutcome { next_state, reward, done, collision, success })
    }

    pub fn observe(&self, state: &EnvState) -> Observation {
        Observation {
            ego_speed: state.ego.speed,
            ego_dist_to_conflict: self.ego_dist(&state.ego),
            targets: state
                .targets
                .iter()
                .map(|t| TargetObs { dist_to_conflict: self.target_dist(t), speed: t.speed })
                .collect(),
        }
    }

    /// `observe` plus uniform noise of half-width `obs_noise` on every field.
    /// Identical to `observe` (and draws nothing) when the noise is zero.
    pub fn observe_noisy<R: Rng>(&self, state: &EnvState, rng: &mut R) -> Observation {
        let mut obs = self.observe(state);
        let a = self.cfg.obs_noise;
        if a > 0.0 {
            let mut jitter = |x: &mut f64| *x += rng.gen_range(-a..=a);
            jitter(&mut obs.ego_speed);
            jitter(&mut obs.ego_dist_to_conflict);
            for t in &mut obs.targets {
                jitter(&mut t.dist_to_conflict);
                jitter(&mut t.speed);
            }
        }
        obs
    }

    /// Places vehicles at the observed positions and speeds under the given
    /// hidden parameters. The step counter restarts at 0.
    pub fn state_from_observation(&self, obs: &Observation, params: &EnvParams) -> Result<EnvState> {
        if obs.targets.len() != params.n() {
            return Err(EnvError::TargetCountMismatch { expected: params.n(), got: obs.targets.len() });
        }
        let v_max = self.cfg.v_max;
        Ok(EnvState {
            ego: VehicleState {
                path_pos: self.ego_zone_start() - obs.ego_dist_to_conflict,
                speed: obs.ego_speed.clamp(0.0, v_max),
            },
            targets: obs
                .targets
                .iter()
                .map(|t| VehicleState {
                    path_pos: self.target_zone_start() - t.dist_to_conflict,
                    speed: t.speed.clamp(0.0, v_max),
                })
                .collect(),
            params: params.clone(),
            t: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sim() -> Simulator {
        Simulator::new(EnvConfig::default()).unwrap()
    }

    fn state_with(sim: &Simulator, ego_dist: f64, ego_speed: f64, targets: &[(f64, f64)], codes: &[u8]) -> EnvState {
        let c = sim.config();
        EnvState {
            ego: VehicleState { path_pos: c.ego_start_dist - ego_dist, speed: ego_speed },
            targets: targets
                .iter()
                .map(|&(d, v)| VehicleState { path_pos: c.spawn_max - d, speed: v })
                .collect(),
            params: EnvParams::from_codes(codes).unwrap(),
            t: 0,
        }
    }

    #[test]
    fn reset_is_deterministic_and_ego_fixed() {
        let sim = sim();
        let params = EnvParams::all(2, Behaviour::Aggressive);
        assert_eq!(sim.reset(&params, 7).unwrap(), sim.reset(&params, 7).unwrap());
        for seed in 0..50 {
            let s = sim.reset(&params, seed).unwrap();
            assert_eq!(s.ego.path_pos, 0.0);
            assert_eq!(s.ego.speed, 8.0);
            assert_eq!(s.t, 0);
            for t in &s.targets {
                let d = sim.target_dist(t);
                assert!((30.0..=70.0).contains(&d));
            }
        }
    }

    #[test]
    fn spawn_speeds_cover_the_configured_range() {
        let sim = Simulator::new(EnvConfig { target_speed_min: 4.0, target_speed_max: 12.0, ..EnvConfig::default() })
            .unwrap();
        let params = EnvParams::all(2, Behaviour::Aggressive);
        let speeds: Vec<f64> =
            (0..500).flat_map(|seed| sim.reset(&params, seed).unwrap().targets).map(|t| t.speed).collect();
        assert!(speeds.iter().all(|v| (4.0..=12.0).contains(v)));
        assert!(speeds.iter().any(|&v| v < 5.0) && speeds.iter().any(|&v| v > 11.0));
        assert!(EnvConfig { target_speed_min: 9.0, target_speed_max: 8.0, ..EnvConfig::default() }.validate().is_err());
    }

    #[test]
    fn reset_rejects_empty_params() {
        let err = sim().reset(&EnvParams::new(vec![]), 0).unwrap_err();
        assert_eq!(err, EnvError::InvalidTargetCount(0));
    }

    #[test]
    fn invalid_behaviour_code_rejected() {
        assert_eq!(EnvParams::from_codes(&[0, 2]).unwrap_err(), EnvError::InvalidBehaviour(2));
    }

    #[test]
    fn aggressive_ignores_ego() {
        let sim = sim();
        let target = VehicleState { path_pos: 50.0, speed: 9.0 };
        let ego_at_edge = VehicleState { path_pos: 40.0, speed: 0.0 };
        let ego_far = VehicleState { path_pos: -1000.0, speed: 0.0 };
        assert_eq!(
            sim.target_accel(&target, &ego_at_edge, Behaviour::Aggressive),
            sim.target_accel(&target, &ego_far, Behaviour::Aggressive)
        );
    }

    #[test]
    fn cooperative_inactive_when_ego_far() {
        let sim = sim();
        let target = VehicleState { path_pos: 20.0, speed: 12.0 };
        let ego = VehicleState { path_pos: 0.0, speed: 8.0 }; // 40 m out, beyond d_coop
        assert_eq!(
            sim.target_accel(&target, &ego, Behaviour::Cooperative),
            sim.target_accel(&target, &ego, Behaviour::Aggressive)
        );
    }

    #[test]
    fn cooperative_never_brakes_below_floor() {
        let sim = sim();
        let ego = VehicleState { path_pos: 44.0, speed: 0.0 }; // halted inside the zone
        let target = VehicleState { path_pos: 60.0, speed: 2.0 };
        assert!(sim.target_accel(&target, &ego, Behaviour::Cooperative) >= 0.0);
        let fast = VehicleState { path_pos: 60.0, speed: 12.0 };
        assert_eq!(sim.target_accel(&fast, &ego, Behaviour::Cooperative), -3.0);
        let near_floor = VehicleState { path_pos: 60.0, speed: 2.5 };
        assert_eq!(sim.target_accel(&near_floor, &ego, Behaviour::Cooperative), -1.0);
    }

    #[test]
    fn ego_speed_clamps_at_zero() {
        let sim = sim();
        let s = state_with(&sim, 30.0, 2.0, &[(60.0, 12.0), (65.0, 12.0)], &[1, 1]);
        let out = sim.step(&s, Action::from_accel(-4.0).unwrap()).unwrap();
        assert_eq!(out.next_state.ego.speed, 0.0);
        assert!(out.next_state.ego.path_pos >= s.ego.path_pos);
    }

    #[test]
    fn ordinary_step_costs_a_tenth() {
        let sim = sim();
        let s = sim.reset(&EnvParams::all(2, Behaviour::Aggressive), 1).unwrap();
        let out = sim.step(&s, Action::from_accel(0.0).unwrap()).unwrap();
        assert!(!out.done);
        assert_eq!(out.reward, -0.1);
        assert_eq!(out.next_state.t, 1);
    }

    #[test]
    fn collision_step_is_terminal_with_penalty() {
        let sim = sim();
        // Ego enters the zone next step (4 m out at 8 m/s); target likewise at 12 m/s.
        let s = state_with(&sim, 3.0, 8.0, &[(5.0, 12.0), (60.0, 12.0)], &[1, 1]);
        let out = sim.step(&s, Action::from_accel(0.0).unwrap()).unwrap();
        assert!(out.collision && out.done && !out.success);
        assert_eq!(out.reward, -5.0);
        assert!(matches!(sim.step(&out.next_state, Action::new(0).unwrap()), Err(EnvError::Terminal(1))));
    }

    #[test]
    fn collision_geometry_matches_interval_oracle() {
        let sim = sim();
        let inside = |d: f64| d <= 0.0 && d > -8.0;
        let dists = [12.0, 0.5, 0.0, -0.1, -4.0, -7.9, -8.0, -9.0];
        for &e in &dists {
            for &t in &dists {
                let s = state_with(&sim, e, 5.0, &[(t, 5.0)], &[1]);
                assert_eq!(sim.check_collision(&s), inside(e) && inside(t), "ego {e}, target {t}");
            }
        }
        // ego past, target inside
        let s = state_with(&sim, -9.0, 5.0, &[(-3.0, 5.0)], &[1]);
        assert!(!sim.check_collision(&s));
    }

    #[test]
    fn observation_hides_behaviours() {
        let sim = sim();
        let a = sim.reset(&EnvParams::from_codes(&[0, 1]).unwrap(), 3).unwrap();
        let b = a.with_params(EnvParams::from_codes(&[1, 0]).unwrap());
        assert_eq!(sim.observe(&a), sim.observe(&b));
        let past = state_with(&sim, -10.0, 10.0, &[(30.0, 12.0), (40.0, 12.0)], &[1, 1]);
        assert!(sim.observe(&past).ego_dist_to_conflict < 0.0);
    }

    #[test]
    fn state_round_trips_through_observation() {
        let sim = sim();
        let s = sim.reset(&EnvParams::all(2, Behaviour::Aggressive), 11).unwrap();
        let obs = sim.observe(&s);
        let back = sim.state_from_observation(&obs, &EnvParams::all(2, Behaviour::Cooperative)).unwrap();
        assert_eq!(sim.observe(&back), obs);
    }

    #[test]
    fn enumerate_covers_all_combinations() {
        let all = EnvParams::enumerate(2);
        let labels: Vec<_> = all.iter().map(|p| p.label()).collect();
        assert_eq!(labels, ["00", "01", "10", "11"]);
    }

    #[test]
    fn config_validation() {
        let mut c = EnvConfig::default();
        assert!(c.validate().is_ok());
        c.v_floor = 0.0;
        assert!(c.validate().is_err());
    }
}
