use hcplan_core::env::{Action, Behaviour, EnvConfig, EnvParams, EnvState, Simulator, VehicleState, ACCELERATIONS};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn sim() -> Simulator {
    Simulator::new(EnvConfig::default()).unwrap()
}

fn params_strategy(n: usize) -> impl Strategy<Value = EnvParams> {
    prop::collection::vec(0u8..2, n).prop_map(|c| EnvParams::from_codes(&c).unwrap())
}

#[test]
fn spawn_distances_are_uniform_over_the_window() {
    let sim = sim();
    let cfg = sim.config().clone();
    let params = EnvParams::all(2, Behaviour::Aggressive);
    let bins = 20;
    let mut counts = vec![0usize; bins];
    let n = 10_000u64;
    for seed in 0..n {
        let obs = sim.observe(&sim.reset(&params, seed).unwrap());
        let d = obs.targets[0].dist_to_conflict;
        assert!(d > cfg.spawn_min && d <= cfg.spawn_max, "spawn distance {d}");
        let k = ((d - cfg.spawn_min) / (cfg.spawn_max - cfg.spawn_min) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let expected = n as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2}, p {p}");
}

#[test]
fn full_throttle_without_targets_always_succeeds() {
    let sim = sim();
    let mut state = EnvState {
        ego: VehicleState { path_pos: 0.0, speed: sim.config().v_ego_init },
        targets: vec![],
        params: EnvParams::new(vec![]),
        t: 0,
    };
    let full = Action::from_accel(2.0).unwrap();
    loop {
        let out = sim.step(&state, full).unwrap();
        assert!(!out.collision);
        if out.done {
            assert!(out.success);
            break;
        }
        state = out.next_state;
    }
}

/// Independent interval check: ego in `[zone, zone + L)` along its path and
/// some target likewise along its own.
fn overlap_oracle(cfg: &EnvConfig, s: &EnvState) -> bool {
    let inside = |pos: f64, zone: f64| pos >= zone && pos < zone + cfg.conflict_len;
    inside(s.ego.path_pos, cfg.ego_start_dist) && s.targets.iter().any(|t| inside(t.path_pos, cfg.spawn_max))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_episodes_respect_the_contract(
        params in params_strategy(2),
        seed in any::<u64>(),
        actions in prop::collection::vec(0usize..Action::COUNT, 40),
    ) {
        let sim = sim();
        let cfg = sim.config().clone();
        let mut state = sim.reset(&params, seed).unwrap();
        let mut steps = 0;
        for &a in &actions {
            let prev = state.clone();
            let out = sim.step(&state, Action::new(a).unwrap()).unwrap();
            steps += 1;
            prop_assert!(out.reward == -5.0 || out.reward == -0.1);
            prop_assert_eq!(out.collision, out.reward == -5.0);
            prop_assert!(!out.collision || out.done);
            prop_assert!(!out.success || (out.done && !out.collision));
            prop_assert_eq!(out.collision, overlap_oracle(&cfg, &out.next_state));
            let next = &out.next_state;
            prop_assert!(next.ego.speed >= 0.0 && next.ego.speed <= cfg.v_max);
            prop_assert!(next.ego.path_pos >= prev.ego.path_pos);
            for (t0, t1) in prev.targets.iter().zip(&next.targets) {
                prop_assert!(t1.speed >= 0.0 && t1.speed <= cfg.v_max);
                prop_assert!(t1.path_pos >= t0.path_pos);
            }
            prop_assert!(sim.observe(next).is_finite());
            state = out.next_state;
            if out.done {
                break;
            }
        }
        prop_assert!(steps <= cfg.t_max as usize);
        if steps < actions.len() {
            prop_assert!(sim.step(&state, Action::new(0).unwrap()).is_err());
        }
    }

    #[test]
    fn observations_do_not_depend_on_behaviours(
        a in params_strategy(3),
        b in params_strategy(3),
        seed in any::<u64>(),
    ) {
        let sim = sim();
        let s = sim.reset(&a, seed).unwrap();
        prop_assert_eq!(sim.observe(&s), sim.observe(&s.with_params(b)));
    }

    #[test]
    fn cooperative_targets_never_brake_below_the_floor(
        speed in 0.0f64..15.0,
        target_pos in 0.0f64..80.0,
        ego_pos in 0.0f64..60.0,
        ego_speed in 0.0f64..15.0,
    ) {
        let sim = sim();
        let cfg = sim.config().clone();
        let target = VehicleState { path_pos: target_pos, speed };
        let ego = VehicleState { path_pos: ego_pos, speed: ego_speed };
        let a = sim.target_accel(&target, &ego, Behaviour::Cooperative);
        let next = speed + a * cfg.dt;
        if speed >= cfg.v_floor {
            prop_assert!(next >= cfg.v_floor - 1e-12);
        } else {
            prop_assert!(a >= 0.0);
        }
        let aggressive = sim.target_accel(&target, &ego, Behaviour::Aggressive);
        let far = VehicleState { path_pos: 0.0, speed: ego_speed };
        prop_assert_eq!(sim.target_accel(&target, &far, Behaviour::Cooperative), aggressive);
        let halted = VehicleState { path_pos: cfg.ego_start_dist + 1.0, speed: 0.0 };
        prop_assert_eq!(sim.target_accel(&target, &halted, Behaviour::Aggressive), aggressive);
    }
}

#[test]
fn every_acceleration_is_an_action() {
    for (i, a) in ACCELERATIONS.iter().enumerate() {
        assert_eq!(Action::from_accel(*a).unwrap().index(), i);
    }
    assert!(Action::from_accel(3.0).is_none());
}
