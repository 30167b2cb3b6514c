use super::*;
use approx::assert_relative_eq;

fn profile(user_id: usize, cpu: f64, battery_weight: f64, tolerance: usize, horizon: usize) -> VuProfile {
    VuProfile {
        user_id,
        position: (20.0, 15.0),
        distance: 5.0,
        tx_power: 0.1,
        cpu,
        battery_weight,
        target_fps: horizon - tolerance,
        initial_tolerance: tolerance,
    }
}

fn flat_tape(config: &EnvConfig, profiles: Vec<VuProfile>, bits: f64, cycles: f64) -> Tape {
    let (n, m) = (config.n_users, config.n_channels);
    let slot = SlotDraw {
        frame_bits: vec![bits; n],
        cycles_per_bit: vec![cycles; n],
        fading: Array2::ones((n, m)),
    };
    Tape { profiles, slots: vec![slot; config.frames_per_second] }
}

fn small_config(n_users: usize, n_channels: usize) -> EnvConfig {
    EnvConfig { n_users, n_channels, ..EnvConfig::default() }
}

#[test]
fn all_offloaded_success_earns_success_reward() {
    let config = small_config(3, 3);
    let profiles = (0..3).map(|n| profile(n, 3e9, 0.7, 12, 90)).collect();
    let tape = flat_tape(&config, profiles, 221_184.0, 75.0);
    let mut env = VrEnv::from_tape(config.clone(), tape).unwrap();
    let out = env.step_assignment(&ActionAssignment(vec![1, 2, 3])).unwrap();
    for (user, reward) in out.info.users.iter().zip(&out.rewards) {
        assert!(!user.failed);
        assert_eq!(user.energy, 0.0);
        assert!(user.local_delay.is_none());
        assert!(user.offload_delay.unwrap() < config.slot_duration);
        assert_relative_eq!(*reward, config.failure_weight * config.r_success);
    }
    assert!(!out.terminated);
    assert_eq!(env.state().t, 1);
}

#[test]
fn exhausting_tolerance_ends_episode_with_terminal_penalty() {
    let config = small_config(2, 1);
    // User 0 renders locally on a slow CPU and fails; it tolerates one failure.
    let profiles = vec![profile(0, 1e9, 0.0, 1, 90), profile(1, 3e9, 0.0, 10, 90)];
    let tape = flat_tape(&config, profiles, 221_184.0, 75.0);
    let mut env = VrEnv::from_tape(config.clone(), tape).unwrap();
    // Advance a few successful slots first so the penalty depends on t.
    for _ in 0..3 {
        let out = env.step_assignment(&ActionAssignment(vec![1, 0])).unwrap();
        assert!(out.info.users.iter().all(|u| !u.failed));
    }
    let out = env.step_assignment(&ActionAssignment(vec![0, 1])).unwrap();
    assert!(out.info.users[0].failed);
    assert!(out.terminated);
    assert!(out.info.tolerance_exhausted);
    let penalty = config.r_terminal_scale * (90.0 - 3.0) / 90.0;
    assert_relative_eq!(out.rewards[0], -config.r_fail - penalty, max_relative = 1e-12);
    assert_relative_eq!(out.rewards[1], config.r_success - penalty, max_relative = 1e-12);
    assert_eq!(env.state().tolerance_left[0], 0);
    assert_eq!(env.step(0), Err(EnvError::Terminated));
}

#[test]
fn failing_local_user_reward_composes_energy() {
    let config = small_config(1, 1);
    let horizon = config.frames_per_second;
    // 221184 bits * 75 cycles/bit at 1.2e9 cycles/s takes 13.8 ms > 11.1 ms.
    let slow = profile(0, 1.2e9, 1.0, 10, horizon);
    let tape = flat_tape(&config, vec![slow], 221_184.0, 75.0);
    let mut env = VrEnv::from_tape(config.clone(), tape).unwrap();
    let out = env.step(0).unwrap();
    let user = &out.info.users[0];
    assert!(user.failed);
    let expected_energy = 221_184.0 * 75.0 * 1e-27 * 1.2e9_f64.powi(2);
    assert_relative_eq!(user.energy, expected_energy, max_relative = 1e-12);
    assert_relative_eq!(out.rewards[0], -0.5 - 0.5 * expected_energy, max_relative = 1e-12);

    // The reference composition: e = 0.0332 J gives -0.5166.
    let r = config.failure_weight * -config.r_fail - config.energy_weight * 0.0332;
    assert_relative_eq!(r, -0.5166, max_relative = 1e-12);
}

#[test]
fn natural_end_has_no_terminal_penalty() {
    let config = EnvConfig { frames_per_second: 3, slot_duration: 1.0 / 3.0, target_fps: Range::new(0.0, 3.0), ..small_config(1, 1) };
    let tape = flat_tape(&config, vec![profile(0, 3e9, 0.0, 2, 3)], 221_184.0, 75.0);
    let mut env = VrEnv::from_tape(config.clone(), tape).unwrap();
    let mut last = None;
    for _ in 0..3 {
        last = Some(env.step(1).unwrap());
    }
    let last = last.unwrap();
    assert!(last.terminated);
    assert!(!last.info.tolerance_exhausted);
    assert_relative_eq!(last.rewards[0], config.r_success);
    assert_eq!(last.observation[last.observation.len() - 1], 0.0);
}

#[test]
fn reset_is_deterministic_per_seed() {
    let config = EnvConfig { rng_seed: 7, ..EnvConfig::default() };
    let mut a = VrEnv::new(config.clone()).unwrap();
    let mut b = VrEnv::new(config).unwrap();
    let oa = a.reset(3);
    let ob = b.reset(3);
    assert_eq!(oa, ob);
    assert_eq!(a.state(), b.state());
    assert_eq!(a.profiles(), b.profiles());
    let oc = b.reset(4);
    assert_ne!(oa, oc);
}

#[test]
fn initial_tolerances_follow_target_fps() {
    let config = EnvConfig::default();
    let mut env = VrEnv::new(config.clone()).unwrap();
    for seed in 0..50 {
        let obs = env.reset(seed);
        for (n, p) in env.profiles().iter().enumerate() {
            assert!((10..=15).contains(&p.initial_tolerance), "{}", p.initial_tolerance);
            assert_eq!(env.state().tolerance_left[n], p.initial_tolerance);
            let tau = obs[config.n_users + n];
            assert!((10.0 / 90.0..=15.0 / 90.0).contains(&tau));
            assert!(p.distance >= MIN_DISTANCE);
            assert!(config.tx_power.contains(p.tx_power));
            assert!(config.user_cpu.contains(p.cpu));
        }
        assert_eq!(obs.len(), 26);
        assert_eq!(obs[25], 1.0);
    }
}

#[test]
fn fading_has_unit_mean() {
    let config = EnvConfig { n_users: 1, n_channels: 1, ..EnvConfig::default() };
    let mut rng = episode_rng(11, 0);
    let draws = 100_000;
    let mean = (0..draws).map(|_| SlotDraw::sample(&config, &mut rng).fading[(0, 0)]).sum::<f64>() / draws as f64;
    assert!((0.99..=1.01).contains(&mean), "mean fading {mean}");
}

#[test]
fn recorded_tape_replays_the_live_episode() {
    let config = EnvConfig { rng_seed: 5, ..EnvConfig::default() };
    let tape = Tape::record(&config, 9).unwrap();
    let mut live = VrEnv::new(config.clone()).unwrap();
    let mut replay = VrEnv::from_tape(config.clone(), tape).unwrap();
    assert_eq!(live.reset(9), replay.reset(0));
    let size = live.action_space_size();
    for t in 0.. {
        let action = (t * 37 + 11) % size;
        let a = live.step(action).unwrap();
        let b = replay.step(action).unwrap();
        assert_eq!(a, b);
        if a.terminated {
            break;
        }
    }
}

#[test]
fn energy_accrues_only_for_local_users_and_tolerance_never_increases() {
    let config = EnvConfig { rng_seed: 2, ..EnvConfig::default() };
    let mut env = VrEnv::new(config.clone()).unwrap();
    for episode in 0..20 {
        env.reset(episode);
        let start = env.state().tolerance_left.clone();
        let mut failures = vec![0usize; config.n_users];
        loop {
            let before = env.state().tolerance_left.clone();
            // Users 0 and 1 always offload; the rest rotate.
            let assign: Vec<usize> = (0..config.n_users)
                .map(|n| if n < 2 { n + 1 } else { (episode as usize + env.state().t + n) % 4 })
                .collect();
            let out = env.step_assignment(&ActionAssignment(assign)).unwrap();
            for (n, user) in out.info.users.iter().enumerate() {
                assert!(env.state().tolerance_left[n] <= before[n]);
                assert_eq!(user.local_delay.is_some(), user.channel == 0);
                assert_eq!(user.offload_delay.is_some(), user.channel != 0);
                assert_eq!(user.failed, user.delay() > config.slot_duration);
                failures[n] += usize::from(user.failed);
            }
            assert_eq!(out.rewards.len(), config.n_users);
            if out.terminated {
                break;
            }
        }
        assert_eq!(env.state().energy_total[0], 0.0);
        assert_eq!(env.state().energy_total[1], 0.0);
        for n in 0..config.n_users {
            assert_eq!(failures[n], start[n] - env.state().tolerance_left[n]);
            assert_eq!(failures[n], env.state().failure_total[n]);
        }
    }
}

#[test]
fn rejects_bad_actions_without_mutating_state() {
    let mut env = VrEnv::new(EnvConfig::default()).unwrap();
    let before = env.state().clone();
    assert!(matches!(env.step(1024), Err(EnvError::ActionOutOfRange { index: 1024, size: 1024 })));
    assert_eq!(env.state(), &before);
    let wrong_len = ActionAssignment(vec![1, 2]);
    assert!(env.step_assignment(&wrong_len).is_err());
}

#[test]
fn tape_dimensions_are_checked() {
    let config = small_config(2, 1);
    let tape = flat_tape(&config, vec![profile(0, 3e9, 0.0, 5, 90)], 1.0, 1.0);
    assert!(matches!(VrEnv::from_tape(config, tape), Err(EnvError::TapeMismatch(_))));
}
