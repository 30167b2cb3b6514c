use ndarray::{Array1, Array2, Axis};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::env::EnvConfig;
use crate::nets::{Categorical, DenseNet};

/// Direct O(T^2) evaluation of A_t = sum_k (gamma lambda)^k delta_{t+k},
/// cut after the first terminal transition at or after t.
fn gae_by_definition(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    let len = rewards.len();
    let delta: Vec<f64> = (0..len)
        .map(|t| {
            let next = if dones[t] { 0.0 } else { values[t + 1] };
            rewards[t] + gamma * next - values[t]
        })
        .collect();
    (0..len)
        .map(|t| {
            let mut total = 0.0;
            for k in t..len {
                total += (gamma * lambda).powi((k - t) as i32) * delta[k];
                if dones[k] {
                    break;
                }
            }
            total
        })
        .collect()
}

#[test]
fn gae_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..20 {
        let len = 50;
        let heads = 1 + trial % 3;
        let rewards = Array2::from_shape_simple_fn((len, heads), || rng.random_range(-1.0..1.0));
        let values = Array2::from_shape_simple_fn((len + 1, heads), || rng.random_range(-2.0..2.0));
        let dones: Vec<bool> = (0..len).map(|_| rng.random_bool(0.1)).collect();
        let out = compute_gae(rewards.view(), values.view(), &dones, 0.99, 0.95).unwrap();
        for n in 0..heads {
            let r = rewards.column(n).to_vec();
            let v = values.column(n).to_vec();
            let oracle = gae_by_definition(&r, &v, &dones, 0.99, 0.95);
            for t in 0..len {
                assert!((out.advantages[(t, n)] - oracle[t]).abs() < 1e-10);
                assert!((out.targets[(t, n)] - oracle[t] - v[t]).abs() < 1e-10);
            }
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Summing per-user advantages equals the advantage of the summed reward
/// under the summed critic, so both variants push the actor the same way.
#[test]
fn hybrid_and_plain_gradients_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (len, users, obs_dim, n_actions) = (64, 4, 6, 8);
    let actor = DenseNet::orthogonal(&[obs_dim, 16, n_actions], 1.4, 0.5, &mut rng).unwrap();
    let obs = Array2::from_shape_simple_fn((len, obs_dim), || rng.random_range(-1.0..1.0));
    let rewards = Array2::from_shape_simple_fn((len, users), || rng.random_range(-1.0..0.2));
    let values = Array2::from_shape_simple_fn((len + 1, users), || rng.random_range(-3.0..0.0));
    let dones: Vec<bool> = (0..len).map(|t| t % 20 == 19).collect();
    let logits = actor.forward(obs.view()).unwrap().into_output();
    let mut actions = Vec::new();
    let mut old = Vec::new();
    for row in logits.rows() {
        let dist = Categorical::from_logits(row.as_slice().unwrap()).unwrap();
        let (a, lp) = dist.sample(&mut rng);
        actions.push(a);
        // Perturbed behavior log-probs so some ratios leave 1.
        old.push(lp + rng.random_range(-0.3..0.3));
    }

    let hybrid = compute_gae(rewards.view(), values.view(), &dones, 0.99, 0.95).unwrap();
    let mut adv_h: Vec<f64> = hybrid.advantages.sum_axis(Axis(1)).to_vec();
    let summed_r = rewards.sum_axis(Axis(1)).insert_axis(Axis(1));
    let summed_v = values.sum_axis(Axis(1)).insert_axis(Axis(1));
    let plain = compute_gae(summed_r.view(), summed_v.view(), &dones, 0.99, 0.95).unwrap();
    let mut adv_p: Vec<f64> = plain.advantages.column(0).to_vec();
    normalize_advantages(&mut adv_h);
    normalize_advantages(&mut adv_p);

    let g = |adv: &[f64]| {
        ppo_policy_gradient(&actor, obs.view(), &actions, &old, adv, 0.2, 0.01, false).unwrap().grads.to_flat()
    };
    let c = cosine(&g(&adv_h), &g(&adv_p));
    assert!(c >= 0.999, "cosine {c}");
}

/// With one head, the hybrid critic's output gradient for a head depends
/// only on that head's residual.
#[test]
fn critic_head_gradients_are_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let critic = DenseNet::orthogonal(&[3, 6, 2], 1.0, 1.0, &mut rng).unwrap();
    let obs = Array2::from_shape_simple_fn((4, 3), || rng.random_range(-1.0..1.0));
    let pred = critic.forward(obs.view()).unwrap().into_output();
    // Head 1 already on target: its output-layer weights get no gradient.
    let mut targets = pred.clone();
    targets.column_mut(0).mapv_inplace(|v| v + 1.0);
    let (_, grads) = critic_loss(&critic, obs.view(), targets.view()).unwrap();
    let last = grads.layers.last().unwrap();
    assert!(last.weight.column(1).iter().all(|g| g.abs() < 1e-12));
    assert!(last.bias[1].abs() < 1e-12);
    assert!(last.weight.column(0).iter().any(|g| g.abs() > 1e-6));
}

fn small_env() -> EnvConfig {
    EnvConfig { n_users: 3, n_channels: 2, ..EnvConfig::default() }
}

fn small_agent() -> AgentConfig {
    AgentConfig {
        hidden: vec![16],
        rollout_len: 64,
        epochs: 2,
        batch_size: 16,
        learning_starts: 32,
        replay_capacity: 500,
        ..AgentConfig::default()
    }
}

fn curve(kind: AgentKind, config: &AgentConfig, steps: usize) -> Vec<(usize, EvalMetrics)> {
    let env = small_env();
    let mut rows = Vec::new();
    let mut hook = |step: usize, policy: &mut dyn Policy| {
        let (m, _) = evaluate(policy, &env, 2)?;
        rows.push((step, m));
        Ok(())
    };
    train_agent(kind, &env, config, 3, steps, 50, &mut hook).unwrap();
    rows
}

#[test]
fn zero_learning_rate_gives_a_constant_curve() {
    let config = AgentConfig { actor_lr: 0.0, critic_lr: 0.0, ..small_agent() };
    for kind in [AgentKind::Hrppo, AgentKind::Ppo, AgentKind::Hrdqn, AgentKind::Random] {
        let rows = curve(kind, &config, 200);
        assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![0, 50, 100, 150, 200]);
        assert!(rows.iter().all(|r| r.1 == rows[0].1), "{kind} curve moved");
    }
}

#[test]
fn training_is_deterministic() {
    for kind in [AgentKind::Hrppo, AgentKind::Hrdqn] {
        let a = curve(kind, &small_agent(), 200);
        let b = curve(kind, &small_agent(), 200);
        assert_eq!(a, b);
    }
}

#[test]
fn training_changes_the_policy() {
    let env = small_env();
    let mut hook = |_: usize, _: &mut dyn Policy| Ok(());
    let config = small_agent();
    let trained = train_agent(AgentKind::Hrppo, &env, &config, 3, 128, 64, &mut hook).unwrap();
    let fresh = train_agent(AgentKind::Hrppo, &env, &config, 3, 0, 64, &mut hook).unwrap();
    assert_ne!(trained.checkpoint.unwrap().net, fresh.checkpoint.unwrap().net);
}

#[test]
fn oversized_action_space_is_refused() {
    let env = EnvConfig { n_users: 9, ..EnvConfig::default() };
    let mut hook = |_: usize, _: &mut dyn Policy| Ok(());
    let err = train_agent(AgentKind::Hrppo, &env, &small_agent(), 0, 10, 5, &mut hook).unwrap_err();
    assert!(matches!(err, AgentError::ActionSpaceTooLarge { size: 262_144, .. }));
}

#[test]
fn hook_errors_carry_the_step() {
    let env = small_env();
    let mut hook = |step: usize, _: &mut dyn Policy| {
        if step == 100 { Err(AgentError::Hook("stop".into())) } else { Ok(()) }
    };
    let err = train_agent(AgentKind::Hrppo, &env, &small_agent(), 0, 200, 50, &mut hook).unwrap_err();
    assert!(matches!(err, AgentError::AtStep { step: 100, .. }), "{err}");
}

proptest! {
    /// The clipped surrogate never exceeds the unclipped one.
    #[test]
    fn surrogate_is_a_lower_bound(ratio in 0.0f64..3.0, adv in -5.0f64..5.0, clip in 0.05f64..0.5) {
        let (value, _) = clipped_surrogate(ratio, adv, clip, false);
        prop_assert!(value <= ratio * adv + 1e-12);
        if adv < 0.0 {
            prop_assert!(value <= (1.0 - clip).max(ratio.min(1.0 + clip)) * adv + 1e-12);
        }
    }

    #[test]
    fn paper_exact_matches_canonical_for_non_negative_advantages(ratio in 0.0f64..3.0, adv in 0.0f64..5.0) {
        let a = clipped_surrogate(ratio, adv, 0.2, false).0;
        let b = clipped_surrogate(ratio, adv, 0.2, true).0;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn gae_is_linear_in_heads(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = 12;
        let rewards = Array2::from_shape_simple_fn((len, 3), || rng.random_range(-1.0..1.0));
        let values = Array2::from_shape_simple_fn((len + 1, 3), || rng.random_range(-1.0..1.0));
        let dones: Vec<bool> = (0..len).map(|_| rng.random_bool(0.2)).collect();
        let per_head = compute_gae(rewards.view(), values.view(), &dones, 0.9, 0.7).unwrap();
        let r: Array1<f64> = rewards.sum_axis(Axis(1));
        let v: Array1<f64> = values.sum_axis(Axis(1));
        let joint = compute_gae(r.insert_axis(Axis(1)).view(), v.insert_axis(Axis(1)).view(), &dones, 0.9, 0.7).unwrap();
        for t in 0..len {
            prop_assert!((per_head.advantages.row(t).sum() - joint.advantages[(t, 0)]).abs() < 1e-10);
        }
    }
}
