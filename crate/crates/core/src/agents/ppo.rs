//! Clipped-surrogate policy gradient and the multi-head critic loss.

use ndarray::{Array2, ArrayView2};

use super::AgentError;
use crate::nets::{Categorical, DenseNet, Gradients, NetError};

/// Value of the clipped surrogate for one sample, and its derivative with
/// respect to the probability ratio.
///
/// The canonical form is `min(r * A, clip(r) * A)`. With `paper_exact` the
/// minimum is taken over ratios before scaling, `min(r, clip(r)) * A`, which
/// differs from the canonical form whenever `A < 0`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64, paper_exact: bool) -> (f64, f64) {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    let unclipped_wins = if paper_exact {
        ratio <= clipped
    } else {
        ratio * advantage <= clipped * advantage
    };
    if unclipped_wins {
        (ratio * advantage, advantage)
    } else {
        (clipped * advantage, 0.0)
    }
}

/// Rescales advantages to zero mean and unit (population) standard deviation.
/// Batches with fewer than two samples or zero spread are only centered.
pub fn normalize_advantages(advantages: &mut [f64]) {
    let n = advantages.len() as f64;
    if advantages.is_empty() {
        return;
    }
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in advantages.iter_mut() {
        *a -= mean;
        if std > 1e-12 {
            *a /= std + 1e-8;
        }
    }
}

#[derive(Debug, Clone)]
pub struct PolicyGradient {
    /// Gradient of the objective (ascent direction).
    pub grads: Gradients,
    /// Mean surrogate plus entropy bonus over the used samples.
    pub objective: f64,
    pub mean_entropy: f64,
    /// Fraction of used samples whose gradient was cut by the clip.
    pub clip_fraction: f64,
    /// Samples dropped because their ratio was not finite.
    pub skipped: usize,
}

/// Gradient of the clipped surrogate plus entropy bonus on one minibatch.
///
/// `advantages` are used as given; normalize them beforehand if desired.
#[allow(clippy::too_many_arguments)]
pub fn ppo_policy_gradient(
    actor: &DenseNet,
    observations: ArrayView2<'_, f64>,
    actions: &[usize],
    old_log_probs: &[f64],
    advantages: &[f64],
    clip: f64,
    entropy_coef: f64,
    paper_exact: bool,
) -> Result<PolicyGradient, AgentError> {
    let batch = observations.nrows();
    for (what, len) in [("actions", actions.len()), ("old_log_probs", old_log_probs.len()), ("advantages", advantages.len())] {
        if len != batch {
            return Err(AgentError::LengthMismatch { what, expected: batch, found: len });
        }
    }
    let cache = actor.forward(observations)?;
    let logits = cache.output();
    let n_actions = logits.ncols();
    let mut out_grad = Array2::<f64>::zeros((batch, n_actions));
    let (mut objective, mut entropy, mut clipped, mut used) = (0.0, 0.0, 0usize, 0usize);
    for i in 0..batch {
        let row = logits.row(i);
        let dist = Categorical::from_logits(row.as_slice().expect("standard layout"))?;
        let action = actions[i];
        if action >= n_actions {
            return Err(AgentError::Env(crate::env::EnvError::ActionOutOfRange { index: action, size: n_actions }));
        }
        let ratio = (dist.log_prob(action) - old_log_probs[i]).exp();
        if !ratio.is_finite() {
            continue;
        }
        used += 1;
        let (value, d_ratio) = clipped_surrogate(ratio, advantages[i], clip, paper_exact);
        if d_ratio == 0.0 && advantages[i] != 0.0 {
            clipped += 1;
        }
        let h = dist.entropy();
        objective += value + entropy_coef * h;
        entropy += h;
        let mut g = out_grad.row_mut(i);
        if d_ratio != 0.0 {
            // d r / d logits = r * (onehot - p)
            for (gj, dj) in g.iter_mut().zip(dist.log_prob_grad(action)) {
                *gj += d_ratio * ratio * dj;
            }
        }
        if entropy_coef != 0.0 {
            for (gj, dj) in g.iter_mut().zip(dist.entropy_grad()) {
                *gj += entropy_coef * dj;
            }
        }
    }
    let skipped = batch - used;
    if used == 0 {
        return Ok(PolicyGradient {
            grads: Gradients::zeros_like(actor),
            objective: 0.0,
            mean_entropy: 0.0,
            clip_fraction: 0.0,
            skipped,
        });
    }
    let scale = 1.0 / used as f64;
    out_grad *= scale;
    let grads = actor.backward(&cache, out_grad.view())?;
    Ok(PolicyGradient {
        grads,
        objective: objective * scale,
        mean_entropy: entropy * scale,
        clip_fraction: clipped as f64 * scale,
        skipped,
    })
}

/// Mean over the batch of `sum_n (V_n(s) - y_n)^2` and its gradient.
///
/// `targets` has one column per critic head; with a single column this is
/// the ordinary squared-error critic loss.
pub fn critic_loss(
    critic: &DenseNet,
    observations: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<(f64, Gradients), AgentError> {
    if targets.ncols() != critic.output_size() {
        return Err(AgentError::HeadCountMismatch { expected: critic.output_size(), found: targets.ncols() });
    }
    if targets.nrows() != observations.nrows() {
        return Err(AgentError::LengthMismatch {
            what: "targets",
            expected: observations.nrows(),
            found: targets.nrows(),
        });
    }
    let batch = observations.nrows().max(1) as f64;
    let cache = critic.forward(observations)?;
    let residual = &cache.output() - &targets;
    let loss = residual.mapv(|r| r * r).sum() / batch;
    let out_grad = residual * (2.0 / batch);
    let grads = critic.backward(&cache, out_grad.view())?;
    if !grads.is_finite() {
        return Err(AgentError::Net(NetError::NonFiniteGradient));
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, s};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clip_examples() {
        assert!((clipped_surrogate(1.5, 1.0, 0.2, false).0 - 1.2).abs() < 1e-12);
        assert!((clipped_surrogate(0.5, -1.0, 0.2, false).0 + 0.8).abs() < 1e-12);
        // Ratio-level minimum keeps the unclipped ratio for negative advantages.
        assert!((clipped_surrogate(0.5, -1.0, 0.2, true).0 + 0.5).abs() < 1e-12);
        assert_eq!(clipped_surrogate(1.1, 2.0, 0.2, false), (2.2, 2.0));
        assert_eq!(clipped_surrogate(1.5, 1.0, 0.2, false).1, 0.0);
    }

    #[test]
    fn normalization_moments() {
        let mut a = vec![1.0, 2.0, 3.0, 6.0];
        normalize_advantages(&mut a);
        let mean = a.iter().sum::<f64>() / 4.0;
        let var = a.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
        let mut one = vec![3.0];
        normalize_advantages(&mut one);
        assert_eq!(one, vec![0.0]);
    }

    #[test]
    fn critic_loss_example() {
        // A zero critic with two heads and target (1, 2) gives 1 + 4.
        let critic = DenseNet::zeros(&[3, 4, 2]).unwrap();
        let (loss, _) = critic_loss(&critic, array![[0.1, 0.2, 0.3]].view(), array![[1.0, 2.0]].view()).unwrap();
        assert!((loss - 5.0).abs() < 1e-12);
        let err = critic_loss(&critic, array![[0.1, 0.2, 0.3]].view(), array![[1.0]].view());
        assert!(matches!(err, Err(AgentError::HeadCountMismatch { expected: 2, found: 1 })));
    }

    #[test]
    fn hybrid_loss_is_sum_of_head_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let critic = DenseNet::orthogonal(&[4, 8, 3], 1.0, 1.0, &mut rng).unwrap();
        let obs = array![[0.1, -0.2, 0.3, 0.4], [1.0, 0.5, -0.5, 0.0]];
        let targets = array![[1.0, -2.0, 0.5], [0.0, 3.0, -1.0]];
        let (total, _) = critic_loss(&critic, obs.view(), targets.view()).unwrap();
        let values = critic.forward(obs.view()).unwrap().into_output();
        let mut per_head = 0.0;
        for n in 0..3 {
            let r = &values.slice(s![.., n]) - &targets.slice(s![.., n]);
            per_head += r.mapv(|x| x * x).sum() / 2.0;
        }
        assert!((total - per_head).abs() < 1e-12);
    }

    /// Finite-difference check of the full surrogate-plus-entropy gradient.
    #[test]
    fn policy_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut actor = DenseNet::orthogonal(&[3, 5, 4], 1.0, 1.0, &mut rng).unwrap();
        let obs = array![[0.2, -0.1, 0.4], [-0.3, 0.8, 0.1], [0.5, 0.5, -0.5]];
        let actions = [0, 3, 1];
        // Old log-probs near the current ones keep every sample unclipped.
        let logits = actor.forward(obs.view()).unwrap().into_output();
        let old: Vec<f64> = (0..3)
            .map(|i| Categorical::from_logits(logits.row(i).as_slice().unwrap()).unwrap().log_prob(actions[i]) + 0.01)
            .collect();
        let adv = [1.0, -0.5, 0.7];
        let objective = |net: &DenseNet| {
            ppo_policy_gradient(net, obs.view(), &actions, &old, &adv, 0.2, 0.05, false).unwrap().objective
        };
        let analytic = ppo_policy_gradient(&actor, obs.view(), &actions, &old, &adv, 0.2, 0.05, false)
            .unwrap()
            .grads
            .to_flat();
        let params = actor.to_flat();
        for k in (0..params.len()).step_by(3) {
            let mut p = params.clone();
            p[k] += 1e-6;
            actor.set_flat(&p).unwrap();
            let up = objective(&actor);
            p[k] -= 2e-6;
            actor.set_flat(&p).unwrap();
            let down = objective(&actor);
            let numeric = (up - down) / 2e-6;
            assert!((numeric - analytic[k]).abs() < 1e-6, "param {k}: {numeric} vs {}", analytic[k]);
        }
    }

    #[test]
    fn non_finite_ratio_is_skipped() {
        let actor = DenseNet::zeros(&[2, 3]).unwrap();
        let obs = array![[0.0, 0.0], [1.0, 1.0]];
        let out = ppo_policy_gradient(&actor, obs.view(), &[0, 1], &[f64::NEG_INFINITY, 0.0], &[1.0, 1.0], 0.2, 0.0, false)
            .unwrap();
        assert_eq!(out.skipped, 1);
        assert!(out.grads.is_finite());
    }
}
