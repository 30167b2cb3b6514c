//! DQN with one Q head per user.
//!
//! The Q network emits `heads * actions` values laid out head-major. Every
//! head regresses toward its own user's reward, bootstrapped at the action
//! that maximizes the summed target Q-values, so the heads share one greedy
//! policy.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{
    check_env_shape, random_action, summed_heads, AgentConfig, AgentError, EvalHook, GreedyPolicy, ReplayBuffer,
    Transition,
};
use crate::env::VrEnv;
use crate::nets::{argmax, AdamConfig, AdamState, Checkpoint, DenseNet, Gradients, HeadKind, NetError};

/// Squared TD error summed over heads and averaged over the batch, with
/// its gradient for `q`.
pub fn hrdqn_loss(
    q: &DenseNet,
    target: &DenseNet,
    heads: usize,
    batch: &[&Transition],
    gamma: f64,
) -> Result<(f64, Gradients), AgentError> {
    let width = q.output_size();
    if heads == 0 || width % heads != 0 || target.output_size() != width {
        return Err(AgentError::HeadCountMismatch { expected: heads, found: width });
    }
    let actions = width / heads;
    let obs_dim = q.input_size();
    let b = batch.len();
    let mut obs = Array2::zeros((b, obs_dim));
    let mut next = Array2::zeros((b, obs_dim));
    for (i, t) in batch.iter().enumerate() {
        if t.rewards.len() != heads {
            return Err(AgentError::HeadCountMismatch { expected: heads, found: t.rewards.len() });
        }
        if t.action >= actions {
            return Err(AgentError::Env(crate::env::EnvError::ActionOutOfRange { index: t.action, size: actions }));
        }
        for (what, v, dst) in [("observation", &t.observation, &mut obs), ("next_observation", &t.next_observation, &mut next)] {
            if v.len() != obs_dim {
                return Err(AgentError::LengthMismatch { what, expected: obs_dim, found: v.len() });
            }
            dst.row_mut(i).assign(&ndarray::ArrayView1::from(v.as_slice()));
        }
    }
    let next_q = target.forward(next.view())?.into_output();
    let cache = q.forward(obs.view())?;
    let pred = cache.output();
    let mut out_grad = Array2::zeros((b, width));
    let mut loss = 0.0;
    let scale = 1.0 / b.max(1) as f64;
    for (i, t) in batch.iter().enumerate() {
        let row = next_q.row(i);
        let row = row.as_slice().expect("standard layout");
        let best = argmax(&summed_heads(row, heads));
        for n in 0..heads {
            let bootstrap = if t.done { 0.0 } else { gamma * row[n * actions + best] };
            let y = t.rewards[n] + bootstrap;
            let k = n * actions + t.action;
            let r = pred[(i, k)] - y;
            loss += r * r * scale;
            out_grad[(i, k)] = 2.0 * r * scale;
        }
    }
    let grads = q.backward(&cache, out_grad.view())?;
    Ok((loss, grads))
}

/// Linear annealing from `eps_start` to `eps_end` over the first
/// `eps_fraction` of training.
pub fn epsilon_at(config: &AgentConfig, step: usize, total_steps: usize) -> f64 {
    let horizon = (config.eps_fraction * total_steps as f64).max(1.0);
    let progress = (step as f64 / horizon).min(1.0);
    config.eps_start + progress * (config.eps_end - config.eps_start)
}

pub struct HrdqnTrainer {
    config: AgentConfig,
    heads: usize,
    q: DenseNet,
    target: DenseNet,
    opt: AdamState,
    replay: ReplayBuffer,
    rng: ChaCha8Rng,
    updates: u64,
    faults: u64,
}

impl HrdqnTrainer {
    pub fn new(
        obs_dim: usize,
        n_actions: usize,
        heads: usize,
        config: AgentConfig,
        mut rng: ChaCha8Rng,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        let sizes = config.layer_sizes(obs_dim, heads * n_actions);
        let q = DenseNet::orthogonal(&sizes, std::f64::consts::SQRT_2, 1.0, &mut rng)?;
        Ok(Self {
            opt: AdamState::new(&q, AdamConfig::with_lr(config.critic_lr)),
            target: q.clone(),
            replay: ReplayBuffer::new(config.replay_capacity),
            q,
            heads,
            config,
            rng,
            updates: 0,
            faults: 0,
        })
    }

    pub fn q_net(&self) -> &DenseNet {
        &self.q
    }

    pub fn faults(&self) -> u64 {
        self.faults
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { head: HeadKind::QHeads { heads: self.heads }, net: self.q.clone() }
    }

    fn greedy(&self) -> Result<GreedyPolicy<'_>, AgentError> {
        GreedyPolicy::new(&self.q, HeadKind::QHeads { heads: self.heads })
    }

    pub fn train(
        &mut self,
        env: &mut VrEnv,
        total_steps: usize,
        eval_interval: usize,
        on_eval: &mut EvalHook<'_>,
    ) -> Result<(), AgentError> {
        let n_actions = self.q.output_size() / self.heads;
        check_env_shape(env, self.q.input_size(), n_actions)?;
        if env.config().n_users != self.heads {
            return Err(AgentError::HeadCountMismatch { expected: self.heads, found: env.config().n_users });
        }
        let interval = eval_interval.max(1);
        on_eval(0, &mut self.greedy()?)?;
        let mut episode = 0u64;
        let mut obs = env.reset(episode);
        for step in 1..=total_steps {
            let at = |e: AgentError| e.at_step(step);
            let eps = epsilon_at(&self.config, step - 1, total_steps);
            let action = if self.rng.random::<f64>() < eps {
                random_action(&mut self.rng, n_actions)
            } else {
                let q = self.q.predict(&obs).map_err(|e| at(e.into()))?;
                argmax(&summed_heads(&q, self.heads))
            };
            let out = env.step(action).map_err(|e| at(e.into()))?;
            let terminated = out.terminated;
            self.replay.push(Transition {
                observation: std::mem::take(&mut obs),
                action,
                rewards: out.rewards,
                next_observation: out.observation.clone(),
                done: terminated,
            });
            obs = if terminated {
                episode += 1;
                env.reset(episode)
            } else {
                out.observation
            };
            if step >= self.config.learning_starts
                && step % self.config.train_freq == 0
                && self.replay.len() >= self.config.batch_size
            {
                self.train_step().map_err(at)?;
            }
            if step % interval == 0 {
                on_eval(step, &mut self.greedy()?).map_err(at)?;
            }
        }
        Ok(())
    }

    /// One gradient step on a replay minibatch; syncs the target every
    /// `target_sync` updates. Returns the batch loss.
    pub fn train_step(&mut self) -> Result<f64, AgentError> {
        let batch = self.replay.sample(self.config.batch_size, &mut self.rng)?;
        let (loss, mut grads) = hrdqn_loss(&self.q, &self.target, self.heads, &batch, self.config.gamma)?;
        if self.config.max_grad_norm > 0.0 {
            grads.clip_norm(self.config.max_grad_norm);
        }
        match self.opt.update(&mut self.q, &grads) {
            Ok(()) => {}
            Err(NetError::NonFiniteGradient) => self.faults += 1,
            Err(e) => return Err(e.into()),
        }
        self.updates += 1;
        if self.updates % self.config.target_sync as u64 == 0 {
            self.target.copy_from(&self.q)?;
        }
        Ok(loss)
    }
}
