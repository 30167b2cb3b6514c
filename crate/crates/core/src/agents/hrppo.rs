//! PPO trainer in two flavours: a hybrid critic with one value head per
//! user (HRPPO), or a single head on the summed reward (plain PPO).

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::{
    check_env_shape, compute_gae, critic_loss, normalize_advantages, ppo_policy_gradient, AgentConfig, AgentError, EvalHook,
    GreedyPolicy, Rollout,
};
use crate::env::VrEnv;
use crate::nets::{AdamConfig, AdamState, Categorical, Checkpoint, DenseNet, Gradients, HeadKind, NetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticMode {
    /// One critic head per user, trained on that user's reward.
    Hybrid,
    /// One critic head trained on the reward summed over users.
    Plain,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub objective: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub skipped_samples: usize,
    pub skipped_updates: usize,
}

pub struct PpoTrainer {
    config: AgentConfig,
    mode: CriticMode,
    n_users: usize,
    actor: DenseNet,
    behavior: DenseNet,
    critic: DenseNet,
    critic_target: DenseNet,
    actor_opt: AdamState,
    critic_opt: AdamState,
    rng: ChaCha8Rng,
    critic_updates: u64,
    faults: u64,
}

impl PpoTrainer {
    pub fn new(
        obs_dim: usize,
        n_actions: usize,
        n_users: usize,
        config: AgentConfig,
        mode: CriticMode,
        mut rng: ChaCha8Rng,
    ) -> Result<Self, AgentError> {
        config.validate()?;
        let heads = match mode {
            CriticMode::Hybrid => n_users,
            CriticMode::Plain => 1,
        };
        let gain = std::f64::consts::SQRT_2;
        let actor = DenseNet::orthogonal(&config.layer_sizes(obs_dim, n_actions), gain, 0.01, &mut rng)?;
        let critic = DenseNet::orthogonal(&config.layer_sizes(obs_dim, heads), gain, 1.0, &mut rng)?;
        Ok(Self {
            actor_opt: AdamState::new(&actor, AdamConfig::with_lr(config.actor_lr)),
            critic_opt: AdamState::new(&critic, AdamConfig::with_lr(config.critic_lr)),
            behavior: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            config,
            mode,
            n_users,
            rng,
            critic_updates: 0,
            faults: 0,
        })
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn critic(&self) -> &DenseNet {
        &self.critic
    }

    pub fn heads(&self) -> usize {
        self.critic.output_size()
    }

    /// Samples dropped for non-finite ratios plus updates skipped for
    /// non-finite gradients, over the whole run.
    pub fn faults(&self) -> u64 {
        self.faults
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { head: HeadKind::PolicyLogits, net: self.actor.clone() }
    }

    /// Splits per-user rewards into critic channels.
    fn reward_channels(&self, rewards: &[f64]) -> Vec<f64> {
        match self.mode {
            CriticMode::Hybrid => rewards.to_vec(),
            CriticMode::Plain => vec![rewards.iter().sum()],
        }
    }

    /// Trains for `total_steps` environment steps. `on_eval` is called with
    /// the greedy policy at step 0 and after every `eval_interval` steps.
    pub fn train(
        &mut self,
        env: &mut VrEnv,
        total_steps: usize,
        eval_interval: usize,
        on_eval: &mut EvalHook<'_>,
    ) -> Result<(), AgentError> {
        if env.config().n_users != self.n_users {
            return Err(AgentError::HeadCountMismatch { expected: self.n_users, found: env.config().n_users });
        }
        check_env_shape(env, self.actor.input_size(), self.actor.output_size())?;
        let interval = eval_interval.max(1);
        on_eval(0, &mut GreedyPolicy::new(&self.actor, HeadKind::PolicyLogits)?)?;
        let mut rollout = Rollout::new(self.actor.input_size(), self.heads());
        let mut episode = 0u64;
        let mut obs = env.reset(episode);
        for step in 1..=total_steps {
            let at = |e: AgentError| e.at_step(step);
            let logits = self.behavior.predict(&obs).map_err(|e| at(e.into()))?;
            let dist = Categorical::from_logits(&logits).map_err(|e| at(e.into()))?;
            let (action, log_prob) = dist.sample(&mut self.rng);
            let out = env.step(action).map_err(|e| at(e.into()))?;
            let channels = self.reward_channels(&out.rewards);
            rollout.push(&obs, action, log_prob, &channels, out.terminated, &out.observation).map_err(at)?;
            obs = if out.terminated {
                episode += 1;
                env.reset(episode)
            } else {
                out.observation
            };
            if rollout.len() == self.config.rollout_len || step == total_steps {
                self.update(&rollout).map_err(at)?;
                rollout.clear();
            }
            if step % interval == 0 {
                on_eval(step, &mut GreedyPolicy::new(&self.actor, HeadKind::PolicyLogits)?).map_err(at)?;
            }
        }
        Ok(())
    }

    /// Runs `epochs` passes of minibatch updates over one rollout, then
    /// syncs the sampling policy.
    pub fn update(&mut self, rollout: &Rollout) -> Result<UpdateStats, AgentError> {
        let len = rollout.len();
        let mut stats = UpdateStats::default();
        if len == 0 {
            return Ok(stats);
        }
        let observations = rollout.observations_with_bootstrap();
        let values = self.critic_target.forward(observations.view())?.into_output();
        let gae = compute_gae(
            rollout.rewards().view(),
            values.view(),
            &rollout.dones,
            self.config.gamma,
            self.config.gae_lambda,
        )?;
        let summed: Vec<f64> = gae.advantages.sum_axis(Axis(1)).to_vec();
        let obs = observations.slice(ndarray::s![..len, ..]);

        let mut order: Vec<usize> = (0..len).collect();
        let mut batches = 0usize;
        for _ in 0..self.config.epochs {
            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.config.batch_size) {
                let obs_b = obs.select(Axis(0), chunk);
                let actions: Vec<usize> = chunk.iter().map(|&i| rollout.actions[i]).collect();
                let old: Vec<f64> = chunk.iter().map(|&i| rollout.log_probs[i]).collect();
                let mut adv: Vec<f64> = chunk.iter().map(|&i| summed[i]).collect();
                normalize_advantages(&mut adv);
                let targets: Array2<f64> = gae.targets.select(Axis(0), chunk);

                let pg = ppo_policy_gradient(
                    &self.actor,
                    obs_b.view(),
                    &actions,
                    &old,
                    &adv,
                    self.config.clip,
                    self.config.entropy_coef,
                    self.config.paper_exact_clip,
                )?;
                stats.skipped_samples += pg.skipped;
                self.faults += pg.skipped as u64;
                let mut descent = pg.grads;
                descent.scale(-1.0);
                self.apply(true, descent, &mut stats)?;

                match critic_loss(&self.critic, obs_b.view(), targets.view()) {
                    Ok((loss, grads)) => {
                        stats.critic_loss += loss;
                        self.apply(false, grads, &mut stats)?;
                    }
                    Err(AgentError::Net(NetError::NonFiniteGradient)) => {
                        stats.skipped_updates += 1;
                        self.faults += 1;
                    }
                    Err(e) => return Err(e),
                }
                self.critic_updates += 1;
                if self.critic_updates % self.config.target_sync as u64 == 0 {
                    self.critic_target.copy_from(&self.critic)?;
                }
                stats.objective += pg.objective;
                stats.entropy += pg.mean_entropy;
                stats.clip_fraction += pg.clip_fraction;
                batches += 1;
            }
        }
        let b = batches.max(1) as f64;
        stats.critic_loss /= b;
        stats.objective /= b;
        stats.entropy /= b;
        stats.clip_fraction /= b;
        self.behavior.copy_from(&self.actor)?;
        Ok(stats)
    }

    fn apply(&mut self, actor: bool, mut grads: Gradients, stats: &mut UpdateStats) -> Result<(), AgentError> {
        if self.config.max_grad_norm > 0.0 {
            grads.clip_norm(self.config.max_grad_norm);
        }
        let result = if actor {
            self.actor_opt.update(&mut self.actor, &grads)
        } else {
            self.critic_opt.update(&mut self.critic, &grads)
        };
        match result {
            Ok(()) => Ok(()),
            Err(NetError::NonFiniteGradient) => {
                stats.skipped_updates += 1;
                self.faults += 1;
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }
}
