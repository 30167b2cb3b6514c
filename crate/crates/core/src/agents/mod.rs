//! Learning agents for the offloading environment: HRPPO, plain PPO,
//! HRDQN and a uniform random baseline, plus the shared evaluation loop.
//!
//! Trainers report progress through an [`EvalHook`], called with a greedy
//! snapshot of the current policy at step 0 and every `eval_interval`
//! environment steps.

mod buffer;
mod config;
mod eval;
mod gae;
mod hrdqn;
mod hrppo;
mod policy;
mod ppo;

#[cfg(test)]
mod tests;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use buffer::{ReplayBuffer, Rollout, Transition};
pub use config::{check_action_space, AgentConfig, AgentKind, MAX_JOINT_ACTIONS};
pub use eval::{evaluate, run_episode, EpisodeStats, EvalMetrics, EVAL_EPISODES, EVAL_SEED_BASE};
pub use gae::{compute_gae, GaeOutput};
pub use hrdqn::{epsilon_at, hrdqn_loss, HrdqnTrainer};
pub use hrppo::{CriticMode, PpoTrainer, UpdateStats};
pub use policy::{random_action, summed_heads, GreedyPolicy, Policy, RandomPolicy};
pub use ppo::{clipped_surrogate, critic_loss, normalize_advantages, ppo_policy_gradient, PolicyGradient};

use crate::env::{EnvConfig, EnvError, VrEnv};
use crate::nets::{Checkpoint, NetError};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid agent config `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for config key `{key}`")]
    InvalidValue { key: &'static str, value: String },
    #[error("joint action space of size {size} exceeds the supported maximum {max}")]
    ActionSpaceTooLarge { size: usize, max: usize },
    #[error("{what} has length {found}, expected {expected}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
    #[error("expected {expected} heads, found {found}")]
    HeadCountMismatch { expected: usize, found: usize },
    #[error("cannot sample {batch} transitions from a replay buffer holding {len}")]
    UnderfilledReplay { len: usize, batch: usize },
    #[error("at training step {step}: {source}")]
    AtStep { step: usize, source: Box<AgentError> },
    #[error("evaluation callback failed: {0}")]
    Hook(String),
}

impl AgentError {
    /// Attaches the training step, unless one is already attached.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            e @ AgentError::AtStep { .. } => e,
            e => AgentError::AtStep { step, source: Box::new(e) },
        }
    }
}

/// Called with `(env_steps, greedy_policy)` at every eval point.
pub type EvalHook<'a> = dyn FnMut(usize, &mut dyn Policy) -> Result<(), AgentError> + 'a;

/// Stream of the agent's RNG; the environment uses the episode index as its
/// stream, so agents draw from a disjoint sequence.
const AGENT_STREAM: u64 = u64::MAX;

/// The agent RNG for a given experiment seed.
pub fn agent_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(AGENT_STREAM);
    rng
}

fn check_env_shape(env: &VrEnv, obs_dim: usize, n_actions: usize) -> Result<(), AgentError> {
    let found = env.config().observation_len();
    if found != obs_dim {
        return Err(AgentError::LengthMismatch { what: "observation", expected: obs_dim, found });
    }
    if env.action_space_size() != n_actions {
        return Err(AgentError::LengthMismatch {
            what: "action space",
            expected: n_actions,
            found: env.action_space_size(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    /// Final network; `None` for the random agent.
    pub checkpoint: Option<Checkpoint>,
    pub faults: u64,
}

/// Trains `kind` on a fresh environment built from `env_config`.
///
/// Training episodes use episode seeds 0, 1, 2, ...; the agent's own
/// randomness comes from [`agent_rng`]`(seed)`. The random agent does not
/// train: each eval point sees a uniform policy reseeded from `seed`.
pub fn train_agent(
    kind: AgentKind,
    env_config: &EnvConfig,
    config: &AgentConfig,
    seed: u64,
    total_steps: usize,
    eval_interval: usize,
    on_eval: &mut EvalHook<'_>,
) -> Result<TrainedAgent, AgentError> {
    config.validate()?;
    let n_actions = check_action_space(env_config.action_space_size())?;
    let obs_dim = env_config.observation_len();
    let n_users = env_config.n_users;
    let interval = eval_interval.max(1);
    let rng = agent_rng(seed);
    match kind {
        AgentKind::Hrppo | AgentKind::Ppo => {
            let mode = if kind == AgentKind::Hrppo { CriticMode::Hybrid } else { CriticMode::Plain };
            let mut env = VrEnv::new(env_config.clone())?;
            let mut trainer = PpoTrainer::new(obs_dim, n_actions, n_users, config.clone(), mode, rng)?;
            trainer.train(&mut env, total_steps, interval, on_eval)?;
            Ok(TrainedAgent { checkpoint: Some(trainer.checkpoint()), faults: trainer.faults() })
        }
        AgentKind::Hrdqn => {
            let mut env = VrEnv::new(env_config.clone())?;
            let mut trainer = HrdqnTrainer::new(obs_dim, n_actions, n_users, config.clone(), rng)?;
            trainer.train(&mut env, total_steps, interval, on_eval)?;
            Ok(TrainedAgent { checkpoint: Some(trainer.checkpoint()), faults: trainer.faults() })
        }
        AgentKind::Random => {
            let mut step = 0;
            loop {
                on_eval(step, &mut RandomPolicy::new(n_actions, seed))?;
                if step + interval > total_steps {
                    break;
                }
                step += interval;
            }
            Ok(TrainedAgent { checkpoint: None, faults: 0 })
        }
    }
}
