//! Greedy evaluation episodes and the per-eval-point metrics.

use super::{AgentError, Policy};
use crate::env::{EnvConfig, VrEnv};

/// Episode seeds used for evaluation start here, far from training seeds.
pub const EVAL_SEED_BASE: u64 = 1 << 32;

/// Episodes rolled out per eval point.
pub const EVAL_EPISODES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    /// Reward summed over users and slots, terminal penalty included.
    pub reward: f64,
    /// Per-user mean of non-failed frames; unexecuted slots earn nothing.
    pub successful_frames: f64,
    /// Device energy summed over users and slots, in joules.
    pub energy_j: f64,
    /// Sum of downlink rates over offloaded user-slots, bits/s.
    pub rate_sum: f64,
    pub offloaded_frames: usize,
    pub slots_executed: usize,
    pub failures: Vec<usize>,
}

impl EpisodeStats {
    /// Mean downlink rate over offloaded frames in Mbps, if any were offloaded.
    pub fn avg_rate_mbps(&self) -> Option<f64> {
        (self.offloaded_frames > 0).then(|| self.rate_sum / self.offloaded_frames as f64 / 1e6)
    }
}

/// Runs one full episode with `policy`.
pub fn run_episode(env: &mut VrEnv, episode_seed: u64, policy: &mut dyn Policy) -> Result<EpisodeStats, AgentError> {
    let n = env.config().n_users;
    let mut obs = env.reset(episode_seed);
    let mut stats = EpisodeStats {
        reward: 0.0,
        successful_frames: 0.0,
        energy_j: 0.0,
        rate_sum: 0.0,
        offloaded_frames: 0,
        slots_executed: 0,
        failures: vec![0; n],
    };
    let mut successes = 0usize;
    loop {
        let action = policy.act(&obs)?;
        let out = env.step(action)?;
        stats.slots_executed += 1;
        stats.reward += out.rewards.iter().sum::<f64>();
        for (user, info) in out.info.users.iter().enumerate() {
            if info.failed {
                stats.failures[user] += 1;
            } else {
                successes += 1;
            }
            stats.energy_j += info.energy;
            if info.offload_delay.is_some() {
                stats.rate_sum += info.rate;
                stats.offloaded_frames += 1;
            }
        }
        if out.terminated {
            break;
        }
        obs = out.observation;
    }
    stats.successful_frames = successes as f64 / n as f64;
    Ok(stats)
}

/// Aggregated metrics of one eval point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub reward: f64,
    /// Population standard deviation of episode rewards.
    pub reward_std: f64,
    pub successful_frames: f64,
    pub energy_j: f64,
    /// Mean over all offloaded frames of all episodes; 0 when none were offloaded.
    pub avg_rate_mbps: f64,
    pub rate_defined: bool,
}

impl EvalMetrics {
    pub fn from_episodes(episodes: &[EpisodeStats]) -> Self {
        let k = episodes.len().max(1) as f64;
        let reward = episodes.iter().map(|e| e.reward).sum::<f64>() / k;
        let reward_std = (episodes.iter().map(|e| (e.reward - reward).powi(2)).sum::<f64>() / k).sqrt();
        let offloaded: usize = episodes.iter().map(|e| e.offloaded_frames).sum();
        let rate_sum: f64 = episodes.iter().map(|e| e.rate_sum).sum();
        Self {
            reward,
            reward_std,
            successful_frames: episodes.iter().map(|e| e.successful_frames).sum::<f64>() / k,
            energy_j: episodes.iter().map(|e| e.energy_j).sum::<f64>() / k,
            avg_rate_mbps: if offloaded > 0 { rate_sum / offloaded as f64 / 1e6 } else { 0.0 },
            rate_defined: offloaded > 0,
        }
    }
}

/// Evaluates `policy` on episodes `EVAL_SEED_BASE .. EVAL_SEED_BASE + n_episodes`
/// of a fresh environment built from `config`.
pub fn evaluate(policy: &mut dyn Policy, config: &EnvConfig, n_episodes: usize) -> Result<(EvalMetrics, Vec<EpisodeStats>), AgentError> {
    let mut env = VrEnv::new(config.clone())?;
    let episodes = (0..n_episodes as u64)
        .map(|i| run_episode(&mut env, EVAL_SEED_BASE + i, policy))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((EvalMetrics::from_episodes(&episodes), episodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::RandomPolicy;
    use crate::env::ActionAssignment;

    struct Fixed(usize);

    impl Policy for Fixed {
        fn act(&mut self, _: &[f64]) -> Result<usize, AgentError> {
            Ok(self.0)
        }
    }

    #[test]
    fn all_local_policy_has_undefined_rate() {
        let config = EnvConfig::default();
        let (m, episodes) = evaluate(&mut Fixed(0), &config, 2).unwrap();
        assert!(!m.rate_defined);
        assert_eq!(m.avg_rate_mbps, 0.0);
        assert!(episodes.iter().all(|e| e.avg_rate_mbps().is_none()));
        assert!(m.energy_j > 0.0);
    }

    #[test]
    fn frames_and_failures_add_up() {
        let config = EnvConfig::default();
        let mut policy = RandomPolicy::new(config.action_space_size().unwrap(), 1);
        let (m, episodes) = evaluate(&mut policy, &config, 5).unwrap();
        for e in &episodes {
            let failed: usize = e.failures.iter().sum();
            let n = config.n_users as f64;
            assert!((e.successful_frames + failed as f64 / n - e.slots_executed as f64).abs() < 1e-9);
            assert!(e.successful_frames >= 0.0 && e.successful_frames <= 90.0);
        }
        assert!(m.rate_defined);
        assert!(m.reward_std >= 0.0);
    }

    #[test]
    fn rate_matches_step_info() {
        let config = EnvConfig::default();
        // One user per channel, two local: rates are interference free.
        let action = ActionAssignment(vec![1, 2, 3, 0, 0]).encode(config.n_channels).unwrap();
        let mut env = VrEnv::new(config.clone()).unwrap();
        let stats = run_episode(&mut env, 4, &mut Fixed(action)).unwrap();
        let mut replay = VrEnv::new(config).unwrap();
        replay.reset(4);
        let (mut sum, mut count) = (0.0, 0);
        loop {
            let out = replay.step(action).unwrap();
            for u in out.info.users.iter().filter(|u| u.offload_delay.is_some()) {
                sum += u.rate;
                count += 1;
            }
            if out.terminated {
                break;
            }
        }
        assert_eq!(count, stats.offloaded_frames);
        assert!((stats.avg_rate_mbps().unwrap() - sum / count as f64 / 1e6).abs() < 1e-9);
    }
}
