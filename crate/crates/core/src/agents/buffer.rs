use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use super::AgentError;

/// On-policy storage for one PPO rollout, flattened row-major.
#[derive(Debug, Clone)]
pub struct Rollout {
    obs_dim: usize,
    heads: usize,
    observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Observation following the last stored transition.
    bootstrap: Vec<f64>,
}

impl Rollout {
    pub fn new(obs_dim: usize, heads: usize) -> Self {
        Self {
            obs_dim,
            heads,
            observations: Vec::new(),
            actions: Vec::new(),
            log_probs: Vec::new(),
            rewards: Vec::new(),
            dones: Vec::new(),
            bootstrap: vec![0.0; obs_dim],
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn push(
        &mut self,
        observation: &[f64],
        action: usize,
        log_prob: f64,
        rewards: &[f64],
        done: bool,
        next_observation: &[f64],
    ) -> Result<(), AgentError> {
        if observation.len() != self.obs_dim || next_observation.len() != self.obs_dim {
            return Err(AgentError::LengthMismatch {
                what: "observation",
                expected: self.obs_dim,
                found: observation.len().max(next_observation.len()),
            });
        }
        if rewards.len() != self.heads {
            return Err(AgentError::HeadCountMismatch { expected: self.heads, found: rewards.len() });
        }
        self.observations.extend_from_slice(observation);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.extend_from_slice(rewards);
        self.dones.push(done);
        self.bootstrap.copy_from_slice(next_observation);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.observations.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.rewards.clear();
        self.dones.clear();
    }

    /// Stored observations followed by the bootstrap observation, `(T + 1, obs_dim)`.
    pub fn observations_with_bootstrap(&self) -> Array2<f64> {
        let mut flat = Vec::with_capacity(self.observations.len() + self.obs_dim);
        flat.extend_from_slice(&self.observations);
        flat.extend_from_slice(&self.bootstrap);
        Array2::from_shape_vec((self.len() + 1, self.obs_dim), flat).expect("rollout layout")
    }

    /// Rewards, `(T, heads)`.
    pub fn rewards(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.len(), self.heads), self.rewards.clone()).expect("rollout layout")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub observation: Vec<f64>,
    pub action: usize,
    /// One reward per user.
    pub rewards: Vec<f64>,
    pub next_observation: Vec<f64>,
    pub done: bool,
}

/// Fixed-capacity FIFO replay memory.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), items: Vec::new(), next: 0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores a transition, evicting the oldest one when full.
    pub fn push(&mut self, transition: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(transition);
        } else {
            self.items[self.next] = transition;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Uniform minibatch without replacement.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>, AgentError> {
        if batch > self.items.len() {
            return Err(AgentError::UnderfilledReplay { len: self.items.len(), batch });
        }
        Ok(sample(rng, self.items.len(), batch).into_iter().map(|i| &self.items[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn transition(tag: usize) -> Transition {
        Transition { observation: vec![tag as f64], action: tag, rewards: vec![0.0], next_observation: vec![0.0], done: false }
    }

    #[test]
    fn replay_evicts_oldest_and_samples_distinct() {
        let mut buf = ReplayBuffer::new(3);
        for tag in 0..5 {
            buf.push(transition(tag));
        }
        assert_eq!(buf.len(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tags: Vec<usize> = buf.sample(3, &mut rng).unwrap().iter().map(|t| t.action).collect();
        tags.sort_unstable();
        assert_eq!(tags, vec![2, 3, 4]);
        assert!(matches!(buf.sample(4, &mut rng), Err(AgentError::UnderfilledReplay { len: 3, batch: 4 })));
    }

    #[test]
    fn rollout_layout() {
        let mut r = Rollout::new(2, 1);
        r.push(&[1.0, 2.0], 0, -0.1, &[0.5], false, &[3.0, 4.0]).unwrap();
        r.push(&[3.0, 4.0], 1, -0.2, &[0.7], true, &[5.0, 6.0]).unwrap();
        let obs = r.observations_with_bootstrap();
        assert_eq!(obs.dim(), (3, 2));
        assert_eq!(obs[(2, 1)], 6.0);
        assert_eq!(r.rewards()[(1, 0)], 0.7);
        assert!(r.push(&[1.0], 0, 0.0, &[0.0], false, &[1.0, 1.0]).is_err());
        r.clear();
        assert!(r.is_empty());
    }
}
