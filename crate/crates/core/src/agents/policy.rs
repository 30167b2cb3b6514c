use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::AgentError;
use crate::nets::{argmax, Checkpoint, DenseNet, HeadKind};

/// Anything that maps an observation to a joint action index.
pub trait Policy {
    fn act(&mut self, observation: &[f64]) -> Result<usize, AgentError>;
}

/// Deterministic policy read off a network: the argmax logit for a policy
/// net, or the argmax of the summed Q-values for a multi-head Q net.
#[derive(Debug, Clone, Copy)]
pub struct GreedyPolicy<'a> {
    net: &'a DenseNet,
    head: HeadKind,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(net: &'a DenseNet, head: HeadKind) -> Result<Self, AgentError> {
        if let HeadKind::QHeads { heads } = head {
            if heads == 0 || net.output_size() % heads != 0 {
                return Err(AgentError::HeadCountMismatch { expected: heads, found: net.output_size() });
            }
        }
        Ok(Self { net, head })
    }

    pub fn from_checkpoint(checkpoint: &'a Checkpoint) -> Result<Self, AgentError> {
        Self::new(&checkpoint.net, checkpoint.head)
    }

    /// Number of joint actions this policy chooses among.
    pub fn action_count(&self) -> usize {
        match self.head {
            HeadKind::PolicyLogits => self.net.output_size(),
            HeadKind::QHeads { heads } => self.net.output_size() / heads,
        }
    }
}

impl Policy for GreedyPolicy<'_> {
    fn act(&mut self, observation: &[f64]) -> Result<usize, AgentError> {
        let out = self.net.predict(observation)?;
        match self.head {
            HeadKind::PolicyLogits => {
                if out.iter().any(|v| !v.is_finite()) {
                    return Err(AgentError::Net(crate::nets::NetError::NonFiniteLogits));
                }
                Ok(argmax(&out))
            }
            HeadKind::QHeads { heads } => Ok(argmax(&summed_heads(&out, heads))),
        }
    }
}

/// Sums a head-major `[head][action]` Q vector over heads.
pub fn summed_heads(q: &[f64], heads: usize) -> Vec<f64> {
    let actions = q.len() / heads;
    let mut total = vec![0.0; actions];
    for block in q.chunks_exact(actions) {
        for (t, v) in total.iter_mut().zip(block) {
            *t += v;
        }
    }
    total
}

/// Uniform random joint actions.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    action_count: usize,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(action_count: usize, seed: u64) -> Self {
        Self { action_count: action_count.max(1), rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _observation: &[f64]) -> Result<usize, AgentError> {
        Ok(random_action(&mut self.rng, self.action_count))
    }
}

/// Uniform draw from `[0, size)`; `size` must be at least 1.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R, size: usize) -> usize {
    rng.random_range(0..size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::Dense;
    use ndarray::{array, Array1};

    #[test]
    fn q_heads_act_on_the_sum() {
        // Head 0 prefers action 0, head 1 prefers action 1 more strongly.
        let layer = Dense { weight: array![[0.0, 0.0, 0.0, 0.0]], bias: Array1::from(vec![1.0, 0.0, 0.0, 3.0]) };
        let net = DenseNet::from_layers(vec![layer]).unwrap();
        let mut p = GreedyPolicy::new(&net, HeadKind::QHeads { heads: 2 }).unwrap();
        assert_eq!(p.action_count(), 2);
        assert_eq!(p.act(&[0.0]).unwrap(), 1);
        assert!(GreedyPolicy::new(&net, HeadKind::QHeads { heads: 3 }).is_err());
        let mut logits = GreedyPolicy::new(&net, HeadKind::PolicyLogits).unwrap();
        assert_eq!(logits.act(&[0.0]).unwrap(), 3);
    }

    /// Chi-square goodness of fit over 4^5 cells. 1131.2 is the 0.99
    /// quantile of chi-square with 1023 degrees of freedom (Wilson-Hilferty).
    #[test]
    fn random_action_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cells = 1024;
        let draws = 1_000_000;
        let mut counts = vec![0usize; cells];
        for _ in 0..draws {
            counts[random_action(&mut rng, cells)] += 1;
        }
        let expected = draws as f64 / cells as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 1131.2, "chi2 = {chi2}");
    }

    #[test]
    fn random_policy_edge_cases() {
        let mut one = RandomPolicy::new(1, 5);
        assert!((0..50).all(|_| one.act(&[]).unwrap() == 0));
        let mut a = RandomPolicy::new(1024, 7);
        let mut b = RandomPolicy::new(1024, 7);
        for _ in 0..100 {
            assert_eq!(a.act(&[]).unwrap(), b.act(&[]).unwrap());
        }
    }
}
