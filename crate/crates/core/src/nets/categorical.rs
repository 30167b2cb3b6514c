use rand::Rng;

use super::NetError;

/// Categorical distribution over joint actions, parameterized by logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    log_probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Result<Self, NetError> {
        if logits.is_empty() {
            return Err(NetError::InvalidLayout("empty logits".into()));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(NetError::NonFiniteLogits);
        }
        Ok(Self { log_probs: log_softmax(logits) })
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|lp| lp.exp()).collect()
    }

    /// Inverse-CDF draw; returns the action and its log-probability.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.log_probs.len() - 1;
        for (a, lp) in self.log_probs.iter().enumerate() {
            acc += lp.exp();
            if u < acc {
                chosen = a;
                break;
            }
        }
        (chosen, self.log_probs[chosen])
    }

    /// Most likely action; ties go to the lowest index.
    pub fn greedy(&self) -> usize {
        argmax(&self.log_probs)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .log_probs
            .iter()
            .map(|&lp| if lp == f64::NEG_INFINITY { 0.0 } else { lp.exp() * lp })
            .sum::<f64>()
    }

    /// d log pi(action) / d logits = onehot(action) - p.
    pub fn log_prob_grad(&self, action: usize) -> Vec<f64> {
        let mut g: Vec<f64> = self.log_probs.iter().map(|lp| -lp.exp()).collect();
        g[action] += 1.0;
        g
    }

    /// dH / d logits_j = -p_j (log p_j + H).
    pub fn entropy_grad(&self) -> Vec<f64> {
        let h = self.entropy();
        self.log_probs
            .iter()
            .map(|&lp| {
                let p = lp.exp();
                if p == 0.0 { 0.0 } else { -p * (lp + h) }
            })
            .collect()
    }
}

/// Numerically stable log-softmax (shifted by the maximum logit).
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - max - log_sum).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
