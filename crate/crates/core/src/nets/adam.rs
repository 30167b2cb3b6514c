use ndarray::Zip;

use super::{DenseNet, Gradients, NetError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Gradients,
    second: Gradients,
    step_count: u64,
}

impl AdamState {
    pub fn new(net: &DenseNet, config: AdamConfig) -> Self {
        Self {
            config,
            first: Gradients::zeros_like(net),
            second: Gradients::zeros_like(net),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// One descent step `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
    /// Non-finite gradients leave both the network and the moments untouched.
    pub fn update(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<(), NetError> {
        if !grads.is_finite() {
            return Err(NetError::NonFiniteGradient);
        }
        if grads.layers.len() != self.first.layers.len() {
            return Err(NetError::ShapeMismatch {
                what: "gradient layers",
                expected: self.first.layers.len(),
                found: grads.layers.len(),
            });
        }
        self.step_count += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step_count as i32;
        let correct1 = 1.0 - beta1.powi(t);
        let correct2 = 1.0 - beta2.powi(t);
        let apply = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / correct1) / ((*v / correct2).sqrt() + eps);
        };
        let layers = net.layers_mut();
        for (((layer, g), m), v) in layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.first.layers)
            .zip(&mut self.second.layers)
        {
            Zip::from(&mut layer.weight)
                .and(&mut m.weight)
                .and(&mut v.weight)
                .and(&g.weight)
                .for_each(|p, m, v, &g| apply(p, m, v, g));
            Zip::from(&mut layer.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .and(&g.bias)
                .for_each(|p, m, v, &g| apply(p, m, v, g));
        }
        Ok(())
    }
}
