//! Generalized advantage estimation, one column per reward channel.

use ndarray::{Array2, ArrayView2};

use super::AgentError;

#[derive(Debug, Clone, PartialEq)]
pub struct GaeOutput {
    /// Shape `(T, heads)`.
    pub advantages: Array2<f64>,
    /// `advantages + values[..T]`, the critic regression targets.
    pub targets: Array2<f64>,
}

/// Backward-recursive GAE over a contiguous rollout.
///
/// `rewards` has shape `(T, heads)`. `values` has shape `(T + 1, heads)`:
/// row `t` is `V(s^t)` and row `T` bootstraps the state after the last
/// transition. Episode boundaries (`dones[t]`) zero the bootstrap and cut
/// the recursion, so advantages never leak across episodes.
pub fn compute_gae(
    rewards: ArrayView2<'_, f64>,
    values: ArrayView2<'_, f64>,
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> Result<GaeOutput, AgentError> {
    let (len, heads) = rewards.dim();
    if values.dim() != (len + 1, heads) {
        return Err(AgentError::LengthMismatch {
            what: "values",
            expected: (len + 1) * heads,
            found: values.len(),
        });
    }
    if dones.len() != len {
        return Err(AgentError::LengthMismatch { what: "dones", expected: len, found: dones.len() });
    }
    let mut advantages = Array2::zeros((len, heads));
    for head in 0..heads {
        let mut running = 0.0;
        for t in (0..len).rev() {
            let live = if dones[t] { 0.0 } else { 1.0 };
            let delta = rewards[(t, head)] + gamma * live * values[(t + 1, head)] - values[(t, head)];
            running = delta + gamma * lambda * live * running;
            advantages[(t, head)] = running;
        }
    }
    let targets = &advantages + &values.slice(ndarray::s![..len, ..]);
    Ok(GaeOutput { advantages, targets })
}
