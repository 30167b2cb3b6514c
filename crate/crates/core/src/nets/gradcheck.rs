//! Central finite-difference check of [`DenseNet::backward`].
//!
//! The finite-difference side only ever calls `forward`, so it stays
//! independent of the backward pass it certifies.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DenseNet, NetError};

/// Errors below this magnitude are treated as absolute rather than relative,
/// so parameters with vanishing gradients do not test rounding noise.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub layer_sizes: Vec<usize>,
    pub params_total: usize,
    pub params_checked: usize,
    pub max_relative_error: f64,
}

/// Per-element terms of the scalar test loss `sum(c * y) + 0.5 * sum(y^2)`
/// over a batch of outputs `y`.
fn loss_terms(net: &DenseNet, input: &Array2<f64>, coeffs: &Array2<f64>) -> Result<Array2<f64>, NetError> {
    let out = net.forward(input.view())?.into_output();
    Ok(&out * coeffs + 0.5 * &out * &out)
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Checks a freshly initialized net of the given layout on a random batch.
///
/// At most `max_params` parameters are compared; when the net is larger a
/// uniform sample of parameter indices is taken.
pub fn check_random_net<R: Rng + ?Sized>(
    sizes: &[usize],
    batch: usize,
    max_params: usize,
    step: f64,
    rng: &mut R,
) -> Result<GradCheckReport, NetError> {
    let mut net = DenseNet::orthogonal(sizes, 1.0, 1.0, rng)?;
    // Non-zero biases so every tanh sits at a different slope.
    for layer in net.layers_mut() {
        layer.bias.mapv_inplace(|_| 0.1 * rng.sample::<f64, _>(StandardNormal));
    }
    let input = Array2::from_shape_simple_fn((batch, sizes[0]), || rng.sample(StandardNormal));
    let coeffs = Array2::from_shape_simple_fn((batch, net.output_size()), || rng.sample(StandardNormal));

    let cache = net.forward(input.view())?;
    let out_grad = &coeffs + &cache.output();
    let analytic = net.backward(&cache, out_grad.view())?.to_flat();

    let total = net.param_count();
    let mut indices: Vec<usize> = if total <= max_params {
        (0..total).collect()
    } else {
        sample(rng, total, max_params).into_vec()
    };
    indices.sort_unstable();

    let mut worst: f64 = 0.0;
    for &index in &indices {
        let original = get_param(&net, index);
        set_param(&mut net, index, original + step);
        let up = loss_terms(&net, &input, &coeffs)?;
        set_param(&mut net, index, original - step);
        let down = loss_terms(&net, &input, &coeffs)?;
        set_param(&mut net, index, original);
        // Differencing per element before summing avoids cancellation
        // against the full loss magnitude.
        let numeric = (up - down).sum() / (2.0 * step);
        worst = worst.max(relative_error(analytic[index], numeric));
    }
    Ok(GradCheckReport {
        layer_sizes: sizes.to_vec(),
        params_total: total,
        params_checked: indices.len(),
        max_relative_error: worst,
    })
}

fn locate(net: &DenseNet, mut index: usize) -> (usize, bool, usize) {
    for (l, layer) in net.layers().iter().enumerate() {
        if index < layer.weight.len() {
            return (l, false, index);
        }
        index -= layer.weight.len();
        if index < layer.bias.len() {
            return (l, true, index);
        }
        index -= layer.bias.len();
    }
    panic!("parameter index out of range");
}

fn get_param(net: &DenseNet, index: usize) -> f64 {
    let (l, is_bias, i) = locate(net, index);
    let layer = &net.layers()[l];
    if is_bias {
        layer.bias[i]
    } else {
        layer.weight.as_slice().expect("standard layout")[i]
    }
}

fn set_param(net: &mut DenseNet, index: usize, value: f64) {
    let (l, is_bias, i) = locate(net, index);
    let layer = &mut net.layers_mut()[l];
    if is_bias {
        layer.bias[i] = value;
    } else {
        layer.weight.as_slice_mut().expect("standard layout")[i] = value;
    }
}
