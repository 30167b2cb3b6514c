use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use super::NetError;

/// One affine layer. `weight` has shape `(fan_in, fan_out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { weight: Array2::zeros((fan_in, fan_out)), bias: Array1::zeros(fan_out) }
    }

    pub fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Feedforward network: tanh on hidden layers, identity on the output.
#[derive(Debug, Clone)]
pub struct DenseNet {
    sizes: Vec<usize>,
    layers: Vec<Dense>,
    /// Bumped on every parameter write; caches from older versions are stale.
    version: u64,
}

impl PartialEq for DenseNet {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.layers == other.layers
    }
}

/// Activations recorded by [`DenseNet::forward`]: the input followed by the
/// output of every layer, each of shape `(batch, width)`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
    version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> ArrayView2<'_, f64> {
        self.activations.last().expect("non-empty cache").view()
    }

    pub fn into_output(mut self) -> Array2<f64> {
        self.activations.pop().expect("non-empty cache")
    }
}

/// Parameter-shaped container, used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self { layers: net.layers.iter().map(|l| Dense::zeros(l.weight.nrows(), l.weight.ncols())).collect() }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer.weight *= factor;
            layer.bias *= factor;
        }
    }

    pub fn dot(&self, other: &Gradients) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| (&a.weight * &b.weight).sum() + a.bias.dot(&b.bias))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Scales the whole gradient down so its L2 norm is at most `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.norm();
        if norm > max_norm && norm > 0.0 {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    let mut out = Vec::with_capacity(layers.iter().map(Dense::len).sum());
    for layer in layers {
        out.extend(layer.weight.iter());
        out.extend(layer.bias.iter());
    }
    out
}

impl DenseNet {
    /// All-zero network.
    pub fn zeros(sizes: &[usize]) -> Result<Self, NetError> {
        check_sizes(sizes)?;
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self { sizes: sizes.to_vec(), layers, version: 0 })
    }

    /// Orthogonal initialization with zero biases. Hidden layers use
    /// `hidden_gain`, the output layer `output_gain`.
    pub fn orthogonal<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut R,
    ) -> Result<Self, NetError> {
        let mut net = Self::zeros(sizes)?;
        let last = net.layers.len() - 1;
        for (i, layer) in net.layers.iter_mut().enumerate() {
            let gain = if i == last { output_gain } else { hidden_gain };
            layer.weight = orthogonal_matrix(layer.weight.nrows(), layer.weight.ncols(), rng) * gain;
        }
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::InvalidLayout("network needs at least one layer".into()));
        }
        let mut sizes = vec![layers[0].weight.nrows()];
        for (i, layer) in layers.iter().enumerate() {
            if layer.weight.nrows() != *sizes.last().unwrap() || layer.bias.len() != layer.weight.ncols() {
                return Err(NetError::InvalidLayout(format!("layer {i} shape does not chain")));
            }
            sizes.push(layer.weight.ncols());
        }
        check_sizes(&sizes)?;
        Ok(Self { sizes, layers, version: 0 })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::len).sum()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Mutable access to the parameters; invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        self.version += 1;
        &mut self.layers
    }

    /// Batched forward pass over the rows of `input`.
    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Result<ForwardCache, NetError> {
        if input.ncols() != self.input_size() {
            return Err(NetError::ShapeMismatch {
                what: "input",
                expected: self.input_size(),
                found: input.ncols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.weight);
            z += &layer.bias;
            if i != last {
                z.mapv_inplace(f64::tanh);
            }
            activations.push(z);
        }
        Ok(ForwardCache { activations, version: self.version })
    }

    /// Forward pass for a single input vector.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NetError> {
        let view = ArrayView2::from_shape((1, input.len()), input)
            .map_err(|e| NetError::InvalidLayout(e.to_string()))?;
        Ok(self.forward(view)?.into_output().into_raw_vec_and_offset().0)
    }

    /// Gradient of a scalar loss with respect to every parameter, given the
    /// loss gradient with respect to the network output (summed over rows).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: ArrayView2<'_, f64>,
    ) -> Result<Gradients, NetError> {
        if cache.version != self.version || cache.activations.len() != self.layers.len() + 1 {
            return Err(NetError::StaleCache);
        }
        let out = cache.output();
        if output_grad.dim() != out.dim() {
            return Err(NetError::ShapeMismatch {
                what: "output gradient",
                expected: out.len(),
                found: output_grad.len(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = output_grad.to_owned();
        for i in (0..self.layers.len()).rev() {
            let input = &cache.activations[i];
            let weight = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut upstream = delta.dot(&self.layers[i].weight.t());
                // tanh'(z) = 1 - tanh(z)^2, and the cached value is tanh(z).
                Zip::from(&mut upstream).and(input).for_each(|g, &a| *g *= 1.0 - a * a);
                delta = upstream;
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn to_flat(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_flat(&mut self, params: &[f64]) -> Result<(), NetError> {
        if params.len() != self.param_count() {
            return Err(NetError::ShapeMismatch {
                what: "parameter vector",
                expected: self.param_count(),
                found: params.len(),
            });
        }
        let mut rest = params;
        for layer in self.layers_mut() {
            let (w, tail) = rest.split_at(layer.weight.len());
            let (b, tail) = tail.split_at(layer.bias.len());
            layer.weight.iter_mut().zip(w).for_each(|(dst, src)| *dst = *src);
            layer.bias.iter_mut().zip(b).for_each(|(dst, src)| *dst = *src);
            rest = tail;
        }
        Ok(())
    }

    /// Copies parameters from a network of identical layout.
    pub fn copy_from(&mut self, other: &DenseNet) -> Result<(), NetError> {
        if other.sizes != self.sizes {
            return Err(NetError::InvalidLayout(format!(
                "cannot copy {:?} into {:?}",
                other.sizes, self.sizes
            )));
        }
        self.layers.clone_from(&other.layers);
        self.version += 1;
        Ok(())
    }
}

fn check_sizes(sizes: &[usize]) -> Result<(), NetError> {
    if sizes.len() < 2 {
        return Err(NetError::InvalidLayout("need at least input and output sizes".into()));
    }
    if sizes.contains(&0) {
        return Err(NetError::InvalidLayout(format!("zero-width layer in {sizes:?}")));
    }
    Ok(())
}

/// Matrix with orthonormal rows or columns (whichever is shorter), built by
/// modified Gram-Schmidt on a Gaussian draw.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let (count, len) = if rows >= cols { (cols, rows) } else { (rows, cols) };
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v: Array1<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for u in &basis {
            let proj = v.dot(u);
            v.scaled_add(-proj, u);
        }
        let norm = v.dot(&v).sqrt();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    let mut out = Array2::zeros((rows, cols));
    for (k, v) in basis.iter().enumerate() {
        if rows >= cols {
            out.column_mut(k).assign(v);
        } else {
            out.row_mut(k).assign(v);
        }
    }
    out
}
