use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative written in terms of the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
            Activation::Linear => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            2 => Some(Activation::Linear),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    /// Input width, hidden widths, output width.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, hidden_activation: Activation, output_activation: Activation) -> Result<Self> {
        let spec = MlpSpec {
            layer_sizes,
            hidden_activation,
            output_activation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::invalid("mlp.layer_sizes", "needs an input and an output layer"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::invalid("mlp.layer_sizes", "every layer needs at least one unit"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 2 == self.layer_sizes.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }
}

/// One affine layer; `weight` is `[fan_in, fan_out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Per-layer parameter gradients, same shapes as the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            layers: net.layers.iter().map(|l| Dense::zeros(l.weight.nrows(), l.weight.ncols())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weight *= s;
            l.bias *= s;
        }
    }

    /// Flattened view in the same order as [`Mlp::params`].
    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }
}

/// Activations recorded by a forward pass, needed by [`Mlp::backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    /// `activations[0]` is the input batch, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Array2<f64>>,
    version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("at least the input")
    }
}

/// Dense feed-forward network over row-major batches (`[batch, features]`).
#[derive(Clone, Debug)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Dense>,
    // bumped on every weight change so stale caches are caught
    version: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.layers == other.layers
    }
}

impl Mlp {
    /// Uniform fan-in initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for weights and biases; the last layer is further multiplied by
    /// `output_scale`.
    pub fn new<R: Rng + ?Sized>(spec: MlpSpec, output_scale: f64, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let n = spec.layer_sizes.len() - 1;
        let layers = spec
            .layer_sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let mut bound = 1.0 / (fan_in as f64).sqrt();
                if i + 1 == n {
                    bound *= output_scale;
                }
                let mut sample = || if bound > 0.0 { rng.random_range(-bound..bound) } else { 0.0 };
                let weight = Array2::from_shape_simple_fn((fan_in, fan_out), &mut sample);
                let bias = Array1::from_shape_simple_fn(fan_out, &mut sample);
                Dense { weight, bias }
            })
            .collect();
        Ok(Mlp { spec, layers, version: 0 })
    }

    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let layers = spec.layer_sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Mlp { spec, layers, version: 0 })
    }

    /// Builds a network from explicit layers; shapes must chain.
    pub fn from_layers(spec: MlpSpec, layers: Vec<Dense>) -> Result<Self> {
        spec.validate()?;
        if layers.len() + 1 != spec.layer_sizes.len() {
            return Err(Error::contract("layer count does not match the network shape"));
        }
        for (l, w) in layers.iter().zip(spec.layer_sizes.windows(2)) {
            if l.weight.dim() != (w[0], w[1]) || l.bias.len() != w[1] {
                return Err(Error::contract("layer shape does not match the network shape"));
            }
        }
        Ok(Mlp { spec, layers, version: 0 })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::len).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied())
    }

    pub fn param(&self, mut idx: usize) -> f64 {
        for l in &self.layers {
            if idx < l.weight.len() {
                return l.weight.as_slice().expect("standard layout")[idx];
            }
            idx -= l.weight.len();
            if idx < l.bias.len() {
                return l.bias[idx];
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut idx: usize, value: f64) {
        self.version += 1;
        for l in &mut self.layers {
            if idx < l.weight.len() {
                l.weight.as_slice_mut().expect("standard layout")[idx] = value;
                return;
            }
            idx -= l.weight.len();
            if idx < l.bias.len() {
                l.bias[idx] = value;
                return;
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn all_finite(&self) -> bool {
        self.params().all(f64::is_finite)
    }

    /// Batched forward pass. Panics when the input width is wrong.
    pub fn forward(&self, x: ArrayView2<f64>) -> ForwardCache {
        assert_eq!(
            x.ncols(),
            self.spec.input_dim(),
            "input width {} does not match network input {}",
            x.ncols(),
            self.spec.input_dim()
        );
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.spec.activation(i);
            let mut z = activations[i].dot(&layer.weight);
            z += &layer.bias;
            z.mapv_inplace(|v| act.apply(v));
            activations.push(z);
        }
        ForwardCache {
            activations,
            version: self.version,
        }
    }

    /// Forward pass without keeping intermediate activations.
    pub fn predict(&self, x: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(x.ncols(), self.spec.input_dim(), "input width mismatch");
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let act = self.spec.activation(i);
            let mut z = a.dot(&layer.weight);
            z += &layer.bias;
            z.mapv_inplace(|v| act.apply(v));
            a = z;
        }
        a
    }

    pub fn predict_one(&self, x: &[f64]) -> Vec<f64> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous slice");
        self.predict(view).into_raw_vec_and_offset().0
    }

    /// Backpropagates `output_grad` (d loss / d output, one row per sample)
    /// through the cached pass. Parameter gradients are summed over the
    /// batch; the second value is d loss / d input per sample.
    pub fn backward(&self, cache: &ForwardCache, output_grad: ArrayView2<f64>) -> Result<(Gradients, Array2<f64>)> {
        self.backward_impl(cache, output_grad, true)
    }

    /// Input gradient only; skips the weight-gradient products.
    pub fn input_gradient(&self, cache: &ForwardCache, output_grad: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.backward_impl(cache, output_grad, false)?.1)
    }

    fn backward_impl(&self, cache: &ForwardCache, output_grad: ArrayView2<f64>, params: bool) -> Result<(Gradients, Array2<f64>)> {
        if cache.version != self.version || cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::contract("forward cache is stale for this network"));
        }
        if output_grad.dim() != cache.output().dim() {
            return Err(Error::contract(format!(
                "output gradient shape {:?} does not match output {:?}",
                output_grad.dim(),
                cache.output().dim()
            )));
        }
        let mut grads = if params {
            Gradients::zeros_like(self)
        } else {
            Gradients { layers: Vec::new() }
        };
        let mut delta = output_grad.to_owned();
        for i in (0..self.layers.len()).rev() {
            let act = self.spec.activation(i);
            let out = &cache.activations[i + 1];
            ndarray::Zip::from(&mut delta).and(out).for_each(|d, &y| *d *= act.derivative_from_output(y));
            if params {
                grads.layers[i].weight = cache.activations[i].t().dot(&delta);
                grads.layers[i].bias = delta.sum_axis(Axis(0));
            }
            delta = delta.dot(&self.layers[i].weight.t());
        }
        Ok((grads, delta))
    }

    /// `self -= step` elementwise, used by the optimizer.
    pub(crate) fn apply_update(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        self.version += 1;
        for (li, l) in self.layers.iter_mut().enumerate() {
            for (j, w) in l.weight.iter_mut().chain(l.bias.iter_mut()).enumerate() {
                *w = f(li, j, *w);
            }
        }
    }

}

/// Copies `online` into `target`. Only a hard copy is supported.
pub fn sync_hard(target: &mut Mlp, online: &Mlp) {
    let version = target.version + 1;
    target.clone_from(online);
    target.version = version.max(online.version + 1);
}
