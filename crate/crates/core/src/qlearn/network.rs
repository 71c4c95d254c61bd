//! Small fully connected action-value network with manual backprop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::QError;
use crate::env::{Action, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub(crate) fn tag(self) -> u32 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
        }
    }

    pub(crate) fn from_tag(tag: u32) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
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
        }
    }
}

/// Dense layer, weights stored row-major as `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub(crate) in_dim: usize,
    pub(crate) out_dim: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, weights: vec![0.0; in_dim * out_dim], bias: vec![0.0; out_dim] }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    #[inline]
    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.in_dim).zip(&self.bias) {
            let mut acc = *b;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.push(acc);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub(crate) layers: Vec<Dense>,
    pub(crate) activation: Activation,
    /// Speeds are divided by this before entering the network.
    pub(crate) speed_scale: f64,
}

/// Per-layer outputs of one forward pass, input first.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    outputs: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Gradients with the same shapes as the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) layers: Vec<Dense>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|g| g.is_finite()))
    }
}

impl QNetwork {
    /// He-uniform weights, zero biases. `sizes` lists every layer width,
    /// input first and output last.
    pub fn new<R: Rng>(sizes: &[usize], activation: Activation, speed_scale: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "network needs an input and an output size");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / fan_in as f64).sqrt();
                let weights = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
                Dense { in_dim: fan_in, out_dim: fan_out, weights, bias: vec![0.0; fan_out] }
            })
            .collect();
        Self { layers, activation, speed_scale }
    }

    pub fn zeros(sizes: &[usize], activation: Activation, speed_scale: f64) -> Self {
        assert!(sizes.len() >= 2, "network needs an input and an output size");
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Self { layers, activation, speed_scale }
    }

    pub fn from_layers(layers: Vec<Dense>, activation: Activation, speed_scale: f64) -> Self {
        Self { layers, activation, speed_scale }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn speed_scale(&self) -> f64 {
        self.speed_scale
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.layers.iter().map(|l| l.out_dim)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameter `i` in flat order: each layer's weights, then its biases.
    pub fn param(&self, mut i: usize) -> f64 {
        for l in &self.layers {
            if i < l.weights.len() {
                return l.weights[i];
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return l.bias[i];
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set_param(&mut self, mut i: usize, v: f64) {
        for l in &mut self.layers {
            if i < l.weights.len() {
                l.weights[i] = v;
                return;
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                l.bias[i] = v;
                return;
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|p| p.is_finite()))
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients { layers: self.layers.iter().map(|l| Dense::zeros(l.in_dim, l.out_dim)).collect() }
    }

    pub fn features(&self, obs: &Observation) -> Vec<f64> {
        obs.features(self.speed_scale)
    }

    /// Forward pass over a raw feature vector, keeping every layer output.
    pub fn forward_cached(&self, x: &[f64], cache: &mut ForwardCache) {
        assert_eq!(x.len(), self.input_dim(), "input dimension mismatch");
        let n = self.layers.len();
        cache.outputs.resize_with(n + 1, Vec::new);
        cache.outputs[0].clear();
        cache.outputs[0].extend_from_slice(x);
        for (k, layer) in self.layers.iter().enumerate() {
            let (done, rest) = cache.outputs.split_at_mut(k + 1);
            let out = &mut rest[0];
            layer.forward_into(&done[k], out);
            if k + 1 < n {
                out.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_cached(x, &mut cache);
        cache.outputs.pop().unwrap_or_default()
    }

    pub fn q_values(&self, obs: &Observation) -> Vec<f64> {
        self.forward(&self.features(obs))
    }

    /// `q_values` with an explicit check of the observation dimension.
    pub fn try_q_values(&self, obs: &Observation) -> Result<Vec<f64>, QError> {
        let x = self.features(obs);
        if x.len() != self.input_dim() {
            return Err(QError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        Ok(self.forward(&x))
    }

    /// Accumulates `d_out`-weighted parameter gradients of the cached pass.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grads: &mut Gradients) {
        let n = self.layers.len();
        let mut delta = d_out.to_vec();
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let input = &cache.outputs[k];
            let g = &mut grads.layers[k];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, xi) in row.iter_mut().zip(input) {
                    *gw += d * xi;
                }
            }
            if k == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            for (p, y) in prev.iter_mut().zip(input) {
                *p *= self.activation.derivative_from_output(*y);
            }
            delta = prev;
        }
    }

    /// In-place `theta -= step * grads`.
    pub(crate) fn apply_update(&mut self, grads: &Gradients, step: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            l.weights.iter_mut().zip(&g.weights).for_each(|(p, d)| *p -= step * d);
            l.bias.iter_mut().zip(&g.bias).for_each(|(p, d)| *p -= step * d);
        }
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Anything that maps an observation to an action.
pub trait Policy: Sync {
    fn act(&self, obs: &Observation) -> Action;
}

impl Policy for QNetwork {
    fn act(&self, obs: &Observation) -> Action {
        Action::new(argmax(&self.q_values(obs))).expect("output dimension equals action count")
    }
}

impl<P: Policy + ?Sized> Policy for &P {
    fn act(&self, obs: &Observation) -> Action {
        (**self).act(obs)
    }
}

/// Scripted policy that always applies the same acceleration.
#[derive(Debug, Clone, Copy)]
pub struct ConstantPolicy(pub Action);

impl Policy for ConstantPolicy {
    fn act(&self, _obs: &Observation) -> Action {
        self.0
    }
}
