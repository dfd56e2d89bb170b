//! Minimal dense-network machinery with manual backpropagation.
//!
//! Everything is 64-bit and allocation-explicit so finite-difference
//! validation stays meaningful. Networks are plain values: cloning gives an
//! independent copy, and forward caches are per-caller.

pub mod adam;
pub mod gradcheck;
pub mod monotone;

pub use adam::AdamState;
pub use monotone::MonotoneMlp;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer activation tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative given the pre-activation input.
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Numerically stable softplus: ln(1 + e^x).
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of softplus: ln(e^y − 1), for y > 0.
pub fn softplus_inv(y: f64) -> f64 {
    // For large y, e^y − 1 ≈ e^y; the direct form overflows past ~700.
    if y > 30.0 {
        y
    } else {
        (y.exp() - 1.0).max(f64::MIN_POSITIVE).ln()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Dense multi-layer perceptron, weights row-major per layer.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    /// One tag per layer transition; the final transition is identity.
    pub activations: Vec<Activation>,
    /// weights[l] has layer_sizes[l+1] rows of layer_sizes[l] columns.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Per-parameter partials with the same shapes as the owning network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Gradients {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn zero(&mut self) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|v| *v *= c);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Fails with the offending layer index if any partial is non-finite.
    pub fn check_finite(&self) -> Result<()> {
        for (l, w) in self.weights.iter().enumerate() {
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("weight gradient, layer {l}")));
            }
        }
        for (l, b) in self.biases.iter().enumerate() {
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("bias gradient, layer {l}")));
            }
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .flat_map(|w| w.iter().copied())
            .chain(self.biases.iter().flat_map(|b| b.iter().copied()))
    }
}

/// Activations cached by a forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer (inputs[0] is the network input).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl Mlp {
    /// Glorot-uniform initialization, one hidden activation tag for all hidden
    /// layers.
    pub fn new(layer_sizes: &[usize], hidden: Activation, rng: &mut impl Rng) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output sizes");
        let transitions = layer_sizes.len() - 1;
        let mut activations = vec![hidden; transitions];
        activations[transitions - 1] = Activation::Identity;
        let mut weights = Vec::with_capacity(transitions);
        let mut biases = Vec::with_capacity(transitions);
        for l in 0..transitions {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activations,
            weights,
            biases,
        }
    }

    pub fn zeros(layer_sizes: &[usize], hidden: Activation) -> Self {
        let transitions = layer_sizes.len() - 1;
        let mut activations = vec![hidden; transitions];
        activations[transitions - 1] = Activation::Identity;
        Mlp {
            layer_sizes: layer_sizes.to_vec(),
            activations,
            weights: (0..transitions)
                .map(|l| vec![0.0; layer_sizes[l] * layer_sizes[l + 1]])
                .collect(),
            biases: (1..=transitions).map(|l| vec![0.0; layer_sizes[l]]).collect(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_size() {
            return Err(Error::ShapeMismatch {
                context: "mlp forward".into(),
                expected: self.input_size(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Plain evaluation without caching.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input.len())?;
        let mut x = input.to_vec();
        for l in 0..self.weights.len() {
            x = self.layer_forward(l, &x).1;
        }
        Ok(x)
    }

    fn layer_forward(&self, l: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n_in = self.layer_sizes[l];
        let n_out = self.layer_sizes[l + 1];
        let w = &self.weights[l];
        let b = &self.biases[l];
        let act = self.activations[l];
        let mut pre = Vec::with_capacity(n_out);
        let mut out = Vec::with_capacity(n_out);
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut z = b[o];
            for (wi, xi) in row.iter().zip(x) {
                z += wi * xi;
            }
            pre.push(z);
            out.push(act.apply(z));
        }
        (pre, out)
    }

    /// Evaluation that caches activations for [`Mlp::backward`].
    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        self.check_input(input.len())?;
        let mut inputs = Vec::with_capacity(self.weights.len());
        let mut pres = Vec::with_capacity(self.weights.len());
        let mut x = input.to_vec();
        for l in 0..self.weights.len() {
            let (pre, out) = self.layer_forward(l, &x);
            inputs.push(std::mem::replace(&mut x, out));
            pres.push(pre);
        }
        Ok(ForwardCache {
            inputs,
            pre: pres,
            output: x,
        })
    }

    /// Backpropagates `upstream` (dL/d output) through the cached pass,
    /// returning parameter gradients and the input-space gradient.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let mut grads = Gradients::zeros_like(self);
        let input_grad = self.backward_acc(cache, upstream, &mut grads)?;
        Ok((grads, input_grad))
    }

    /// Like [`Mlp::backward`] but accumulates into an existing gradient
    /// buffer, for mini-batch loops.
    pub fn backward_acc(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        if upstream.len() != self.output_size() {
            return Err(Error::ShapeMismatch {
                context: "mlp backward upstream".into(),
                expected: self.output_size(),
                actual: upstream.len(),
            });
        }
        let mut delta = upstream.to_vec();
        for l in (0..self.weights.len()).rev() {
            let n_in = self.layer_sizes[l];
            let n_out = self.layer_sizes[l + 1];
            let act = self.activations[l];
            let pre = &cache.pre[l];
            let x = &cache.inputs[l];
            // delta through the activation
            for o in 0..n_out {
                delta[o] *= act.derivative(pre[o]);
            }
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            let w = &self.weights[l];
            let mut next_delta = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                gb[o] += d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * x[i];
                    next_delta[i] += d * row[i];
                }
            }
            delta = next_delta;
        }
        Ok(delta)
    }

    /// Pairs of (parameter, gradient) in a fixed flattening order, for the
    /// optimizer.
    pub fn param_grad_pairs<'a>(
        &'a mut self,
        grads: &'a Gradients,
    ) -> impl Iterator<Item = (&'a mut f64, f64)> + 'a {
        self.weights
            .iter_mut()
            .flat_map(|w| w.iter_mut())
            .zip(grads.weights.iter().flat_map(|g| g.iter().copied()))
            .chain(
                self.biases
                    .iter_mut()
                    .flat_map(|b| b.iter_mut())
                    .zip(grads.biases.iter().flat_map(|g| g.iter().copied())),
            )
    }

    /// Polyak-averages `source` into `self`: θ ← τ·source + (1−τ)·θ.
    pub fn polyak_from(&mut self, source: &Mlp, tau: f64) {
        for (t, s) in self
            .weights
            .iter_mut()
            .flat_map(|w| w.iter_mut())
            .zip(source.weights.iter().flat_map(|w| w.iter()))
        {
            *t += tau * (s - *t);
        }
        for (t, s) in self
            .biases
            .iter_mut()
            .flat_map(|b| b.iter_mut())
            .zip(source.biases.iter().flat_map(|b| b.iter()))
        {
            *t += tau * (s - *t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn linear_23() -> Mlp {
        // Single linear layer W=[[2,3]], b=[1].
        let mut net = Mlp::zeros(&[2, 1], Activation::Tanh);
        net.weights[0] = vec![2.0, 3.0];
        net.biases[0] = vec![1.0];
        net
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 4, 2], Activation::Relu);
        let out = net.forward(&[0.5, -1.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn single_linear_layer_arithmetic() {
        let net = linear_23();
        let out = net.forward(&[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![6.0]);
    }

    #[test]
    fn linear_layer_input_gradient() {
        let net = linear_23();
        let cache = net.forward_cached(&[1.0, 1.0]).unwrap();
        let (_, dx) = net.backward(&cache, &[1.0]).unwrap();
        assert_eq!(dx, vec![2.0, 3.0]);
    }

    #[test]
    fn shape_mismatch_is_reported_with_sizes() {
        let net = linear_23();
        let err = net.forward(&[1.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 2"), "{msg}");
        assert!(msg.contains("got 1"), "{msg}");
    }

    #[test]
    fn backward_matches_finite_differences_on_random_net() {
        // 4→8→1 nets per the gradient-integrity contract, both activations.
        for (idx, act) in [Activation::Tanh, Activation::Relu].into_iter().enumerate() {
            let mut rng = stream(11, &["nn-test"], idx as u64);
            let net = Mlp::new(&[4, 8, 1], act, &mut rng);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let err = gradcheck::max_rel_err_params(&net, &x, 1e-5);
            assert!(err <= 1e-4, "max rel err {err} for {act:?}");
            let err_in = gradcheck::max_rel_err_input(&net, &x, 1e-5);
            assert!(err_in <= 1e-4, "input grad rel err {err_in} for {act:?}");
        }
    }

    #[test]
    fn serialization_round_trip_is_bit_exact() {
        let mut rng = stream(3, &["nn-test"], 7);
        let net = Mlp::new(&[5, 16, 3], Activation::Tanh, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let json = serde_json::to_string(&net).unwrap();
        let back: Mlp = serde_json::from_str(&json).unwrap();
        let a = net.forward(&x).unwrap();
        let b = back.forward(&x).unwrap();
        assert_eq!(a, b);
        for (u, v) in a.iter().zip(&b) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
}
