//! Monotone MLP: effective weights are softplus of raw parameters, so every
//! effective weight is strictly positive and the network output is
//! nondecreasing in every input coordinate (tanh hidden activations are
//! monotone). Biases stay unconstrained.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sigmoid, softplus, softplus_inv, Activation, ForwardCache, Gradients, Mlp};
use crate::error::Result;

/// Serialized as the raw network alone; the effective copy is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(from = "Mlp", into = "Mlp")]
pub struct MonotoneMlp {
    /// Raw (pre-softplus) parameters. Biases here are the real biases.
    raw: Mlp,
    /// Materialized effective network; weights = softplus(raw weights).
    eff: Option<Mlp>,
}

impl From<Mlp> for MonotoneMlp {
    fn from(raw: Mlp) -> Self {
        MonotoneMlp::from_raw(raw)
    }
}

impl From<MonotoneMlp> for Mlp {
    fn from(net: MonotoneMlp) -> Self {
        net.raw
    }
}

impl MonotoneMlp {
    pub fn new(layer_sizes: &[usize], rng: &mut impl Rng) -> Self {
        let mut raw = Mlp::new(layer_sizes, Activation::Tanh, rng);
        // Raw weights start at softplus⁻¹ of the Glorot magnitude so effective
        // weights match the usual initialization scale.
        for w in &mut raw.weights {
            for v in w.iter_mut() {
                *v = softplus_inv(v.abs().max(1e-3));
            }
        }
        let mut net = MonotoneMlp { raw, eff: None };
        net.refresh();
        net
    }

    pub fn from_raw(raw: Mlp) -> Self {
        let mut net = MonotoneMlp { raw, eff: None };
        net.refresh();
        net
    }

    pub fn raw(&self) -> &Mlp {
        &self.raw
    }

    /// Rebuilds the effective network after raw parameters changed.
    pub fn refresh(&mut self) {
        let mut eff = self.raw.clone();
        for w in &mut eff.weights {
            for v in w.iter_mut() {
                *v = softplus(*v);
            }
        }
        self.eff = Some(eff);
    }

    fn eff(&self) -> &Mlp {
        self.eff
            .as_ref()
            .expect("effective weights present after construction/refresh")
    }

    pub fn input_size(&self) -> usize {
        self.raw.input_size()
    }

    pub fn output_size(&self) -> usize {
        self.raw.output_size()
    }

    pub fn param_count(&self) -> usize {
        self.raw.param_count()
    }

    /// Effective (post-softplus) weights of one layer; all entries > 0.
    pub fn effective_weights(&self, layer: usize) -> &[f64] {
        &self.eff().weights[layer]
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.eff().forward(input)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        self.eff().forward_cached(input)
    }

    /// Backward pass in raw-parameter space. The returned gradients line up
    /// with the raw parameters (chain rule through softplus); the input
    /// gradient is componentwise ≥ 0 for nonnegative upstream.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        let (mut grads, input_grad) = self.eff().backward(cache, upstream)?;
        for (l, gw) in grads.weights.iter_mut().enumerate() {
            for (g, raw) in gw.iter_mut().zip(&self.raw.weights[l]) {
                *g *= sigmoid(*raw);
            }
        }
        Ok((grads, input_grad))
    }

    pub fn backward_acc(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        grads: &mut Gradients,
    ) -> Result<Vec<f64>> {
        let (g, input_grad) = self.backward(cache, upstream)?;
        grads.add(&g);
        Ok(input_grad)
    }

    /// (parameter, gradient) pairs over the raw parameters. Call
    /// [`MonotoneMlp::refresh`] after the optimizer step.
    pub fn param_grad_pairs<'a>(
        &'a mut self,
        grads: &'a Gradients,
    ) -> impl Iterator<Item = (&'a mut f64, f64)> + 'a {
        self.raw.param_grad_pairs(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn softplus_of_negative_raw_weight_stays_positive() {
        let eff = softplus(-5.0);
        assert!((eff - 0.0067).abs() < 1e-3);
        assert!(eff > 0.0);
    }

    #[test]
    fn all_effective_weights_positive() {
        let mut rng = stream(5, &["monotone-test"], 0);
        let net = MonotoneMlp::new(&[3, 8, 1], &mut rng);
        for l in 0..2 {
            assert!(net.effective_weights(l).iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn input_gradient_is_componentwise_nonnegative() {
        let mut rng = stream(5, &["monotone-test"], 1);
        let net = MonotoneMlp::new(&[4, 16, 1], &mut rng);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
            let cache = net.forward_cached(&x).unwrap();
            let (_, dx) = net.backward(&cache, &[1.0]).unwrap();
            assert!(dx.iter().all(|&g| g >= 0.0), "{dx:?}");
        }
    }

    #[test]
    fn monotonicity_over_random_ordered_pairs() {
        let mut rng = stream(5, &["monotone-test"], 2);
        let net = MonotoneMlp::new(&[5, 12, 12, 1], &mut rng);
        for _ in 0..10_000 {
            let lo: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
            let hi: Vec<f64> = lo
                .iter()
                .map(|&v| v + rng.random_range(0.0..3.0))
                .collect();
            let f_lo = net.forward(&lo).unwrap()[0];
            let f_hi = net.forward(&hi).unwrap()[0];
            assert!(f_lo <= f_hi, "violation: f({lo:?})={f_lo} > f({hi:?})={f_hi}");
        }
    }

    #[test]
    fn raw_backward_matches_finite_differences() {
        let mut rng = stream(5, &["monotone-test"], 3);
        let net = MonotoneMlp::new(&[4, 8, 1], &mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let err = gradcheck::max_rel_err_monotone(&net, &x, 1e-5);
        assert!(err <= 1e-4, "max rel err {err}");
    }

    #[test]
    fn serde_round_trip_preserves_forward() {
        let mut rng = stream(5, &["monotone-test"], 4);
        let net = MonotoneMlp::new(&[3, 6, 1], &mut rng);
        let json = serde_json::to_string(&net).unwrap();
        let back: MonotoneMlp = serde_json::from_str(&json).unwrap();
        let x = [0.3, -0.7, 1.1];
        assert_eq!(net.forward(&x).unwrap(), back.forward(&x).unwrap());
    }
}
