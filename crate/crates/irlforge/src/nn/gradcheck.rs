//! Central-finite-difference validation of analytic gradients.
//!
//! The numeric side never touches the backward pass, so it stays an
//! independent oracle for it.

use std::collections::BTreeMap;

use super::{Mlp, MonotoneMlp};
use crate::error::{Error, Result};

/// Relative error with an absolute floor so near-zero gradients compare
/// sensibly.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / denom
}

/// Central difference of a scalar function.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[i] += h;
    xm[i] -= h;
    (f(&xp) - f(&xm)) / (2.0 * h)
}

/// Max relative error between the analytic parameter gradients of the scalar
/// output sum and central differences, perturbing every parameter.
pub fn max_rel_err_params(net: &Mlp, x: &[f64], h: f64) -> f64 {
    let cache = net.forward_cached(x).expect("shape ok");
    let upstream = vec![1.0; net.output_size()];
    let (grads, _) = net.backward(&cache, &upstream).expect("cached");
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    let eval = |net: &Mlp| -> f64 { net.forward(x).unwrap().iter().sum() };
    for l in 0..net.weights.len() {
        for i in 0..net.weights[l].len() {
            let orig = probe.weights[l][i];
            probe.weights[l][i] = orig + h;
            let fp = eval(&probe);
            probe.weights[l][i] = orig - h;
            let fm = eval(&probe);
            probe.weights[l][i] = orig;
            worst = worst.max(rel_err(grads.weights[l][i], (fp - fm) / (2.0 * h)));
        }
        for i in 0..net.biases[l].len() {
            let orig = probe.biases[l][i];
            probe.biases[l][i] = orig + h;
            let fp = eval(&probe);
            probe.biases[l][i] = orig - h;
            let fm = eval(&probe);
            probe.biases[l][i] = orig;
            worst = worst.max(rel_err(grads.biases[l][i], (fp - fm) / (2.0 * h)));
        }
    }
    worst
}

/// Max relative error of the input-space gradient against central differences.
pub fn max_rel_err_input(net: &Mlp, x: &[f64], h: f64) -> f64 {
    let cache = net.forward_cached(x).expect("shape ok");
    let upstream = vec![1.0; net.output_size()];
    let (_, dx) = net.backward(&cache, &upstream).expect("cached");
    let mut f = |p: &[f64]| -> f64 { net.forward(p).unwrap().iter().sum() };
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let numeric = central_diff(&mut f, x, i, h);
        worst = worst.max(rel_err(dx[i], numeric));
    }
    worst
}

/// Raw-parameter gradient check for the monotone variant.
pub fn max_rel_err_monotone(net: &MonotoneMlp, x: &[f64], h: f64) -> f64 {
    let cache = net.forward_cached(x).expect("shape ok");
    let upstream = vec![1.0; net.output_size()];
    let (grads, _) = net.backward(&cache, &upstream).expect("cached");
    let mut worst: f64 = 0.0;
    let eval = |raw: &Mlp| -> f64 {
        let m = MonotoneMlp::from_raw(raw.clone());
        m.forward(x).unwrap().iter().sum()
    };
    let mut probe = net.raw().clone();
    for l in 0..probe.weights.len() {
        for i in 0..probe.weights[l].len() {
            let orig = probe.weights[l][i];
            probe.weights[l][i] = orig + h;
            let fp = eval(&probe);
            probe.weights[l][i] = orig - h;
            let fm = eval(&probe);
            probe.weights[l][i] = orig;
            worst = worst.max(rel_err(grads.weights[l][i], (fp - fm) / (2.0 * h)));
        }
        for i in 0..probe.biases[l].len() {
            let orig = probe.biases[l][i];
            probe.biases[l][i] = orig + h;
            let fp = eval(&probe);
            probe.biases[l][i] = orig - h;
            let fm = eval(&probe);
            probe.biases[l][i] = orig;
            worst = worst.max(rel_err(grads.biases[l][i], (fp - fm) / (2.0 * h)));
        }
    }
    worst
}

type CheckFn = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>)>;

/// Registry of named scalar functions with analytic gradients, compared
/// against central differences on demand.
#[derive(Default)]
pub struct GradCheckRegistry {
    entries: BTreeMap<String, CheckFn>,
}

impl GradCheckRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `f` returning (value, gradient at the point).
    pub fn register(
        &mut self,
        tag: impl Into<String>,
        f: impl Fn(&[f64]) -> (f64, Vec<f64>) + 'static,
    ) {
        self.entries.insert(tag.into(), Box::new(f));
    }

    /// Max relative error between the registered analytic gradient and
    /// central differences at `point`.
    pub fn check(&self, tag: &str, point: &[f64], h: f64) -> Result<f64> {
        let f = self
            .entries
            .get(tag)
            .ok_or_else(|| Error::invalid(format!("no gradient check registered under '{tag}'")))?;
        let (_, analytic) = f(point);
        let mut worst: f64 = 0.0;
        let mut value_of = |x: &[f64]| f(x).0;
        for i in 0..point.len() {
            let numeric = central_diff(&mut value_of, point, i, h);
            worst = worst.max(rel_err(analytic[i], numeric));
        }
        Ok(worst)
    }
}
