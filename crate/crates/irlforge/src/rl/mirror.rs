//! KL mirror-descent policy improvement.
//!
//! Tabular case: the exact multiplicative update π' ∝ π·exp(ηQ). Parametric
//! case: projection of the exponential tilt onto the Gaussian family via
//! self-normalized importance weights on sampled actions (a weighted
//! maximum-likelihood step), which reduces to the closed form when the
//! family is unrestricted.

use rand_chacha::ChaCha8Rng;

use super::policy::GaussianPolicy;
use super::tabular::TabularPolicy;
use crate::error::{Error, Result};
use crate::nn::{AdamState, Gradients};

/// π'(a|s) ∝ π(a|s)·exp(η·Q(s,a)), normalized per state.
pub fn mirror_descent_update(
    policy: &TabularPolicy,
    q: &[Vec<f64>],
    eta: f64,
) -> Result<TabularPolicy> {
    if eta < 0.0 {
        return Err(Error::invalid(format!("mirror-descent step η must be ≥ 0, got {eta}")));
    }
    let mut out = Vec::with_capacity(policy.probs.len());
    for (s, row) in policy.probs.iter().enumerate() {
        let qs = &q[s];
        // Max-subtraction keeps the exponentials representable.
        let m = qs
            .iter()
            .zip(row)
            .filter(|(_, &p)| p > 0.0)
            .map(|(q, _)| eta * q)
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = row
            .iter()
            .zip(qs)
            .map(|(&p, &qv)| p * (eta * qv - m).exp())
            .collect();
        let z: f64 = weights.iter().sum();
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::invalid(format!(
                "tilt weights degenerate in state {s} (Z = {z}); try a smaller η"
            )));
        }
        out.push(weights.into_iter().map(|w| w / z).collect());
    }
    let updated = TabularPolicy { probs: out };
    updated.validate()?;
    Ok(updated)
}

/// One parametric mirror-descent step: for each state, sample `n_samples`
/// actions from the current policy, weight them by softmax(η·Q), and take one
/// Adam step on the weighted negative log-likelihood (plus an entropy bonus).
///
/// Returns the mean weighted NLL before the step.
#[allow(clippy::too_many_arguments)]
pub fn mirror_descent_param_step(
    policy: &mut GaussianPolicy,
    adam: &mut AdamState,
    states: &[Vec<f64>],
    mut q_fn: impl FnMut(&[f64], &[f64]) -> f64,
    eta: f64,
    n_samples: usize,
    entropy_coef: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if eta < 0.0 {
        return Err(Error::invalid(format!("mirror-descent step η must be ≥ 0, got {eta}")));
    }
    if states.is_empty() || n_samples == 0 {
        return Err(Error::invalid("parametric mirror step needs states and samples"));
    }
    let mut grads = Gradients::zeros_like(&policy.net);
    let state_scale = 1.0 / states.len() as f64;
    let mut loss = 0.0;
    for obs in states {
        let mut actions = Vec::with_capacity(n_samples);
        let mut tilts = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let sample = policy.sample(obs, rng)?;
            let qv = q_fn(obs, &sample.action);
            actions.push(sample.action);
            tilts.push(eta * qv);
        }
        let m = tilts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = tilts.iter().map(|t| (t - m).exp()).collect();
        let z: f64 = weights.iter().sum();
        if !z.is_finite() || z <= 0.0 {
            return Err(Error::invalid(format!(
                "tilt weights degenerate (Z = {z}); try a smaller η"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= z);
        for (action, w) in actions.iter().zip(&weights) {
            let (cache, upstream) = policy.mle_gradient(
                obs,
                action,
                w * state_scale,
                entropy_coef * state_scale / n_samples as f64,
            )?;
            policy.net.backward_acc(&cache, &upstream, &mut grads)?;
            loss -= w * state_scale * policy.log_prob(obs, action)?;
        }
    }
    grads.check_finite()?;
    adam.step(policy.net.param_grad_pairs(&grads))?;
    Ok(loss)
}
