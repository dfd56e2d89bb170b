//! Tanh-squashed Gaussian policy over action corrections.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::Actor;
use crate::error::{Error, Result};
use crate::nn::{softplus, Activation, ForwardCache, Mlp};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// MLP head producing (mean, log-std) per action dimension; samples are
/// squashed through tanh and scaled to the clip bounds.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaussianPolicy {
    pub net: Mlp,
    /// Componentwise action scale (the |δa| clip bound).
    pub bounds: Vec<f64>,
    /// When set, [`Actor::act`] returns the squashed mean.
    pub deterministic_eval: bool,
}

/// Intermediate quantities of one sampled action, kept for backprop.
pub struct PolicySample {
    pub action: Vec<f64>,
    /// Pre-squash sample μ + σ·ε.
    pub pre: Vec<f64>,
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
    /// Raw (unclamped) log-std as emitted by the network.
    pub log_std_raw: Vec<f64>,
    pub eps: Vec<f64>,
    pub log_prob: f64,
    pub cache: ForwardCache,
}

impl GaussianPolicy {
    pub fn new(obs_dim: usize, bounds: Vec<f64>, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(2 * bounds.len());
        GaussianPolicy {
            net: Mlp::new(&sizes, Activation::Relu, rng),
            bounds,
            deterministic_eval: false,
        }
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_size()
    }

    fn split_output(&self, out: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let a = self.action_dim();
        let mean = out[..a].to_vec();
        let log_std_raw = out[a..].to_vec();
        let log_std: Vec<f64> = log_std_raw
            .iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        (mean, log_std_raw, log_std)
    }

    /// Squashed deterministic action (tanh of the mean).
    pub fn act_deterministic(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let out = self.net.forward(obs)?;
        let (mean, _, _) = self.split_output(&out);
        Ok(mean
            .iter()
            .zip(&self.bounds)
            .map(|(m, b)| b * m.tanh())
            .collect())
    }

    /// Reparameterized sample with cached intermediates.
    pub fn sample(&self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<PolicySample> {
        let cache = self.net.forward_cached(obs)?;
        let (mean, log_std_raw, log_std) = self.split_output(cache.output());
        let a = self.action_dim();
        let eps: Vec<f64> = (0..a).map(|_| rng.sample(StandardNormal)).collect();
        let pre: Vec<f64> = (0..a)
            .map(|i| mean[i] + log_std[i].exp() * eps[i])
            .collect();
        let action: Vec<f64> = pre
            .iter()
            .zip(&self.bounds)
            .map(|(p, b)| b * p.tanh())
            .collect();
        let log_prob = self.log_prob_of_pre(&pre, &mean, &log_std);
        Ok(PolicySample {
            action,
            pre,
            mean,
            log_std,
            log_std_raw,
            eps,
            log_prob,
            cache,
        })
    }

    /// log π(a|s) for a pre-squash value, with the tanh/scale Jacobian.
    /// Uses the stable form log(1 − tanh²x) = 2(ln2 − x − softplus(−2x)).
    fn log_prob_of_pre(&self, pre: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
        let mut lp = 0.0;
        for i in 0..pre.len() {
            let std = log_std[i].exp();
            let z = (pre[i] - mean[i]) / std;
            lp += -log_std[i] - 0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln();
            lp -= 2.0 * (std::f64::consts::LN_2 - pre[i] - softplus(-2.0 * pre[i]));
            lp -= self.bounds[i].ln();
        }
        lp
    }

    /// log π(a|s) for a stored action (inverts the squash).
    pub fn log_prob(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.action_dim() {
            return Err(Error::ShapeMismatch {
                context: "policy log_prob action".into(),
                expected: self.action_dim(),
                actual: action.len(),
            });
        }
        let out = self.net.forward(obs)?;
        let (mean, _, log_std) = self.split_output(&out);
        let pre: Vec<f64> = action
            .iter()
            .zip(&self.bounds)
            .map(|(a, b)| atanh_clamped(a / b))
            .collect();
        Ok(self.log_prob_of_pre(&pre, &mean, &log_std))
    }

    /// Upstream gradient on the raw network outputs for a loss of the form
    /// α·log π(a|s) − Q(s, a(pre)), given dQ/da of the sampled action.
    ///
    /// The clamp on log-std passes no gradient outside its range.
    pub fn head_gradient(
        &self,
        sample: &PolicySample,
        alpha: f64,
        dq_da: &[f64],
    ) -> Vec<f64> {
        let a = self.action_dim();
        let mut upstream = vec![0.0; 2 * a];
        for i in 0..a {
            let t = sample.pre[i].tanh();
            let std = sample.log_std[i].exp();
            let da_dpre = self.bounds[i] * (1.0 - t * t);
            // ∂logπ/∂pre through the tanh Jacobian term.
            let dlogp_dmean = 2.0 * t;
            let dlogp_dlogstd = 2.0 * t * std * sample.eps[i] - 1.0;
            let g_mean = alpha * dlogp_dmean - dq_da[i] * da_dpre;
            let g_logstd = alpha * dlogp_dlogstd - dq_da[i] * da_dpre * std * sample.eps[i];
            upstream[i] = g_mean;
            let raw = sample.log_std_raw[i];
            upstream[a + i] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                g_logstd
            } else {
                0.0
            };
        }
        upstream
    }

    /// Upstream gradient on the raw outputs for −w·log π(a|s) (weighted
    /// maximum likelihood over stored actions), plus −β·∂H/∂outputs with the
    /// Gaussian entropy surrogate H = Σ log σ.
    pub fn mle_gradient(
        &self,
        obs: &[f64],
        action: &[f64],
        weight: f64,
        entropy_coef: f64,
    ) -> Result<(ForwardCache, Vec<f64>)> {
        let cache = self.net.forward_cached(obs)?;
        let (mean, log_std_raw, log_std) = self.split_output(cache.output());
        let a = self.action_dim();
        let mut upstream = vec![0.0; 2 * a];
        for i in 0..a {
            let pre = atanh_clamped(action[i] / self.bounds[i]);
            let std = log_std[i].exp();
            let z = (pre - mean[i]) / std;
            // d(−w·logπ)/dμ and /d logσ of the Gaussian part; the squash
            // Jacobian does not depend on the parameters.
            upstream[i] = -weight * (z / std);
            let g_logstd = -weight * (z * z - 1.0) - entropy_coef;
            upstream[a + i] = if (LOG_STD_MIN..=LOG_STD_MAX).contains(&log_std_raw[i]) {
                g_logstd
            } else {
                0.0
            };
        }
        Ok((cache, upstream))
    }
}

fn atanh_clamped(x: f64) -> f64 {
    let x = x.clamp(-0.999_999, 0.999_999);
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

impl Actor for GaussianPolicy {
    fn act(&self, obs: &[f64], rng: &mut ChaCha8Rng, deterministic: bool) -> Vec<f64> {
        if deterministic || self.deterministic_eval {
            self.act_deterministic(obs).expect("obs shape")
        } else {
            self.sample(obs, rng).expect("obs shape").action
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn samples_stay_within_bounds_and_logstd_clamped() {
        let mut rng = stream(8, &["policy"], 0);
        let bounds = vec![0.2, 10.0];
        let policy = GaussianPolicy::new(4, bounds.clone(), &[16, 16], &mut rng);
        for _ in 0..200 {
            let obs: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = policy.sample(&obs, &mut rng).unwrap();
            for (ai, b) in s.action.iter().zip(&bounds) {
                assert!(ai.abs() <= *b);
            }
            for ls in &s.log_std {
                assert!((LOG_STD_MIN..=LOG_STD_MAX).contains(ls));
            }
            assert!(s.log_prob.is_finite());
        }
    }

    #[test]
    fn log_prob_agrees_with_sample_path() {
        let mut rng = stream(8, &["policy"], 1);
        let policy = GaussianPolicy::new(3, vec![1.0, 1.0], &[8], &mut rng);
        let obs = [0.1, -0.4, 0.7];
        let s = policy.sample(&obs, &mut rng).unwrap();
        let lp = policy.log_prob(&obs, &s.action).unwrap();
        assert!(
            (lp - s.log_prob).abs() < 1e-6,
            "stored {} vs recomputed {lp}",
            s.log_prob
        );
    }

    #[test]
    fn mle_gradient_matches_finite_differences() {
        let mut rng = stream(8, &["policy"], 2);
        let mut policy = GaussianPolicy::new(3, vec![0.5, 2.0], &[8], &mut rng);
        let obs = [0.3, -0.2, 0.9];
        let action = [0.1, -0.8];
        let weight = 0.7;
        let (cache, upstream) = policy.mle_gradient(&obs, &action, weight, 0.0).unwrap();
        let (grads, _) = policy.net.backward(&cache, &upstream).unwrap();
        // Finite differences of −w·logπ over a few parameters.
        let mut worst: f64 = 0.0;
        let h = 1e-6;
        for (l, i) in [(0usize, 0usize), (0, 5), (1, 3), (1, 7)] {
            let orig = policy.net.weights[l][i];
            policy.net.weights[l][i] = orig + h;
            let fp = -weight * policy.log_prob(&obs, &action).unwrap();
            policy.net.weights[l][i] = orig - h;
            let fm = -weight * policy.log_prob(&obs, &action).unwrap();
            policy.net.weights[l][i] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            worst = worst.max(crate::nn::gradcheck::rel_err(grads.weights[l][i], numeric));
        }
        assert!(worst <= 1e-4, "max rel err {worst}");
    }
}
