//! Free-form learned reward r_θ(s, a) and its saddle-point gradient step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamState, Gradients, Mlp};

/// Learned reward network over concatenated (observation, action) input.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RewardNet {
    pub net: Mlp,
    pub obs_dim: usize,
    pub action_dim: usize,
}

impl RewardNet {
    pub fn new(obs_dim: usize, action_dim: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut sizes = vec![obs_dim + action_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        RewardNet {
            net: Mlp::new(&sizes, Activation::Tanh, rng),
            obs_dim,
            action_dim,
        }
    }

    pub fn reward(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        if obs.len() != self.obs_dim || action.len() != self.action_dim {
            return Err(Error::ShapeMismatch {
                context: "reward net input".into(),
                expected: self.obs_dim + self.action_dim,
                actual: obs.len() + action.len(),
            });
        }
        let mut x = Vec::with_capacity(obs.len() + action.len());
        x.extend_from_slice(obs);
        x.extend_from_slice(action);
        Ok(self.net.forward(&x)?[0])
    }
}

/// Saddle loss L(θ) = mean_learner r_θ − mean_expert r_θ. One Adam step on
/// ∇L drives expert pairs up and learner pairs down. Returns the loss value
/// before the step.
pub fn reward_gradient_step(
    reward: &mut RewardNet,
    adam: &mut AdamState,
    learner_batch: &[(Vec<f64>, Vec<f64>)],
    expert_batch: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64> {
    if learner_batch.is_empty() || expert_batch.is_empty() {
        return Err(Error::invalid("reward step needs nonempty learner and expert batches"));
    }
    let mut grads = Gradients::zeros_like(&reward.net);
    let mut loss = 0.0;
    let ls = 1.0 / learner_batch.len() as f64;
    for (obs, act) in learner_batch {
        let mut x = obs.clone();
        x.extend_from_slice(act);
        let cache = reward.net.forward_cached(&x)?;
        loss += ls * cache.output()[0];
        reward.net.backward_acc(&cache, &[ls], &mut grads)?;
    }
    let es = 1.0 / expert_batch.len() as f64;
    for (obs, act) in expert_batch {
        let mut x = obs.clone();
        x.extend_from_slice(act);
        let cache = reward.net.forward_cached(&x)?;
        loss -= es * cache.output()[0];
        reward.net.backward_acc(&cache, &[-es], &mut grads)?;
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("reward loss".into()));
    }
    grads.check_finite()?;
    adam.step(reward.net.param_grad_pairs(&grads))?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn pairs(rng: &mut impl Rng, n: usize, obs_dim: usize, act_dim: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..n)
            .map(|_| {
                (
                    (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    (0..act_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn identical_batches_leave_parameters_unchanged() {
        let mut rng = stream(30, &["reward"], 0);
        let mut reward = RewardNet::new(4, 2, &[16], &mut rng);
        let mut adam = AdamState::new(reward.net.param_count(), 3e-4);
        let batch = pairs(&mut rng, 8, 4, 2);
        let before = reward.net.clone();
        let loss = reward_gradient_step(&mut reward, &mut adam, &batch, &batch).unwrap();
        assert!(loss.abs() < 1e-12);
        // Float cancellation leaves ~1e-16 gradients; with zero moments Adam
        // turns those into steps of at most lr·|g|/ε ≈ 1e-11.
        for (w_after, w_before) in reward.net.weights.iter().zip(&before.weights) {
            for (a, b) in w_after.iter().zip(w_before) {
                assert!((a - b).abs() <= 1e-10, "weight moved {a} vs {b}");
            }
        }
        for (b_after, b_before) in reward.net.biases.iter().zip(&before.biases) {
            for (a, b) in b_after.iter().zip(b_before) {
                assert!((a - b).abs() <= 1e-10, "bias moved {a} vs {b}");
            }
        }
    }

    #[test]
    fn linear_reward_gradient_is_feature_mean_difference() {
        // r_θ = θ·φ with φ = (s ++ a): ∇L = mean φ_learner − mean φ_expert.
        let mut reward = RewardNet {
            net: Mlp::zeros(&[3, 1], Activation::Tanh),
            obs_dim: 2,
            action_dim: 1,
        };
        let learner = vec![
            (vec![1.0, 0.0], vec![2.0]),
            (vec![0.0, 1.0], vec![0.0]),
        ];
        let expert = vec![(vec![0.5, 0.5], vec![1.0])];
        let mut grads = Gradients::zeros_like(&reward.net);
        let ls = 1.0 / learner.len() as f64;
        for (obs, act) in &learner {
            let mut x = obs.clone();
            x.extend_from_slice(act);
            let cache = reward.net.forward_cached(&x).unwrap();
            reward.net.backward_acc(&cache, &[ls], &mut grads).unwrap();
        }
        for (obs, act) in &expert {
            let mut x = obs.clone();
            x.extend_from_slice(act);
            let cache = reward.net.forward_cached(&x).unwrap();
            reward.net.backward_acc(&cache, &[-1.0], &mut grads).unwrap();
        }
        let expect = [0.5 - 0.5, 0.5 - 0.5, 1.0 - 1.0];
        for (g, e) in grads.weights[0].iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences_of_loss() {
        let mut rng = stream(30, &["reward"], 1);
        let mut reward = RewardNet::new(3, 1, &[8], &mut rng);
        let learner = pairs(&mut rng, 4, 3, 1);
        let expert = pairs(&mut rng, 5, 3, 1);
        let loss_of = |r: &RewardNet| -> f64 {
            let mut l = 0.0;
            for (o, a) in &learner {
                l += r.reward(o, a).unwrap() / learner.len() as f64;
            }
            for (o, a) in &expert {
                l -= r.reward(o, a).unwrap() / expert.len() as f64;
            }
            l
        };
        // Analytic gradient via the same accumulation the step uses.
        let mut grads = Gradients::zeros_like(&reward.net);
        for (o, a) in &learner {
            let mut x = o.clone();
            x.extend_from_slice(a);
            let cache = reward.net.forward_cached(&x).unwrap();
            reward
                .net
                .backward_acc(&cache, &[1.0 / learner.len() as f64], &mut grads)
                .unwrap();
        }
        for (o, a) in &expert {
            let mut x = o.clone();
            x.extend_from_slice(a);
            let cache = reward.net.forward_cached(&x).unwrap();
            reward
                .net
                .backward_acc(&cache, &[-1.0 / expert.len() as f64], &mut grads)
                .unwrap();
        }
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for (l, i) in [(0usize, 0usize), (0, 7), (1, 2)] {
            let orig = reward.net.weights[l][i];
            reward.net.weights[l][i] = orig + h;
            let fp = loss_of(&reward);
            reward.net.weights[l][i] = orig - h;
            let fm = loss_of(&reward);
            reward.net.weights[l][i] = orig;
            worst = worst.max(crate::nn::gradcheck::rel_err(
                grads.weights[l][i],
                (fp - fm) / (2.0 * h),
            ));
        }
        assert!(worst <= 1e-4, "rel err {worst}");
    }

    #[test]
    fn constant_output_shift_leaves_loss_unchanged() {
        let mut rng = stream(30, &["reward"], 2);
        let mut reward = RewardNet::new(3, 1, &[8], &mut rng);
        let learner = pairs(&mut rng, 6, 3, 1);
        let expert = pairs(&mut rng, 6, 3, 1);
        let loss_of = |r: &RewardNet| -> f64 {
            let mut l = 0.0;
            for (o, a) in &learner {
                l += r.reward(o, a).unwrap() / learner.len() as f64;
            }
            for (o, a) in &expert {
                l -= r.reward(o, a).unwrap() / expert.len() as f64;
            }
            l
        };
        let before = loss_of(&reward);
        let last = reward.net.biases.len() - 1;
        reward.net.biases[last][0] += 5.0;
        let after = loss_of(&reward);
        assert!(
            (after - before).abs() < 1e-10,
            "means cancel: {before} vs {after}"
        );
    }
}
