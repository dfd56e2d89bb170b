//! Soft actor-critic with min-of-two critics, Polyak targets, and automatic
//! temperature tuning.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::avg::TdSample;
use super::policy::GaussianPolicy;
use super::replay::ReplayBuffer;
use crate::error::Result;
use crate::nn::{Activation, AdamState, Gradients, Mlp};

/// Environment-agnostic replay item for off-policy updates.
pub type ObsSample = TdSample<Vec<f64>, Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SacConfig {
    pub gamma: f64,
    pub polyak: f64,
    pub batch: usize,
    pub lr: f64,
    pub init_temp: f64,
    /// Automatic temperature tuning toward −dim(action); when off, the
    /// temperature stays fixed.
    pub auto_temp: bool,
    pub hidden: Vec<usize>,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            gamma: 0.99,
            polyak: 0.005,
            batch: 512,
            lr: 3e-4,
            init_temp: 0.1,
            auto_temp: true,
            hidden: vec![256, 256],
        }
    }
}

/// Twin Q critics with target copies.
#[derive(Debug, Clone)]
pub struct Critic {
    pub q1: Mlp,
    pub q2: Mlp,
    pub q1_target: Mlp,
    pub q2_target: Mlp,
    pub adam1: AdamState,
    pub adam2: AdamState,
    pub polyak: f64,
}

impl Critic {
    pub fn new(obs_dim: usize, action_dim: usize, config: &SacConfig, rng: &mut impl rand::Rng) -> Self {
        let mut sizes = vec![obs_dim + action_dim];
        sizes.extend_from_slice(&config.hidden);
        sizes.push(1);
        let q1 = Mlp::new(&sizes, Activation::Relu, rng);
        let q2 = Mlp::new(&sizes, Activation::Relu, rng);
        Critic {
            adam1: AdamState::new(q1.param_count(), config.lr),
            adam2: AdamState::new(q2.param_count(), config.lr),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            q1,
            q2,
            polyak: config.polyak,
        }
    }

    fn input(s: &[f64], a: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(s.len() + a.len());
        v.extend_from_slice(s);
        v.extend_from_slice(a);
        v
    }

    pub fn q_min(&self, s: &[f64], a: &[f64]) -> f64 {
        let x = Self::input(s, a);
        self.q1.forward(&x).expect("critic shape")[0]
            .min(self.q2.forward(&x).expect("critic shape")[0])
    }

    fn q_min_target(&self, s: &[f64], a: &[f64]) -> f64 {
        let x = Self::input(s, a);
        self.q1_target.forward(&x).expect("critic shape")[0]
            .min(self.q2_target.forward(&x).expect("critic shape")[0])
    }

    fn sync_targets(&mut self) {
        let (q1, q2) = (self.q1.clone(), self.q2.clone());
        self.q1_target.polyak_from(&q1, self.polyak);
        self.q2_target.polyak_from(&q2, self.polyak);
    }
}

/// Full SAC learner state.
pub struct SacState {
    pub policy: GaussianPolicy,
    pub critic: Critic,
    pub policy_adam: AdamState,
    pub log_temp: f64,
    pub temp_adam: AdamState,
    pub config: SacConfig,
    pub target_entropy: f64,
}

impl SacState {
    pub fn new(obs_dim: usize, bounds: Vec<f64>, config: SacConfig, rng: &mut impl rand::Rng) -> Self {
        let action_dim = bounds.len();
        let policy = GaussianPolicy::new(obs_dim, bounds, &config.hidden, rng);
        let critic = Critic::new(obs_dim, action_dim, &config, rng);
        SacState {
            policy_adam: AdamState::new(policy.net.param_count(), config.lr),
            temp_adam: AdamState::new(1, config.lr),
            log_temp: config.init_temp.ln(),
            target_entropy: -(action_dim as f64),
            policy,
            critic,
            config,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.log_temp.exp()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SacStats {
    pub critic_loss: f64,
    pub policy_loss: f64,
    pub temperature: f64,
}

/// One gradient step each for the critics (soft Bellman target with
/// min-of-two) and the policy (reparameterized entropy-regularized
/// objective), plus the temperature step and Polyak averaging.
///
/// Returns `None` (no-op signal) while the buffer holds fewer than one batch.
pub fn sac_update(
    state: &mut SacState,
    buffer: &ReplayBuffer<ObsSample>,
    rng: &mut ChaCha8Rng,
) -> Result<Option<SacStats>> {
    let batch_size = state.config.batch;
    if buffer.len() < batch_size {
        return Ok(None);
    }
    let batch = buffer.sample_with(batch_size, rng)?;
    let alpha = state.temperature();
    let gamma = state.config.gamma;
    let scale = 1.0 / batch_size as f64;

    // Critic step: y = r + γ(1−done)(min Q̄(s',a') − α·logπ(a'|s')).
    let mut targets = Vec::with_capacity(batch_size);
    for item in &batch {
        let y = if item.done {
            item.r
        } else {
            let next = state.policy.sample(&item.s_next, rng)?;
            let q_next = state.critic.q_min_target(&item.s_next, &next.action);
            item.r + gamma * (q_next - alpha * next.log_prob)
        };
        targets.push(y);
    }
    let mut critic_loss = 0.0;
    for which in 0..2 {
        let (net, adam) = if which == 0 {
            (&mut state.critic.q1, &mut state.critic.adam1)
        } else {
            (&mut state.critic.q2, &mut state.critic.adam2)
        };
        let mut grads = Gradients::zeros_like(net);
        for (item, &y) in batch.iter().zip(&targets) {
            let x = Critic::input(&item.s, &item.a);
            let cache = net.forward_cached(&x)?;
            let q = cache.output()[0];
            critic_loss += scale * 0.5 * (q - y) * (q - y);
            net.backward_acc(&cache, &[scale * 2.0 * (q - y)], &mut grads)?;
        }
        grads.check_finite()?;
        adam.step(net.param_grad_pairs(&grads))?;
    }

    // Policy step: minimize E[α·logπ(ã|s) − min Q(s, ã)] over reparameterized ã.
    let mut policy_grads = Gradients::zeros_like(&state.policy.net);
    let mut policy_loss = 0.0;
    let mut mean_logp = 0.0;
    for item in &batch {
        let sample = state.policy.sample(&item.s, rng)?;
        let x = Critic::input(&item.s, &sample.action);
        let c1 = state.critic.q1.forward_cached(&x)?;
        let c2 = state.critic.q2.forward_cached(&x)?;
        let (q1v, q2v) = (c1.output()[0], c2.output()[0]);
        let (qmin, min_cache, min_net) = if q1v <= q2v {
            (q1v, c1, &state.critic.q1)
        } else {
            (q2v, c2, &state.critic.q2)
        };
        let (_, dx) = min_net.backward(&min_cache, &[1.0])?;
        let dq_da = &dx[item.s.len()..];
        let upstream = state.policy.head_gradient(&sample, alpha, dq_da);
        let scaled: Vec<f64> = upstream.iter().map(|g| g * scale).collect();
        state
            .policy
            .net
            .backward_acc(&sample.cache, &scaled, &mut policy_grads)?;
        policy_loss += scale * (alpha * sample.log_prob - qmin);
        mean_logp += scale * sample.log_prob;
    }
    policy_grads.check_finite()?;
    state
        .policy_adam
        .step(state.policy.net.param_grad_pairs(&policy_grads))?;

    // Temperature step toward the entropy target.
    if state.config.auto_temp {
        let g = mean_logp + state.target_entropy;
        let mut log_temp = [state.log_temp];
        state.temp_adam.step(log_temp.iter_mut().zip([g]))?;
        state.log_temp = log_temp[0].clamp(-12.0, 4.0);
    }

    state.critic.sync_targets();
    Ok(Some(SacStats {
        critic_loss,
        policy_loss,
        temperature: state.temperature(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn tiny_config() -> SacConfig {
        SacConfig {
            gamma: 0.99,
            polyak: 0.01,
            batch: 16,
            lr: 3e-3,
            init_temp: 1e-8,
            auto_temp: false,
            hidden: vec![32, 32],
        }
    }

    #[test]
    fn underfull_buffer_is_a_noop_signal() {
        let mut rng = stream(20, &["sac"], 0);
        let mut state = SacState::new(3, vec![1.0], tiny_config(), &mut rng);
        let buffer: ReplayBuffer<ObsSample> = ReplayBuffer::new(64);
        let out = sac_update(&mut state, &buffer, &mut rng).unwrap();
        assert!(out.is_none());
    }

    #[test]
    fn repeated_transition_drives_q_to_geometric_fixed_point() {
        // Single repeated transition with r = 1, γ = 0.99, α = 0: with a
        // degenerate (near-zero) action clip the system reduces to the scalar
        // Bellman map, and Q must approach 1/(1−γ) = 100. Oracle: iterating
        // q ← 1 + γq from 0.
        let mut rng = stream(20, &["sac"], 1);
        let mut config = tiny_config();
        config.lr = 2e-3;
        config.polyak = 0.05;
        config.init_temp = 0.0;
        let mut state = SacState::new(2, vec![1e-6], config, &mut rng);
        let mut buffer: ReplayBuffer<ObsSample> = ReplayBuffer::new(64);
        let item = ObsSample {
            s: vec![0.5, -0.5],
            a: vec![0.0],
            r: 1.0,
            s_next: vec![0.5, -0.5],
            done: false,
        };
        for _ in 0..32 {
            buffer.push(item.clone());
        }
        let mut q_est = 0.0;
        for _ in 0..16000 {
            sac_update(&mut state, &buffer, &mut rng).unwrap().unwrap();
            q_est = state.critic.q_min(&item.s, &vec![0.0]);
        }
        let mut oracle = 0.0;
        for _ in 0..16000 {
            oracle = 1.0 + 0.99 * oracle;
        }
        assert!(
            (q_est - oracle).abs() <= 1.0,
            "Q {q_est} vs Bellman fixed point {oracle}"
        );
    }

    #[test]
    fn zero_reward_keeps_targets_near_zero() {
        let mut rng = stream(20, &["sac"], 2);
        let mut state = SacState::new(2, vec![1.0], tiny_config(), &mut rng);
        let mut buffer: ReplayBuffer<ObsSample> = ReplayBuffer::new(128);
        for i in 0..64 {
            let v = (i as f64) / 64.0;
            buffer.push(ObsSample {
                s: vec![v, -v],
                a: vec![0.1],
                r: 0.0,
                s_next: vec![-v, v],
                done: false,
            });
        }
        for _ in 0..2000 {
            sac_update(&mut state, &buffer, &mut rng).unwrap();
        }
        let q = state.critic.q_min(&[0.3, -0.3], &[0.0]);
        assert!(q.abs() < 0.5, "zero-reward critic should stay near 0, got {q}");
    }

    #[test]
    fn update_preserves_shapes() {
        let mut rng = stream(20, &["sac"], 3);
        let mut state = SacState::new(4, vec![0.2, 10.0], tiny_config(), &mut rng);
        let mut buffer: ReplayBuffer<ObsSample> = ReplayBuffer::new(64);
        for i in 0..32 {
            buffer.push(ObsSample {
                s: vec![i as f64 * 0.1; 4],
                a: vec![0.05, 1.0],
                r: 0.1,
                s_next: vec![i as f64 * 0.1 + 0.05; 4],
                done: i % 7 == 0,
            });
        }
        let before_shapes: Vec<usize> = state.policy.net.layer_sizes.clone();
        sac_update(&mut state, &buffer, &mut rng).unwrap().unwrap();
        assert_eq!(state.policy.net.layer_sizes, before_shapes);
        for w in &state.policy.net.weights {
            assert!(w.iter().all(|v| v.is_finite()));
        }
    }
}

/// Generic SAC training driver over the hopper with an arbitrary
/// per-transition reward.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SacTrainConfig {
    pub total_steps: usize,
    pub warmup_steps: usize,
    pub update_every: usize,
    pub eval_interval: usize,
    pub eval_episodes: usize,
    pub horizon: usize,
    pub replay_capacity: usize,
    pub sac: SacConfig,
}

impl Default for SacTrainConfig {
    fn default() -> Self {
        SacTrainConfig {
            total_steps: 500_000,
            warmup_steps: 2_000,
            update_every: 2,
            eval_interval: 10_000,
            eval_episodes: 3,
            horizon: 2_000,
            replay_capacity: 1_000_000,
            sac: SacConfig::default(),
        }
    }
}

pub struct SacTrainOut {
    pub state: SacState,
    /// Snapshot of the best-evaluating policy seen during training.
    pub best_policy: GaussianPolicy,
    pub best_return: f64,
    pub metrics: Vec<super::TrainMetricsRow>,
}

/// Trains SAC on the hopper under `reward`, evaluating deterministically at
/// intervals and keeping the best checkpoint. Faults on non-finite returns.
pub fn sac_train(
    env: &crate::env::Hopper,
    reward: &dyn Fn(&crate::env::Transition) -> crate::error::Result<f64>,
    cfg: &SacTrainConfig,
    seed: u64,
) -> crate::error::Result<SacTrainOut> {
    use crate::rng::{derive_seed, stream};
    let mut rng = stream(seed, &["sac-train"], 0);
    let bounds = vec![env.params.clip_angle, env.params.clip_thrust];
    let mut state = SacState::new(env.obs_dim(), bounds.clone(), cfg.sac.clone(), &mut rng);
    let mut buffer: ReplayBuffer<ObsSample> = ReplayBuffer::new(cfg.replay_capacity);
    let mut metrics = Vec::new();
    let mut best_policy = state.policy.clone();
    let mut best_return = f64::NEG_INFINITY;

    let eval = |policy: &GaussianPolicy, eval_seed: u64| -> crate::error::Result<f64> {
        let mut total = 0.0;
        for ep in 0..cfg.eval_episodes {
            let t = crate::env::rollout(
                env,
                policy,
                cfg.horizon,
                derive_seed(eval_seed, &["sac-eval"], ep as u64),
                true,
            )?;
            for tr in &t.transitions {
                total += reward(tr)?;
            }
        }
        Ok(total / cfg.eval_episodes.max(1) as f64)
    };

    let mut episode = 0u64;
    let mut sim = env.reset(derive_seed(seed, &["sac-episode"], episode));
    let mut steps_in_episode = 0usize;
    let mut stats = SacStats::default();
    for step in 0..cfg.total_steps {
        let s_obs = env.observe(&sim);
        let obs = s_obs.obs_vec(env.observe_reference);
        let action = if step < cfg.warmup_steps {
            use rand::Rng;
            bounds
                .iter()
                .map(|b| rng.random_range(-b..=*b))
                .collect::<Vec<f64>>()
        } else {
            state.policy.sample(&obs, &mut rng)?.action
        };
        let (next_sim, info, done) = env.step_sim(&sim, &action)?;
        let s_next = env.observe(&next_sim);
        let transition = crate::env::Transition {
            s: s_obs,
            a: action.clone(),
            s_next: s_next.clone(),
            done,
            info,
        };
        let r = reward(&transition)?;
        buffer.push(ObsSample {
            s: obs,
            a: action,
            r,
            s_next: s_next.obs_vec(env.observe_reference),
            done,
        });
        steps_in_episode += 1;
        if done || steps_in_episode >= cfg.horizon {
            episode += 1;
            sim = env.reset(derive_seed(seed, &["sac-episode"], episode));
            steps_in_episode = 0;
        } else {
            sim = next_sim;
        }

        if step >= cfg.warmup_steps && step % cfg.update_every == 0 {
            if let Some(s) = sac_update(&mut state, &buffer, &mut rng)? {
                stats = s;
            }
        }

        if (step + 1) % cfg.eval_interval == 0 || step + 1 == cfg.total_steps {
            let ret = eval(&state.policy, derive_seed(seed, &["sac-eval-seed"], step as u64))?;
            if !ret.is_finite() {
                return Err(crate::error::Error::NonFinite("evaluation return".into()));
            }
            if ret > best_return {
                best_return = ret;
                best_policy = state.policy.clone();
            }
            metrics.push(super::TrainMetricsRow {
                step: (step + 1) as u64,
                episode_return: Some(ret),
                rho_hat: None,
                critic_loss: Some(stats.critic_loss),
                policy_loss: Some(stats.policy_loss),
                temp: Some(stats.temperature),
                reward_loss: None,
            });
        }
    }
    Ok(SacTrainOut {
        state,
        best_policy,
        best_return,
        metrics,
    })
}
