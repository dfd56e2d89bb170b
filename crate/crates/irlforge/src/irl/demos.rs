//! Expert demonstration sets.

use serde::{Deserialize, Serialize};

use super::imitation::{eval_return_ri, RiConfig};
use crate::env::{Actor, Hopper, Trajectory, Transition};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// Metadata recorded alongside a demonstration file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DemoMeta {
    pub n_pairs: usize,
    pub seed: u64,
    pub mean_episode_len: f64,
    /// Mean episodic return under r_I of the generating rollouts.
    pub mean_return: f64,
    /// Set when the generating policy fell after < 50 steps per episode on
    /// average.
    pub short_episode_warning: bool,
    pub source: String,
}

/// Ordered expert (s, a) pairs with provenance. Stored on disk as the
/// trajectory JSON-lines format, exactly one line per pair.
#[derive(Debug, Clone)]
pub struct DemoSet {
    pub transitions: Vec<Transition>,
    pub meta: DemoMeta,
}

impl DemoSet {
    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    /// Observation/action pairs in the environment's observation layout.
    pub fn obs_action_pairs(&self, observe_reference: bool) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.transitions
            .iter()
            .map(|t| (t.s.obs_vec(observe_reference), t.a.clone()))
            .collect()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        Trajectory {
            transitions: self.transitions.clone(),
            seed: self.meta.seed,
            terrain_id: String::new(),
        }
        .to_jsonl()
    }

    pub fn from_jsonl(text: &str, meta: DemoMeta) -> Result<Self> {
        let t = Trajectory::from_jsonl(text)?;
        if t.transitions.is_empty() {
            return Err(Error::Artifact("demo set is empty".into()));
        }
        Ok(DemoSet {
            transitions: t.transitions,
            meta,
        })
    }
}

/// Rolls the policy in deterministic mode until exactly `n_pairs` pairs are
/// collected. Metadata records the mean episodic return under r_I.
pub fn generate_demonstrations(
    policy: &dyn Actor,
    env: &Hopper,
    ri: &RiConfig,
    n_pairs: usize,
    horizon: usize,
    seed: u64,
) -> Result<DemoSet> {
    if n_pairs == 0 {
        return Err(Error::invalid("demo set needs at least one pair"));
    }
    let mut transitions = Vec::with_capacity(n_pairs);
    let mut episode = 0u64;
    let mut episode_lens = Vec::new();
    let mut episode_returns = Vec::new();
    while transitions.len() < n_pairs {
        let t = crate::env::rollout(
            env,
            policy,
            horizon,
            derive_seed(seed, &["demo-episode"], episode),
            true,
        )?;
        episode += 1;
        episode_lens.push(t.len() as f64);
        let mut ret = 0.0;
        for tr in &t.transitions {
            ret += super::imitation::imitation_reward_ri(&tr.s_next, ri)?;
        }
        episode_returns.push(ret);
        for tr in t.transitions {
            if transitions.len() >= n_pairs {
                break;
            }
            transitions.push(tr);
        }
        if episode > 4 * (n_pairs as u64 / horizon.max(1) as u64 + 1) + 64 {
            return Err(Error::invalid(
                "policy terminates too quickly to collect the requested pairs",
            ));
        }
    }
    let mean_len = episode_lens.iter().sum::<f64>() / episode_lens.len() as f64;
    let mean_return = episode_returns.iter().sum::<f64>() / episode_returns.len() as f64;
    Ok(DemoSet {
        transitions,
        meta: DemoMeta {
            n_pairs,
            seed,
            mean_episode_len: mean_len,
            mean_return,
            short_episode_warning: mean_len < 50.0,
            source: "deterministic rollout".into(),
        },
    })
}

/// Re-evaluates a policy the same way demo metadata was computed.
pub fn reevaluate_mean_return(
    env: &Hopper,
    policy: &crate::rl::GaussianPolicy,
    ri: &RiConfig,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<f64> {
    eval_return_ri(env, policy, ri, episodes, horizon, seed)
}
