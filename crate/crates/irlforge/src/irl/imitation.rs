//! Stage 1: imitation reward and expert training against reference motions.

use serde::{Deserialize, Serialize};

use crate::env::{idx, Hopper, ObservedState};
use crate::error::{Error, Result};
use crate::rl::{rollout_return, SacState, TrainMetricsRow};
use crate::rng::derive_seed;

/// Coefficients of the imitation tracking reward.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RiConfig {
    pub c_joint: f64,
    pub c_com: f64,
    pub c_orient: f64,
    /// Weights of the joint-error norm over (leg angle, leg length).
    pub w_joint: [f64; 2],
}

impl Default for RiConfig {
    fn default() -> Self {
        RiConfig {
            c_joint: 0.5,
            c_com: 0.3,
            c_orient: 0.2,
            w_joint: [1.0, 1.0],
        }
    }
}

/// r_I = c1·e^{−E_joint} + c2·e^{−‖p_CoM − p_CoM^r‖} + c3·e^{−‖p_o − p_o^r‖},
/// with E_joint the weighted Euclidean norm of the joint tracking error.
/// Hopper mapping: joints → (θ, ℓ), CoM → (x, z), orientation → pitch.
pub fn imitation_reward_ri(state: &ObservedState, cfg: &RiConfig) -> Result<f64> {
    if state.xhat.len() != state.x.len() || state.xhat.is_empty() {
        return Err(Error::invalid(
            "imitation reward needs a reference snapshot in the state",
        ));
    }
    let x = &state.x;
    let r = &state.xhat;
    let e_joint = (cfg.w_joint[0] * (x[idx::LEG_ANGLE] - r[idx::LEG_ANGLE]).powi(2)
        + cfg.w_joint[1] * (x[idx::LEG_LEN] - r[idx::LEG_LEN]).powi(2))
    .sqrt();
    let e_com = ((x[idx::X] - r[idx::X]).powi(2) + (x[idx::Z] - r[idx::Z]).powi(2)).sqrt();
    let e_orient = (x[idx::PITCH] - r[idx::PITCH]).abs();
    Ok(cfg.c_joint * (-e_joint).exp()
        + cfg.c_com * (-e_com).exp()
        + cfg.c_orient * (-e_orient).exp())
}

/// Stage-1 training configuration (discounted SAC under r_I).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Stage1Config {
    pub train: crate::rl::sac::SacTrainConfig,
    pub ri: RiConfig,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Stage1Config {
            train: crate::rl::sac::SacTrainConfig::default(),
            ri: RiConfig::default(),
        }
    }
}

pub struct ExpertArtifacts {
    pub learner: SacState,
    /// Snapshot of the best-evaluating policy seen during training.
    pub best_policy: crate::rl::GaussianPolicy,
    pub best_return: f64,
    pub metrics: Vec<TrainMetricsRow>,
}

/// Mean deterministic-rollout return under r_I.
pub fn eval_return_ri(
    env: &Hopper,
    policy: &crate::rl::GaussianPolicy,
    ri: &RiConfig,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for ep in 0..episodes {
        let t = crate::env::rollout(env, policy, horizon, derive_seed(seed, &["eval"], ep as u64), true)?;
        total += rollout_return(&t, |tr| imitation_reward_ri(&tr.s_next, ri))?;
    }
    Ok(total / episodes.max(1) as f64)
}

/// Trains the stage-1 imitation expert with SAC (γ = 0.99) under r_I on flat
/// terrain, returning the best checkpoint by evaluation return.
pub fn train_expert(env: &Hopper, cfg: &Stage1Config, seed: u64) -> Result<ExpertArtifacts> {
    let ri = cfg.ri.clone();
    let out = crate::rl::sac::sac_train(
        env,
        &|tr| imitation_reward_ri(&tr.s_next, &ri),
        &cfg.train,
        seed,
    )?;
    Ok(ExpertArtifacts {
        learner: out.state,
        best_policy: out.best_policy,
        best_return: out.best_return,
        metrics: out.metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::STATE_DIM;

    fn state_with(x: Vec<f64>, xhat: Vec<f64>) -> ObservedState {
        ObservedState {
            x,
            xhat,
            clock: 0.0,
        }
    }

    #[test]
    fn perfect_tracking_scores_one() {
        let v = vec![0.1, 1.05, 0.6, 0.0, 0.01, 0.0, 0.05, 1.0, 0.0];
        let s = state_with(v.clone(), v);
        let r = imitation_reward_ri(&s, &RiConfig::default()).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_error_decays_to_zero() {
        let mut x = vec![0.0; STATE_DIM];
        x[idx::LEG_LEN] = 1.0;
        let mut xhat = vec![0.0; STATE_DIM];
        xhat[idx::X] = 1e6;
        xhat[idx::Z] = 1e6;
        xhat[idx::PITCH] = 1e3;
        xhat[idx::LEG_ANGLE] = 1e3;
        xhat[idx::LEG_LEN] = 1.0 + 1e3;
        let s = state_with(x, xhat);
        let r = imitation_reward_ri(&s, &RiConfig::default()).unwrap();
        assert!(r < 1e-12, "decay to zero, got {r}");
    }

    #[test]
    fn joint_term_arithmetic() {
        // w = (1,1), joint error (0.3, 0.4) → E = 0.5, first term 0.5·e^{−0.5}.
        let mut x = vec![0.0; STATE_DIM];
        x[idx::LEG_ANGLE] = 0.3;
        x[idx::LEG_LEN] = 0.4;
        let xhat = vec![0.0; STATE_DIM];
        let s = state_with(x, xhat);
        let cfg = RiConfig {
            c_joint: 0.5,
            c_com: 0.0,
            c_orient: 0.0,
            w_joint: [1.0, 1.0],
        };
        let r = imitation_reward_ri(&s, &cfg).unwrap();
        assert!((r - 0.5 * (-0.5f64).exp()).abs() < 1e-12, "{r}");
        assert!((r - 0.3033).abs() < 1e-4);
    }

    #[test]
    fn missing_reference_faults() {
        let s = ObservedState {
            x: vec![0.0; STATE_DIM],
            xhat: vec![],
            clock: 0.0,
        };
        assert!(imitation_reward_ri(&s, &RiConfig::default()).is_err());
    }
}
