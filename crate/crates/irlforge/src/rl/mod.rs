//! Policy/critic machinery: replay buffer, discounted soft actor-critic,
//! average-reward differential TD evaluation, KL mirror-descent improvement,
//! and exact tabular oracles.
//!
//! Training loops are single-owner and sequential; evaluation fans out
//! read-only policy copies.

pub mod avg;
pub mod mirror;
pub mod policy;
pub mod replay;
pub mod sac;
pub mod tabular;

pub use avg::{differential_td_update, DiffCritic, GainEstimate, MlpCritic, TabularCritic, TdSample};
pub use mirror::{mirror_descent_param_step, mirror_descent_update};
pub use policy::GaussianPolicy;
pub use replay::ReplayBuffer;
pub use sac::{sac_update, Critic, ObsSample, SacConfig, SacState, SacStats};
pub use tabular::{avg_eval_exact, avg_policy_iteration, bellman_residual, TabularPolicy};

/// One row of the training metrics CSV. Columns are fixed; absent
/// quantities serialize as blank fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainMetricsRow {
    pub step: u64,
    pub episode_return: Option<f64>,
    pub rho_hat: Option<f64>,
    pub critic_loss: Option<f64>,
    pub policy_loss: Option<f64>,
    pub temp: Option<f64>,
    pub reward_loss: Option<f64>,
}

impl TrainMetricsRow {
    pub const HEADER: &'static str =
        "step,episode_return,rho_hat,critic_loss,policy_loss,temp,reward_loss";

    pub fn to_csv(&self) -> String {
        let f = |v: &Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.step,
            f(&self.episode_return),
            f(&self.rho_hat),
            f(&self.critic_loss),
            f(&self.policy_loss),
            f(&self.temp),
            f(&self.reward_loss)
        )
    }
}

/// Sum of a per-transition reward over a trajectory.
pub fn rollout_return(
    trajectory: &crate::env::Trajectory,
    mut reward: impl FnMut(&crate::env::Transition) -> crate::error::Result<f64>,
) -> crate::error::Result<f64> {
    let mut total = 0.0;
    for tr in &trajectory.transitions {
        total += reward(tr)?;
    }
    Ok(total)
}
