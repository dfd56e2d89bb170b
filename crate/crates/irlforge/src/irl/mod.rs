//! Two-stage reward-learning pipeline: stage-1 imitation training against
//! reference motions under r_I, demonstration generation, and the stage-2
//! IPMD loop recovering a free-form reward r_θ and a policy from
//! demonstrations.

pub mod demos;
pub mod imitation;
pub mod ipmd;
pub mod reward_net;

pub use demos::{generate_demonstrations, DemoMeta, DemoSet};
pub use imitation::{imitation_reward_ri, train_expert, ExpertArtifacts, RiConfig, Stage1Config};
pub use ipmd::{
    ipmd_train, ipmd_train_tabular, reward_table, IpmdArtifacts, IpmdConfig, TabularIpmdArtifacts,
    TabularIpmdConfig,
};
pub use reward_net::{reward_gradient_step, RewardNet};
