//! Reward learning, interpretation, and adaptation for a desk-scale planar hopper.
//!
//! The toolkit covers a full pipeline:
//!
//! 1. **Environments** ([`env`]) — a tabular gridworld with exact average-reward
//!    oracles and a deterministic planar spring hopper with scripted reference
//!    gaits and procedurally generated terrains.
//! 2. **Networks** ([`nn`]) — dense MLPs with manual backpropagation, Adam, and a
//!    monotone variant whose effective weights are softplus-constrained positive.
//! 3. **RL core** ([`rl`]) — replay buffer, discounted soft actor-critic,
//!    average-reward differential TD evaluation, KL mirror-descent policy
//!    improvement, and exact tabular gain/bias solvers.
//! 4. **IRL** ([`irl`]) — two-stage pipeline: imitation training against
//!    reference motions, demonstration generation, and an inverse policy
//!    mirror-descent loop that recovers a free-form reward from demonstrations.
//! 5. **Reward analysis** ([`analysis`]) — locomotion feature extraction, a
//!    monotone surrogate fitted by MSE regression, and integrated-gradients
//!    attributions per feature and per timestep.
//! 6. **Reward adaptation** ([`adapt`]) — reward composition (handcrafted +
//!    learned + regularizer), from-scratch training on rough terrains,
//!    comparison metrics, and zero-shot evaluation.
//! 7. **IO** ([`io`]) — sectioned config files, run manifests, checkpoints,
//!    CSV/SVG emission, and the command-line surface ([`cli`]).
//!
//! Every operation is a pure function of its inputs and an explicit seed; the
//! `examples/` directory holds one runnable example per capability.

pub mod adapt;
pub mod analysis;
pub mod cli;
pub mod env;
pub mod error;
pub mod io;
pub mod irl;
pub mod nn;
pub mod rl;
pub mod rng;
pub mod testkit;

pub use error::{Error, Result};
