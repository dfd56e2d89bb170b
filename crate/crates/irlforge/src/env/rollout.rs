//! Trajectory collection, single-threaded and fanned out.

use rand_chacha::ChaCha8Rng;

use super::hopper::Hopper;
use super::{Trajectory, Transition};
use crate::error::Result;
use crate::rng::stream;

/// Anything that maps observations to action corrections. Deterministic mode
/// must ignore the RNG.
pub trait Actor: Sync {
    fn act(&self, obs: &[f64], rng: &mut ChaCha8Rng, deterministic: bool) -> Vec<f64>;
}

/// Always outputs zero corrections (pure reference replay).
pub struct ZeroActor(pub usize);

impl Actor for ZeroActor {
    fn act(&self, _obs: &[f64], _rng: &mut ChaCha8Rng, _deterministic: bool) -> Vec<f64> {
        vec![0.0; self.0]
    }
}

/// Rolls one episode of at most `horizon` steps, stopping early on `done`.
/// Fully deterministic given (actor parameters, seed).
pub fn rollout(
    env: &Hopper,
    actor: &dyn Actor,
    horizon: usize,
    seed: u64,
    deterministic: bool,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(crate::error::Error::invalid("rollout horizon must be ≥ 1"));
    }
    let mut rng = stream(seed, &["rollout-actions"], 0);
    let mut sim = env.reset(seed);
    let mut transitions = Vec::with_capacity(horizon.min(4096));
    for _ in 0..horizon {
        let s = env.observe(&sim);
        let obs = s.obs_vec(env.observe_reference);
        let a = actor.act(&obs, &mut rng, deterministic);
        let (next, info, done) = env.step_sim(&sim, &a)?;
        let s_next = env.observe(&next);
        transitions.push(Transition {
            s,
            a,
            s_next,
            done,
            info,
        });
        if done {
            break;
        }
        sim = next;
    }
    Ok(Trajectory {
        transitions,
        seed,
        terrain_id: env.terrain.id(),
    })
}

/// Runs `count` independent rollouts across up to `workers` threads. Rollout
/// `i` uses the stream derived from (master_seed, i), so results are
/// identical for any worker count; outputs come back in index order.
pub fn rollout_many(
    env: &Hopper,
    actor: &dyn Actor,
    horizon: usize,
    master_seed: u64,
    count: usize,
    workers: usize,
    deterministic: bool,
) -> Result<Vec<Trajectory>> {
    let workers = workers.max(1).min(count.max(1));
    let seeds: Vec<u64> = (0..count)
        .map(|i| crate::rng::derive_seed(master_seed, &["eval-rollout"], i as u64))
        .collect();
    if workers == 1 {
        return seeds
            .iter()
            .map(|&s| rollout(env, actor, horizon, s, deterministic))
            .collect();
    }
    let mut results: Vec<Option<Result<Trajectory>>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(workers);
    std::thread::scope(|scope| {
        let mut rest: &mut [Option<Result<Trajectory>>] = &mut results;
        let mut start = 0usize;
        while !rest.is_empty() {
            let take = chunk.min(rest.len());
            let (head, tail) = rest.split_at_mut(take);
            rest = tail;
            let seeds = &seeds;
            let begin = start;
            scope.spawn(move || {
                for (j, slot) in head.iter_mut().enumerate() {
                    *slot = Some(rollout(env, actor, horizon, seeds[begin + j], deterministic));
                }
            });
            start += take;
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every index filled"))
        .collect()
}
