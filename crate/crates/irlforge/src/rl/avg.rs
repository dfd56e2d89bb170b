//! Average-reward policy evaluation: differential TD with a running gain
//! estimate, over either a tabular critic or an MLP critic with Polyak
//! targets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamState, Gradients, Mlp};

/// Running estimate of the long-run average reward per step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainEstimate {
    pub rho_hat: f64,
    pub alpha_rho: f64,
}

impl GainEstimate {
    pub fn new(alpha_rho: f64) -> Self {
        GainEstimate {
            rho_hat: 0.0,
            alpha_rho,
        }
    }
}

/// One evaluation sample. `done` marks a true fall: the bootstrap term is
/// omitted there (no termination bootstrapping in the average-reward
/// formulation; truncation boundaries are not `done`).
#[derive(Debug, Clone)]
pub struct TdSample<S, A> {
    pub s: S,
    pub a: A,
    pub r: f64,
    pub s_next: S,
    pub done: bool,
}

/// Critic interface for differential TD.
pub trait DiffCritic<S, A> {
    fn q(&self, s: &S, a: &A) -> f64;
    /// Bootstrap-side value (target copy where one exists).
    fn q_target(&self, s: &S, a: &A) -> f64;
    /// One gradient step decreasing Σ δ² given per-sample TD errors.
    fn apply(&mut self, batch: &[TdSample<S, A>], deltas: &[f64]) -> Result<()>;
    /// Polyak-average the online parameters into the target copy.
    fn sync_target(&mut self);
}

#[derive(Debug, Clone)]
pub struct TdStats {
    pub mean_delta: f64,
    pub mean_abs_delta: f64,
}

/// δ = r − ρ̂ + Q̄(s', a') − Q(s, a); critic stepped on δ²; ρ̂ stepped by the
/// mean δ. `next_action` supplies a' ~ π(s').
pub fn differential_td_update<S, A, C: DiffCritic<S, A>>(
    critic: &mut C,
    gain: &mut GainEstimate,
    batch: &[TdSample<S, A>],
    mut next_action: impl FnMut(&S) -> A,
) -> Result<TdStats> {
    if batch.is_empty() {
        return Err(Error::invalid("differential TD needs a nonempty batch"));
    }
    let mut deltas = Vec::with_capacity(batch.len());
    for item in batch {
        let bootstrap = if item.done {
            0.0
        } else {
            let a_next = next_action(&item.s_next);
            critic.q_target(&item.s_next, &a_next)
        };
        let delta = item.r - gain.rho_hat + bootstrap - critic.q(&item.s, &item.a);
        if !delta.is_finite() {
            return Err(Error::NonFinite("TD error".into()));
        }
        deltas.push(delta);
    }
    critic.apply(batch, &deltas)?;
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    gain.rho_hat += gain.alpha_rho * mean;
    critic.sync_target();
    Ok(TdStats {
        mean_delta: mean,
        mean_abs_delta: deltas.iter().map(|d| d.abs()).sum::<f64>() / deltas.len() as f64,
    })
}

/// Tabular differential critic: Q[s][a] table, no separate target.
#[derive(Debug, Clone)]
pub struct TabularCritic {
    pub q: Vec<Vec<f64>>,
    pub lr: f64,
}

impl TabularCritic {
    pub fn new(n_states: usize, n_actions: usize, lr: f64) -> Self {
        TabularCritic {
            q: vec![vec![0.0; n_actions]; n_states],
            lr,
        }
    }
}

impl DiffCritic<usize, usize> for TabularCritic {
    fn q(&self, s: &usize, a: &usize) -> f64 {
        self.q[*s][*a]
    }

    fn q_target(&self, s: &usize, a: &usize) -> f64 {
        self.q[*s][*a]
    }

    fn apply(&mut self, batch: &[TdSample<usize, usize>], deltas: &[f64]) -> Result<()> {
        for (item, delta) in batch.iter().zip(deltas) {
            self.q[item.s][item.a] += self.lr * delta;
        }
        Ok(())
    }

    fn sync_target(&mut self) {
    }
}

/// MLP differential critic Q(s, a) with a Polyak-averaged target copy.
#[derive(Debug, Clone)]
pub struct MlpCritic {
    pub net: Mlp,
    pub target: Mlp,
    pub adam: AdamState,
    pub polyak: f64,
}

impl MlpCritic {
    pub fn new(net: Mlp, lr: f64, polyak: f64) -> Self {
        let adam = AdamState::new(net.param_count(), lr);
        MlpCritic {
            target: net.clone(),
            net,
            adam,
            polyak,
        }
    }

    fn input(s: &[f64], a: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(s.len() + a.len());
        v.extend_from_slice(s);
        v.extend_from_slice(a);
        v
    }
}

impl DiffCritic<Vec<f64>, Vec<f64>> for MlpCritic {
    fn q(&self, s: &Vec<f64>, a: &Vec<f64>) -> f64 {
        self.net.forward(&Self::input(s, a)).expect("critic shape")[0]
    }

    fn q_target(&self, s: &Vec<f64>, a: &Vec<f64>) -> f64 {
        self.target.forward(&Self::input(s, a)).expect("critic shape")[0]
    }

    fn apply(&mut self, batch: &[TdSample<Vec<f64>, Vec<f64>>], deltas: &[f64]) -> Result<()> {
        let mut grads = Gradients::zeros_like(&self.net);
        let scale = 1.0 / batch.len() as f64;
        for (item, &delta) in batch.iter().zip(deltas) {
            let cache = self.net.forward_cached(&Self::input(&item.s, &item.a))?;
            // d(δ²)/dQ = −2δ (bootstrap side held fixed: semi-gradient).
            self.net
                .backward_acc(&cache, &[-2.0 * delta * scale], &mut grads)?;
        }
        grads.check_finite()?;
        self.adam.step(self.net.param_grad_pairs(&grads))?;
        Ok(())
    }

    fn sync_target(&mut self) {
        let net = self.net.clone();
        self.target.polyak_from(&net, self.polyak);
    }
}
