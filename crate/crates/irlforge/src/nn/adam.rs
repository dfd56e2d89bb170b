//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Moment accumulators for one flat parameter ordering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(param_count: usize, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn param_count(&self) -> usize {
        self.m.len()
    }

    /// One update over (parameter, gradient) pairs in the state's flattening
    /// order. The caller guarantees the ordering is stable across calls.
    pub fn step<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: Iterator<Item = (&'a mut f64, f64)>,
    {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        let mut n = 0;
        for (i, (p, g)) in pairs.enumerate() {
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / b1t;
            let v_hat = *v / b2t;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            n = i + 1;
        }
        debug_assert_eq!(n, self.m.len(), "parameter count changed under Adam");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut state = AdamState::new(3, 0.1);
        let mut params = [1.0, -2.0, 0.5];
        let before = params;
        state
            .step(params.iter_mut().zip([0.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_is_lr_sized() {
        // Bias correction makes the first step ≈ lr for g = 1.
        let mut state = AdamState::new(1, 0.1);
        let mut p = [0.0];
        state.step(p.iter_mut().zip([1.0])).unwrap();
        assert!((p[0] + 0.1).abs() < 1e-8, "got {}", p[0]);
    }

    #[test]
    fn repeated_identical_gradients_approach_lr_sign() {
        let mut state = AdamState::new(1, 0.01);
        let mut p = [0.0];
        let mut prev = p[0];
        let mut last_step = 0.0;
        for _ in 0..1000 {
            state.step(p.iter_mut().zip([2.5])).unwrap();
            last_step = p[0] - prev;
            prev = p[0];
        }
        // |Δ| → lr, direction −sign(g).
        assert!((last_step + 0.01).abs() < 1e-4, "step {last_step}");
    }
}
