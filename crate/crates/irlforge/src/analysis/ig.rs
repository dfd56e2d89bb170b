//! Integrated gradients with the completeness residual tracked explicitly.

use serde::{Deserialize, Serialize};

use super::vdn::VdnModel;
use crate::error::{Error, Result};

/// Scalar function with an analytic gradient.
pub trait DiffScalar {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl DiffScalar for VdnModel {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.predict(&super::FeatureVector { values: x.to_vec() })
    }

    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.input_gradient(x)
    }
}

/// Per-feature attributions for one input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub attributions: Vec<f64>,
    /// |Σ attributions − (f(x) − f(baseline))|.
    pub residual: f64,
    pub baseline_id: String,
    pub step_index: Option<usize>,
}

/// Right-Riemann integrated gradients:
/// attribution_i = (x_i − x0_i) · (1/m) Σ_{k=1..m} ∂f/∂x_i (x0 + (k/m)(x − x0)).
pub fn integrated_gradients(
    f: &dyn DiffScalar,
    x: &[f64],
    baseline: &[f64],
    steps: usize,
) -> Result<AttributionRecord> {
    if x.len() != baseline.len() {
        return Err(Error::ShapeMismatch {
            context: "integrated gradients baseline".into(),
            expected: x.len(),
            actual: baseline.len(),
        });
    }
    if steps == 0 {
        return Err(Error::invalid("integrated gradients needs m ≥ 1"));
    }
    let dim = x.len();
    let mut grad_sum = vec![0.0; dim];
    let mut point = vec![0.0; dim];
    for k in 1..=steps {
        let t = k as f64 / steps as f64;
        for i in 0..dim {
            point[i] = baseline[i] + t * (x[i] - baseline[i]);
        }
        let g = f.grad(&point)?;
        for i in 0..dim {
            grad_sum[i] += g[i];
        }
    }
    let attributions: Vec<f64> = (0..dim)
        .map(|i| (x[i] - baseline[i]) * grad_sum[i] / steps as f64)
        .collect();
    let total: f64 = attributions.iter().sum();
    let residual = (total - (f.value(x)? - f.value(baseline)?)).abs();
    Ok(AttributionRecord {
        attributions,
        residual,
        baseline_id: "custom".into(),
        step_index: None,
    })
}
