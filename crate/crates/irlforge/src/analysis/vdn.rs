//! Monotone surrogate of the learned reward.
//!
//! Each feature gets a fixed orientation sign (the correlation sign between
//! feature and target on the training set) so reward-decreasing quantities
//! are representable, then an affine normalization, then a monotone MLP.
//! Degenerate (zero-variance) features normalize to a constant 0 and are
//! reported as excluded.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{FeatureVector, FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::nn::{AdamState, Gradients, MonotoneMlp};
use crate::rng::stream;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VdnModel {
    pub net: MonotoneMlp,
    /// Orientation sign per feature, applied before normalization.
    pub signs: Vec<f64>,
    /// Mean/scale of the signed feature values.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Target standardization: predictions are y_mean + y_scale·net(z).
    pub y_mean: f64,
    pub y_scale: f64,
    /// Features excluded for zero variance.
    pub excluded: Vec<String>,
}

impl VdnModel {
    pub fn feature_dim(&self) -> usize {
        self.signs.len()
    }

    fn normalize(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| (self.signs[i] * x[i] - self.means[i]) / self.scales[i])
            .collect()
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        if features.values.len() != self.feature_dim() {
            return Err(Error::ShapeMismatch {
                context: "vdn predict".into(),
                expected: self.feature_dim(),
                actual: features.values.len(),
            });
        }
        Ok(self.y_mean + self.y_scale * self.net.forward(&self.normalize(&features.values))?[0])
    }

    /// Gradient of the output with respect to the raw feature values.
    pub fn input_gradient(&self, raw: &[f64]) -> Result<Vec<f64>> {
        let z = self.normalize(raw);
        let cache = self.net.forward_cached(&z)?;
        let (_, dz) = self.net.backward(&cache, &[1.0])?;
        Ok(dz
            .iter()
            .enumerate()
            .map(|(i, g)| self.y_scale * g * self.signs[i] / self.scales[i])
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct VdnFitReport {
    /// Training MSE per epoch.
    pub mse_curve: Vec<f64>,
    pub excluded: Vec<String>,
}

/// Fits the monotone surrogate by Adam on MSE against learned-reward targets.
pub fn vdn_fit(
    dataset: &[(FeatureVector, f64)],
    hidden: &[usize],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<(VdnModel, VdnFitReport)> {
    if dataset.len() < 100 {
        return Err(Error::invalid(format!(
            "surrogate fit needs at least 100 pairs, got {}",
            dataset.len()
        )));
    }
    let dim = dataset[0].0.values.len();
    let n = dataset.len() as f64;
    // Orientation signs from feature/target correlation.
    let y_mean: f64 = dataset.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut signs = vec![1.0; dim];
    let mut means = vec![0.0; dim];
    let mut scales = vec![1.0; dim];
    let mut excluded = Vec::new();
    for i in 0..dim {
        let xs: Vec<f64> = dataset.iter().map(|(f, _)| f.values[i]).collect();
        let x_mean = xs.iter().sum::<f64>() / n;
        let cov: f64 = dataset
            .iter()
            .map(|(f, y)| (f.values[i] - x_mean) * (y - y_mean))
            .sum::<f64>();
        if cov < 0.0 {
            signs[i] = -1.0;
        }
        let signed_mean = signs[i] * x_mean;
        let var: f64 = xs
            .iter()
            .map(|x| (signs[i] * x - signed_mean).powi(2))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        if std < 1e-12 {
            excluded.push(
                FEATURE_NAMES
                    .get(i)
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| format!("feature_{i}")),
            );
            means[i] = signed_mean;
            scales[i] = 1.0;
        } else {
            means[i] = signed_mean;
            scales[i] = std;
        }
    }

    // Standardize the regression target; a constant target is then exactly
    // the stored mean and the network only fits the residual shape.
    let y_var: f64 = dataset.iter().map(|(_, y)| (y - y_mean).powi(2)).sum::<f64>() / n;
    let y_scale = y_var.sqrt();
    let y_denom = y_scale.max(1e-12);

    let mut rng = stream(seed, &["vdn-fit"], 0);
    let mut sizes = vec![dim];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    let mut net = MonotoneMlp::new(&sizes, &mut rng);
    let mut adam = AdamState::new(net.param_count(), lr);
    let mut model = VdnModel {
        net: net.clone(),
        signs,
        means,
        scales,
        y_mean,
        y_scale,
        excluded: excluded.clone(),
    };

    let normalized: Vec<(Vec<f64>, f64)> = dataset
        .iter()
        .map(|(f, y)| (model.normalize(&f.values), (*y - y_mean) / y_denom))
        .collect();
    let mut order: Vec<usize> = (0..normalized.len()).collect();
    let batch = 64.min(normalized.len());
    let mut mse_curve = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        // Geometric lr decay (one decade over the run) sharpens the final fit.
        adam.lr = lr * 10f64.powf(-(epoch as f64) / epochs.max(1) as f64);
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let mut grads = Gradients::zeros_like(net.raw());
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (z, y) = &normalized[i];
                let cache = net.forward_cached(z)?;
                let pred = cache.output()[0];
                net.backward_acc(&cache, &[2.0 * (pred - y) * scale], &mut grads)?;
            }
            grads.check_finite()?;
            adam.step(net.param_grad_pairs(&grads))?;
            net.refresh();
        }
        let mse: f64 = normalized
            .iter()
            .map(|(z, y)| {
                let p = net.forward(z).map(|o| o[0]).unwrap_or(f64::NAN);
                (p - y) * (p - y)
            })
            .sum::<f64>()
            / normalized.len() as f64;
        // Report in raw target units.
        mse_curve.push(mse * y_scale * y_scale);
    }
    model.net = net;
    Ok((
        model,
        VdnFitReport {
            mse_curve,
            excluded,
        },
    ))
}
