//! Reward composition (handcrafted + learned + regularizer), terrain
//! adaptation experiments, comparison metrics, and zero-shot evaluation.

pub mod experiment;

pub use experiment::{
    adaptation_experiment, zero_shot_eval, AdaptConfig, AdaptOutcome, SeedOutcome,
};

use serde::{Deserialize, Serialize};

use crate::analysis::{feature_extract, FeatureVector, FEATURE_NAMES};
use crate::env::{idx, ReferenceMotion, Trajectory, Transition};
use crate::error::{Error, Result};
use crate::irl::RewardNet;

/// Handcrafted reward r_h = r_f + r_s − r_c: forward velocity, plus a
/// survival bonus while the torso stays upright and clear of the terrain,
/// minus the control cost ‖δa‖₂.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RhConfig {
    pub upright_pitch: f64,
    pub min_clearance: f64,
}

impl Default for RhConfig {
    fn default() -> Self {
        RhConfig {
            upright_pitch: 0.6,
            min_clearance: 0.4,
        }
    }
}

pub fn handcrafted_reward_rh(
    state: &crate::env::ObservedState,
    action: &[f64],
    terrain_height: f64,
    cfg: &RhConfig,
) -> f64 {
    let r_f = state.x[idx::VX];
    let upright = state.x[idx::PITCH].abs() <= cfg.upright_pitch
        && state.x[idx::Z] > terrain_height + cfg.min_clearance;
    let r_s = if upright { 1.0 } else { 0.0 };
    let r_c = action.iter().map(|a| a * a).sum::<f64>().sqrt();
    r_f + r_s - r_c
}

/// Per-phase feature targets from the flat-ground reference gait, for r_v.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RvReference {
    /// period × feature table of reference feature values.
    pub per_phase: Vec<Vec<f64>>,
}

impl RvReference {
    /// Builds the table by replaying the reference motion open loop on flat
    /// ground for one period.
    pub fn from_reference(
        params: &crate::env::HopperParams,
        reference: &ReferenceMotion,
    ) -> Result<Self> {
        let flat = crate::env::TerrainProfile::flat(1_000.0, 1.0);
        let env = crate::env::Hopper::new(params.clone(), flat, reference.clone());
        let t = crate::env::rollout(
            &env,
            &crate::env::ZeroActor(crate::env::ACTION_DIM),
            reference.period(),
            0,
            true,
        )?;
        if t.len() < reference.period() {
            return Err(Error::invalid(
                "reference replay fell before completing one period",
            ));
        }
        Ok(RvReference {
            per_phase: t
                .transitions
                .iter()
                .map(|tr| feature_extract(tr).values)
                .collect(),
        })
    }

    pub fn target(&self, phase: usize, feature_index: usize) -> f64 {
        self.per_phase[phase % self.per_phase.len()][feature_index]
    }
}

/// Regularizer r_v = Σ_{i ∈ set} exp(−|f_i − f_i^ref(phase)|): tracking of
/// the top-attributed features against their flat-ground reference values.
pub fn regularizer_reward_rv(
    features: &FeatureVector,
    feature_indices: &[usize],
    reference: &RvReference,
    phase: usize,
) -> Result<f64> {
    let mut total = 0.0;
    for &i in feature_indices {
        if i >= features.values.len() {
            return Err(Error::invalid(format!(
                "regularizer feature index {i} outside the canonical feature set"
            )));
        }
        let err = (features.values[i] - reference.target(phase, i)).abs();
        total += (-err).exp();
    }
    Ok(total)
}

/// Resolves canonical feature names to indices.
pub fn feature_indices(names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            FEATURE_NAMES
                .iter()
                .position(|&f| f == n.as_str())
                .ok_or_else(|| Error::invalid(format!("unknown feature '{n}' in regularizer set")))
        })
        .collect()
}

/// Weighted component list over {handcrafted, learned, regularizer}.
pub struct RewardSpec {
    pub handcrafted: Option<(f64, RhConfig)>,
    pub learned: Option<(f64, RewardNet)>,
    pub regularizer: Option<(f64, Vec<usize>, RvReference)>,
    /// Observation layout flag the learned net was trained with.
    pub observe_reference: bool,
}

impl RewardSpec {
    pub fn handcrafted_only() -> Self {
        RewardSpec {
            handcrafted: Some((1.0, RhConfig::default())),
            learned: None,
            regularizer: None,
            observe_reference: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.handcrafted.is_none() && self.learned.is_none() && self.regularizer.is_none() {
            return Err(Error::invalid("reward spec needs at least one component"));
        }
        Ok(())
    }

    /// Weighted sum of component evaluations on one transition.
    pub fn compose(&self, t: &Transition, period: usize) -> Result<f64> {
        self.validate()?;
        let mut total = 0.0;
        if let Some((w, cfg)) = &self.handcrafted {
            total += w * handcrafted_reward_rh(&t.s_next, &t.a, t.info.terrain_h, cfg);
        }
        if let Some((w, net)) = &self.learned {
            let obs = t.s.obs_vec(self.observe_reference);
            let r = net
                .reward(&obs, &t.a)
                .map_err(|e| Error::invalid(format!("learned reward component: {e}")))?;
            total += w * r;
        }
        if let Some((w, indices, reference)) = &self.regularizer {
            let features = feature_extract(t);
            let phase = (t.s.clock * period as f64).round() as usize % period.max(1);
            let r = regularizer_reward_rv(&features, indices, reference, phase)
                .map_err(|e| Error::invalid(format!("regularizer component: {e}")))?;
            total += w * r;
        }
        Ok(total)
    }
}

/// Evaluation metrics of one trajectory, computed purely from observations
/// so recomputation from an exported wire-format trajectory is bit-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptMetrics {
    pub avg_sagittal_velocity: f64,
    pub travel_distance: f64,
    /// Standard deviation of the vertical-velocity tracking error (the
    /// planar analog of lateral drift).
    pub vvel_std: f64,
    /// Share of expected-stance steps with zero ground reaction force.
    pub flight_fraction: f64,
    pub episode_length: usize,
}

impl AdaptMetrics {
    pub fn from_trajectory(t: &Trajectory, reference: &ReferenceMotion) -> Result<AdaptMetrics> {
        if t.is_empty() {
            return Err(Error::invalid("metrics need a nonempty trajectory"));
        }
        let period = reference.period();
        let n = t.len() as f64;
        let mean_vx = t
            .transitions
            .iter()
            .map(|tr| tr.s.x[idx::VX])
            .sum::<f64>()
            / n;
        // Absolute positions reconstructed from the anchored observation and
        // the reference displacement per cycle.
        let mut wraps = 0u64;
        let mut prev_clock = t.transitions[0].s.clock;
        let x0 = t.transitions[0].s.x[idx::X];
        let mut x_final = x0;
        let mut errs = Vec::with_capacity(t.len());
        let mut stance_steps = 0usize;
        let mut stance_airborne = 0usize;
        for tr in &t.transitions {
            if tr.s.clock < prev_clock {
                wraps += 1;
            }
            prev_clock = tr.s.clock;
            x_final = tr.s.x[idx::X] + reference.displacement * wraps as f64;
            errs.push(tr.s.x[idx::VZ] - tr.s.xhat[idx::VZ]);
            let phase = (tr.s.clock * period as f64).round() as usize % period;
            if reference.entry(phase as u64).state[idx::CONTACT] == 1.0 {
                stance_steps += 1;
                if tr.info.grf == 0.0 {
                    stance_airborne += 1;
                }
            }
        }
        let mean_err = errs.iter().sum::<f64>() / n;
        let vvel_std =
            (errs.iter().map(|e| (e - mean_err).powi(2)).sum::<f64>() / n).sqrt();
        Ok(AdaptMetrics {
            avg_sagittal_velocity: mean_vx,
            travel_distance: x_final - x0,
            vvel_std,
            flight_fraction: if stance_steps == 0 {
                0.0
            } else {
                stance_airborne as f64 / stance_steps as f64
            },
            episode_length: t.len(),
        })
    }

    pub const CSV_HEADER: &'static str =
        "seed,avg_sagittal_velocity,travel_distance,vvel_std,flight_fraction,episode_length";

    pub fn to_csv_row(&self, seed: u64) -> String {
        format!(
            "{},{:?},{:?},{:?},{:?},{}",
            seed,
            self.avg_sagittal_velocity,
            self.travel_distance,
            self.vvel_std,
            self.flight_fraction,
            self.episode_length
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ObservedState, StepInfo, STATE_DIM};

    fn state(vx: f64, pitch: f64, z: f64) -> crate::env::ObservedState {
        let mut x = vec![0.0; STATE_DIM];
        x[idx::VX] = vx;
        x[idx::PITCH] = pitch;
        x[idx::Z] = z;
        x[idx::LEG_LEN] = 1.0;
        ObservedState {
            x,
            xhat: vec![0.0; STATE_DIM],
            clock: 0.0,
        }
    }

    #[test]
    fn upright_stationary_zero_action_scores_one() {
        let r = handcrafted_reward_rh(&state(0.0, 0.0, 1.0), &[0.0, 0.0], 0.0, &RhConfig::default());
        assert_eq!(r, 1.0);
    }

    #[test]
    fn forward_motion_and_cost_arithmetic() {
        let r = handcrafted_reward_rh(&state(0.5, 0.0, 1.0), &[0.1, 0.0], 0.0, &RhConfig::default());
        assert!((r - 1.4).abs() < 1e-12);
    }

    #[test]
    fn fallen_with_large_action_is_minus_five() {
        let r = handcrafted_reward_rh(&state(0.0, 1.0, 0.2), &[3.0, 4.0], 0.0, &RhConfig::default());
        assert_eq!(r, -5.0);
    }

    #[test]
    fn rh_invariant_to_uniform_terrain_offset() {
        let cfg = RhConfig::default();
        let r1 = handcrafted_reward_rh(&state(0.3, 0.0, 1.0), &[0.0, 0.0], 0.0, &cfg);
        let r2 = handcrafted_reward_rh(&state(0.3, 0.0, 3.5), &[0.0, 0.0], 2.5, &cfg);
        assert_eq!(r1, r2);
    }

    #[test]
    fn regularizer_tracks_reference_features() {
        let reference = RvReference {
            per_phase: vec![vec![0.0; crate::analysis::FEATURE_DIM]; 4],
        };
        let perfect = FeatureVector {
            values: vec![0.0; crate::analysis::FEATURE_DIM],
        };
        let r = regularizer_reward_rv(&perfect, &[1, 4, 15], &reference, 2).unwrap();
        assert_eq!(r, 3.0);

        let mut off = perfect.clone();
        off.values[4] = 1.0;
        let r = regularizer_reward_rv(&off, &[4], &reference, 0).unwrap();
        assert!((r - (-1.0f64).exp()).abs() < 1e-12);

        off.values[4] = 1e9;
        let r = regularizer_reward_rv(&off, &[4], &reference, 0).unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn compose_matches_components_and_scales_linearly() {
        let t = Transition {
            s: state(0.5, 0.0, 1.0),
            a: vec![0.1, 0.0],
            s_next: state(0.5, 0.0, 1.0),
            done: false,
            info: StepInfo {
                grf: 0.0,
                tau: 0.0,
                terrain_h: 0.0,
                x_abs: 0.0,
            },
        };
        let spec = RewardSpec::handcrafted_only();
        let rh = handcrafted_reward_rh(&t.s_next, &t.a, 0.0, &RhConfig::default());
        assert_eq!(spec.compose(&t, 4).unwrap(), rh);

        let double = RewardSpec {
            handcrafted: Some((2.0, RhConfig::default())),
            learned: None,
            regularizer: None,
            observe_reference: true,
        };
        assert!((double.compose(&t, 4).unwrap() - 2.0 * rh).abs() < 1e-12);
    }

    #[test]
    fn empty_spec_rejected() {
        let spec = RewardSpec {
            handcrafted: None,
            learned: None,
            regularizer: None,
            observe_reference: true,
        };
        assert!(spec.validate().is_err());
    }
}
