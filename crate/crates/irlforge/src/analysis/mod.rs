//! Interpretation of learned rewards: locomotion feature extraction, a
//! monotone surrogate fitted by regression, and integrated-gradients
//! attribution per feature and per timestep.

pub mod ig;
pub mod timeline;
pub mod vdn;

pub use ig::{integrated_gradients, AttributionRecord, DiffScalar};
pub use timeline::{importance_timeline, rank_features, TimelineRow};
pub use vdn::{vdn_fit, VdnFitReport, VdnModel};

use serde::{Deserialize, Serialize};

use crate::env::{idx, Transition, ACTION_DIM, STATE_DIM};
use crate::error::{Error, Result};

pub const FEATURE_DIM: usize = STATE_DIM + ACTION_DIM + 10;

/// Canonical feature names, in timeline-column order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "s_x",
    "s_z",
    "s_vx",
    "s_vz",
    "s_pitch",
    "s_pitch_rate",
    "s_leg_angle",
    "s_leg_len",
    "s_contact",
    "a_leg",
    "a_thrust",
    "action_norm",
    "leg_pitch",
    "body_height",
    "foot_force",
    "com_vx",
    "com_vz",
    "com_to_foot",
    "pitch",
    "pitch_rate",
    "clock",
];

/// Named scalar features describing one step of locomotion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != FEATURE_DIM {
            return Err(Error::ShapeMismatch {
                context: "feature vector".into(),
                expected: FEATURE_DIM,
                actual: self.values.len(),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector".into()));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values[i])
    }
}

/// Deterministic mapping from a transition to the feature vector. The
/// com-to-foot offset is 0 in flight by convention (no contact point).
pub fn feature_extract(t: &Transition) -> FeatureVector {
    let x = &t.s.x;
    let a = &t.a;
    let action_norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let in_contact = x[idx::CONTACT] == 1.0;
    let com_to_foot = if in_contact {
        -x[idx::LEG_LEN] * x[idx::LEG_ANGLE].sin()
    } else {
        0.0
    };
    let mut values = Vec::with_capacity(FEATURE_DIM);
    values.extend_from_slice(x);
    values.extend_from_slice(a);
    values.push(action_norm);
    values.push(x[idx::LEG_ANGLE]);
    values.push(x[idx::Z]);
    values.push(t.info.grf);
    values.push(x[idx::VX]);
    values.push(x[idx::VZ]);
    values.push(com_to_foot);
    values.push(x[idx::PITCH]);
    values.push(x[idx::PITCH_RATE]);
    values.push(t.s.clock);
    FeatureVector { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ObservedState, StepInfo};

    fn transition(x: Vec<f64>, a: Vec<f64>, grf: f64) -> Transition {
        let s = ObservedState {
            xhat: x.clone(),
            x,
            clock: 0.25,
        };
        Transition {
            s: s.clone(),
            a,
            s_next: s,
            done: false,
            info: StepInfo {
                grf,
                tau: 0.0,
                terrain_h: 0.0,
                x_abs: 0.0,
            },
        }
    }

    #[test]
    fn names_match_dimension() {
        assert_eq!(FEATURE_NAMES.len(), FEATURE_DIM);
    }

    #[test]
    fn zero_state_zero_action() {
        let mut x = vec![0.0; STATE_DIM];
        x[idx::LEG_LEN] = 1.0;
        let f = feature_extract(&transition(x, vec![0.0, 0.0], 0.0));
        assert_eq!(f.get("action_norm"), Some(0.0));
        assert_eq!(f.get("com_vx"), Some(0.0));
        assert_eq!(f.get("s_leg_len"), Some(1.0));
        assert_eq!(f.get("body_height"), Some(0.0));
        f.validate().unwrap();
    }

    #[test]
    fn action_norm_is_euclidean() {
        let mut x = vec![0.0; STATE_DIM];
        x[idx::LEG_LEN] = 1.0;
        let f = feature_extract(&transition(x, vec![3.0, 4.0], 0.0));
        assert_eq!(f.get("action_norm"), Some(5.0));
    }

    #[test]
    fn flight_means_zero_force_and_offset() {
        let mut x = vec![0.0; STATE_DIM];
        x[idx::LEG_LEN] = 1.0;
        x[idx::LEG_ANGLE] = 0.4;
        let f = feature_extract(&transition(x, vec![0.1, 0.0], 0.0));
        assert_eq!(f.get("foot_force"), Some(0.0));
        assert_eq!(f.get("com_to_foot"), Some(0.0));
    }

    #[test]
    fn stance_offset_from_geometry() {
        let mut x = vec![0.0; STATE_DIM];
        x[idx::LEG_LEN] = 0.9;
        x[idx::LEG_ANGLE] = 0.3;
        x[idx::CONTACT] = 1.0;
        let f = feature_extract(&transition(x, vec![0.0, 0.0], 55.0));
        assert!((f.get("com_to_foot").unwrap() + 0.9 * 0.3f64.sin()).abs() < 1e-12);
        assert_eq!(f.get("foot_force"), Some(55.0));
    }
}
