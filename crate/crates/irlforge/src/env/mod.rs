//! In-repo environments: a slippery gridworld with exact oracles and a
//! deterministic planar spring hopper with reference gaits and procedural
//! terrains.
//!
//! Environments are immutable after construction and safe to share across
//! workers; each rollout owns its state and RNG stream.

pub mod gait;
pub mod gridworld;
pub mod hopper;
pub mod rollout;
pub mod terrain;

pub use gait::{scripted_gait, GaitParams, RefEntry, ReferenceMotion};
pub use gridworld::{gridworld_build, gridworld_build_with, TabularMdp};
pub use hopper::{Hopper, HopperParams, SimState};
pub use rollout::{rollout, rollout_many, Actor, ZeroActor};
pub use terrain::{terrain_generate, TerrainKind, TerrainProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of proprioceptive components in the hopper state vector.
pub const STATE_DIM: usize = 9;
/// Action layout: leg-angle target correction (rad), thrust correction (N).
pub const ACTION_DIM: usize = 2;

/// Indices into the proprioceptive vector.
pub mod idx {
    /// Body x, relative to the reference-cycle anchor.
    pub const X: usize = 0;
    pub const Z: usize = 1;
    pub const VX: usize = 2;
    pub const VZ: usize = 3;
    pub const PITCH: usize = 4;
    pub const PITCH_RATE: usize = 5;
    pub const LEG_ANGLE: usize = 6;
    pub const LEG_LEN: usize = 7;
    pub const CONTACT: usize = 8;
}

pub const STATE_FIELD_NAMES: [&str; STATE_DIM] = [
    "x", "z", "vx", "vz", "pitch", "pitch_rate", "leg_angle", "leg_len", "contact",
];

/// Robot proprioceptive state paired with the reference-motion snapshot at
/// the same gait phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedState {
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    /// Gait phase in [0, 1).
    pub clock: f64,
}

impl ObservedState {
    pub fn validate(&self, leg_rest_len: f64) -> Result<()> {
        if self.x.len() != self.xhat.len() {
            return Err(Error::ShapeMismatch {
                context: "observed state: x vs reference snapshot".into(),
                expected: self.x.len(),
                actual: self.xhat.len(),
            });
        }
        for (i, v) in self.x.iter().enumerate() {
            if !v.is_finite() {
                let name = STATE_FIELD_NAMES.get(i).copied().unwrap_or("state");
                return Err(Error::NonFinite(format!("state field '{name}'")));
            }
        }
        let ell = self.x[idx::LEG_LEN];
        if !(ell > 0.0 && ell <= leg_rest_len + 1e-9) {
            return Err(Error::invalid(format!(
                "leg length {ell} outside (0, {leg_rest_len}]"
            )));
        }
        let c = self.x[idx::CONTACT];
        if c != 0.0 && c != 1.0 {
            return Err(Error::invalid(format!("contact flag {c} not in {{0,1}}")));
        }
        if !(0.0..1.0).contains(&self.clock) {
            return Err(Error::invalid(format!("clock {} outside [0,1)", self.clock)));
        }
        Ok(())
    }

    /// Flattened network observation: x ++ x̂ ++ clock, or x ++ clock when the
    /// reference snapshot is excluded (ablation mode).
    pub fn obs_vec(&self, include_reference: bool) -> Vec<f64> {
        let mut v = self.x.clone();
        if include_reference {
            v.extend_from_slice(&self.xhat);
        }
        v.push(self.clock);
        v
    }
}

/// Auxiliary scalars recorded per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Ground reaction force magnitude (N); 0 in flight.
    pub grf: f64,
    /// Hip PD torque (N·m).
    pub tau: f64,
    /// Terrain height under the foot (m).
    pub terrain_h: f64,
    /// Absolute body x (m), for travel-distance metrics.
    pub x_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: ObservedState,
    pub a: Vec<f64>,
    pub s_next: ObservedState,
    pub done: bool,
    pub info: StepInfo,
}

/// Ordered transitions from one rollout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub transitions: Vec<Transition>,
    pub seed: u64,
    pub terrain_id: String,
}

/// JSON-lines wire format for one transition.
#[derive(Serialize, Deserialize)]
struct TransitionLine {
    s: Vec<f64>,
    a: Vec<f64>,
    s_next: Vec<f64>,
    done: bool,
    #[serde(rename = "F")]
    f: f64,
    tau: f64,
    clock: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Verifies s_next of step t equals s of step t+1.
    pub fn check_chain(&self) -> Result<()> {
        for (t, pair) in self.transitions.windows(2).enumerate() {
            if pair[0].s_next != pair[1].s {
                return Err(Error::invalid(format!(
                    "transition chain broken between steps {t} and {}",
                    t + 1
                )));
            }
        }
        Ok(())
    }

    /// One transition per line:
    /// `{"s":[…],"a":[…],"s_next":[…],"done":…,"F":…,"tau":…,"clock":…}`,
    /// where the state arrays are x ++ x̂ at full precision.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for t in &self.transitions {
            let mut s = t.s.x.clone();
            s.extend_from_slice(&t.s.xhat);
            let mut s_next = t.s_next.x.clone();
            s_next.extend_from_slice(&t.s_next.xhat);
            let line = TransitionLine {
                s,
                a: t.a.clone(),
                s_next,
                done: t.done,
                f: t.info.grf,
                tau: t.info.tau,
                clock: t.s.clock,
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses the JSON-lines form. Step info beyond (F, tau) and the rollout
    /// metadata are not part of the wire format and come back zeroed.
    pub fn from_jsonl(text: &str) -> Result<Trajectory> {
        let mut lines: Vec<TransitionLine> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: TransitionLine = serde_json::from_str(raw)
                .map_err(|e| Error::Artifact(format!("trajectory line {}: {e}", i + 1)))?;
            lines.push(line);
        }
        let split = |v: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            if v.len() % 2 != 0 {
                return Err(Error::Artifact(format!(
                    "state vector length {} is not even (x ++ x̂)",
                    v.len()
                )));
            }
            let half = v.len() / 2;
            Ok((v[..half].to_vec(), v[half..].to_vec()))
        };
        let next_clocks: Vec<f64> = lines
            .iter()
            .skip(1)
            .map(|l| l.clock)
            .chain(lines.last().map(|l| l.clock))
            .collect();
        let mut transitions = Vec::with_capacity(lines.len());
        for (line, next_clock) in lines.into_iter().zip(next_clocks) {
            let (x, xhat) = split(&line.s)?;
            let (xn, xhatn) = split(&line.s_next)?;
            transitions.push(Transition {
                s: ObservedState {
                    x,
                    xhat,
                    clock: line.clock,
                },
                a: line.a,
                s_next: ObservedState {
                    x: xn,
                    xhat: xhatn,
                    clock: next_clock,
                },
                done: line.done,
                info: StepInfo {
                    grf: line.f,
                    tau: line.tau,
                    terrain_h: 0.0,
                    x_abs: 0.0,
                },
            });
        }
        Ok(Trajectory {
            transitions,
            seed: 0,
            terrain_id: String::new(),
        })
    }
}
