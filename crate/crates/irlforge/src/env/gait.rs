//! Reference motions and the Raibert-style scripted gait.
//!
//! The scripted controller substitutes the model-based reference source:
//! touchdown leg angle from forward-speed error, constant stance thrust, and
//! a stance-phase pitch servo realized through the hip PD. Slow per-hop
//! integral trims on touchdown angle and thrust run during roll-in only and
//! freeze once the hopper settles into a period-1 limit cycle, which is then
//! recorded apex-to-apex.

use serde::{Deserialize, Serialize};

use super::hopper::{Hopper, HopperParams, SimState};
use super::terrain::TerrainProfile;
use super::{idx, STATE_DIM};
use crate::error::{Error, Result};

/// One phase entry: reference state snapshot (x̂) and reference action (â).
#[derive(Debug, Clone, PartialEq)]
pub struct RefEntry {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
}

/// Periodic table of (x̂, â) per phase index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMotion {
    entries: Vec<RefEntry>,
    /// Forward displacement of the body over one cycle (m).
    pub displacement: f64,
}

impl ReferenceMotion {
    pub fn new(entries: Vec<RefEntry>, displacement: f64) -> Self {
        assert!(!entries.is_empty(), "reference motion needs entries");
        ReferenceMotion {
            entries,
            displacement,
        }
    }

    /// Constant reference, mostly for tests: every phase holds the same
    /// state/action pair.
    pub fn constant(state: Vec<f64>, action: Vec<f64>, period: usize) -> Self {
        ReferenceMotion {
            entries: vec![RefEntry { state, action }; period],
            displacement: 0.0,
        }
    }

    pub fn period(&self) -> usize {
        self.entries.len()
    }

    /// Periodic lookup: entry(t) = entry(t mod T).
    pub fn entry(&self, t: u64) -> &RefEntry {
        &self.entries[(t % self.entries.len() as u64) as usize]
    }

    /// Cumulative reference displacement before step `t` (whole cycles).
    pub fn anchor(&self, t: u64) -> f64 {
        self.displacement * (t / self.entries.len() as u64) as f64
    }

    pub fn entries(&self) -> &[RefEntry] {
        &self.entries
    }
}

/// Wire format: {"period": T, "displacement": D, "entries": [[x̂ ++ â], …]}.
#[derive(Serialize, Deserialize)]
struct ReferenceMotionJson {
    period: usize,
    displacement: f64,
    entries: Vec<Vec<f64>>,
}

impl Serialize for ReferenceMotion {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let mut row = e.state.clone();
                row.extend_from_slice(&e.action);
                row
            })
            .collect();
        ReferenceMotionJson {
            period: self.entries.len(),
            displacement: self.displacement,
            entries,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ReferenceMotion {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let json = ReferenceMotionJson::deserialize(de)?;
        if json.entries.len() != json.period {
            return Err(serde::de::Error::custom(format!(
                "period {} does not match {} entries",
                json.period,
                json.entries.len()
            )));
        }
        let entries = json
            .entries
            .into_iter()
            .map(|row| {
                if row.len() <= STATE_DIM {
                    return Err(serde::de::Error::custom(format!(
                        "reference entry has {} numbers, need state ({STATE_DIM}) plus action",
                        row.len()
                    )));
                }
                Ok(RefEntry {
                    state: row[..STATE_DIM].to_vec(),
                    action: row[STATE_DIM..].to_vec(),
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(ReferenceMotion::new(entries, json.displacement))
    }
}

/// Scripted-gait controller parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaitParams {
    /// Commanded forward speed (m/s).
    pub v_des: f64,
    /// Target apex height (m).
    pub apex_target: f64,
    /// Neutral-point coefficient: θ_td contribution per m/s of speed.
    pub k_neutral: f64,
    /// Speed-error feedback gain.
    pub k_speed: f64,
    /// Stance pitch servo gains (realized through the hip PD).
    pub pitch_kp: f64,
    pub pitch_kd: f64,
    /// Per-hop integral trims used during roll-in.
    pub k_speed_trim: f64,
    /// Rate damping on the speed trim (kills the per-hop spiral mode).
    pub k_speed_damp: f64,
    pub k_thrust_trim: f64,
    pub initial_thrust: f64,
    pub max_hops: usize,
    /// Apex/speed settling tolerance for limit-cycle detection.
    pub tol: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            v_des: 0.6,
            apex_target: 1.1,
            k_neutral: 0.07,
            k_speed: 0.05,
            pitch_kp: 6.0,
            pitch_kd: 1.5,
            k_speed_trim: 0.004,
            k_speed_damp: 0.02,
            k_thrust_trim: 10.0,
            initial_thrust: 14.0,
            max_hops: 500,
            tol: 2e-4,
        }
    }
}

struct HopRecord {
    apex_z: f64,
    mean_vx: f64,
    steps: usize,
}

/// Rolls the Raibert controller to a period-1 limit cycle on flat ground and
/// records one apex-to-apex cycle as the reference motion.
pub fn scripted_gait(params: &HopperParams, gait: &GaitParams) -> Result<ReferenceMotion> {
    if !(0.0..=3.0).contains(&gait.v_des) || !(0.5..=2.0).contains(&gait.apex_target) {
        return Err(Error::invalid(format!(
            "gait params outside supported ranges: v_des={} apex_target={}",
            gait.v_des, gait.apex_target
        )));
    }
    // Placeholder reference: the scripted controller issues absolute commands.
    let placeholder = ReferenceMotion::constant(vec![0.0; STATE_DIM], vec![0.0, 0.0], 1);
    let flat = TerrainProfile::flat(10_000.0, 1.0);
    let hopper = Hopper::new(params.clone(), flat, placeholder);
    let p = hopper.params.clone();

    let mut sim = SimState {
        x_abs: 0.0,
        z: gait.apex_target,
        vx: gait.v_des,
        vz: 0.0,
        pitch: 0.0,
        pitch_rate: 0.0,
        leg_angle: gait.k_neutral * gait.v_des,
        leg_len: p.leg_rest_len,
        contact: false,
        foot: (0.0, 0.0),
        step_idx: 0,
    };

    let mut trim_angle = 0.0_f64;
    let mut thrust = gait.initial_thrust;
    let mut prev_mean_vx = gait.v_des;
    let mut hops: Vec<HopRecord> = Vec::new();
    let mut stable_streak = 0usize;
    let mut frozen = false;

    let mut hop_steps = 0usize;
    let mut hop_vx_sum = 0.0_f64;

    let mut entries: Vec<RefEntry> = Vec::new();
    let mut record_start_x: Option<f64> = None;

    // Low-passed speed input to the touchdown law; with the raw speed the
    // per-hop feedback gain sits past the oscillation threshold.
    let mut v_filt = gait.v_des;
    let command = |sim: &SimState, trim_angle: f64, thrust: f64, v_filt: f64| -> (f64, f64) {
        if sim.contact {
            let (fx, fz) = sim.foot;
            let dx = sim.x_abs - fx;
            let dz = sim.z - fz;
            let ell2 = (dx * dx + dz * dz).max(1e-12);
            let theta = (fx - sim.x_abs).atan2(sim.z - fz);
            let theta_dot = (-sim.vx * dz - sim.vz * (fx - sim.x_abs)) / ell2;
            // Body receives −τ from the hip, so the leg-torque command is the
            // negated body-pitch PD.
            let tau_leg = (gait.pitch_kp * sim.pitch + gait.pitch_kd * sim.pitch_rate)
                .clamp(-0.95 * p.tau_max, 0.95 * p.tau_max);
            let angle_cmd = theta + (tau_leg + p.kd * theta_dot) / p.kp;
            (angle_cmd, thrust)
        } else {
            let angle_cmd =
                gait.k_neutral * v_filt + gait.k_speed * (v_filt - gait.v_des) + trim_angle;
            (angle_cmd, 0.0)
        }
    };

    let max_steps = gait.max_hops * 4000;
    let mut prev_vz = sim.vz;
    for _ in 0..max_steps {
        v_filt += (sim.vx - v_filt) * (p.dt / 0.3);
        let (angle_cmd, thrust_cmd) = command(&sim, trim_angle, thrust, v_filt);
        if let Some(start_x) = record_start_x {
            let mut state = vec![
                sim.x_abs - start_x,
                sim.z,
                sim.vx,
                sim.vz,
                sim.pitch,
                sim.pitch_rate,
                sim.leg_angle,
                sim.leg_len,
                if sim.contact { 1.0 } else { 0.0 },
            ];
            state[idx::LEG_LEN] = sim.leg_len.min(p.leg_rest_len);
            entries.push(RefEntry {
                state,
                action: vec![angle_cmd, thrust_cmd],
            });
        }
        let (next, _, fell) = hopper.step_with_commands(&sim, angle_cmd, thrust_cmd)?;
        if fell {
            return Err(Error::NoLimitCycle {
                hops: hops.len(),
                diagnostics: format!(
                    "hopper fell at step {} (z={:.3}, pitch={:.3})",
                    next.step_idx, next.z, next.pitch
                ),
            });
        }
        hop_steps += 1;
        hop_vx_sum += next.vx;
        let apex_crossing = !sim.contact && !next.contact && prev_vz > 0.0 && next.vz <= 0.0;
        prev_vz = next.vz;
        sim = next;

        if !apex_crossing {
            continue;
        }

        if let Some(start_x) = record_start_x {
            // Closed one full recorded cycle at this apex.
            return Ok(ReferenceMotion::new(entries, sim.x_abs - start_x));
        }

        let record = HopRecord {
            apex_z: sim.z,
            mean_vx: hop_vx_sum / hop_steps.max(1) as f64,
            steps: hop_steps,
        };
        if let Some(prev) = hops.last() {
            let settled = (record.apex_z - prev.apex_z).abs() < gait.tol
                && (record.mean_vx - prev.mean_vx).abs() < gait.tol
                && record.steps == prev.steps;
            stable_streak = if settled { stable_streak + 1 } else { 0 };
        }
        if frozen && stable_streak >= 4 {
            record_start_x = Some(sim.x_abs);
        } else if stable_streak >= 3 {
            frozen = true;
        }
        if !frozen {
            trim_angle += gait.k_speed_trim * (record.mean_vx - gait.v_des)
                + gait.k_speed_damp * (record.mean_vx - prev_mean_vx);
            thrust = (thrust + gait.k_thrust_trim * (gait.apex_target - record.apex_z))
                .clamp(0.0, p.thrust_limit);
        }
        prev_mean_vx = record.mean_vx;
        hops.push(record);
        if hops.len() >= gait.max_hops {
            let last = hops.last().unwrap();
            return Err(Error::NoLimitCycle {
                hops: hops.len(),
                diagnostics: format!(
                    "no settle after {} hops: apex={:.4}, mean_vx={:.4}, trim_angle={:.4}, thrust={:.2}",
                    hops.len(),
                    last.apex_z,
                    last.mean_vx,
                    trim_angle,
                    thrust
                ),
            });
        }
        hop_steps = 0;
        hop_vx_sum = 0.0;
    }
    Err(Error::NoLimitCycle {
        hops: hops.len(),
        diagnostics: "step budget exhausted before limit cycle".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_lookup_contract() {
        let m = ReferenceMotion::new(
            (0..7)
                .map(|i| RefEntry {
                    state: vec![i as f64; STATE_DIM],
                    action: vec![0.0, 0.0],
                })
                .collect(),
            0.3,
        );
        for t in 0..21u64 {
            assert_eq!(m.entry(t), m.entry(t % 7));
        }
        assert_eq!(m.anchor(13), 0.3);
        assert_eq!(m.anchor(14), 0.6);
    }

    #[test]
    fn scripted_gait_settles_and_tracks_speed() {
        let params = HopperParams::default();
        let gait = GaitParams::default();
        let motion = scripted_gait(&params, &gait).expect("limit cycle");
        assert!(motion.period() > 10, "period {}", motion.period());

        // Replay the recorded cycle statistics.
        let mean_vx: f64 = motion
            .entries()
            .iter()
            .map(|e| e.state[idx::VX])
            .sum::<f64>()
            / motion.period() as f64;
        assert!(
            (mean_vx - gait.v_des).abs() <= 0.1 * gait.v_des.abs().max(0.1),
            "reference speed {mean_vx} vs commanded {}",
            gait.v_des
        );
        // Both flight and stance phases appear.
        let contacts: f64 = motion.entries().iter().map(|e| e.state[idx::CONTACT]).sum();
        assert!(contacts > 0.0 && (contacts as usize) < motion.period());
        // Displacement consistent with the mean speed.
        let dt_cycle = motion.period() as f64 * params.dt;
        assert!((motion.displacement / dt_cycle - mean_vx).abs() < 0.1);
    }

    #[test]
    fn scripted_gait_apex_constant_across_cycles() {
        let params = HopperParams::default();
        let gait = GaitParams::default();
        let motion = scripted_gait(&params, &gait).unwrap();
        // Roll the recorded reference open loop for 3 cycles and compare apex
        // heights between consecutive cycles.
        let hopper = Hopper::new(
            params.clone(),
            TerrainProfile::flat(10_000.0, 1.0),
            motion.clone(),
        );
        let mut sim = hopper.reset_with_scale(0, 0.0);
        let mut apexes = Vec::new();
        let mut prev_vz = sim.vz;
        for _ in 0..3 * motion.period() + 2 {
            let (next, _, done) = hopper.step_sim(&sim, &[0.0, 0.0]).unwrap();
            assert!(!done, "open-loop replay fell");
            if !sim.contact && !next.contact && prev_vz > 0.0 && next.vz <= 0.0 {
                apexes.push(next.z);
            }
            prev_vz = next.vz;
            sim = next;
        }
        assert!(apexes.len() >= 2, "need at least two apexes");
        for pair in apexes.windows(2) {
            assert!(
                (pair[0] - pair[1]).abs() <= 1e-3,
                "apex drift {} vs {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn serde_round_trip() {
        let m = ReferenceMotion::new(
            vec![
                RefEntry {
                    state: vec![0.5; STATE_DIM],
                    action: vec![0.1, 3.0],
                };
                5
            ],
            0.25,
        );
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"period\":5"));
        let back: ReferenceMotion = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
