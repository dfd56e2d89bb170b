//! Planar spring-loaded hopper.
//!
//! Point-mass body with pitch inertia and a massless telescoping leg. Flight
//! is ballistic (integrated with the exact constant-acceleration map, which
//! keeps mechanical energy to machine precision) while the leg angle follows
//! an overdamped PD servo whose reaction torque acts on body pitch. Stance
//! pins the foot, takes leg length from geometry, pushes along the leg with
//! spring + damping + thrust, and applies the hip PD torque between leg and
//! body. Touchdown fires when the foot reaches the terrain while falling;
//! takeoff fires when the axial leg force reaches zero or the leg is back at
//! rest length.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{idx, ObservedState, ReferenceMotion, StepInfo, TerrainProfile, Transition, ACTION_DIM};
use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HopperParams {
    pub mass: f64,
    pub inertia: f64,
    /// Leg rest length ℓ0 (m).
    pub leg_rest_len: f64,
    pub spring_k: f64,
    /// Axial leg damping (N·s/m); dissipation balanced by stance thrust.
    pub leg_damping: f64,
    pub gravity: f64,
    pub dt: f64,
    pub episode_steps: usize,
    /// Hip PD gains on leg-angle error.
    pub kp: f64,
    pub kd: f64,
    /// Hip torque clamp (N·m).
    pub tau_max: f64,
    /// Flight leg swing rate limit (rad/s).
    pub swing_rate_max: f64,
    /// Pitch-reaction coupling of the flight leg servo (N·m·s/rad). Small:
    /// repositioning a near-massless leg transfers little angular momentum.
    pub flight_couple: f64,
    /// Componentwise |δa| clip bounds: leg-angle correction (rad), thrust (N).
    pub clip_angle: f64,
    pub clip_thrust: f64,
    /// Total commanded thrust clamp (N).
    pub thrust_limit: f64,
    /// Episode ends when body height drops below terrain + this margin (m).
    pub min_height: f64,
    /// Episode ends when |pitch| exceeds this (rad).
    pub max_pitch: f64,
    /// Reset perturbation half-width per component.
    pub reset_perturb: f64,
}

impl Default for HopperParams {
    fn default() -> Self {
        HopperParams {
            mass: 1.0,
            inertia: 0.1,
            leg_rest_len: 1.0,
            spring_k: 200.0,
            leg_damping: 6.0,
            gravity: 9.81,
            dt: 0.005,
            episode_steps: 2000,
            kp: 40.0,
            kd: 2.0,
            tau_max: 2.0,
            swing_rate_max: 12.0,
            flight_couple: 0.05,
            clip_angle: 0.2,
            clip_thrust: 10.0,
            thrust_limit: 40.0,
            min_height: 0.2,
            max_pitch: 1.2,
            reset_perturb: 0.01,
        }
    }
}

/// Full simulator state; the observation is derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub x_abs: f64,
    pub z: f64,
    pub vx: f64,
    pub vz: f64,
    pub pitch: f64,
    pub pitch_rate: f64,
    pub leg_angle: f64,
    pub leg_len: f64,
    pub contact: bool,
    /// Foot pin point, meaningful while in contact.
    pub foot: (f64, f64),
    pub step_idx: u64,
}

/// The hopper environment: parameters + terrain + reference motion.
/// Immutable after construction; stepping is a pure function of state.
#[derive(Debug, Clone)]
pub struct Hopper {
    pub params: HopperParams,
    pub terrain: TerrainProfile,
    pub reference: ReferenceMotion,
    /// Include the reference snapshot in network observations.
    pub observe_reference: bool,
}

impl Hopper {
    pub fn new(params: HopperParams, terrain: TerrainProfile, reference: ReferenceMotion) -> Self {
        Hopper {
            params,
            terrain,
            reference,
            observe_reference: true,
        }
    }

    pub fn obs_dim(&self) -> usize {
        let base = super::STATE_DIM;
        if self.observe_reference {
            2 * base + 1
        } else {
            base + 1
        }
    }

    pub fn action_dim(&self) -> usize {
        ACTION_DIM
    }

    /// State at phase 0 of the reference with a bounded uniform perturbation
    /// on the continuous components (scale 0 reproduces the entry exactly).
    pub fn reset(&self, seed: u64) -> SimState {
        self.reset_with_scale(seed, self.params.reset_perturb)
    }

    pub fn reset_with_scale(&self, seed: u64, scale: f64) -> SimState {
        let mut rng = stream(seed, &["hopper-reset"], 0);
        let entry = self.reference.entry(0);
        let mut p = |v: f64| {
            if scale > 0.0 {
                v + rng.random_range(-scale..=scale)
            } else {
                v
            }
        };
        let x_abs = p(entry.state[idx::X]);
        let ground = self.terrain.height_at(x_abs);
        SimState {
            x_abs,
            z: p(entry.state[idx::Z]) + ground,
            vx: p(entry.state[idx::VX]),
            vz: p(entry.state[idx::VZ]),
            pitch: p(entry.state[idx::PITCH]),
            pitch_rate: p(entry.state[idx::PITCH_RATE]),
            leg_angle: p(entry.state[idx::LEG_ANGLE]),
            leg_len: self.params.leg_rest_len,
            contact: false,
            foot: (0.0, 0.0),
            step_idx: 0,
        }
    }

    /// Observation for a simulator state: body x is reported relative to the
    /// reference-cycle anchor so the tracking error stays bounded.
    pub fn observe(&self, sim: &SimState) -> ObservedState {
        let anchor = self.reference.anchor(sim.step_idx);
        let phase = (sim.step_idx % self.reference.period() as u64) as f64;
        let entry = self.reference.entry(sim.step_idx);
        ObservedState {
            x: vec![
                sim.x_abs - anchor,
                sim.z,
                sim.vx,
                sim.vz,
                sim.pitch,
                sim.pitch_rate,
                sim.leg_angle,
                sim.leg_len,
                if sim.contact { 1.0 } else { 0.0 },
            ],
            xhat: entry.state.clone(),
            clock: phase / self.reference.period() as f64,
        }
    }

    fn validate_sim(&self, sim: &SimState) -> Result<()> {
        let fields = [
            ("x", sim.x_abs),
            ("z", sim.z),
            ("vx", sim.vx),
            ("vz", sim.vz),
            ("pitch", sim.pitch),
            ("pitch_rate", sim.pitch_rate),
            ("leg_angle", sim.leg_angle),
            ("leg_len", sim.leg_len),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("state field '{name}'")));
            }
        }
        Ok(())
    }

    /// Advances one step. Pure: (state, δa) fully determine the result.
    pub fn step_sim(&self, sim: &SimState, delta_a: &[f64]) -> Result<(SimState, StepInfo, bool)> {
        if delta_a.len() != ACTION_DIM {
            return Err(Error::ShapeMismatch {
                context: "action correction".into(),
                expected: ACTION_DIM,
                actual: delta_a.len(),
            });
        }
        let p = &self.params;
        let da_angle = delta_a[0].clamp(-p.clip_angle, p.clip_angle);
        let da_thrust = delta_a[1].clamp(-p.clip_thrust, p.clip_thrust);
        let ahat = &self.reference.entry(sim.step_idx).action;
        let angle_cmd = ahat[0] + da_angle;
        let thrust_cmd = (ahat[1] + da_thrust).clamp(0.0, p.thrust_limit);
        self.step_with_commands(sim, angle_cmd, thrust_cmd)
    }

    /// Core integrator taking absolute PD targets (used by the scripted
    /// gait controller; policies go through [`Hopper::step_sim`]).
    pub fn step_with_commands(
        &self,
        sim: &SimState,
        angle_cmd: f64,
        thrust_cmd: f64,
    ) -> Result<(SimState, StepInfo, bool)> {
        self.validate_sim(sim)?;
        let p = &self.params;
        let thrust_cmd = thrust_cmd.clamp(0.0, p.thrust_limit);
        let mut next = sim.clone();
        let grf;
        let tau;
        if sim.contact {
            let (fx, fz) = sim.foot;
            let dx = sim.x_abs - fx;
            let dz = sim.z - fz;
            let ell = (dx * dx + dz * dz).sqrt().max(1e-9);
            let (ux, uz) = (dx / ell, dz / ell);
            let theta = (fx - sim.x_abs).atan2(sim.z - fz);
            let theta_dot = (-sim.vx * dz - sim.vz * (fx - sim.x_abs)) / (ell * ell);
            let ell_dot = ux * sim.vx + uz * sim.vz;
            // Thrust fires during extension only (push-off), so it injects
            // net energy against the damping loss.
            let thrust_active = if ell_dot > 0.0 { thrust_cmd } else { 0.0 };
            let f_axial = (p.spring_k * (p.leg_rest_len - ell) - p.leg_damping * ell_dot
                + thrust_active)
                .max(0.0);
            let tau_cmd =
                (p.kp * (angle_cmd - theta) - p.kd * theta_dot).clamp(-p.tau_max, p.tau_max);
            // Massless pinned leg: hip torque becomes a tangential force τ/ℓ
            // at the hip and reacts as −τ on body pitch.
            let ft = tau_cmd / ell;
            let (tx, tz) = (-uz, ux);
            let ax = (f_axial * ux + ft * tx) / p.mass;
            let az = (f_axial * uz + ft * tz) / p.mass - p.gravity;
            next.vx += ax * p.dt;
            next.vz += az * p.dt;
            next.x_abs += next.vx * p.dt;
            next.z += next.vz * p.dt;
            next.pitch_rate += (-tau_cmd / p.inertia) * p.dt;
            next.pitch += next.pitch_rate * p.dt;

            let ndx = next.x_abs - fx;
            let ndz = next.z - fz;
            let nell = (ndx * ndx + ndz * ndz).sqrt().max(1e-9);
            next.leg_len = nell.min(p.leg_rest_len);
            next.leg_angle = (fx - next.x_abs).atan2(next.z - fz);
            let nell_dot = (ndx * next.vx + ndz * next.vz) / nell;
            let f_next = p.spring_k * (p.leg_rest_len - nell) - p.leg_damping * nell_dot
                + if nell_dot > 0.0 { thrust_cmd } else { 0.0 };
            if nell >= p.leg_rest_len || (f_next <= 0.0 && nell_dot > 0.0) {
                next.contact = false;
                next.leg_len = p.leg_rest_len;
            }
            grf = (f_axial * f_axial + ft * ft).sqrt();
            tau = tau_cmd;
        } else {
            // Exact ballistic translation (constant acceleration).
            next.x_abs += sim.vx * p.dt;
            next.z += sim.vz * p.dt - 0.5 * p.gravity * p.dt * p.dt;
            next.vz -= p.gravity * p.dt;
            // Overdamped leg servo: rate = (kp/kd)·error, rate-limited. Only a
            // small fraction of the servo torque reacts on the body.
            let err = angle_cmd - sim.leg_angle;
            let rate = (p.kp / p.kd * err).clamp(-p.swing_rate_max, p.swing_rate_max);
            next.leg_angle = sim.leg_angle + rate * p.dt;
            let tau_cmd = (p.flight_couple * rate).clamp(-p.tau_max, p.tau_max);
            next.pitch_rate += (-tau_cmd / p.inertia) * p.dt;
            next.pitch += next.pitch_rate * p.dt;
            next.leg_len = p.leg_rest_len;

            let foot_x = next.x_abs + p.leg_rest_len * next.leg_angle.sin();
            let foot_z = next.z - p.leg_rest_len * next.leg_angle.cos();
            let ground = self.terrain.height_at(foot_x);
            if foot_z <= ground && next.vz < 0.0 {
                next.contact = true;
                next.foot = (foot_x, ground);
                let dx = next.x_abs - foot_x;
                let dz = next.z - ground;
                next.leg_len = (dx * dx + dz * dz).sqrt().min(p.leg_rest_len);
                next.leg_angle = (foot_x - next.x_abs).atan2(next.z - ground);
            }
            grf = 0.0;
            tau = tau_cmd;
        }
        next.step_idx = sim.step_idx.wrapping_add(1);

        let ground_under_body = self.terrain.height_at(next.x_abs);
        let done =
            next.z - ground_under_body < p.min_height || next.pitch.abs() > p.max_pitch;
        let foot_x = if next.contact {
            next.foot.0
        } else {
            next.x_abs + p.leg_rest_len * next.leg_angle.sin()
        };
        let info = StepInfo {
            grf,
            tau,
            terrain_h: self.terrain.height_at(foot_x),
            x_abs: next.x_abs,
        };
        Ok((next, info, done))
    }

    /// Spec-level step over observed states: reconstructs the simulator frame
    /// from (state, clock) with a zero cycle anchor.
    pub fn step(&self, state: &ObservedState, delta_a: &[f64]) -> Result<Transition> {
        state.validate(self.params.leg_rest_len)?;
        let period = self.reference.period() as f64;
        let phase = (state.clock * period).round() as u64 % self.reference.period() as u64;
        let sim = SimState {
            x_abs: state.x[idx::X],
            z: state.x[idx::Z],
            vx: state.x[idx::VX],
            vz: state.x[idx::VZ],
            pitch: state.x[idx::PITCH],
            pitch_rate: state.x[idx::PITCH_RATE],
            leg_angle: state.x[idx::LEG_ANGLE],
            leg_len: state.x[idx::LEG_LEN],
            contact: state.x[idx::CONTACT] == 1.0,
            foot: if state.x[idx::CONTACT] == 1.0 {
                let fx = state.x[idx::X] + state.x[idx::LEG_LEN] * state.x[idx::LEG_ANGLE].sin();
                let fz = state.x[idx::Z] - state.x[idx::LEG_LEN] * state.x[idx::LEG_ANGLE].cos();
                (fx, fz)
            } else {
                (0.0, 0.0)
            },
            step_idx: phase,
        };
        let (next, info, done) = self.step_sim(&sim, delta_a)?;
        Ok(Transition {
            s: state.clone(),
            a: delta_a.to_vec(),
            s_next: self.observe(&next),
            done,
            info,
        })
    }

    /// ½m(ẋ² + ż²) + ½Iφ̇² + mgz.
    pub fn mechanical_energy(&self, sim: &SimState) -> f64 {
        let p = &self.params;
        0.5 * p.mass * (sim.vx * sim.vx + sim.vz * sim.vz)
            + 0.5 * p.inertia * sim.pitch_rate * sim.pitch_rate
            + p.mass * p.gravity * sim.z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::gait::ReferenceMotion;
    use crate::env::terrain::TerrainProfile;

    fn flight_hopper() -> (Hopper, SimState) {
        let params = HopperParams::default();
        // Constant reference whose action matches the initial leg angle, so
        // the flight servo torque is exactly zero.
        let state = vec![0.0, 50.0, 1.0, 0.5, 0.02, 0.3, 0.1, 1.0, 0.0];
        let action = vec![0.1, 0.0];
        let reference = ReferenceMotion::constant(state.clone(), action, 100);
        let hopper = Hopper::new(params, TerrainProfile::flat(200.0, 0.5), reference);
        let sim = SimState {
            x_abs: 0.0,
            z: 50.0,
            vx: 1.0,
            vz: 0.5,
            pitch: 0.02,
            pitch_rate: 0.3,
            leg_angle: 0.1,
            leg_len: 1.0,
            contact: false,
            foot: (0.0, 0.0),
            step_idx: 0,
        };
        (hopper, sim)
    }

    #[test]
    fn ballistic_flight_decreases_vz_by_g_dt() {
        let (hopper, sim) = flight_hopper();
        let (next, info, _) = hopper.step_sim(&sim, &[0.0, 0.0]).unwrap();
        let g_dt = hopper.params.gravity * hopper.params.dt;
        assert_eq!(next.vz, sim.vz - g_dt);
        assert_eq!(info.grf, 0.0);
    }

    #[test]
    fn no_contact_means_no_force() {
        let (hopper, mut sim) = flight_hopper();
        for _ in 0..50 {
            let (next, info, _) = hopper.step_sim(&sim, &[0.05, 2.0]).unwrap();
            assert!(!sim.contact);
            assert_eq!(info.grf, 0.0);
            sim = next;
        }
    }

    #[test]
    fn flight_energy_drift_under_1e_minus_6_over_100_steps() {
        let (hopper, mut sim) = flight_hopper();
        let e0 = hopper.mechanical_energy(&sim);
        for _ in 0..100 {
            let (next, _, _) = hopper.step_sim(&sim, &[0.0, 0.0]).unwrap();
            sim = next;
        }
        let e1 = hopper.mechanical_energy(&sim);
        assert!(
            (e1 - e0).abs() <= 1e-6,
            "energy drift {} J over 100 steps",
            e1 - e0
        );
    }

    #[test]
    fn non_finite_state_names_the_field() {
        let (hopper, mut sim) = flight_hopper();
        sim.vz = f64::NAN;
        let err = hopper.step_sim(&sim, &[0.0, 0.0]).unwrap_err().to_string();
        assert!(err.contains("'vz'"), "{err}");
    }

    #[test]
    fn reset_is_deterministic_and_scale_zero_exact() {
        let (hopper, _) = flight_hopper();
        let a = hopper.reset(99);
        let b = hopper.reset(99);
        assert_eq!(a, b);
        let exact = hopper.reset_with_scale(1, 0.0);
        let entry = hopper.reference.entry(0);
        assert_eq!(exact.z, entry.state[idx::Z]);
        assert_eq!(exact.vx, entry.state[idx::VX]);
        assert_eq!(exact.leg_angle, entry.state[idx::LEG_ANGLE]);
    }

    #[test]
    fn different_seeds_differ_somewhere() {
        let (hopper, _) = flight_hopper();
        for s in 0..100u64 {
            let a = hopper.reset(2 * s);
            let b = hopper.reset(2 * s + 1);
            assert_ne!(a, b, "seeds {} and {} gave identical states", 2 * s, 2 * s + 1);
        }
    }

    #[test]
    fn stance_produces_upward_force_and_done_detection() {
        let params = HopperParams::default();
        let state = vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let reference = ReferenceMotion::constant(state, vec![0.0, 0.0], 100);
        let hopper = Hopper::new(params, TerrainProfile::flat(50.0, 0.5), reference);
        // Compressed stance directly above the pin.
        let sim = SimState {
            x_abs: 0.0,
            z: 0.9,
            vx: 0.0,
            vz: -0.1,
            pitch: 0.0,
            pitch_rate: 0.0,
            leg_angle: 0.0,
            leg_len: 0.9,
            contact: true,
            foot: (0.0, 0.0),
            step_idx: 0,
        };
        let (next, info, done) = hopper.step_sim(&sim, &[0.0, 0.0]).unwrap();
        assert!(info.grf > 0.0);
        assert!(!done);
        assert!(next.vz > sim.vz, "spring should push up");

        // Body far below terrain margin → done.
        let fallen = SimState { z: 0.1, ..sim.clone() };
        let (_, _, done) = hopper.step_sim(&fallen, &[0.0, 0.0]).unwrap();
        assert!(done);
    }

    #[test]
    fn observed_step_matches_chain() {
        let (hopper, sim) = flight_hopper();
        let obs = hopper.observe(&sim);
        let tr = hopper.step(&obs, &[0.01, 0.0]).unwrap();
        assert_eq!(tr.s, obs);
        tr.s_next.validate(hopper.params.leg_rest_len).unwrap();
    }
}
