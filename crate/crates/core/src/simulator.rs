//! Drives the power model along a scenario and integrates energy.

use std::fmt::Write as _;

use thiserror::Error;

use crate::config::fmt_f64;
use crate::kinematics::{inverse_kinematics, BodyTwist};
use crate::params::{GravityConvention, Params, Scenario, ScenarioError, ValidatedParams};
use crate::power::{evaluate, MotionState, PowerBreakdown, PowerError};
use crate::profile::{build_profile, ProfilePoint};
use crate::statics::{slope_forces, thermal_step, wheel_loads, StaticsError, ThermalState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Statics(#[from] StaticsError),
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error("need at least 2 samples to integrate, got {0}")]
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub state: MotionState,
    pub power: PowerBreakdown,
    pub e_cum_j: f64,
    /// Index of the terrain segment under the robot's center.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerTrace {
    pub samples: Vec<TraceSample>,
}

impl PowerTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &MotionState> {
        self.samples.iter().map(|s| &s.state)
    }
}

/// Energy per channel, joules.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelEnergy {
    pub copper_j: f64,
    pub iron_j: f64,
    pub mechanical_j: f64,
    pub friction_j: f64,
    pub control_j: f64,
    pub sensing_j: f64,
}

impl ChannelEnergy {
    fn from_array(a: [f64; 6]) -> Self {
        Self { copper_j: a[0], iron_j: a[1], mechanical_j: a[2], friction_j: a[3], control_j: a[4], sensing_j: a[5] }
    }

    pub fn motion_j(&self) -> f64 {
        self.copper_j + self.iron_j + self.mechanical_j + self.friction_j
    }

    pub fn total_j(&self) -> f64 {
        self.motion_j() + self.control_j + self.sensing_j
    }
}

/// Trapezoidal integral of total power and of each channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyIntegral {
    pub total_j: f64,
    pub per_channel: ChannelEnergy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub total_j: f64,
    pub per_channel: ChannelEnergy,
    pub per_segment_j: Vec<f64>,
    pub peak_w: f64,
    pub duration_s: f64,
}

impl EnergyReport {
    /// Key-value text in the same flat format as the configuration files.
    pub fn to_kv_string(&self) -> String {
        let mut o = String::new();
        let mut kv = |k: &str, v: f64| {
            let _ = writeln!(o, "{k} = {}", fmt_f64(v));
        };
        kv("report.total_j", self.total_j);
        kv("report.motion_j", self.per_channel.motion_j());
        kv("report.copper_j", self.per_channel.copper_j);
        kv("report.iron_j", self.per_channel.iron_j);
        kv("report.mechanical_j", self.per_channel.mechanical_j);
        kv("report.friction_j", self.per_channel.friction_j);
        kv("report.control_j", self.per_channel.control_j);
        kv("report.sensing_j", self.per_channel.sensing_j);
        kv("report.peak_w", self.peak_w);
        kv("report.duration_s", self.duration_s);
        for (i, e) in self.per_segment_j.iter().enumerate() {
            kv(&format!("report.segment.{i}.energy_j"), *e);
        }
        o
    }
}

/// Trapezoidal rule over a sampled signal.
pub fn trapezoid(t: &[f64], y: &[f64]) -> Result<f64, SimError> {
    assert_eq!(t.len(), y.len(), "time and value series differ in length");
    if t.len() < 2 {
        return Err(SimError::TooFewSamples(t.len()));
    }
    Ok(t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum())
}

pub fn integrate_energy(trace: &PowerTrace) -> Result<EnergyIntegral, SimError> {
    let n = trace.len();
    if n < 2 {
        return Err(SimError::TooFewSamples(n));
    }
    let mut total = 0.0;
    let mut ch = [0.0; 6];
    for w in trace.samples.windows(2) {
        let h = 0.5 * (w[1].state.t_s - w[0].state.t_s);
        total += h * (w[0].power.total_w + w[1].power.total_w);
        for (acc, (a, b)) in ch.iter_mut().zip(w[0].power.channels().into_iter().zip(w[1].power.channels())) {
            *acc += h * (a + b);
        }
    }
    Ok(EnergyIntegral { total_j: total, per_channel: ChannelEnergy::from_array(ch) })
}

/// Turn a profile point into the full state the power model consumes.
pub fn motion_state(point: &ProfilePoint, scenario: &Scenario, params: &Params, temp_c: f64) -> Result<MotionState, SimError> {
    let robot = &params.robot;
    let heading = scenario.heading_rad();
    let twist = BodyTwist::translation(point.speed_m_s, heading);
    let omega = inverse_kinematics(twist, robot).omega_rad_s;
    let wheel_a = inverse_kinematics(BodyTwist::translation(point.tangential_accel_m_s2, heading), robot)
        .linear(robot.wheel_radius_m);
    let loads = wheel_loads(robot.mass_kg, scenario.cog, point.incline_rad, robot)?;
    // The path runs along the fall line, so the travel direction is the fall
    // line direction under the physical convention.
    let theta_gravity = match params.model.gravity_convention {
        GravityConvention::PhysicalCos => 0.0,
        GravityConvention::LiteralSin => heading,
    };
    let forces = slope_forces(
        robot.mass_kg,
        robot.gravity_m_s2,
        point.incline_rad,
        theta_gravity,
        params.friction.mu * point.friction_scale,
        params.model.gravity_convention,
    )?;
    let shares = loads.shares();
    let f = forces.f_up_n;
    Ok(MotionState {
        t_s: point.t_s,
        t_motion_s: params.model.t_sat_s.map_or(point.t_s, |ts| point.t_s.min(ts)),
        s_m: point.s_m,
        incline_rad: point.incline_rad,
        friction_scale: point.friction_scale,
        twist,
        theta_rad: heading,
        speed_m_s: point.speed_m_s,
        accel_m_s2: point.tangential_accel_m_s2 + params.model.pitch_coupling * point.pitch_accel_m_s2,
        wheel_omega_rad_s: omega,
        wheel_v_m_s: omega.map(|w| w * robot.wheel_radius_m),
        wheel_a_m_s2: wheel_a,
        loads,
        traction_n: shares.map(|s| s * f),
        traction_total_n: f,
        temp_c,
    })
}

/// Run the scenario: profile, per-sample power, thermal chain, energy.
/// Deterministic for fixed inputs.
pub fn simulate(scenario: &Scenario, params: &ValidatedParams) -> Result<(PowerTrace, EnergyReport), SimError> {
    let params = params.get();
    scenario.validate_for(&params.robot)?;
    let profile = build_profile(scenario, params.robot.length_m)?;

    let mut samples: Vec<TraceSample> = Vec::with_capacity(profile.len());
    let mut thermal = ThermalState { temp_c: scenario.initial_temp_c };
    for (k, point) in profile.iter().enumerate() {
        let state = motion_state(point, scenario, params, thermal.temp_c)?;
        let power = evaluate(&state, params)?;
        let e_cum_j = match samples.last() {
            Some(prev) => prev.e_cum_j + 0.5 * (point.t_s - prev.state.t_s) * (prev.power.total_w + power.total_w),
            None => 0.0,
        };
        samples.push(TraceSample { state, power, e_cum_j, segment: point.segment });
        if let Some(next) = profile.get(k + 1) {
            thermal = thermal_step(thermal, power.copper_w, next.t_s - point.t_s, &params.thermal)?;
        }
    }
    let trace = PowerTrace { samples };

    let integral = integrate_energy(&trace)?;
    let mut per_segment_j = vec![0.0; scenario.segments.len()];
    for w in trace.samples.windows(2) {
        let mid = 0.5 * (w[0].state.s_m + w[1].state.s_m);
        let seg = segment_of(scenario, mid);
        per_segment_j[seg] += 0.5 * (w[1].state.t_s - w[0].state.t_s) * (w[0].power.total_w + w[1].power.total_w);
    }
    let report = EnergyReport {
        total_j: integral.total_j,
        per_channel: integral.per_channel,
        per_segment_j,
        peak_w: trace.samples.iter().map(|s| s.power.total_w).fold(f64::NEG_INFINITY, f64::max),
        duration_s: trace.samples.last().map_or(0.0, |s| s.state.t_s),
    };
    Ok((trace, report))
}

fn segment_of(scenario: &Scenario, s: f64) -> usize {
    let mut end = 0.0;
    for (i, g) in scenario.segments.iter().enumerate() {
        end += g.length_m;
        if s < end {
            return i;
        }
    }
    scenario.segments.len() - 1
}
