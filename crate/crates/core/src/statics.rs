//! Slope force balance, wheel normal loads, winding resistance and motor
//! temperature.

use thiserror::Error;

use crate::params::{CogOffset, GravityConvention, MotorParams, RobotParams, ThermalParams, ABSOLUTE_ZERO_C};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StaticsError {
    #[error("incline {0} rad is not within (-pi/2, pi/2)")]
    InvalidIncline(f64),
    #[error("friction factor {0} is outside [0, 1]")]
    InvalidFriction(f64),
    #[error("CoG offset ({x_m}, {y_m}) m lies outside the wheel footprint")]
    CogOutsideFootprint { x_m: f64, y_m: f64 },
    #[error("time step must be positive (got {0})")]
    NonPositiveDt(f64),
}

/// Forces along the slope, positive pointing uphill along the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeForces {
    pub f_gravity_n: f64,
    pub f_friction_n: f64,
    /// Traction the wheels must supply; negative means braking.
    pub f_up_n: f64,
}

/// Gravity component and friction the drive must overcome on an incline.
///
/// `incline_rad` is signed (negative downhill). For
/// [`GravityConvention::PhysicalCos`] `theta_rad` is the angle between the
/// travel direction and the uphill fall line; for
/// [`GravityConvention::LiteralSin`] it is the body heading angle.
pub fn slope_forces(
    mass_kg: f64,
    gravity_m_s2: f64,
    incline_rad: f64,
    theta_rad: f64,
    mu_eff: f64,
    convention: GravityConvention,
) -> Result<SlopeForces, StaticsError> {
    if !(incline_rad.is_finite() && incline_rad.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(StaticsError::InvalidIncline(incline_rad));
    }
    if !(0.0..=1.0).contains(&mu_eff) {
        return Err(StaticsError::InvalidFriction(mu_eff));
    }
    let w = mass_kg * gravity_m_s2;
    let direction = match convention {
        GravityConvention::PhysicalCos => theta_rad.cos(),
        GravityConvention::LiteralSin => theta_rad.sin(),
    };
    let f_gravity_n = w * direction * incline_rad.sin();
    let f_friction_n = mu_eff * w * incline_rad.cos();
    Ok(SlopeForces { f_gravity_n, f_friction_n, f_up_n: f_gravity_n + f_friction_n })
}

/// Normal loads in FL, FR, RL, RR order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelLoads {
    pub n_n: [f64; 4],
    pub total_n: f64,
}

impl WheelLoads {
    /// Fraction of the total load carried by each wheel.
    pub fn shares(&self) -> [f64; 4] {
        if self.total_n == 0.0 {
            [0.25; 4]
        } else {
            self.n_n.map(|n| n / self.total_n)
        }
    }
}

/// (longitudinal, lateral) sign of each wheel corner: front/left positive.
pub const CORNER_SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// Bilinear corner shares of the slope-normal weight for a shifted CoG.
pub fn wheel_loads(mass_kg: f64, cog: CogOffset, incline_rad: f64, robot: &RobotParams) -> Result<WheelLoads, StaticsError> {
    if !cog.inside(robot) {
        return Err(StaticsError::CogOutsideFootprint { x_m: cog.x_m, y_m: cog.y_m });
    }
    if !(incline_rad.is_finite() && incline_rad.abs() < std::f64::consts::FRAC_PI_2) {
        return Err(StaticsError::InvalidIncline(incline_rad));
    }
    let total_n = mass_kg * robot.gravity_m_s2 * incline_rad.cos();
    let fx = cog.x_m / robot.length_m;
    let fy = cog.y_m / robot.width_m;
    let n_n = CORNER_SIGNS.map(|(sx, sy)| total_n * (0.5 + sx * fx) * (0.5 + sy * fy));
    Ok(WheelLoads { n_n, total_n })
}

/// Winding resistance at temperature `temp_c`.
pub fn resistance_at(motor: &MotorParams, temp_c: f64) -> f64 {
    motor.r0_ohm * (1.0 + motor.alpha_per_c * (temp_c - motor.t0_c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    pub temp_c: f64,
}

/// One explicit step of first-order heating by copper loss against
/// Newtonian cooling toward ambient.
pub fn thermal_step(
    state: ThermalState,
    p_copper_w: f64,
    dt_s: f64,
    thermal: &ThermalParams,
) -> Result<ThermalState, StaticsError> {
    if !(dt_s > 0.0) {
        return Err(StaticsError::NonPositiveDt(dt_s));
    }
    let rate = thermal.heating_coeff_c_per_j * p_copper_w - thermal.cooling_coeff_per_s * (state.temp_c - thermal.ambient_c);
    Ok(ThermalState { temp_c: (state.temp_c + dt_s * rate).max(ABSOLUTE_ZERO_C) })
}

/// Fixed point of [`thermal_step`] under constant copper loss.
pub fn steady_state_temp(p_copper_w: f64, thermal: &ThermalParams) -> Option<f64> {
    (thermal.cooling_coeff_per_s > 0.0)
        .then(|| thermal.ambient_c + thermal.heating_coeff_c_per_j * p_copper_w / thermal.cooling_coeff_per_s)
}
