//! Physical parameters, scenario descriptions and their validation.
//!
//! Everything here is plain data. Validation happens once, up front, and
//! produces a [`ValidatedParams`] bundle that the rest of the crate trusts.

use std::fmt;

use thiserror::Error;

/// Wheel order used everywhere: front-left, front-right, rear-left, rear-right.
pub const WHEEL_NAMES: [&str; 4] = ["FL", "FR", "RL", "RR"];

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Absolute zero in °C.
pub const ABSOLUTE_ZERO_C: f64 = -273.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotParams {
    pub mass_kg: f64,
    /// Wheelbase (front to rear axle), m.
    pub length_m: f64,
    /// Track width (left to right wheel), m.
    pub width_m: f64,
    pub wheel_radius_m: f64,
    pub gravity_m_s2: f64,
    /// Informational only; no channel depends on it.
    pub supply_voltage_v: f64,
}

impl RobotParams {
    /// Half the sum of wheelbase and track, the lever arm of yaw rate on wheel speed.
    pub fn yaw_lever_m(&self) -> f64 {
        (self.length_m + self.width_m) / 2.0
    }

    pub fn weight_n(&self) -> f64 {
        self.mass_kg * self.gravity_m_s2
    }
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass_kg: 12.0,
            length_m: 0.86,
            width_m: 0.52,
            wheel_radius_m: 0.076,
            gravity_m_s2: STANDARD_GRAVITY,
            supply_voltage_v: 24.0,
        }
    }
}

/// Mechanical-output constants of one wheel motor for one rotation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechConstants {
    /// Coefficient of the squared traction force, W/N².
    pub k1: f64,
    /// Coefficient of the speed-force product, W/(N·rad/s).
    pub k2: f64,
}

impl MechConstants {
    /// Measured left motor M1, forward rotation.
    pub const M1_FRONT: Self = Self { k1: 0.0019, k2: 1.5223 };
    /// Measured left motor M1, backward rotation.
    pub const M1_BACK: Self = Self { k1: 0.0021, k2: 1.5325 };
    /// Measured motor M2, forward rotation.
    pub const M2_FRONT: Self = Self { k1: 0.0022, k2: 1.5445 };
    /// Measured motor M2, backward rotation.
    pub const M2_BACK: Self = Self { k1: 0.0026, k2: 1.5326 };
}

/// Per-wheel mechanical constants, split by rotation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelMech {
    pub forward: MechConstants,
    pub backward: MechConstants,
}

impl WheelMech {
    pub fn uniform(c: MechConstants) -> Self {
        Self { forward: c, backward: c }
    }

    /// Constants for a wheel spinning at `omega_rad_s` (forward for ω ≥ 0).
    pub fn for_speed(&self, omega_rad_s: f64) -> MechConstants {
        if omega_rad_s < 0.0 {
            self.backward
        } else {
            self.forward
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    pub r0_ohm: f64,
    pub t0_c: f64,
    pub alpha_per_c: f64,
    /// Force-to-copper-loss conversion factor, W/N².
    pub tau: f64,
    pub k_t_base: f64,
    pub k_t_slope: f64,
    pub beta_t_base: f64,
    pub beta_t_slope: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Mechanical constants per wheel in FL, FR, RL, RR order.
    pub mech: [WheelMech; 4],
    pub armature_current_a: Option<f64>,
    pub emf_v: Option<f64>,
}

impl MotorParams {
    /// Speed energy factor k(T), affine in T − T0 and floored at zero.
    pub fn k_at(&self, temp_c: f64) -> f64 {
        (self.k_t_base + self.k_t_slope * (temp_c - self.t0_c)).max(0.0)
    }

    /// Temperature energy coefficient β(T), affine in T − T0 and floored at zero.
    pub fn beta_at(&self, temp_c: f64) -> f64 {
        (self.beta_t_base + self.beta_t_slope * (temp_c - self.t0_c)).max(0.0)
    }

    /// `Some` when all four wheels share one set of constants in both directions.
    pub fn uniform_mech(&self) -> Option<MechConstants> {
        let c = self.mech[0].forward;
        self.mech
            .iter()
            .all(|w| w.forward == c && w.backward == c)
            .then_some(c)
    }

    pub fn set_uniform_mech(&mut self, c: MechConstants) {
        self.mech = [WheelMech::uniform(c); 4];
    }
}

impl Default for MotorParams {
    fn default() -> Self {
        Self {
            r0_ohm: 1.0,
            t0_c: 25.0,
            alpha_per_c: 0.00393,
            tau: 0.05,
            k_t_base: 0.5,
            k_t_slope: 0.01,
            beta_t_base: 0.01,
            beta_t_slope: 0.0005,
            lambda1: 0.01,
            lambda2: 0.01,
            lambda3: 0.01,
            mech: [WheelMech::uniform(MechConstants::M1_FRONT); 4],
            armature_current_a: None,
            emf_v: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    /// Slope friction factor for the traction force balance.
    pub mu: f64,
    /// Per-wheel roller friction coefficient.
    pub mu1: f64,
    /// Body-level friction coefficient.
    pub mu2: f64,
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self { mu: 0.15, mu1: 0.001, mu2: 0.002 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub ambient_c: f64,
    /// Temperature rise per joule of copper loss, °C/J.
    pub heating_coeff_c_per_j: f64,
    /// Newtonian cooling rate, 1/s.
    pub cooling_coeff_per_s: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self { ambient_c: 25.0, heating_coeff_c_per_j: 0.002, cooling_coeff_per_s: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    pub idle_w: f64,
    pub energy_per_sample_j: f64,
    pub sample_rate_hz: f64,
}

impl Default for SensingParams {
    fn default() -> Self {
        Self { idle_w: 1.0, energy_per_sample_j: 0.02, sample_rate_hz: 25.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub base_w: f64,
    pub per_command_j: f64,
    pub command_rate_hz: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self { base_w: 2.0, per_command_j: 0.001, command_rate_hz: 100.0 }
    }
}

/// Which angle the gravity term of the slope force balance is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GravityConvention {
    /// `m·g·cos(θ_fall)·sin(γ)`, θ_fall measured from the fall line.
    #[default]
    PhysicalCos,
    /// `m·g·sin(θ)·sin(γ)` with θ the body heading, as the force balance is
    /// usually printed.
    LiteralSin,
}

impl GravityConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            GravityConvention::PhysicalCos => "physical_cos",
            GravityConvention::LiteralSin => "literal_sin",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "physical_cos" => Some(Self::PhysicalCos),
            "literal_sin" => Some(Self::LiteralSin),
            _ => None,
        }
    }
}

/// Knobs of the simulation model that are not physical constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub gravity_convention: GravityConvention,
    /// Saturation time for the time-growing loss terms; `None` keeps them literal.
    pub t_sat_s: Option<f64>,
    /// Scale of the pitch-induced acceleration `v²·dγ/ds` at slope junctions.
    pub pitch_coupling: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { gravity_convention: GravityConvention::PhysicalCos, t_sat_s: None, pitch_coupling: 1.0 }
    }
}

/// The full parameter bundle, as read from a parameter file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Params {
    pub robot: RobotParams,
    pub motor: MotorParams,
    pub friction: FrictionParams,
    pub thermal: ThermalParams,
    pub sensing: SensingParams,
    pub control: ControlParams,
    pub model: ModelOptions,
}

/// A parameter bundle that passed [`validate_params`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedParams(Params);

impl ValidatedParams {
    pub fn get(&self) -> &Params {
        &self.0
    }

    pub fn into_inner(self) -> Params {
        self.0
    }
}

impl std::ops::Deref for ValidatedParams {
    type Target = Params;

    fn deref(&self) -> &Params {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("robot.mass_kg must be positive (got {0})")]
    NonPositiveMass(f64),
    #[error("{field} must be positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("robot.wheel_radius_m = {radius} must be below half the smaller footprint side ({limit})")]
    RadiusTooLarge { radius: f64, limit: f64 },
    #[error("{field} = {value} is outside [{min}, {max}]")]
    CoefficientOutOfRange { field: String, value: f64, min: f64, max: f64 },
    #[error("{field} is not finite")]
    NonFinite { field: String },
}

impl ParamError {
    /// The configuration key this error is about.
    pub fn field(&self) -> &str {
        match self {
            ParamError::NonPositiveMass(_) => "robot.mass_kg",
            ParamError::NonPositive { field, .. } => field,
            ParamError::RadiusTooLarge { .. } => "robot.wheel_radius_m",
            ParamError::CoefficientOutOfRange { field, .. } => field,
            ParamError::NonFinite { field } => field,
        }
    }
}

/// Every invariant violation found in one parameter bundle.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ParamError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

struct Checker(Vec<ParamError>);

impl Checker {
    /// Returns true when the value is finite; records an error otherwise.
    fn finite(&mut self, field: &str, v: f64) -> bool {
        if v.is_finite() {
            true
        } else {
            self.0.push(ParamError::NonFinite { field: field.to_owned() });
            false
        }
    }

    fn positive(&mut self, field: &'static str, v: f64) -> bool {
        if !self.finite(field, v) {
            return false;
        }
        if v > 0.0 {
            true
        } else {
            self.0.push(ParamError::NonPositive { field, value: v });
            false
        }
    }

    fn range(&mut self, field: &str, v: f64, min: f64, max: f64) {
        if self.finite(field, v) && !(min..=max).contains(&v) {
            self.0.push(ParamError::CoefficientOutOfRange { field: field.to_owned(), value: v, min, max });
        }
    }

    fn nonneg(&mut self, field: &str, v: f64) {
        self.range(field, v, 0.0, f64::INFINITY);
    }
}

/// Check every invariant of the bundle and report all violations at once.
pub fn validate_params(params: Params) -> Result<ValidatedParams, ValidationErrors> {
    let mut c = Checker(Vec::new());
    let r = &params.robot;

    if c.finite("robot.mass_kg", r.mass_kg) && r.mass_kg <= 0.0 {
        c.0.push(ParamError::NonPositiveMass(r.mass_kg));
    }
    let l1 = c.positive("robot.length_m", r.length_m);
    let l2 = c.positive("robot.width_m", r.width_m);
    if c.positive("robot.wheel_radius_m", r.wheel_radius_m) && l1 && l2 {
        let limit = r.length_m.min(r.width_m) / 2.0;
        if r.wheel_radius_m >= limit {
            c.0.push(ParamError::RadiusTooLarge { radius: r.wheel_radius_m, limit });
        }
    }
    c.positive("robot.gravity_m_s2", r.gravity_m_s2);
    c.positive("robot.supply_voltage_v", r.supply_voltage_v);

    let m = &params.motor;
    c.positive("motor.r0_ohm", m.r0_ohm);
    c.range("motor.t0_c", m.t0_c, ABSOLUTE_ZERO_C, f64::INFINITY);
    c.nonneg("motor.alpha_per_c", m.alpha_per_c);
    c.nonneg("motor.tau", m.tau);
    c.nonneg("motor.k_t_base", m.k_t_base);
    c.finite("motor.k_t_slope", m.k_t_slope);
    c.nonneg("motor.beta_t_base", m.beta_t_base);
    c.finite("motor.beta_t_slope", m.beta_t_slope);
    c.nonneg("motor.lambda1", m.lambda1);
    c.nonneg("motor.lambda2", m.lambda2);
    c.nonneg("motor.lambda3", m.lambda3);
    for (i, w) in m.mech.iter().enumerate() {
        c.nonneg(&format!("motor.wheel.{i}.k1_forward"), w.forward.k1);
        c.nonneg(&format!("motor.wheel.{i}.k2_forward"), w.forward.k2);
        c.nonneg(&format!("motor.wheel.{i}.k1_backward"), w.backward.k1);
        c.nonneg(&format!("motor.wheel.{i}.k2_backward"), w.backward.k2);
    }
    if let Some(i) = m.armature_current_a {
        c.finite("motor.armature_current_a", i);
    }
    if let Some(e) = m.emf_v {
        c.finite("motor.emf_v", e);
    }

    let f = &params.friction;
    c.range("friction.mu", f.mu, 0.0, 1.0);
    c.range("friction.mu1", f.mu1, 0.0, 1.0);
    c.range("friction.mu2", f.mu2, 0.0, 1.0);

    let t = &params.thermal;
    c.range("thermal.ambient_c", t.ambient_c, ABSOLUTE_ZERO_C, f64::INFINITY);
    c.nonneg("thermal.heating_coeff_c_per_j", t.heating_coeff_c_per_j);
    c.nonneg("thermal.cooling_coeff_per_s", t.cooling_coeff_per_s);

    let s = &params.sensing;
    c.nonneg("sensing.idle_w", s.idle_w);
    c.nonneg("sensing.energy_per_sample_j", s.energy_per_sample_j);
    c.nonneg("sensing.sample_rate_hz", s.sample_rate_hz);

    let k = &params.control;
    c.nonneg("control.base_w", k.base_w);
    c.nonneg("control.per_command_j", k.per_command_j);
    c.nonneg("control.command_rate_hz", k.command_rate_hz);

    if let Some(ts) = params.model.t_sat_s {
        c.positive("model.t_sat_s", ts);
    }
    c.nonneg("model.pitch_coupling", params.model.pitch_coupling);

    if c.0.is_empty() {
        Ok(ValidatedParams(params))
    } else {
        Err(ValidationErrors(c.0))
    }
}

/// Center-of-gravity offset from the footprint center.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CogOffset {
    /// Longitudinal, positive toward the front.
    pub x_m: f64,
    /// Lateral, positive toward the left.
    pub y_m: f64,
}

impl CogOffset {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Self { x_m, y_m }
    }

    pub fn inside(&self, robot: &RobotParams) -> bool {
        self.x_m.abs() < robot.length_m / 2.0 && self.y_m.abs() < robot.width_m / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainSegment {
    pub length_m: f64,
    /// Signed incline: positive uphill, negative downhill.
    pub incline_deg: f64,
    /// Multiplier on all friction coefficients while on this segment.
    pub friction_scale: f64,
    /// Cruise speed override for this segment; the scenario speed otherwise.
    pub speed_m_s: Option<f64>,
}

impl TerrainSegment {
    pub fn new(length_m: f64, incline_deg: f64) -> Self {
        Self { length_m, incline_deg, friction_scale: 1.0, speed_m_s: None }
    }

    pub fn incline_rad(&self) -> f64 {
        self.incline_deg.to_radians()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub segments: Vec<TerrainSegment>,
    pub commanded_speed_m_s: f64,
    /// Direction of motion in the body frame, degrees from the forward axis.
    pub heading_deg: f64,
    pub cog: CogOffset,
    pub initial_temp_c: f64,
    pub sample_dt_s: f64,
    /// Launch/stop and speed-change acceleration limit. `None` means ideal
    /// speed tracking: the robot is at cruise speed from the first sample.
    pub accel_m_s2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("scenario has no segments")]
    EmptyScenario,
    #[error("{field} = {value} violates: {rule}")]
    Invalid { field: String, value: f64, rule: &'static str },
    #[error("CoG offset ({x_m}, {y_m}) m lies outside the wheel footprint")]
    CogOutsideFootprint { x_m: f64, y_m: f64 },
}

impl Scenario {
    /// Reference ramp course: flat, up, flat, down at constant speed.
    pub fn ramp_course(incline_deg: f64, speed_m_s: f64) -> Self {
        Self {
            segments: vec![
                TerrainSegment::new(2.0, 0.0),
                TerrainSegment::new(4.0, incline_deg),
                TerrainSegment::new(2.0, 0.0),
                TerrainSegment::new(4.0, -incline_deg),
            ],
            commanded_speed_m_s: speed_m_s,
            ..Self::flat(4.0, speed_m_s)
        }
    }

    pub fn flat(length_m: f64, speed_m_s: f64) -> Self {
        Self {
            segments: vec![TerrainSegment::new(length_m, 0.0)],
            commanded_speed_m_s: speed_m_s,
            heading_deg: 0.0,
            cog: CogOffset::default(),
            initial_temp_c: 25.0,
            sample_dt_s: 0.01,
            accel_m_s2: None,
        }
    }

    pub fn total_length_m(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    pub fn segment_speed(&self, i: usize) -> f64 {
        self.segments[i].speed_m_s.unwrap_or(self.commanded_speed_m_s)
    }

    pub fn heading_rad(&self) -> f64 {
        self.heading_deg.to_radians()
    }

    /// Check the scenario's own invariants (footprint checks need the robot, see
    /// [`Scenario::validate_for`]).
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.segments.is_empty() {
            return Err(ScenarioError::EmptyScenario);
        }
        fn bad(field: String, value: f64, rule: &'static str) -> ScenarioError {
            ScenarioError::Invalid { field, value, rule }
        }
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(field.to_owned(), v, "finite and > 0"))
            }
        };
        positive("scenario.commanded_speed_m_s", self.commanded_speed_m_s)?;
        positive("scenario.sample_dt_s", self.sample_dt_s)?;
        if let Some(a) = self.accel_m_s2 {
            positive("scenario.accel_m_s2", a)?;
        }
        if !self.heading_deg.is_finite() {
            return Err(bad("scenario.heading_deg".into(), self.heading_deg, "finite"));
        }
        if !(self.initial_temp_c.is_finite() && self.initial_temp_c >= ABSOLUTE_ZERO_C) {
            return Err(bad("scenario.initial_temp_c".into(), self.initial_temp_c, ">= -273.15"));
        }
        if !(self.cog.x_m.is_finite() && self.cog.y_m.is_finite()) {
            return Err(bad("scenario.cog_x_m".into(), self.cog.x_m, "finite"));
        }
        for (i, s) in self.segments.iter().enumerate() {
            positive(&format!("segment.{i}.length_m"), s.length_m)?;
            if !(s.incline_deg.is_finite() && s.incline_deg.abs() < 90.0) {
                return Err(bad(format!("segment.{i}.incline_deg"), s.incline_deg, "|incline| < 90"));
            }
            positive(&format!("segment.{i}.friction_scale"), s.friction_scale)?;
            if let Some(v) = s.speed_m_s {
                positive(&format!("segment.{i}.speed_m_s"), v)?;
            }
        }
        Ok(())
    }

    pub fn validate_for(&self, robot: &RobotParams) -> Result<(), ScenarioError> {
        self.validate()?;
        if !self.cog.inside(robot) {
            return Err(ScenarioError::CogOutsideFootprint { x_m: self.cog.x_m, y_m: self.cog.y_m });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_robot_is_valid() {
        let p = Params::default();
        assert_eq!(p.robot.mass_kg, 12.0);
        assert_eq!(p.robot.length_m, 0.86);
        assert_eq!(p.robot.width_m, 0.52);
        assert!(validate_params(p).is_ok());
    }

    #[test]
    fn zero_mass_is_named() {
        let mut p = Params::default();
        p.robot.mass_kg = 0.0;
        let errs = validate_params(p).unwrap_err().0;
        assert_eq!(errs, vec![ParamError::NonPositiveMass(0.0)]);
        assert_eq!(errs[0].field(), "robot.mass_kg");
    }

    #[test]
    fn mu_above_one_is_out_of_range() {
        let mut p = Params::default();
        p.friction.mu = 1.5;
        let errs = validate_params(p).unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert!(matches!(&errs[0], ParamError::CoefficientOutOfRange { field, .. } if field == "friction.mu"));
    }

    #[test]
    fn oversized_wheel_rejected() {
        let mut p = Params::default();
        p.robot.wheel_radius_m = 0.26;
        let errs = validate_params(p).unwrap_err().0;
        assert!(matches!(errs[..], [ParamError::RadiusTooLarge { .. }]));
    }

    #[test]
    fn all_violations_reported() {
        let mut p = Params::default();
        p.robot.mass_kg = -1.0;
        p.friction.mu2 = 2.0;
        p.motor.lambda2 = -0.1;
        p.sensing.sample_rate_hz = f64::NAN;
        let errs = validate_params(p).unwrap_err().0;
        let fields: Vec<_> = errs.iter().map(|e| e.field().to_owned()).collect();
        assert_eq!(fields, ["robot.mass_kg", "motor.lambda2", "friction.mu2", "sensing.sample_rate_hz"]);
    }

    #[test]
    fn affine_temperature_laws() {
        let m = MotorParams { k_t_base: 0.5, k_t_slope: 0.01, beta_t_base: 0.02, beta_t_slope: -0.001, ..Default::default() };
        assert_eq!(m.k_at(m.t0_c), 0.5);
        assert!((m.k_at(m.t0_c + 10.0) - 0.6).abs() < 1e-15);
        assert!((m.beta_at(m.t0_c + 10.0) - 0.01).abs() < 1e-15);
        // floored at zero far below the slope's root
        assert_eq!(m.beta_at(m.t0_c + 100.0), 0.0);
    }

    #[test]
    fn ramp_course_shape() {
        let s = Scenario::ramp_course(10.0, 0.5);
        let inclines: Vec<_> = s.segments.iter().map(|s| s.incline_deg).collect();
        assert_eq!(inclines, [0.0, 10.0, 0.0, -10.0]);
        assert_eq!(s.total_length_m(), 12.0);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn cog_on_footprint_edge_rejected() {
        let robot = RobotParams::default();
        let mut s = Scenario::flat(4.0, 0.5);
        s.cog = CogOffset::new(robot.length_m / 2.0, 0.0);
        assert!(matches!(s.validate_for(&robot), Err(ScenarioError::CogOutsideFootprint { .. })));
    }

    #[test]
    fn steep_segment_rejected() {
        let mut s = Scenario::flat(4.0, 0.5);
        s.segments[0].incline_deg = 95.0;
        match s.validate() {
            Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "segment.0.incline_deg"),
            other => panic!("{other:?}"),
        }
    }
}
