//! Instantaneous power decomposition.
//!
//! Motion power is the sum of four loss/output channels (copper, iron,
//! mechanical output, Mecanum roller friction); control and sensing are
//! separate channels on top of it.

use thiserror::Error;

use crate::kinematics::BodyTwist;
use crate::params::{ControlParams, FrictionParams, MechConstants, MotorParams, Params, SensingParams};
use crate::statics::WheelLoads;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("elapsed time must be non-negative (got {0})")]
    NegativeTime(f64),
    #[error("power channel {channel} is negative ({value})")]
    NegativeChannel { channel: &'static str, value: f64 },
}

/// Power by channel, watts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerBreakdown {
    pub copper_w: f64,
    pub iron_w: f64,
    pub mechanical_w: f64,
    pub friction_w: f64,
    pub motion_w: f64,
    pub control_w: f64,
    pub sensing_w: f64,
    pub total_w: f64,
}

impl PowerBreakdown {
    pub fn new(copper_w: f64, iron_w: f64, mechanical_w: f64, friction_w: f64, control_w: f64, sensing_w: f64) -> Self {
        let motion_w = copper_w + iron_w + mechanical_w + friction_w;
        Self {
            copper_w,
            iron_w,
            mechanical_w,
            friction_w,
            motion_w,
            control_w,
            sensing_w,
            total_w: motion_w + control_w + sensing_w,
        }
    }

    /// The six primary channels in report order: copper, iron, mechanical,
    /// friction, control, sensing.
    pub fn channels(&self) -> [f64; 6] {
        [self.copper_w, self.iron_w, self.mechanical_w, self.friction_w, self.control_w, self.sensing_w]
    }
}

fn check_time(t_s: f64) -> Result<(), PowerError> {
    if t_s >= 0.0 {
        Ok(())
    } else {
        Err(PowerError::NegativeTime(t_s))
    }
}

/// Winding loss from traction force, temperature and run time:
/// `τ·F² + k(T) + β(T)·t`.
pub fn copper_loss(f_wheel_n: f64, temp_c: f64, t_s: f64, motor: &MotorParams) -> Result<f64, PowerError> {
    check_time(t_s)?;
    Ok(motor.tau * f_wheel_n * f_wheel_n + motor.k_at(temp_c) + motor.beta_at(temp_c) * t_s)
}

/// `I²·R`, for cross-checking against measured armature current.
pub fn copper_loss_from_current(i_a: f64, r_ohm: f64) -> f64 {
    i_a * i_a * r_ohm
}

/// The three unweighted iron-loss terms: `Σ v_i·a_i`, `t·a·v²`, `t²·a·v²`.
pub fn iron_terms(v_i: &[f64; 4], a_i: &[f64; 4], v: f64, a: f64, t_s: f64) -> [f64; 3] {
    let wheel: f64 = v_i.iter().zip(a_i).map(|(v, a)| v * a).sum();
    let body = a * v * v;
    [wheel, t_s * body, t_s * t_s * body]
}

/// Aggregate core loss, floored at zero so that braking never yields
/// negative loss.
pub fn iron_loss(v_i: &[f64; 4], a_i: &[f64; 4], v: f64, a: f64, t_s: f64, motor: &MotorParams) -> Result<f64, PowerError> {
    check_time(t_s)?;
    let [w, b1, b2] = iron_terms(v_i, a_i, v, a, t_s);
    Ok((motor.lambda1 * w + motor.lambda2 * b1 + motor.lambda3 * b2).max(0.0))
}

/// Mechanical output of one wheel: `k1·F² + k2·|ω·F|`. Braking power is
/// counted by magnitude (dissipated, not regenerated).
pub fn mechanical_output(f_wheel_n: f64, omega_rad_s: f64, c: MechConstants) -> f64 {
    c.k1 * f_wheel_n * f_wheel_n + c.k2 * (omega_rad_s * f_wheel_n).abs()
}

/// Sum of [`mechanical_output`] over the four wheels, picking each wheel's
/// forward or backward constants from the sign of its speed.
pub fn mechanical_output_all(f_i: &[f64; 4], omega_i: &[f64; 4], motor: &MotorParams) -> f64 {
    (0..4)
        .map(|i| mechanical_output(f_i[i], omega_i[i], motor.mech[i].for_speed(omega_i[i])))
        .sum()
}

/// The two unweighted friction terms: `Σ N_i·|v_i|·|cosθ|` and `N·|v|·|cosθ|·cosγ`.
pub fn friction_terms(loads: &WheelLoads, v_i: &[f64; 4], v: f64, theta_rad: f64, incline_rad: f64) -> [f64; 2] {
    let c = theta_rad.cos().abs();
    let wheel: f64 = loads.n_n.iter().zip(v_i).map(|(n, v)| n * v.abs()).sum();
    [wheel * c, loads.total_n * v.abs() * c * incline_rad.cos()]
}

/// Mecanum roller friction loss. Absolute values keep it dissipative.
pub fn friction_loss(
    loads: &WheelLoads,
    v_i: &[f64; 4],
    v: f64,
    theta_rad: f64,
    incline_rad: f64,
    friction: &FrictionParams,
) -> f64 {
    let [w, b] = friction_terms(loads, v_i, v, theta_rad, incline_rad);
    friction.mu1 * w + friction.mu2 * b
}

/// Sum of the four motion channels.
pub fn motor_power(copper_w: f64, iron_w: f64, mechanical_w: f64, friction_w: f64) -> Result<f64, PowerError> {
    for (channel, value) in [("copper", copper_w), ("iron", iron_w), ("mechanical", mechanical_w), ("friction", friction_w)] {
        if value < 0.0 {
            return Err(PowerError::NegativeChannel { channel, value });
        }
    }
    Ok(copper_w + iron_w + mechanical_w + friction_w)
}

/// Idle draw plus a fixed energy per sensor sample.
pub fn sensing_power(cfg: &SensingParams) -> f64 {
    cfg.idle_w + cfg.energy_per_sample_j * cfg.sample_rate_hz
}

pub fn control_power(cfg: &ControlParams) -> f64 {
    cfg.base_w + cfg.per_command_j * cfg.command_rate_hz
}

impl SensingParams {
    /// Same sensor with the sample rate set from a sampling period.
    pub fn with_period(self, period_s: f64) -> Self {
        Self { sample_rate_hz: 1.0 / period_s, ..self }
    }
}

/// Everything the power model needs to know about the robot at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub t_s: f64,
    /// Run time fed to the time-growing loss terms (saturated if configured).
    pub t_motion_s: f64,
    pub s_m: f64,
    pub incline_rad: f64,
    pub friction_scale: f64,
    pub twist: BodyTwist,
    pub theta_rad: f64,
    pub speed_m_s: f64,
    pub accel_m_s2: f64,
    pub wheel_omega_rad_s: [f64; 4],
    pub wheel_v_m_s: [f64; 4],
    pub wheel_a_m_s2: [f64; 4],
    pub loads: WheelLoads,
    pub traction_n: [f64; 4],
    pub traction_total_n: f64,
    pub temp_c: f64,
}

/// Evaluate every channel at one state.
pub fn evaluate(state: &MotionState, params: &Params) -> Result<PowerBreakdown, PowerError> {
    let motor = &params.motor;
    let copper = copper_loss(state.traction_total_n, state.temp_c, state.t_motion_s, motor)?;
    let iron = iron_loss(
        &state.wheel_v_m_s,
        &state.wheel_a_m_s2,
        state.speed_m_s,
        state.accel_m_s2,
        state.t_motion_s,
        motor,
    )?;
    let mech = mechanical_output_all(&state.traction_n, &state.wheel_omega_rad_s, motor);
    let scaled = FrictionParams {
        mu: params.friction.mu * state.friction_scale,
        mu1: params.friction.mu1 * state.friction_scale,
        mu2: params.friction.mu2 * state.friction_scale,
    };
    let fric = friction_loss(&state.loads, &state.wheel_v_m_s, state.speed_m_s, state.theta_rad, state.incline_rad, &scaled);
    motor_power(copper, iron, mech, fric)?;
    Ok(PowerBreakdown::new(copper, iron, mech, fric, control_power(&params.control), sensing_power(&params.sensing)))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::params::{CogOffset, RobotParams};
    use crate::statics::wheel_loads;

    fn motor_with(tau: f64, k: f64, beta: f64) -> MotorParams {
        MotorParams { tau, k_t_base: k, k_t_slope: 0.0, beta_t_base: beta, beta_t_slope: 0.0, ..Default::default() }
    }

    #[test]
    fn copper_examples() {
        let m = motor_with(0.05, 0.0, 0.0);
        assert_eq!(copper_loss(0.0, 25.0, 3.0, &m).unwrap(), 0.0);
        let m = motor_with(0.05, 0.5, 0.01);
        assert_abs_diff_eq!(copper_loss(10.0, 25.0, 10.0, &m).unwrap(), 5.6, epsilon = 1e-12);
        assert_eq!(copper_loss(1.0, 25.0, -1.0, &m), Err(PowerError::NegativeTime(-1.0)));
    }

    #[test]
    fn copper_from_current() {
        assert_eq!(copper_loss_from_current(0.0, 3.0), 0.0);
        assert_abs_diff_eq!(copper_loss_from_current(2.0, 1.1572), 4.6288, epsilon = 1e-12);
        assert_abs_diff_eq!(copper_loss_from_current(4.0, 1.1572), 4.0 * copper_loss_from_current(2.0, 1.1572), epsilon = 1e-12);
    }

    fn lambdas(l: f64) -> MotorParams {
        MotorParams { lambda1: l, lambda2: l, lambda3: l, ..Default::default() }
    }

    #[test]
    fn iron_examples() {
        let m = lambdas(0.01);
        assert_eq!(iron_loss(&[1.0; 4], &[0.0; 4], 1.0, 0.0, 5.0, &m).unwrap(), 0.0);
        assert_abs_diff_eq!(iron_loss(&[1.0; 4], &[0.5; 4], 1.0, 0.5, 2.0, &m).unwrap(), 0.05, epsilon = 1e-12);
        assert_eq!(iron_loss(&[1.0; 4], &[-0.5; 4], 1.0, -0.5, 2.0, &m).unwrap(), 0.0);
        assert!(iron_loss(&[1.0; 4], &[0.5; 4], 1.0, 0.5, -2.0, &m).is_err());
    }

    #[test]
    fn mechanical_examples() {
        let c = MechConstants::M1_FRONT;
        assert_eq!(mechanical_output(0.0, 10.0, c), 0.0);
        assert_abs_diff_eq!(mechanical_output(10.0, 10.0, c), 152.42, epsilon = 1e-9);
        assert_abs_diff_eq!(mechanical_output(10.0, 0.0, c), 0.19, epsilon = 1e-12);
        // braking counts by magnitude
        assert_abs_diff_eq!(mechanical_output(-10.0, 10.0, c), 152.42, epsilon = 1e-9);
    }

    #[test]
    fn mechanical_direction_table() {
        let mut m = MotorParams::default();
        m.mech[1].backward = MechConstants::M1_BACK;
        let f = [1.0, 2.0, 0.0, 0.0];
        let got = mechanical_output_all(&f, &[3.0, -3.0, 0.0, 0.0], &m);
        let want = mechanical_output(1.0, 3.0, MechConstants::M1_FRONT) + mechanical_output(2.0, -3.0, MechConstants::M1_BACK);
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
    }

    #[test]
    fn friction_examples() {
        let loads = wheel_loads(12.0, CogOffset::default(), 0.0, &RobotParams::default()).unwrap();
        let fr = FrictionParams { mu: 0.0, mu1: 0.001, mu2: 0.002 };
        assert_eq!(friction_loss(&loads, &[0.0; 4], 0.0, 0.0, 0.0, &fr), 0.0);
        let p = friction_loss(&loads, &[1.0; 4], 1.0, 0.0, 0.0, &fr);
        assert_abs_diff_eq!(p, 0.001 * 4.0 * 29.43 + 0.002 * 117.72, epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.3531, epsilon = 1e-4);
        let lateral = friction_loss(&loads, &[-1.0, 1.0, 1.0, -1.0], 1.0, std::f64::consts::FRAC_PI_2, 0.0, &fr);
        assert_abs_diff_eq!(lateral, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn motor_power_examples() {
        assert_eq!(motor_power(0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        let f = 0.001 * 4.0 * 29.43 + 0.002 * 117.72;
        let p = motor_power(5.6, 0.05, 152.42, f).unwrap();
        assert_abs_diff_eq!(p, 158.42, epsilon = 5e-3);
        assert_eq!(p, motor_power(f, 152.42, 0.05, 5.6).unwrap());
        assert!(matches!(motor_power(1.0, -0.1, 0.0, 0.0), Err(PowerError::NegativeChannel { channel: "iron", .. })));
    }

    #[test]
    fn sensing_examples() {
        let s = SensingParams { idle_w: 1.0, energy_per_sample_j: 0.02, sample_rate_hz: 0.0 };
        assert_eq!(sensing_power(&s), 1.0);
        let p25 = sensing_power(&s.with_period(0.04));
        let p50 = sensing_power(&s.with_period(0.02));
        assert_abs_diff_eq!(p25, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p50, 2.0, epsilon = 1e-12);
        assert!(p50 > p25);
    }

    #[test]
    fn control_examples() {
        let c = ControlParams { base_w: 2.0, per_command_j: 0.001, command_rate_hz: 0.0 };
        assert_eq!(control_power(&c), 2.0);
        let c = ControlParams { command_rate_hz: 100.0, ..c };
        assert_abs_diff_eq!(control_power(&c), 2.1, epsilon = 1e-12);
        assert!(control_power(&ControlParams { command_rate_hz: 101.0, ..c }) > control_power(&c));
    }

    fn arb_state() -> impl Strategy<Value = MotionState> {
        (
            prop::array::uniform4(-20.0..20.0f64),
            prop::array::uniform4(-5.0..5.0f64),
            (-3.0..3.0f64, -3.0..3.0f64, 0.0..100.0f64, -30.0..150.0f64),
            (-1.5..1.5f64, -3.2..3.2f64, -40.0..40.0f64, 0.1..3.0f64),
            (-0.4..0.4f64, -0.25..0.25f64),
        )
            .prop_map(|(omega, a_i, (v, a, t, temp), (gamma, theta, f, scale), (cx, cy))| {
                let robot = RobotParams::default();
                let loads = wheel_loads(12.0, CogOffset::new(cx, cy), gamma, &robot).unwrap();
                let shares = loads.shares();
                MotionState {
                    t_s: t,
                    t_motion_s: t,
                    s_m: 0.0,
                    incline_rad: gamma,
                    friction_scale: scale,
                    twist: BodyTwist::default(),
                    theta_rad: theta,
                    speed_m_s: v,
                    accel_m_s2: a,
                    wheel_omega_rad_s: omega,
                    wheel_v_m_s: omega.map(|w| w * robot.wheel_radius_m),
                    wheel_a_m_s2: a_i,
                    loads,
                    traction_n: shares.map(|s| s * f),
                    traction_total_n: f,
                    temp_c: temp,
                }
            })
    }

    proptest! {
        #[test]
        fn channels_nonnegative_and_decompose(st in arb_state()) {
            let p = Params { friction: FrictionParams { mu: 0.1, mu1: 0.01, mu2: 0.02 }, ..Params::default() };
            let b = evaluate(&st, &p).unwrap();
            for c in b.channels() {
                prop_assert!(c >= 0.0);
            }
            prop_assert_eq!(b.motion_w, b.copper_w + b.iron_w + b.mechanical_w + b.friction_w);
            prop_assert_eq!(b.total_w, b.motion_w + b.control_w + b.sensing_w);
        }

        #[test]
        fn losses_nondecreasing_in_time(v in 0.0..3.0f64, a in 0.0..2.0f64, t in 0.0..50.0f64, dt in 0.0..10.0f64, f in -30.0..30.0f64) {
            let m = MotorParams::default();
            let vi = [v; 4];
            let ai = [a; 4];
            prop_assert!(iron_loss(&vi, &ai, v, a, t + dt, &m).unwrap() >= iron_loss(&vi, &ai, v, a, t, &m).unwrap());
            prop_assert!(copper_loss(f, 40.0, t + dt, &m).unwrap() >= copper_loss(f, 40.0, t, &m).unwrap());
        }

        #[test]
        fn friction_linear_in_speed(v in 0.0..3.0f64, k in 0.0..5.0f64, theta in -3.0..3.0f64) {
            let loads = wheel_loads(12.0, CogOffset::new(0.1, -0.05), 0.1, &RobotParams::default()).unwrap();
            let fr = FrictionParams { mu: 0.0, mu1: 0.01, mu2: 0.02 };
            let vi = [v, -v * 0.5, v * 0.3, v];
            let p1 = friction_loss(&loads, &vi, v, theta, 0.1, &fr);
            let pk = friction_loss(&loads, &vi.map(|x| x * k), v * k, theta, 0.1, &fr);
            prop_assert!((pk - k * p1).abs() <= 1e-9 * (1.0 + pk.abs()));
        }

        #[test]
        fn sensing_increasing_in_rate(f in 0.0..500.0f64, df in 0.001..100.0f64, e in 1e-4..1.0f64) {
            let s = SensingParams { idle_w: 1.0, energy_per_sample_j: e, sample_rate_hz: f };
            let faster = SensingParams { sample_rate_hz: f + df, ..s };
            prop_assert!(sensing_power(&faster) > sensing_power(&s));
        }
    }
}
