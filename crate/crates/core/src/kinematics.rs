//! Mecanum X-configuration kinematics.
//!
//! Wheels are ordered FL, FR, RL, RR with 45° rollers forming an X seen from
//! above. Body frame: +x forward, +y left, +z up.

use thiserror::Error;

use crate::params::RobotParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub vx_m_s: f64,
    pub vy_m_s: f64,
    pub wz_rad_s: f64,
}

impl BodyTwist {
    pub fn new(vx_m_s: f64, vy_m_s: f64, wz_rad_s: f64) -> Self {
        Self { vx_m_s, vy_m_s, wz_rad_s }
    }

    /// Pure translation at `speed` along `heading_rad` from the forward axis.
    pub fn translation(speed: f64, heading_rad: f64) -> Self {
        let (s, c) = heading_rad.sin_cos();
        Self::new(speed * c, speed * s, 0.0)
    }

    /// Translational speed magnitude.
    pub fn speed(&self) -> f64 {
        self.vx_m_s.hypot(self.vy_m_s)
    }
}

/// Wheel shaft speeds in FL, FR, RL, RR order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WheelSpeeds {
    pub omega_rad_s: [f64; 4],
}

impl WheelSpeeds {
    pub fn new(omega_rad_s: [f64; 4]) -> Self {
        Self { omega_rad_s }
    }

    /// Rim speeds `r·ω`, m/s.
    pub fn linear(&self, wheel_radius_m: f64) -> [f64; 4] {
        self.omega_rad_s.map(|w| w * wheel_radius_m)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("heading is undefined at zero translational velocity")]
    ZeroVelocity,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("timestamps must be strictly increasing (sample {0})")]
    NonMonotonicTime(usize),
}

// Rows of the inverse Jacobian before division by r: coefficients of (vx, vy, k·wz).
const ROWS: [[f64; 3]; 4] = [[1.0, -1.0, -1.0], [1.0, 1.0, 1.0], [1.0, 1.0, -1.0], [1.0, -1.0, 1.0]];

pub fn inverse_kinematics(twist: BodyTwist, robot: &RobotParams) -> WheelSpeeds {
    let k = robot.yaw_lever_m();
    let r = robot.wheel_radius_m;
    let u = [twist.vx_m_s, twist.vy_m_s, k * twist.wz_rad_s];
    WheelSpeeds::new(ROWS.map(|row| (row[0] * u[0] + row[1] * u[1] + row[2] * u[2]) / r))
}

/// Least-squares body twist for a set of wheel speeds.
///
/// The inverse Jacobian's columns are mutually orthogonal with squared norm 4,
/// so the pseudo-inverse is its transpose divided by 4.
pub fn forward_kinematics(speeds: WheelSpeeds, robot: &RobotParams) -> BodyTwist {
    let k = robot.yaw_lever_m();
    let r = robot.wheel_radius_m;
    let mut u = [0.0; 3];
    for (row, w) in ROWS.iter().zip(speeds.omega_rad_s) {
        for (uj, c) in u.iter_mut().zip(row) {
            *uj += c * w;
        }
    }
    BodyTwist::new(r * u[0] / 4.0, r * u[1] / 4.0, r * u[2] / (4.0 * k))
}

/// Euclidean norm of the wheel-speed mismatch left after the least-squares fit.
pub fn kinematic_residual(speeds: WheelSpeeds, robot: &RobotParams) -> f64 {
    let fit = inverse_kinematics(forward_kinematics(speeds, robot), robot);
    fit.omega_rad_s
        .iter()
        .zip(speeds.omega_rad_s)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Direction of translation relative to the forward axis, in (−π, π].
pub fn heading_angle(twist: BodyTwist) -> Result<f64, KinematicsError> {
    if twist.vx_m_s == 0.0 && twist.vy_m_s == 0.0 {
        return Err(KinematicsError::ZeroVelocity);
    }
    Ok(twist.vy_m_s.atan2(twist.vx_m_s))
}

/// Finite-difference derivative of a sampled signal: central differences in
/// the interior, one-sided at both ends. Timestamps may be non-uniform.
pub fn differentiate(t: &[f64], x: &[f64]) -> Result<Vec<f64>, KinematicsError> {
    assert_eq!(t.len(), x.len(), "time and value series differ in length");
    let n = t.len();
    if n < 2 {
        return Err(KinematicsError::TooFewSamples(n));
    }
    if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
        return Err(KinematicsError::NonMonotonicTime(i + 1));
    }
    Ok((0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (x[b] - x[a]) / (t[b] - t[a])
        })
        .collect())
}

/// Per-wheel rim accelerations (m/s²) from timestamped wheel speeds.
pub fn differentiate_wheel_speeds(
    samples: &[(f64, WheelSpeeds)],
    robot: &RobotParams,
) -> Result<Vec<[f64; 4]>, KinematicsError> {
    let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut out = vec![[0.0; 4]; samples.len()];
    for w in 0..4 {
        let lin: Vec<f64> = samples.iter().map(|s| s.1.omega_rad_s[w] * robot.wheel_radius_m).collect();
        for (o, a) in out.iter_mut().zip(differentiate(&t, &lin)?) {
            o[w] = a;
        }
    }
    Ok(out)
}
