//! Arc-length motion profile of a scenario.
//!
//! Speed is tracked ideally: either instantly at each segment's cruise speed,
//! or, with an acceleration limit, as a trapezoidal profile that launches from
//! rest, changes speed at the start of each segment, and brakes to rest at the
//! end. In both cases v² is piecewise linear in arc length, so every piece has
//! constant acceleration and maps exactly to time.
//!
//! The incline seen by the chassis is the raw segment incline averaged over
//! one wheelbase centered on the robot, which turns each junction into a
//! linear ramp of length L1.

use crate::params::{Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    s0: f64,
    s1: f64,
    t0: f64,
    t1: f64,
    v0: f64,
    accel: f64,
}

impl Piece {
    fn state_at(&self, t: f64) -> (f64, f64) {
        let tau = (t - self.t0).max(0.0);
        let s = (self.s0 + self.v0 * tau + 0.5 * self.accel * tau * tau).clamp(self.s0, self.s1);
        let v = (self.v0 + self.accel * tau).max(0.0);
        (s, v)
    }

    fn time_at(&self, s: f64) -> f64 {
        let ds = (s - self.s0).max(0.0);
        if self.accel == 0.0 {
            self.t0 + ds / self.v0
        } else {
            let v = (self.v0 * self.v0 + 2.0 * self.accel * ds).max(0.0).sqrt();
            self.t0 + (v - self.v0) / self.accel
        }
    }
}

/// Speed as a function of time and arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pieces: Vec<Piece>,
}

/// A piece in (s, v²) space before timing: v²(s) = q0 + slope·(s − s0).
#[derive(Debug, Clone, Copy)]
struct SqPiece {
    s0: f64,
    s1: f64,
    q0: f64,
    slope: f64,
}

impl SqPiece {
    fn q1(&self) -> f64 {
        (self.q0 + self.slope * (self.s1 - self.s0)).max(0.0)
    }
}

impl SpeedProfile {
    pub fn new(scenario: &Scenario) -> Result<Self, ScenarioError> {
        if scenario.segments.is_empty() {
            return Err(ScenarioError::EmptyScenario);
        }
        let sq = match scenario.accel_m_s2 {
            None => ideal_pieces(scenario),
            Some(a) => limited_pieces(scenario, a),
        };
        let mut pieces = Vec::with_capacity(sq.len());
        let mut t = 0.0;
        for p in sq {
            let v0 = p.q0.max(0.0).sqrt();
            let v1 = p.q1().sqrt();
            let accel = p.slope / 2.0;
            let dt = if accel == 0.0 { (p.s1 - p.s0) / v0 } else { (v1 - v0) / accel };
            pieces.push(Piece { s0: p.s0, s1: p.s1, t0: t, t1: t + dt, v0, accel });
            t += dt;
        }
        Ok(Self { pieces })
    }

    pub fn duration_s(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.t1)
    }

    pub fn length_m(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.s1)
    }

    fn piece_at_time(&self, t: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.t1 <= t);
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    fn piece_at_s(&self, s: f64) -> &Piece {
        let i = self.pieces.partition_point(|p| p.s1 <= s);
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    /// (arc position, speed, tangential acceleration) at time `t`.
    pub fn at_time(&self, t: f64) -> (f64, f64, f64) {
        let p = self.piece_at_time(t);
        let (s, v) = p.state_at(t);
        (s, v, p.accel)
    }

    /// Time at which the robot reaches arc position `s`.
    pub fn time_at(&self, s: f64) -> f64 {
        self.piece_at_s(s).time_at(s)
    }

    /// Times where the acceleration changes.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().map(|p| p.t1)
    }
}

fn segment_bounds(scenario: &Scenario) -> Vec<(f64, f64)> {
    let mut s = 0.0;
    scenario
        .segments
        .iter()
        .map(|g| {
            let b = (s, s + g.length_m);
            s += g.length_m;
            b
        })
        .collect()
}

fn ideal_pieces(scenario: &Scenario) -> Vec<SqPiece> {
    segment_bounds(scenario)
        .into_iter()
        .enumerate()
        .map(|(i, (s0, s1))| {
            let v = scenario.segment_speed(i);
            SqPiece { s0, s1, q0: v * v, slope: 0.0 }
        })
        .collect()
}

fn limited_pieces(scenario: &Scenario, accel: f64) -> Vec<SqPiece> {
    let total = scenario.total_length_m();
    let mut fwd = Vec::new();
    let mut q = 0.0;
    for (i, (a, b)) in segment_bounds(scenario).into_iter().enumerate() {
        let target = scenario.segment_speed(i).powi(2);
        let mut pos = a;
        if q != target {
            let slope = if q < target { 2.0 * accel } else { -2.0 * accel };
            let end = (pos + (target - q).abs() / (2.0 * accel)).min(b);
            let p = SqPiece { s0: pos, s1: end, q0: q, slope };
            q = if end < b { target } else { p.q1() };
            fwd.push(p);
            pos = end;
        }
        if pos < b {
            fwd.push(SqPiece { s0: pos, s1: b, q0: target, slope: 0.0 });
        }
    }

    // Cap by the braking curve v² = 2A(S − s). It can cross the forward profile
    // only once because no forward piece decelerates faster than A.
    let brake_q = |s: f64| 2.0 * accel * (total - s);
    let mut out = Vec::new();
    for p in fwd {
        let gap0 = p.q0 - brake_q(p.s0);
        let rate = p.slope + 2.0 * accel;
        let cross = if gap0 >= 0.0 {
            Some(p.s0)
        } else if rate > 0.0 {
            let s = p.s0 - gap0 / rate;
            (s < p.s1).then_some(s)
        } else {
            None
        };
        match cross {
            None => out.push(p),
            Some(s) => {
                if s > p.s0 {
                    out.push(SqPiece { s1: s, ..p });
                }
                out.push(SqPiece { s0: s, s1: total, q0: brake_q(s), slope: -2.0 * accel });
                return out;
            }
        }
    }
    out
}

/// Raw piecewise-constant terrain property and its wheelbase moving average.
#[derive(Debug, Clone)]
pub struct SmoothedTerrain {
    bounds: Vec<(f64, f64)>,
    window_m: f64,
}

impl SmoothedTerrain {
    pub fn new(scenario: &Scenario, window_m: f64) -> Self {
        Self { bounds: segment_bounds(scenario), window_m }
    }

    pub fn window_m(&self) -> f64 {
        self.window_m
    }

    /// Index of the segment containing `s` (right-continuous, clamped).
    pub fn segment_at(&self, s: f64) -> usize {
        self.bounds.partition_point(|b| b.1 <= s).min(self.bounds.len() - 1)
    }

    /// ∫₀ˣ of the step function `values`, extended as constant beyond both ends.
    fn cumulative(&self, values: &[f64], x: f64) -> f64 {
        let (first, last) = (values[0], values[values.len() - 1]);
        let end = self.bounds[self.bounds.len() - 1].1;
        if x <= 0.0 {
            return first * x;
        }
        let mut acc = 0.0;
        for (v, (a, b)) in values.iter().zip(&self.bounds) {
            if x <= *b {
                return acc + v * (x - a);
            }
            acc += v * (b - a);
        }
        acc + last * (x - end)
    }

    /// Moving average of `values` over the window centered at `s`.
    pub fn average(&self, values: &[f64], s: f64) -> f64 {
        let h = self.window_m / 2.0;
        (self.cumulative(values, s + h) - self.cumulative(values, s - h)) / self.window_m
    }

    /// Derivative of [`Self::average`] with respect to arc length.
    pub fn slope(&self, values: &[f64], s: f64) -> f64 {
        let h = self.window_m / 2.0;
        let at = |x: f64| values[self.segment_at(x.max(0.0))];
        (at(s + h) - at(s - h)) / self.window_m
    }

    /// Arc positions inside the path where the averaged profile has a kink.
    pub fn kinks(&self) -> Vec<f64> {
        let h = self.window_m / 2.0;
        let end = self.bounds[self.bounds.len() - 1].1;
        let mut out: Vec<f64> = self.bounds[..self.bounds.len() - 1]
            .iter()
            .flat_map(|b| [b.1 - h, b.1, b.1 + h])
            .filter(|&s| s > 0.0 && s < end)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// One sample of the motion profile, before any power is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub t_s: f64,
    pub s_m: f64,
    pub speed_m_s: f64,
    pub tangential_accel_m_s2: f64,
    /// `v²·dγ/ds`, the pitch-rate induced acceleration before coupling scale.
    pub pitch_accel_m_s2: f64,
    pub incline_rad: f64,
    pub friction_scale: f64,
    pub segment: usize,
}

/// Sample the scenario at its fixed step, plus every time at which the
/// profile has a kink (acceleration changes, junction ramps start or end),
/// plus the exact end of the run.
pub fn build_profile(scenario: &Scenario, wheelbase_m: f64) -> Result<Vec<ProfilePoint>, ScenarioError> {
    scenario.validate()?;
    let speed = SpeedProfile::new(scenario)?;
    let terrain = SmoothedTerrain::new(scenario, wheelbase_m);
    let gammas: Vec<f64> = scenario.segments.iter().map(|g| g.incline_rad()).collect();
    let scales: Vec<f64> = scenario.segments.iter().map(|g| g.friction_scale).collect();

    let end = speed.duration_s();
    let dt = scenario.sample_dt_s;
    let mut times: Vec<f64> = (0..)
        .map(|k| k as f64 * dt)
        .take_while(|&t| t < end)
        .chain(speed.breakpoints())
        .chain(terrain.kinks().into_iter().map(|s| speed.time_at(s)))
        .chain(std::iter::once(end))
        .filter(|&t| t <= end)
        .collect();
    times.sort_by(f64::total_cmp);
    let tol = dt * 1e-6;
    times.dedup_by(|later, kept| *later - *kept < tol);
    // the final sample sits exactly at the end of the run
    if let Some(last) = times.last_mut() {
        *last = end;
    }

    Ok(times
        .into_iter()
        .map(|t| {
            let (s, v, a) = speed.at_time(t);
            let dgamma = terrain.slope(&gammas, s);
            ProfilePoint {
                t_s: t,
                s_m: s,
                speed_m_s: v,
                tangential_accel_m_s2: a,
                pitch_accel_m_s2: v * v * dgamma,
                incline_rad: terrain.average(&gammas, s),
                friction_scale: terrain.average(&scales, s),
                segment: terrain.segment_at(s),
            }
        })
        .collect())
}
