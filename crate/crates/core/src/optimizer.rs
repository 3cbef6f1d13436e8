//! Minimum-energy cruise speeds.
//!
//! Golden-section search on total run energy as a function of commanded
//! speed, plus a per-segment refinement that searches each segment's speed
//! with the others held at the single-speed optimum.

use std::fmt::Write as _;

use thiserror::Error;

use crate::config::fmt_f64;
use crate::exec::Execution;
use crate::params::{Scenario, ValidatedParams};
use crate::simulator::{simulate, SimError};

/// 1/φ.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptError {
    #[error("invalid bracket [{lo}, {hi}]: need 0 < lo < hi")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Outcome of a one-dimensional search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    /// Bracket after each iteration, starting with the initial one.
    pub bracket_history: Vec<(f64, f64)>,
}

/// Golden-section minimization of `f` on `[lo, hi]` until the bracket is no
/// wider than `tol`.
///
/// Returns the best point evaluated, endpoints included. For a unimodal `f`
/// that is the minimizer to within `tol`; otherwise it is at least no worse
/// than either endpoint.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<SearchResult, OptError>
where
    F: FnMut(f64) -> Result<f64, OptError>,
{
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(OptError::InvalidBracket { lo, hi });
    }
    if !(tol > 0.0) {
        return Err(OptError::InvalidTolerance(tol));
    }
    let mut best = (lo, f(lo)?);
    let consider = |x: f64, v: f64, best: &mut (f64, f64)| {
        if v < best.1 {
            *best = (x, v);
        }
    };
    let fhi = f(hi)?;
    consider(hi, fhi, &mut best);

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    let mut history = vec![(a, b)];
    let mut iterations = 0;
    while b - a > tol {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            consider(d, fd, &mut best);
        }
        history.push((a, b));
    }
    Ok(SearchResult { x: best.0, value: best.1, iterations, bracket_history: history })
}

/// Evaluate `f` on `n` evenly spaced points of `[lo, hi]` (ends included).
pub fn grid<F>(f: F, lo: f64, hi: f64, n: usize, execution: Execution) -> Result<Vec<(f64, f64)>, OptError>
where
    F: Fn(f64) -> Result<f64, OptError> + Sync + Send,
{
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    execution
        .map_range(n, |i| {
            let x = if i + 1 == n { hi } else { lo + step * i as f64 };
            f(x).map(|v| (x, v))
        })
        .into_iter()
        .collect()
}

/// Grid point with the lowest value; ties go to the first.
pub fn grid_min(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    points.iter().copied().fold(None, |best, p| match best {
        Some(b) if b.1 <= p.1 => Some(b),
        _ => Some(p),
    })
}

/// Total energy (J) of the run at constant commanded speed `v`.
pub fn energy_of_speed(scenario: &Scenario, params: &ValidatedParams, v: f64) -> Result<f64, OptError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(OptError::InvalidBracket { lo: v, hi: v });
    }
    let mut sc = scenario.clone();
    sc.commanded_speed_m_s = v;
    for seg in &mut sc.segments {
        seg.speed_m_s = None;
    }
    Ok(simulate(&sc, params)?.1.total_j)
}

fn energy_of_plan(scenario: &Scenario, params: &ValidatedParams, speeds: &[f64]) -> Result<f64, OptError> {
    let mut sc = scenario.clone();
    for (seg, v) in sc.segments.iter_mut().zip(speeds) {
        seg.speed_m_s = Some(*v);
    }
    Ok(simulate(&sc, params)?.1.total_j)
}

/// Single constant speed minimizing total energy.
pub fn min_energy_speed(
    scenario: &Scenario,
    params: &ValidatedParams,
    v_lo: f64,
    v_hi: f64,
    tol: f64,
) -> Result<SearchResult, OptError> {
    golden_section(|v| energy_of_speed(scenario, params, v), v_lo, v_hi, tol)
}

/// Energy over a grid of constant speeds.
pub fn energy_grid(
    scenario: &Scenario,
    params: &ValidatedParams,
    v_lo: f64,
    v_hi: f64,
    n: usize,
    execution: Execution,
) -> Result<Vec<(f64, f64)>, OptError> {
    if !(v_lo > 0.0 && v_hi > v_lo) {
        return Err(OptError::InvalidBracket { lo: v_lo, hi: v_hi });
    }
    grid(|v| energy_of_speed(scenario, params, v), v_lo, v_hi, n, execution)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedPlan {
    /// Cruise speed of each segment.
    pub speeds_m_s: Vec<f64>,
    /// Simulated energy of the run at `speeds_m_s`.
    pub total_energy_j: f64,
    /// Additive estimate from the independent per-segment searches.
    pub predicted_energy_j: f64,
    pub single_speed_m_s: f64,
    pub single_energy_j: f64,
    /// Golden-section iterations, single-speed search plus every segment.
    pub iterations: usize,
    /// Bracket history of the single-speed search.
    pub bracket_history: Vec<(f64, f64)>,
    /// True when the combined per-segment plan simulated worse than the
    /// single speed and was replaced by it.
    pub fell_back: bool,
}

impl SpeedPlan {
    /// |total − predicted| / total.
    pub fn coupling_error(&self) -> f64 {
        (self.total_energy_j - self.predicted_energy_j).abs() / self.total_energy_j
    }

    pub fn to_kv_string(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "plan.single_speed_m_s = {}", fmt_f64(self.single_speed_m_s));
        let _ = writeln!(o, "plan.single_energy_j = {}", fmt_f64(self.single_energy_j));
        let _ = writeln!(o, "plan.total_energy_j = {}", fmt_f64(self.total_energy_j));
        let _ = writeln!(o, "plan.predicted_energy_j = {}", fmt_f64(self.predicted_energy_j));
        let _ = writeln!(o, "plan.iterations = {}", self.iterations);
        let _ = writeln!(o, "plan.fell_back = {}", self.fell_back);
        for (i, v) in self.speeds_m_s.iter().enumerate() {
            let _ = writeln!(o, "plan.segment.{i}.speed_m_s = {}", fmt_f64(*v));
        }
        o
    }
}

/// Per-segment cruise speeds.
///
/// Each segment's speed is searched with every other segment held at the
/// single-speed optimum; the searches are independent and run in parallel.
/// The combined plan is then re-simulated. If it does worse than the single
/// speed, the single-speed plan is returned instead.
pub fn per_segment_speeds(
    scenario: &Scenario,
    params: &ValidatedParams,
    v_lo: f64,
    v_hi: f64,
    tol: f64,
    execution: Execution,
) -> Result<SpeedPlan, OptError> {
    let single = min_energy_speed(scenario, params, v_lo, v_hi, tol)?;
    let n = scenario.segments.len();
    let base = vec![single.x; n];
    let searches = execution
        .map_range(n, |i| {
            golden_section(
                |v| {
                    let mut speeds = base.clone();
                    speeds[i] = v;
                    energy_of_plan(scenario, params, &speeds)
                },
                v_lo,
                v_hi,
                tol,
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let speeds: Vec<f64> = searches.iter().map(|s| s.x).collect();
    let predicted = single.value + searches.iter().map(|s| s.value - single.value).sum::<f64>();
    let total = energy_of_plan(scenario, params, &speeds)?;
    let iterations = single.iterations + searches.iter().map(|s| s.iterations).sum::<usize>();
    let fell_back = total > single.value;
    Ok(SpeedPlan {
        speeds_m_s: if fell_back { base } else { speeds },
        total_energy_j: if fell_back { single.value } else { total },
        predicted_energy_j: predicted,
        single_speed_m_s: single.x,
        single_energy_j: single.value,
        iterations,
        bracket_history: single.bracket_history,
        fell_back,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::params::{validate_params, Params};

    fn toy(c0: f64, c2: f64, d: f64) -> impl Fn(f64) -> Result<f64, OptError> {
        move |v| Ok((c0 / v + c2 * v) * d)
    }

    #[test]
    fn toy_model_closed_form() {
        assert_eq!(toy(5.0, 5.0, 4.0)(1.0).unwrap(), 40.0);
        let r = golden_section(toy(5.0, 5.0, 4.0), 0.1, 3.0, 1e-6).unwrap();
        assert_abs_diff_eq!(r.x, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.value, 40.0, epsilon = 1e-9);
        let (a, b) = *r.bracket_history.last().unwrap();
        assert!(b - a <= 1e-6);
        assert_eq!(r.bracket_history.len(), r.iterations + 1);
    }

    #[test]
    fn bad_brackets() {
        let f = toy(1.0, 1.0, 1.0);
        assert!(matches!(golden_section(&f, 0.0, 1.0, 1e-3), Err(OptError::InvalidBracket { .. })));
        assert!(matches!(golden_section(&f, 2.0, 1.0, 1e-3), Err(OptError::InvalidBracket { .. })));
        assert!(matches!(golden_section(&f, 1.0, 2.0, 0.0), Err(OptError::InvalidTolerance(_))));
    }

    #[test]
    fn non_unimodal_no_worse_than_endpoints() {
        let f = |v: f64| Ok((8.0 * v).sin() + 0.1 * v);
        let r = golden_section(f, 0.1, 3.0, 1e-4).unwrap();
        assert!(r.value <= f(0.1).unwrap() && r.value <= f(3.0).unwrap());
        // monotone: the endpoint wins
        let r = golden_section(|v| Ok(-v), 0.5, 2.0, 1e-3).unwrap();
        assert_eq!(r.x, 2.0);
    }

    #[test]
    fn grid_endpoints_and_min() {
        let g = grid(toy(5.0, 5.0, 4.0), 0.5, 2.0, 1000, Execution::Parallel).unwrap();
        assert_eq!(g.len(), 1000);
        assert_eq!(g[0].0, 0.5);
        assert_eq!(g[999].0, 2.0);
        let (v, _) = grid_min(&g).unwrap();
        assert!((v - 1.0).abs() <= 1.5 / 999.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn shrinking_tol_never_hurts(c0 in 0.1f64..10.0, c2 in 0.1f64..10.0, c3 in 0.0f64..2.0) {
            let f = |v: f64| Ok(c0 / v + c2 * v + c3 * (3.0 * v).sin());
            let coarse = golden_section(f, 0.2, 4.0, 1e-2).unwrap();
            let fine = golden_section(f, 0.2, 4.0, 1e-5).unwrap();
            prop_assert!(fine.value <= coarse.value);
        }
    }

    fn params() -> ValidatedParams {
        validate_params(Params::default()).unwrap()
    }

    /// Iron losses large enough that speeding up eventually costs energy.
    fn lossy() -> ValidatedParams {
        let mut p = Params::default();
        p.motor.lambda1 = 2.0;
        p.motor.lambda2 = 2.0;
        p.motor.lambda3 = 2.0;
        validate_params(p).unwrap()
    }

    fn limited(mut sc: Scenario) -> Scenario {
        sc.accel_m_s2 = Some(0.5);
        sc.sample_dt_s = 0.02;
        sc
    }

    #[test]
    fn constant_power_makes_slow_runs_expensive() {
        let sc = limited(Scenario::flat(4.0, 0.5));
        let p = params();
        let slow = energy_of_speed(&sc, &p, 0.01).unwrap();
        let mid = energy_of_speed(&sc, &p, 0.5).unwrap();
        assert!(slow > 5.0 * mid, "{slow} vs {mid}");
    }

    #[test]
    fn simulated_optimum_beats_grid() {
        let sc = limited(Scenario::ramp_course(10.0, 0.6));
        let p = lossy();
        let (lo, hi) = (0.1, 2.0);
        let r = min_energy_speed(&sc, &p, lo, hi, 1e-3).unwrap();
        let g = energy_grid(&sc, &p, lo, hi, 60, Execution::Parallel).unwrap();
        let (gv, ge) = grid_min(&g).unwrap();
        assert!(r.value <= ge + 1e-9, "{} vs {ge} at {gv}", r.value);
        assert!(r.x > lo && r.x < hi, "interior optimum expected, got {}", r.x);
        assert_abs_diff_eq!(r.value, energy_of_speed(&sc, &p, r.x).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn default_losses_favor_the_top_speed() {
        let sc = limited(Scenario::ramp_course(10.0, 0.6));
        let r = min_energy_speed(&sc, &params(), 0.1, 2.0, 1e-3).unwrap();
        assert_eq!(r.x, 2.0);
    }

    /// Slope adds constant power (τF²) and power proportional to speed,
    /// whose energy per metre does not depend on speed; the constant part
    /// pushes the optimum up.
    #[test]
    fn uphill_optimum_is_not_slower() {
        let p = lossy();
        let best = |incline: f64| {
            let mut sc = limited(Scenario::flat(4.0, 0.5));
            sc.segments[0].incline_deg = incline;
            let g = energy_grid(&sc, &p, 0.5, 2.0, 31, Execution::Parallel).unwrap();
            grid_min(&g).unwrap().0
        };
        let (flat, up) = (best(0.0), best(10.0));
        assert!(up >= flat, "{up} < {flat}");
    }

    #[test]
    fn uniform_segments_share_the_single_optimum() {
        let mut sc = limited(Scenario::flat(2.0, 0.5));
        sc.segments = vec![crate::params::TerrainSegment::new(2.0, 0.0); 3];
        let plan = per_segment_speeds(&sc, &lossy(), 0.1, 2.0, 1e-4, Execution::Parallel).unwrap();
        assert!(plan.total_energy_j <= plan.single_energy_j + 1e-9);
        assert!(plan.single_speed_m_s > 0.1 && plan.single_speed_m_s < 2.0);
        for v in &plan.speeds_m_s {
            assert!((v - plan.single_speed_m_s).abs() < 0.05, "{v} vs {}", plan.single_speed_m_s);
        }
        assert_eq!(plan.speeds_m_s.len(), 3);
    }

    #[test]
    fn plan_total_matches_resimulation() {
        let sc = limited(Scenario::ramp_course(10.0, 0.6));
        let p = lossy();
        let plan = per_segment_speeds(&sc, &p, 0.1, 2.0, 1e-3, Execution::Parallel).unwrap();
        let again = energy_of_plan(&sc, &p, &plan.speeds_m_s).unwrap();
        assert_abs_diff_eq!(plan.total_energy_j, again, epsilon = 1e-9 * again);
        assert!(plan.total_energy_j <= plan.single_energy_j + 1e-9);
        let text = plan.to_kv_string();
        assert!(text.contains("plan.segment.3.speed_m_s"));
    }
}
