//! CSV files: power traces (fixed schema, 9 significant digits) and the
//! per-sample motion states that calibration regresses against.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::kinematics::BodyTwist;
use crate::power::MotionState;
use crate::simulator::PowerTrace;
use crate::statics::WheelLoads;

/// Header of a power trace file, byte for byte.
pub const TRACE_HEADER: &str =
    "t_s,s_m,gamma_deg,vx,vy,wz,T_C,P_copper_W,P_iron_W,P_mech_W,P_fric_W,P_motion_W,P_ctrl_W,P_sense_W,P_total_W,E_cum_J";

/// Header of a motion-state file.
pub const STATES_HEADER: &str = "t_s,t_motion_s,s_m,gamma_rad,friction_scale,vx,vy,wz,theta_rad,v_m_s,a_m_s2,\
omega_FL,omega_FR,omega_RL,omega_RR,v_FL,v_FR,v_RL,v_RR,a_FL,a_FR,a_RL,a_RR,\
N_FL,N_FR,N_RL,N_RR,N_total_N,F_FL,F_FR,F_RL,F_RR,F_total_N,T_C";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceIoError {
    #[error("CSV error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("line {line}, column {column}: cannot parse {value:?} as a number")]
    BadNumber { line: u64, column: String, value: String },
}

/// Format with 9 significant digits, `%.9g` style: fixed notation for
/// decimal exponents in [-4, 9), scientific otherwise, trailing zeros dropped.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_owned()
        } else {
            s.to_owned()
        }
    };
    if (-4..9).contains(&exp) {
        trim(&format!("{x:.*}", (8 - exp) as usize))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn push_row(out: &mut String, values: impl IntoIterator<Item = String>) {
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&v);
    }
    out.push('\n');
}

pub fn trace_to_csv(trace: &PowerTrace) -> String {
    let mut out = String::with_capacity(trace.len() * 160);
    let _ = writeln!(out, "{TRACE_HEADER}");
    for s in &trace.samples {
        let st = &s.state;
        let p = &s.power;
        push_row(
            &mut out,
            [
                st.t_s,
                st.s_m,
                st.incline_rad.to_degrees(),
                st.twist.vx_m_s,
                st.twist.vy_m_s,
                st.twist.wz_rad_s,
                st.temp_c,
                p.copper_w,
                p.iron_w,
                p.mechanical_w,
                p.friction_w,
                p.motion_w,
                p.control_w,
                p.sensing_w,
                p.total_w,
                s.e_cum_j,
            ]
            .map(fmt_sig9),
        );
    }
    out
}

/// Motion states at full (round-trip) precision.
pub fn states_to_csv<'a>(states: impl IntoIterator<Item = &'a MotionState>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{STATES_HEADER}");
    for st in states {
        let mut row = vec![
            st.t_s,
            st.t_motion_s,
            st.s_m,
            st.incline_rad,
            st.friction_scale,
            st.twist.vx_m_s,
            st.twist.vy_m_s,
            st.twist.wz_rad_s,
            st.theta_rad,
            st.speed_m_s,
            st.accel_m_s2,
        ];
        row.extend(st.wheel_omega_rad_s);
        row.extend(st.wheel_v_m_s);
        row.extend(st.wheel_a_m_s2);
        row.extend(st.loads.n_n);
        row.push(st.loads.total_n);
        row.extend(st.traction_n);
        row.push(st.traction_total_n);
        row.push(st.temp_c);
        push_row(&mut out, row.into_iter().map(crate::config::fmt_f64));
    }
    out
}

/// Numeric CSV table addressed by column name.
struct Table {
    index: HashMap<String, usize>,
    rows: Vec<(u64, Vec<f64>)>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, TraceIoError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let csv_err = |e: csv::Error| TraceIoError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let index: HashMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.to_owned(), i)).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            let vals = rec
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.parse::<f64>().map_err(|_| TraceIoError::BadNumber {
                        line,
                        column: headers.get(i).unwrap_or("?").to_owned(),
                        value: v.to_owned(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push((line, vals));
        }
        Ok(Self { index, rows })
    }

    fn col(&self, name: &str) -> Result<usize, TraceIoError> {
        self.index.get(name).copied().ok_or_else(|| TraceIoError::MissingColumn(name.to_owned()))
    }

    fn cols<const N: usize>(&self, names: [&str; N]) -> Result<[usize; N], TraceIoError> {
        let mut out = [0; N];
        for (o, n) in out.iter_mut().zip(names) {
            *o = self.col(n)?;
        }
        Ok(out)
    }
}

/// The columns of a measured or simulated trace that calibration needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredSample {
    pub t_s: f64,
    pub p_motion_w: f64,
}

/// Read a trace file. Only `t_s` and `P_motion_W` are required, so measured
/// traces may carry a subset of the simulator's columns.
pub fn read_trace_csv(text: &str) -> Result<Vec<MeasuredSample>, TraceIoError> {
    let table = Table::parse(text)?;
    let [t, p] = table.cols(["t_s", "P_motion_W"])?;
    Ok(table.rows.iter().map(|(_, r)| MeasuredSample { t_s: r[t], p_motion_w: r[p] }).collect())
}

pub fn read_states_csv(text: &str) -> Result<Vec<MotionState>, TraceIoError> {
    let table = Table::parse(text)?;
    let names: Vec<&str> = STATES_HEADER.split(',').collect();
    let idx = names.iter().map(|n| table.col(n)).collect::<Result<Vec<_>, _>>()?;
    Ok(table
        .rows
        .iter()
        .map(|(_, r)| {
            let v = |k: usize| r[idx[k]];
            let four = |k: usize| [v(k), v(k + 1), v(k + 2), v(k + 3)];
            MotionState {
                t_s: v(0),
                t_motion_s: v(1),
                s_m: v(2),
                incline_rad: v(3),
                friction_scale: v(4),
                twist: BodyTwist::new(v(5), v(6), v(7)),
                theta_rad: v(8),
                speed_m_s: v(9),
                accel_m_s2: v(10),
                wheel_omega_rad_s: four(11),
                wheel_v_m_s: four(15),
                wheel_a_m_s2: four(19),
                loads: WheelLoads { n_n: four(23), total_n: v(27) },
                traction_n: four(28),
                traction_total_n: v(32),
                temp_c: v(33),
            }
        })
        .collect())
}
