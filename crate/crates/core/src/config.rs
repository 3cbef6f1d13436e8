//! Flat key-value configuration files.
//!
//! Keys are dotted and namespaced (`robot.mass_kg = 12.0`), one per line, and
//! terrain segments are indexed groups (`segment.0.length_m = 2.0`). The
//! syntax is a subset of TOML, so the reader delegates tokenizing to the
//! `toml` crate; everything after that (key lookup, defaults, unknown-key
//! detection, line attribution) lives here.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::params::{
    validate_params, CogOffset, GravityConvention, MechConstants, Params, Scenario, ScenarioError,
    TerrainSegment, ValidatedParams, ValidationErrors,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {field}: {message}")]
    InvalidValue { line: usize, field: String, message: String },
    #[error("line {line}: unknown key {field}")]
    UnknownKey { line: usize, field: String },
    #[error("missing required field {field}")]
    MissingField { field: String },
    #[error("{0}")]
    InvariantViolation(#[from] ScenarioError),
    #[error("{0}")]
    Params(#[from] ValidationErrors),
}

impl ConfigError {
    /// The key the error refers to, when there is one.
    pub fn field(&self) -> Option<String> {
        match self {
            ConfigError::InvalidValue { field, .. }
            | ConfigError::UnknownKey { field, .. }
            | ConfigError::MissingField { field } => Some(field.clone()),
            ConfigError::InvariantViolation(ScenarioError::Invalid { field, .. }) => Some(field.clone()),
            ConfigError::Params(errs) => errs.0.first().map(|e| e.field().to_owned()),
            _ => None,
        }
    }
}

enum Value {
    Num(f64),
    Str(String),
}

/// Parsed key-value document; keys are consumed as they are read so that
/// leftovers can be reported as unknown.
struct Doc<'a> {
    text: &'a str,
    entries: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Option<Value>>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            toml::Value::Float(f) => {
                out.insert(key, Some(Value::Num(f)));
            }
            toml::Value::Integer(i) => {
                out.insert(key, Some(Value::Num(i as f64)));
            }
            toml::Value::String(s) => {
                out.insert(key, Some(Value::Str(s)));
            }
            _ => {
                out.insert(key, None);
            }
        }
    }
}

fn line_of_span(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl<'a> Doc<'a> {
    fn parse(text: &'a str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse {
            line: e.span().map(|s| line_of_span(text, s.start)).unwrap_or(0),
            message: e.message().to_owned(),
        })?;
        let mut raw = BTreeMap::new();
        flatten("", table, &mut raw);
        let mut entries = BTreeMap::new();
        for (k, v) in raw {
            match v {
                Some(v) => {
                    entries.insert(k, v);
                }
                None => {
                    return Err(ConfigError::InvalidValue {
                        line: line_of_key(text, &k),
                        field: k,
                        message: "expected a number or a string".into(),
                    })
                }
            }
        }
        Ok(Self { text, entries })
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue { line: line_of_key(self.text, key), field: key.to_owned(), message: message.into() }
    }

    fn num(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(Value::Num(v)) => Ok(Some(v)),
            Some(Value::Str(_)) => Err(self.invalid(key, "expected a number")),
        }
    }

    fn num_into(&mut self, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
        if let Some(v) = self.num(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s)),
            Some(Value::Num(_)) => Err(self.invalid(key, "expected a string")),
        }
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.keys().next() {
            None => Ok(()),
            Some(k) => Err(ConfigError::UnknownKey { line: line_of_key(self.text, k), field: k.clone() }),
        }
    }
}

/// Best-effort line lookup for a dotted key written in flat form.
fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| l.split('=').next().is_some_and(|lhs| lhs.trim().trim_matches('"') == key))
        .map(|i| i + 1)
        .unwrap_or(0)
}

/// Read a parameter file on top of `base`. Keys absent from the text keep
/// their value from `base`. The result is not validated.
pub fn parse_params_onto(text: &str, base: Params) -> Result<Params, ConfigError> {
    let mut d = Doc::parse(text)?;
    let mut p = base;

    let r = &mut p.robot;
    d.num_into("robot.mass_kg", &mut r.mass_kg)?;
    d.num_into("robot.length_m", &mut r.length_m)?;
    d.num_into("robot.width_m", &mut r.width_m)?;
    d.num_into("robot.wheel_radius_m", &mut r.wheel_radius_m)?;
    d.num_into("robot.gravity_m_s2", &mut r.gravity_m_s2)?;
    d.num_into("robot.supply_voltage_v", &mut r.supply_voltage_v)?;

    let m = &mut p.motor;
    d.num_into("motor.r0_ohm", &mut m.r0_ohm)?;
    d.num_into("motor.t0_c", &mut m.t0_c)?;
    d.num_into("motor.alpha_per_c", &mut m.alpha_per_c)?;
    d.num_into("motor.tau", &mut m.tau)?;
    d.num_into("motor.k_t_base", &mut m.k_t_base)?;
    d.num_into("motor.k_t_slope", &mut m.k_t_slope)?;
    d.num_into("motor.beta_t_base", &mut m.beta_t_base)?;
    d.num_into("motor.beta_t_slope", &mut m.beta_t_slope)?;
    d.num_into("motor.lambda1", &mut m.lambda1)?;
    d.num_into("motor.lambda2", &mut m.lambda2)?;
    d.num_into("motor.lambda3", &mut m.lambda3)?;
    let k1 = d.num("motor.k1")?;
    let k2 = d.num("motor.k2")?;
    if k1.is_some() || k2.is_some() {
        let cur = m.uniform_mech().unwrap_or(m.mech[0].forward);
        m.set_uniform_mech(MechConstants { k1: k1.unwrap_or(cur.k1), k2: k2.unwrap_or(cur.k2) });
    }
    for (i, w) in m.mech.iter_mut().enumerate() {
        d.num_into(&format!("motor.wheel.{i}.k1_forward"), &mut w.forward.k1)?;
        d.num_into(&format!("motor.wheel.{i}.k2_forward"), &mut w.forward.k2)?;
        d.num_into(&format!("motor.wheel.{i}.k1_backward"), &mut w.backward.k1)?;
        d.num_into(&format!("motor.wheel.{i}.k2_backward"), &mut w.backward.k2)?;
    }
    if let Some(v) = d.num("motor.armature_current_a")? {
        m.armature_current_a = Some(v);
    }
    if let Some(v) = d.num("motor.emf_v")? {
        m.emf_v = Some(v);
    }

    d.num_into("friction.mu", &mut p.friction.mu)?;
    d.num_into("friction.mu1", &mut p.friction.mu1)?;
    d.num_into("friction.mu2", &mut p.friction.mu2)?;

    d.num_into("thermal.ambient_c", &mut p.thermal.ambient_c)?;
    d.num_into("thermal.heating_coeff_c_per_j", &mut p.thermal.heating_coeff_c_per_j)?;
    d.num_into("thermal.cooling_coeff_per_s", &mut p.thermal.cooling_coeff_per_s)?;

    d.num_into("sensing.idle_w", &mut p.sensing.idle_w)?;
    d.num_into("sensing.energy_per_sample_j", &mut p.sensing.energy_per_sample_j)?;
    d.num_into("sensing.sample_rate_hz", &mut p.sensing.sample_rate_hz)?;

    d.num_into("control.base_w", &mut p.control.base_w)?;
    d.num_into("control.per_command_j", &mut p.control.per_command_j)?;
    d.num_into("control.command_rate_hz", &mut p.control.command_rate_hz)?;

    if let Some(s) = d.string("model.gravity_convention")? {
        p.model.gravity_convention = GravityConvention::parse(&s)
            .ok_or_else(|| d.invalid("model.gravity_convention", "expected \"physical_cos\" or \"literal_sin\""))?;
    }
    if let Some(v) = d.num("model.t_sat_s")? {
        p.model.t_sat_s = Some(v);
    }
    d.num_into("model.pitch_coupling", &mut p.model.pitch_coupling)?;

    d.finish()?;
    Ok(p)
}

/// Read a parameter file with defaults for absent keys. Not validated.
pub fn parse_params(text: &str) -> Result<Params, ConfigError> {
    parse_params_onto(text, Params::default())
}

/// Read and validate a parameter file.
pub fn load_params(text: &str) -> Result<ValidatedParams, ConfigError> {
    Ok(validate_params(parse_params(text)?)?)
}

/// Shortest decimal that reads back to the same `f64`, in TOML-compatible form.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn kv(out: &mut String, key: &str, v: f64) {
    let _ = writeln!(out, "{key} = {}", fmt_f64(v));
}

/// Serialize a parameter bundle; [`parse_params`] reads it back unchanged.
pub fn params_to_string(p: &Params) -> String {
    let mut o = String::new();
    let r = &p.robot;
    kv(&mut o, "robot.mass_kg", r.mass_kg);
    kv(&mut o, "robot.length_m", r.length_m);
    kv(&mut o, "robot.width_m", r.width_m);
    kv(&mut o, "robot.wheel_radius_m", r.wheel_radius_m);
    kv(&mut o, "robot.gravity_m_s2", r.gravity_m_s2);
    kv(&mut o, "robot.supply_voltage_v", r.supply_voltage_v);
    o.push('\n');
    let m = &p.motor;
    kv(&mut o, "motor.r0_ohm", m.r0_ohm);
    kv(&mut o, "motor.t0_c", m.t0_c);
    kv(&mut o, "motor.alpha_per_c", m.alpha_per_c);
    kv(&mut o, "motor.tau", m.tau);
    kv(&mut o, "motor.k_t_base", m.k_t_base);
    kv(&mut o, "motor.k_t_slope", m.k_t_slope);
    kv(&mut o, "motor.beta_t_base", m.beta_t_base);
    kv(&mut o, "motor.beta_t_slope", m.beta_t_slope);
    kv(&mut o, "motor.lambda1", m.lambda1);
    kv(&mut o, "motor.lambda2", m.lambda2);
    kv(&mut o, "motor.lambda3", m.lambda3);
    match m.uniform_mech() {
        Some(c) => {
            kv(&mut o, "motor.k1", c.k1);
            kv(&mut o, "motor.k2", c.k2);
        }
        None => {
            for (i, w) in m.mech.iter().enumerate() {
                kv(&mut o, &format!("motor.wheel.{i}.k1_forward"), w.forward.k1);
                kv(&mut o, &format!("motor.wheel.{i}.k2_forward"), w.forward.k2);
                kv(&mut o, &format!("motor.wheel.{i}.k1_backward"), w.backward.k1);
                kv(&mut o, &format!("motor.wheel.{i}.k2_backward"), w.backward.k2);
            }
        }
    }
    if let Some(v) = m.armature_current_a {
        kv(&mut o, "motor.armature_current_a", v);
    }
    if let Some(v) = m.emf_v {
        kv(&mut o, "motor.emf_v", v);
    }
    o.push('\n');
    kv(&mut o, "friction.mu", p.friction.mu);
    kv(&mut o, "friction.mu1", p.friction.mu1);
    kv(&mut o, "friction.mu2", p.friction.mu2);
    o.push('\n');
    kv(&mut o, "thermal.ambient_c", p.thermal.ambient_c);
    kv(&mut o, "thermal.heating_coeff_c_per_j", p.thermal.heating_coeff_c_per_j);
    kv(&mut o, "thermal.cooling_coeff_per_s", p.thermal.cooling_coeff_per_s);
    o.push('\n');
    kv(&mut o, "sensing.idle_w", p.sensing.idle_w);
    kv(&mut o, "sensing.energy_per_sample_j", p.sensing.energy_per_sample_j);
    kv(&mut o, "sensing.sample_rate_hz", p.sensing.sample_rate_hz);
    o.push('\n');
    kv(&mut o, "control.base_w", p.control.base_w);
    kv(&mut o, "control.per_command_j", p.control.per_command_j);
    kv(&mut o, "control.command_rate_hz", p.control.command_rate_hz);
    o.push('\n');
    let _ = writeln!(o, "model.gravity_convention = \"{}\"", p.model.gravity_convention.as_str());
    if let Some(v) = p.model.t_sat_s {
        kv(&mut o, "model.t_sat_s", v);
    }
    kv(&mut o, "model.pitch_coupling", p.model.pitch_coupling);
    o
}

/// A scenario as written in a file, before defaults are applied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawScenario {
    pub commanded_speed_m_s: Option<f64>,
    pub heading_deg: Option<f64>,
    pub cog_x_m: Option<f64>,
    pub cog_y_m: Option<f64>,
    pub initial_temp_c: Option<f64>,
    pub sample_dt_s: Option<f64>,
    pub accel_m_s2: Option<f64>,
    pub segments: Vec<RawSegment>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawSegment {
    pub length_m: Option<f64>,
    pub incline_deg: Option<f64>,
    pub friction_scale: Option<f64>,
    pub speed_m_s: Option<f64>,
}

pub const DEFAULT_SAMPLE_DT_S: f64 = 0.01;
pub const DEFAULT_INITIAL_TEMP_C: f64 = 25.0;

impl RawScenario {
    /// Fill every optional field that has a default. Required fields
    /// (speed, segment lengths) and the acceleration limit stay as they are.
    pub fn with_defaults(&self) -> Self {
        let mut s = self.clone();
        s.heading_deg.get_or_insert(0.0);
        s.cog_x_m.get_or_insert(0.0);
        s.cog_y_m.get_or_insert(0.0);
        s.initial_temp_c.get_or_insert(DEFAULT_INITIAL_TEMP_C);
        s.sample_dt_s.get_or_insert(DEFAULT_SAMPLE_DT_S);
        for seg in &mut s.segments {
            seg.incline_deg.get_or_insert(0.0);
            seg.friction_scale.get_or_insert(1.0);
        }
        s
    }

    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let s = self.with_defaults();
        let missing = |field: &str| ConfigError::MissingField { field: field.to_owned() };
        if s.segments.is_empty() {
            return Err(missing("segment.0.length_m"));
        }
        let segments = s
            .segments
            .iter()
            .enumerate()
            .map(|(i, g)| {
                Ok(TerrainSegment {
                    length_m: g.length_m.ok_or_else(|| missing(&format!("segment.{i}.length_m")))?,
                    incline_deg: g.incline_deg.unwrap_or_default(),
                    friction_scale: g.friction_scale.unwrap_or(1.0),
                    speed_m_s: g.speed_m_s,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let scenario = Scenario {
            segments,
            commanded_speed_m_s: s.commanded_speed_m_s.ok_or_else(|| missing("scenario.commanded_speed_m_s"))?,
            heading_deg: s.heading_deg.unwrap_or_default(),
            cog: CogOffset::new(s.cog_x_m.unwrap_or_default(), s.cog_y_m.unwrap_or_default()),
            initial_temp_c: s.initial_temp_c.unwrap_or(DEFAULT_INITIAL_TEMP_C),
            sample_dt_s: s.sample_dt_s.unwrap_or(DEFAULT_SAMPLE_DT_S),
            accel_m_s2: s.accel_m_s2,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl From<&Scenario> for RawScenario {
    fn from(s: &Scenario) -> Self {
        Self {
            commanded_speed_m_s: Some(s.commanded_speed_m_s),
            heading_deg: Some(s.heading_deg),
            cog_x_m: Some(s.cog.x_m),
            cog_y_m: Some(s.cog.y_m),
            initial_temp_c: Some(s.initial_temp_c),
            sample_dt_s: Some(s.sample_dt_s),
            accel_m_s2: s.accel_m_s2,
            segments: s
                .segments
                .iter()
                .map(|g| RawSegment {
                    length_m: Some(g.length_m),
                    incline_deg: Some(g.incline_deg),
                    friction_scale: Some(g.friction_scale),
                    speed_m_s: g.speed_m_s,
                })
                .collect(),
        }
    }
}

pub fn parse_raw_scenario(text: &str) -> Result<RawScenario, ConfigError> {
    let mut d = Doc::parse(text)?;
    let mut s = RawScenario {
        commanded_speed_m_s: d.num("scenario.commanded_speed_m_s")?,
        heading_deg: d.num("scenario.heading_deg")?,
        cog_x_m: d.num("scenario.cog_x_m")?,
        cog_y_m: d.num("scenario.cog_y_m")?,
        initial_temp_c: d.num("scenario.initial_temp_c")?,
        sample_dt_s: d.num("scenario.sample_dt_s")?,
        accel_m_s2: d.num("scenario.accel_m_s2")?,
        segments: Vec::new(),
    };
    for i in 0.. {
        let prefix = format!("segment.{i}.");
        if !d.has_prefix(&prefix) {
            break;
        }
        s.segments.push(RawSegment {
            length_m: d.num(&format!("{prefix}length_m"))?,
            incline_deg: d.num(&format!("{prefix}incline_deg"))?,
            friction_scale: d.num(&format!("{prefix}friction_scale"))?,
            speed_m_s: d.num(&format!("{prefix}speed_m_s"))?,
        });
    }
    // Any remaining segment.N keys are either a gap in the numbering or typos.
    d.finish()?;
    Ok(s)
}

/// Parse, default and validate a scenario file.
pub fn load_scenario(text: &str) -> Result<Scenario, ConfigError> {
    parse_raw_scenario(text)?.build()
}

pub fn scenario_to_string(s: &Scenario) -> String {
    let mut o = String::new();
    kv(&mut o, "scenario.commanded_speed_m_s", s.commanded_speed_m_s);
    kv(&mut o, "scenario.heading_deg", s.heading_deg);
    kv(&mut o, "scenario.cog_x_m", s.cog.x_m);
    kv(&mut o, "scenario.cog_y_m", s.cog.y_m);
    kv(&mut o, "scenario.initial_temp_c", s.initial_temp_c);
    kv(&mut o, "scenario.sample_dt_s", s.sample_dt_s);
    if let Some(a) = s.accel_m_s2 {
        kv(&mut o, "scenario.accel_m_s2", a);
    }
    for (i, g) in s.segments.iter().enumerate() {
        o.push('\n');
        kv(&mut o, &format!("segment.{i}.length_m"), g.length_m);
        kv(&mut o, &format!("segment.{i}.incline_deg"), g.incline_deg);
        kv(&mut o, &format!("segment.{i}.friction_scale"), g.friction_scale);
        if let Some(v) = g.speed_m_s {
            kv(&mut o, &format!("segment.{i}.speed_m_s"), v);
        }
    }
    o
}
