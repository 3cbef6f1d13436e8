//! Energy-consumption modeling for four-wheel Mecanum robots.
//!
//! The crate simulates per-channel power (motor copper and iron loss,
//! mechanical output, roller friction, control and sensing electronics)
//! along piecewise-sloped courses, calibrates the model's loss coefficients
//! from power traces, and searches for minimum-energy cruise speeds.
//!
//! Module map:
//!
//! - [`params`]: physical parameters, scenarios, validation
//! - [`config`]: flat key-value parameter and scenario files
//! - [`kinematics`]: X-configuration Mecanum wheel kinematics
//! - [`statics`]: slope forces, wheel loads, winding resistance, motor heating
//! - [`power`]: instantaneous power decomposition
//! - [`profile`]: speed and incline profile along a scenario
//! - [`simulator`]: power traces and energy reports
//! - [`trace_io`]: CSV trace and state files
//! - [`calibration`]: nonnegative least-squares coefficient identification
//! - [`optimizer`]: minimum-energy cruise speed search
//! - [`cli`]: command-line front end
//!
//! Batch work (grid sweeps, independent scenarios, regressor assembly) runs on
//! rayon when the `parallel` feature is enabled and sequentially otherwise;
//! see [`exec`].

pub mod calibration;
pub mod cli;
pub mod config;
pub mod exec;
pub mod kinematics;
pub mod optimizer;
pub mod params;
pub mod power;
pub mod profile;
pub mod simulator;
pub mod statics;
pub mod trace_io;

pub use params::{Params, Scenario, ValidatedParams};
pub use simulator::{simulate, EnergyReport, PowerTrace};
