//! Command-line front end.
//!
//! Every subcommand computes all of its outputs in memory, then writes them
//! through temporary files that are renamed into place only once all of them
//! exist, so a failing run leaves no partial files behind.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::calibration::{fit_coefficients, FitError, FitOptions, TraceSet};
use crate::config::{load_scenario, parse_params_onto, ConfigError};
use crate::exec::{with_jobs, Execution};
use crate::optimizer::{min_energy_speed, per_segment_speeds, OptError};
use crate::params::{validate_params, Params, ScenarioError, ValidatedParams};
use crate::simulator::{simulate, SimError};
use crate::trace_io::{read_states_csv, read_trace_csv, states_to_csv, trace_to_csv, TraceIoError, TRACE_HEADER};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    /// Bad arguments, invalid parameters or malformed input files.
    Validation,
    /// A file could not be read or written.
    Io,
    /// The numerics could not produce an answer (rank deficiency, too few
    /// samples, empty search bracket).
    Numerical,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Validation => 1,
            ExitStatus::Io => 2,
            ExitStatus::Numerical => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("{path}: {source}")]
    TraceFile { path: PathBuf, source: TraceIoError },
    #[error("invalid parameters:\n{0}")]
    Params(crate::params::ValidationErrors),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Opt(#[from] OptError),
}

fn sim_status(e: &SimError) -> ExitStatus {
    match e {
        SimError::Scenario(_) | SimError::Statics(_) => ExitStatus::Validation,
        SimError::Power(_) | SimError::TooFewSamples(_) => ExitStatus::Numerical,
    }
}

impl CliError {
    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Io { .. } => ExitStatus::Io,
            CliError::Config { .. } | CliError::TraceFile { .. } | CliError::Params(_) | CliError::Usage(_) => {
                ExitStatus::Validation
            }
            CliError::Sim(e) => sim_status(e),
            CliError::Fit(FitError::MisalignedTimestamps { .. } | FitError::LengthMismatch { .. }) => {
                ExitStatus::Validation
            }
            CliError::Fit(_) => ExitStatus::Numerical,
            CliError::Opt(OptError::Sim(e)) => sim_status(e),
            CliError::Opt(OptError::InvalidBracket { .. } | OptError::InvalidTolerance(_)) => ExitStatus::Numerical,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mecanum-energy", version, about = "Energy modeling for four-wheel Mecanum robots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate scenarios and write power traces.
    Simulate(SimulateArgs),
    /// Fit loss coefficients to measured traces.
    Fit(FitArgs),
    /// Search for the minimum-energy cruise speed.
    Optimize(OptimizeArgs),
    /// Check a parameter file (and optionally a scenario) without running anything.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct ParamsArg {
    /// Parameter file; repeat to layer files, later keys win.
    #[arg(long = "params", value_name = "FILE")]
    params: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario file; repeat for a batch (one --out per scenario).
    #[arg(long, value_name = "FILE", required = true)]
    scenario: Vec<PathBuf>,
    #[command(flatten)]
    params: ParamsArg,
    /// Trace CSV, one per scenario in the same order.
    #[arg(long, value_name = "FILE", required = true)]
    out: Vec<PathBuf>,
    /// Energy report, one per scenario.
    #[arg(long, value_name = "FILE")]
    report: Vec<PathBuf>,
    /// Full-precision motion states for calibration, one per scenario.
    #[arg(long, value_name = "FILE")]
    states_out: Vec<PathBuf>,
    /// Gnuplot script plotting the traces.
    #[arg(long, value_name = "FILE")]
    gnuplot_script: Option<PathBuf>,
    /// Worker threads for the batch.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Measured trace CSV (needs t_s and P_motion_W); repeat with --states.
    #[arg(long, value_name = "FILE", required = true)]
    trace: Vec<PathBuf>,
    /// Motion states aligned with the matching --trace.
    #[arg(long, value_name = "FILE", required = true)]
    states: Vec<PathBuf>,
    /// Coefficient file to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Parameters supplying the reference temperature.
    #[command(flatten)]
    params: ParamsArg,
    /// Print residual statistics to stdout.
    #[arg(long)]
    noise_report: bool,
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, value_name = "M/S")]
    v_min: f64,
    #[arg(long, value_name = "M/S")]
    v_max: f64,
    #[arg(long, value_name = "M/S", default_value_t = 1e-3)]
    tol: f64,
    /// Also optimize each segment's speed.
    #[arg(long)]
    per_segment: bool,
    /// Write the result here as well as to stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn load_params_files(paths: &[PathBuf]) -> Result<Params, CliError> {
    paths.iter().try_fold(Params::default(), |acc, path| {
        parse_params_onto(&read(path)?, acc).map_err(|source| CliError::Config { path: path.clone(), source })
    })
}

fn load_validated(paths: &[PathBuf]) -> Result<ValidatedParams, CliError> {
    validate_params(load_params_files(paths)?).map_err(CliError::Params)
}

fn load_scenario_file(path: &Path) -> Result<crate::Scenario, CliError> {
    load_scenario(&read(path)?).map_err(|source| CliError::Config { path: path.to_owned(), source })
}

/// Stage every file next to its destination, then rename them all.
fn write_all(files: Vec<(PathBuf, String)>) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_owned();
        move |source: std::io::Error| CliError::Io { path, source }
    };
    let mut staged = Vec::with_capacity(files.len());
    for (path, contents) in files {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io(&path))?;
        tmp.write_all(contents.as_bytes()).map_err(io(&path))?;
        staged.push((path, tmp));
    }
    for (path, tmp) in staged {
        tmp.persist(&path).map_err(|e| CliError::Io { path, source: e.error })?;
    }
    Ok(())
}

fn check_counts(flag: &str, got: usize, want: usize) -> Result<(), CliError> {
    if got != 0 && got != want {
        return Err(CliError::Usage(format!("--{flag} given {got} times for {want} scenario(s)")));
    }
    Ok(())
}

fn gnuplot_script(csvs: &[PathBuf]) -> String {
    let col = |name: &str| TRACE_HEADER.split(',').position(|h| h == name).map_or(0, |i| i + 1);
    let mut o = String::new();
    let _ = writeln!(o, "set datafile separator ','");
    let _ = writeln!(o, "set key autotitle columnhead");
    let _ = writeln!(o, "set xlabel 't [s]'");
    let _ = writeln!(o, "set ylabel 'P [W]'");
    let _ = writeln!(o, "set grid");
    for csv in csvs {
        let name = csv.display().to_string().replace('\'', "''");
        let series: Vec<String> = ["P_copper_W", "P_iron_W", "P_mech_W", "P_fric_W", "P_ctrl_W", "P_sense_W", "P_total_W"]
            .iter()
            .map(|c| format!("'{name}' using 1:{} with lines", col(c)))
            .collect();
        let _ = writeln!(o, "set title '{name}'");
        let _ = writeln!(o, "plot {}", series.join(", \\\n     "));
        let _ = writeln!(o, "pause mouse close");
    }
    o
}

fn cmd_simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let n = a.scenario.len();
    if a.out.len() != n {
        return Err(CliError::Usage(format!("--out given {} times for {n} scenario(s)", a.out.len())));
    }
    check_counts("report", a.report.len(), n)?;
    check_counts("states-out", a.states_out.len(), n)?;
    let params = load_validated(&a.params.params)?;
    let scenarios = a.scenario.iter().map(|p| load_scenario_file(p)).collect::<Result<Vec<_>, _>>()?;

    let runs = with_jobs(a.jobs, || Execution::Parallel.map(&scenarios, |sc| simulate(sc, &params)))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let mut files = Vec::new();
    let mut summary = String::new();
    for (i, (trace, report)) in runs.iter().enumerate() {
        files.push((a.out[i].clone(), trace_to_csv(trace)));
        if let Some(p) = a.report.get(i) {
            files.push((p.clone(), report.to_kv_string()));
        }
        if let Some(p) = a.states_out.get(i) {
            files.push((p.clone(), states_to_csv(trace.states())));
        }
        let _ = writeln!(summary, "{}: {} J over {} s", a.scenario[i].display(), report.total_j, report.duration_s);
    }
    if let Some(p) = &a.gnuplot_script {
        files.push((p.clone(), gnuplot_script(&a.out)));
    }
    write_all(files)?;
    Ok(summary)
}

fn cmd_fit(a: &FitArgs) -> Result<String, CliError> {
    if a.trace.len() != a.states.len() {
        return Err(CliError::Usage(format!(
            "--trace given {} times but --states {} times",
            a.trace.len(),
            a.states.len()
        )));
    }
    let params = load_validated(&a.params.params)?;
    let mut data = Vec::with_capacity(a.trace.len());
    for (tp, sp) in a.trace.iter().zip(&a.states) {
        let trace = read_trace_csv(&read(tp)?).map_err(|source| CliError::TraceFile { path: tp.clone(), source })?;
        let states =
            read_states_csv(&read(sp)?).map_err(|source| CliError::TraceFile { path: sp.clone(), source })?;
        data.push((trace, states));
    }
    let sets: Vec<TraceSet<'_>> = data.iter().map(|(t, s)| TraceSet { trace: t, states: s }).collect();
    let opts = FitOptions { t0_c: params.motor.t0_c, ..FitOptions::default() };
    let fit = with_jobs(a.jobs, || fit_coefficients(&sets, &opts))?;
    write_all(vec![(a.out.clone(), fit.to_kv_string())])?;
    let mut out = format!("accuracy_pct = {}\ncondition_number = {}\n", fit.accuracy_pct, fit.condition_number);
    if !fit.temperature_fitted {
        out.push_str("temperature slopes pinned to 0 (trace spans less than 10 C)\n");
    }
    if a.noise_report {
        out.push_str(&fit.noise_report());
    }
    Ok(out)
}

fn cmd_optimize(a: &OptimizeArgs) -> Result<String, CliError> {
    let params = load_validated(&a.params.params)?;
    let scenario = load_scenario_file(&a.scenario)?;
    let text = with_jobs(a.jobs, || -> Result<String, CliError> {
        if a.per_segment {
            let plan = per_segment_speeds(&scenario, &params, a.v_min, a.v_max, a.tol, Execution::Parallel)?;
            Ok(plan.to_kv_string())
        } else {
            let r = min_energy_speed(&scenario, &params, a.v_min, a.v_max, a.tol)?;
            let mut o = String::new();
            let _ = writeln!(o, "optimum.speed_m_s = {:?}", r.x);
            let _ = writeln!(o, "optimum.energy_j = {:?}", r.value);
            let _ = writeln!(o, "optimum.iterations = {}", r.iterations);
            Ok(o)
        }
    })?;
    if let Some(p) = &a.out {
        write_all(vec![(p.clone(), text.clone())])?;
    }
    Ok(text)
}

fn cmd_validate(a: &ValidateArgs) -> Result<String, CliError> {
    let params = load_validated(&a.params.params)?;
    if let Some(path) = &a.scenario {
        let sc = load_scenario_file(path)?;
        sc.validate_for(&params.robot).map_err(|e: ScenarioError| CliError::Config {
            path: path.clone(),
            source: ConfigError::InvariantViolation(e),
        })?;
    }
    Ok("ok\n".into())
}

/// Run the command line `args` (program name first) and report the status.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
                ExitStatus::Validation
            } else {
                let _ = write!(stdout, "{rendered}");
                ExitStatus::Success
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(text) => {
            let _ = write!(stdout, "{text}");
            ExitStatus::Success
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(stderr, "run with --help for usage");
            }
            e.status()
        }
    }
}
