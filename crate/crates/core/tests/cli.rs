use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mecanum_energy::trace_io::TRACE_HEADER;

const RAMP: &str = "\
scenario.commanded_speed_m_s = 0.6
scenario.sample_dt_s = 0.02
segment.0.length_m = 2.0
segment.1.length_m = 4.0
segment.1.incline_deg = 10.0
segment.2.length_m = 2.0
segment.3.length_m = 4.0
segment.3.incline_deg = -10.0
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mecanum-energy"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ramp.toml"), RAMP).unwrap();
    fs::write(dir.path().join("params.toml"), "robot.mass_kg = 12.0\n").unwrap();
    let p = dir.path().to_owned();
    (dir, p)
}

#[test]
fn simulate_writes_trace_and_report() {
    let (_g, d) = setup();
    let o = run(
        &d,
        &[
            "simulate",
            "--scenario",
            "ramp.toml",
            "--params",
            "params.toml",
            "--out",
            "t.csv",
            "--report",
            "r.txt",
            "--gnuplot-script",
            "plot.gp",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(d.join("t.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(TRACE_HEADER));
    let report = fs::read_to_string(d.join("r.txt")).unwrap();
    assert!(report.contains("report.total_j = "));
    assert!(report.contains("report.segment.3.energy_j"));
    assert!(fs::read_to_string(d.join("plot.gp")).unwrap().contains("'t.csv' using 1:"));
}

#[test]
fn validate_names_bad_field() {
    let (_g, d) = setup();
    fs::write(d.join("bad.toml"), "robot.mass_kg = 0.0\n").unwrap();
    let o = run(&d, &["validate", "--params", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("robot.mass_kg"), "{}", stderr(&o));

    let o = run(&d, &["validate", "--params", "params.toml", "--scenario", "ramp.toml"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_usage_error() {
    let (_g, d) = setup();
    let o = run(&d, &["simulate", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_file_is_io_error_and_writes_nothing() {
    let (_g, d) = setup();
    let o = run(&d, &["simulate", "--scenario", "nope.toml", "--out", "t.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!d.join("t.csv").exists());
}

#[test]
fn failed_batch_writes_nothing() {
    let (_g, d) = setup();
    fs::write(d.join("steep.toml"), "scenario.commanded_speed_m_s = 0.5\nsegment.0.length_m = 1.0\nsegment.0.incline_deg = 95.0\n")
        .unwrap();
    let o = run(
        &d,
        &["simulate", "--scenario", "ramp.toml", "--scenario", "steep.toml", "--out", "a.csv", "--out", "b.csv"],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!d.join("a.csv").exists() && !d.join("b.csv").exists());
}

#[test]
fn fit_on_three_rows_is_numerical_failure() {
    let (_g, d) = setup();
    let o = run(&d, &["simulate", "--scenario", "ramp.toml", "--out", "t.csv", "--states-out", "s.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cut = |name: &str| {
        let text = fs::read_to_string(d.join(name)).unwrap();
        let short: Vec<&str> = text.lines().take(4).collect();
        fs::write(d.join(format!("short_{name}")), short.join("\n") + "\n").unwrap();
    };
    cut("t.csv");
    cut("s.csv");
    let o = run(&d, &["fit", "--trace", "short_t.csv", "--states", "short_s.csv", "--out", "c.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("too few samples"), "{}", stderr(&o));
    assert!(!d.join("c.toml").exists());
}

#[test]
fn fit_without_acceleration_is_rank_deficient() {
    let (_g, d) = setup();
    run(&d, &["simulate", "--scenario", "ramp.toml", "--out", "t.csv", "--states-out", "s.csv"]);
    let o = run(&d, &["fit", "--trace", "t.csv", "--states", "s.csv", "--out", "c.toml"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("lambda"), "{}", stderr(&o));
}

#[test]
fn fit_recovers_coefficients_from_simulated_files() {
    let (_g, d) = setup();
    let mut args: Vec<String> = vec!["fit".into(), "--out".into(), "c.toml".into(), "--noise-report".into()];
    for (i, sc) in mecanum_energy::calibration::excitation_suite().iter().enumerate() {
        let name = format!("x{i}.toml");
        fs::write(d.join(&name), mecanum_energy::config::scenario_to_string(sc)).unwrap();
        let (t, s) = (format!("t{i}.csv"), format!("s{i}.csv"));
        let o = run(&d, &["simulate", "--scenario", &name, "--out", &t, "--states-out", &s]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        args.extend(["--trace".into(), t, "--states".into(), s]);
    }
    let o = bin().current_dir(&d).args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("noise.relative_residual_std"));
    let fitted = mecanum_energy::config::parse_params(
        &fs::read_to_string(d.join("c.toml"))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("fit."))
            .collect::<Vec<_>>()
            .join("\n"),
    )
    .unwrap();
    let want = mecanum_energy::Params::default();
    // the trace file carries 9 significant digits
    let close = |a: f64, b: f64| ((a - b) / b).abs() < 1e-4;
    assert!(close(fitted.motor.tau, want.motor.tau), "{}", fitted.motor.tau);
    assert!(close(fitted.motor.mech[0].forward.k2, want.motor.mech[0].forward.k2));
    assert!(close(fitted.friction.mu2, want.friction.mu2), "{}", fitted.friction.mu2);
}

#[test]
fn optimize_reports_and_rejects_bad_bracket() {
    let (_g, d) = setup();
    let o = run(&d, &["optimize", "--scenario", "ramp.toml", "--v-min", "0.2", "--v-max", "1.0", "--out", "o.txt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(d.join("o.txt")).unwrap();
    assert_eq!(text, String::from_utf8_lossy(&o.stdout));
    assert!(text.contains("optimum.speed_m_s"));

    let o = run(&d, &["optimize", "--scenario", "ramp.toml", "--v-min", "1.0", "--v-max", "0.5"]);
    assert_eq!(o.status.code(), Some(3));

    let o = run(
        &d,
        &["optimize", "--scenario", "ramp.toml", "--v-min", "0.2", "--v-max", "1.0", "--tol", "0.01", "--per-segment"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("plan.segment.3.speed_m_s"));
}

#[test]
fn jobs_do_not_change_output() {
    let (_g, d) = setup();
    fs::write(d.join("flat.toml"), "scenario.commanded_speed_m_s = 0.4\nsegment.0.length_m = 3.0\n").unwrap();
    for (jobs, suffix) in [("1", "a"), ("4", "b")] {
        let (o1, o2) = (format!("r_{suffix}.csv"), format!("f_{suffix}.csv"));
        let o = run(
            &d,
            &["simulate", "--scenario", "ramp.toml", "--scenario", "flat.toml", "--out", &o1, "--out", &o2, "--jobs", jobs],
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    assert_eq!(fs::read(d.join("r_a.csv")).unwrap(), fs::read(d.join("r_b.csv")).unwrap());
    assert_eq!(fs::read(d.join("f_a.csv")).unwrap(), fs::read(d.join("f_b.csv")).unwrap());
}
