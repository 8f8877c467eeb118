use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walsh-filter")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const WAMF: [&str; 4] = ["--family", "wamf03", "--params", "X0=3pi,X3=pi"];

#[test]
fn eval_csv_has_header_and_dcg_slope() {
    let mut args = vec!["eval"];
    args.extend(WAMF);
    args.extend(["--grid", "1e-4:1e-2:10"]);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega_tau,F_z,F_omega"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 21);
    let (a, b) = (&rows[0], &rows[rows.len() - 1]);
    let slope = (b[1] / a[1]).log10() / (b[0] / a[0]).log10();
    assert!((slope - 4.0).abs() < 1e-3, "slope {slope}");
    let amp = (b[2] / a[2]).log10() / (b[0] / a[0]).log10();
    assert!((amp - 2.0).abs() < 1e-3, "amplitude slope {amp}");
}

#[test]
fn effective_config_is_echoed() {
    let mut args = vec!["cost", "--threads", "2"];
    args.extend(WAMF);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    let echo: serde_json::Value = serde_json::from_str(stderr(&o).lines().next().unwrap()).unwrap();
    assert_eq!(echo["command"], "cost");
    assert_eq!(echo["threads"], 2);
    assert_eq!(echo["config"]["band"][1], 0.1);
    assert_eq!(echo["config"]["sequence"]["params"]["X0"], 3.0 * std::f64::consts::PI);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let sim = ["simulate", "--family", "wamf03", "--params", "X0=3pi,X3=pi", "--realizations", "20", "--seed", "7"];
    let one = run(&[&sim[..], &["--threads", "1"]].concat());
    let two = run(&[&sim[..], &["--threads", "3"]].concat());
    assert_eq!(one.status.code(), Some(0), "{}", stderr(&one));
    assert_eq!(one.stdout, two.stdout);
    let mut eval = vec!["eval"];
    eval.extend(WAMF);
    assert_eq!(run(&eval).stdout, run(&eval).stdout);
}

#[test]
fn simulate_without_noise_is_exact() {
    let spec = r#"{"sequence": {"family": "wamf03", "params": {"X0": "3pi", "X3": "pi"}}, "realizations": 4}"#;
    let o = run(&["simulate", "--spec", spec]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mean = text.lines().find(|l| l.starts_with("mean")).unwrap();
    let infidelity: f64 = mean.split(',').nth(2).unwrap().parse().unwrap();
    assert!(infidelity.abs() < 1e-14);
}

#[test]
fn malformed_spec_names_the_key() {
    let o = run(&["catalog", "--spec", r#"{"family": "wamf03", "params": {"X0": "3pi"}}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("X3"), "{}", stderr(&o));
    let o = run(&["catalog", "--spec", r#"{"family": "wamf03", "params": {"X0": 1, "X3": 1}, "colour": 1}"#]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
    let o = run(&["catalog", "--spec", "{not json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "--family", "wamf03", "--params", "X0=3pie,X3=pi"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_vary_set_is_a_parse_error() {
    let o = run(&["optimize", "--family", "wamf03", "--params", "X0=3pi,X3=pi", "--vary", ""]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coarse_steps_are_numeric_errors() {
    let o = run(&["simulate", "--family", "primitive", "--params", "theta=pi", "--realizations", "2", "--substeps", "1", "--xi2", "1"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn flat_objective_reports_no_improvement() {
    // The dephasing cost of a primitive pulse does not depend on its phase.
    let o = run(&["optimize", "--family", "primitive", "--params", "theta=pi,phi=0", "--vary", "phi"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn bisection_recovers_the_dcg_amplitude() {
    let o = run(&[
        "optimize", "--family", "wamf03", "--params", "X0=3pi,X3=pi/2", "--vary", "X3", "--method", "bisect", "--bracket",
        "0.5pi:1.5pi",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let x3 = v["argmin"]["X3"].as_f64().unwrap();
    assert!((x3 - std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn catalog_output_feeds_back_as_a_spec() {
    let mut args = vec!["catalog"];
    args.extend(WAMF);
    let first = run(&args);
    let spec = stdout(&first);
    let again = run(&["catalog", "--spec", &spec]);
    assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
    let a: serde_json::Value = serde_json::from_str(&spec).unwrap();
    let b: serde_json::Value = serde_json::from_str(&stdout(&again)).unwrap();
    assert_eq!(a["triples"], b["triples"]);
}

#[test]
fn output_file_and_map() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.csv");
    let o = run(&[
        "map", "--family", "wamf03", "--params", "X0=3pi,X3=pi", "--rows", "X0=2pi:4pi:3", "--cols", "X3=0.5pi:1.5pi:3", "-o",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn shaped_sequence_emits_segments() {
    let o = run(&["shape", "--amplitudes", "3pi,0,0,pi", "--kind", "trapezoid", "--emit", "sequence", "--subsegments", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let area: f64 = v["triples"].as_array().unwrap().iter().map(|t| t[0].as_f64().unwrap() * t[1].as_f64().unwrap()).sum();
    assert!((area - 3.0 * std::f64::consts::PI).abs() < 1e-9, "area {area}");
}
