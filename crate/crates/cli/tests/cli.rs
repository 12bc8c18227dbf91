use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisepulse"))
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("NOISEPULSE_DATA").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim_start().strip_prefix('=').map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn check_passes_the_general_pi_pulse() {
    let o = run(&["check", data("table7-general2-pi").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("overall: PASS (11 residuals, 0 failed)"), "{out}");
}

#[test]
fn check_fails_the_unshaped_pulse_on_the_first_moment() {
    let o = run(&["--no-timestamp", "check", data("unshaped-pi").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let line = stdout(&o).lines().find(|l| l.starts_with("mu1_1")).unwrap().to_string();
    let value: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((value - 2.0 / std::f64::consts::PI).abs() < 1e-12, "{line}");
    assert!(line.ends_with("FAIL"));
}

#[test]
fn corrupted_spec_is_a_parse_error_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "family = \"fm\"\norder = 1\ntheta = \"pi\"\namplitude = [\n").unwrap();
    let o = run(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn missing_spec_is_a_usage_error() {
    let o = run(&["check", "/nonexistent/spec.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn undersized_ansatz_is_a_usage_error() {
    let o = run(&["synthesize", "--family", "fm", "--order", "2", "--theta", "pi", "--coefficients", "2,4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3 free parameters but the system has 8 residuals"), "{}", stderr(&o));
}

#[test]
fn synthesis_from_the_catalog_reproduces_table_2() {
    let o = run(&["synthesize", "--family", "fm", "--order", "1", "--theta", "pi", "--start", "table2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    for (key, want) in [("amplitude", 3.751157), ("b2", -1.090479), ("b4", -0.588913)] {
        assert!((field(&out, key) - want).abs() < 1e-5, "{key}: {out}");
    }
}

#[test]
fn symmetric_piecewise_half_pi_synthesis_finds_the_published_pulse() {
    let o = run(&["synthesize", "--family", "am-piecewise", "--order", "2", "--theta", "pi/2", "--symmetric"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((field(&out, "amplitude") - 6.32709469).abs() < 1e-5, "{out}");
    let line = out.lines().find(|l| l.starts_with("instants")).unwrap();
    let inner = line.split_once('[').unwrap().1.trim_end_matches(']');
    let t: Vec<f64> = inner.split(',').map(|x| x.trim().parse().unwrap()).collect();
    assert!((t[0] - 0.03312609).abs() < 1e-5 && (t[1] - 0.25209296).abs() < 1e-5, "{t:?}");
}

#[test]
fn synthesized_files_pass_check_and_logs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let (spec, log) = (dir.path().join("p.toml"), dir.path().join("p.log"));
    let o = run(&[
        "synthesize", "--family", "fm", "--order", "1", "--theta", "pi/2", "--out", spec.to_str().unwrap(), "--log", log.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(!std::fs::read_to_string(&log).unwrap().is_empty());
    let c = run(&["check", spec.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0), "{}", stdout(&c));
}

#[test]
fn tables_pass_and_skip_quantum_entries() {
    let o = run(&["--no-timestamp", "tables"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("table8-amfm1-pi-ts0.01 ") && l.ends_with("PASS")), "{out}");
    assert_eq!(out.matches("SKIPPED (quantum bath out of scope)").count(), 2);
}

#[test]
fn data_directory_override_replaces_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data("table3-fm2-pi"), dir.path().join("only.toml")).unwrap();
    let o = bin().args(["--no-timestamp", "tables"]).env("NOISEPULSE_DATA", dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("only") && !out.contains("table7"), "{out}");
}

#[test]
fn reports_are_identical_without_timestamps() {
    let spec = data("table2-fm1-pi");
    let args = ["--no-timestamp", "simulate", spec.to_str().unwrap(), "--ensemble", "200", "--slices", "300", "--points", "5"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.code().is_some_and(|c| c < 2), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(!stdout(&a).contains("generated"));
    let stamped = run(&args[1..]);
    assert!(stdout(&stamped).starts_with("# generated"));
}

#[test]
fn compose_requires_a_general_decoherence_pulse() {
    let o = run(&["compose", data("table3-fm2-pi").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.toml");
    let o = run(&["compose", data("table7-general2-pi").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("family = \"fm-composite\"") && text.contains("pattern = [\"forward\", \"reversed\"]"), "{text}");
}

#[test]
fn export_writes_constant_magnitude_fm_waveform() {
    let o = run(&["export", data("table3-fm2-pi").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "t,v_x,v_y,v_z,omega,f");
    assert_eq!(lines.len(), 1001);
    for l in &lines[1..] {
        let r: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((r[1].hypot(r[2]) - 8.129).abs() < 1e-3, "{l}");
    }
    let t = run(&["export", "--trajectory", "--samples", "11", data("table3-fm2-pi").to_str().unwrap()]);
    assert_eq!(stdout(&t).lines().count(), 12);
}
