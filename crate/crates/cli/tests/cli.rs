use std::path::Path;
use std::process::{Command, Output};

fn tbp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbp"))
        .args(args)
        .output()
        .expect("spawn tbp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn sample_csv() -> String {
    let mut s = String::from("value\n");
    for i in 0..40 {
        s.push_str(&format!("{}\n", ((i * 17) % 41) as f64 / 8.0 - 1.5));
    }
    s
}

#[test]
fn fit_reads_header_column() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "x.csv", &sample_csv());
    let o = tbp(&["fit", "--input", &f, "--column", "value"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.lines().count() >= 2, "{out}");
}

#[test]
fn sensitivity_curve_is_deterministic_and_json_parses() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "x.csv", &sample_csv());
    let args = [
        "sensitivity",
        "--input",
        &f,
        "--column",
        "value",
        "--m-grid",
        "1:1:8",
    ];
    let a = tbp(&args);
    let b = tbp(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    assert_eq!(csv.lines().count(), 9, "{csv}");

    let j = tbp(&[
        "sensitivity",
        "--input",
        &f,
        "--column",
        "value",
        "--m-grid",
        "1:1:4",
        "--format",
        "json",
    ]);
    assert!(j.status.success());
    serde_json::from_slice::<serde_json::Value>(&j.stdout).expect("valid json");
}

#[test]
fn bootstrap_is_reproducible_by_seed() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "x.csv", &sample_csv());
    let run = |seed: &str| {
        tbp(&[
            "bootstrap",
            "--input",
            &f,
            "--column",
            "value",
            "--m",
            "3",
            "--boot-B",
            "50",
            "--seed",
            seed,
        ])
    };
    let a = run("5");
    let b = run("5");
    let c = run("6");
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "x.csv", &sample_csv());
    let cfg = write(
        d.path(),
        "run.cfg",
        &format!("input = {f}\ncolumn = value\nm_grid = 1:1:3\n"),
    );
    let a = tbp(&["sensitivity", "--config", &cfg]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a).lines().count(), 4);
    let b = tbp(&["sensitivity", "--config", &cfg, "--m-grid", "1:1:5"]);
    assert_eq!(stdout(&b).lines().count(), 6);
}

#[test]
fn out_flag_writes_file() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "x.csv", &sample_csv());
    let out = d.path().join("res.csv");
    let o = tbp(&[
        "fit",
        "--input",
        &f,
        "--column",
        "value",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(out).unwrap().contains(','));
}

#[test]
fn two_sample_from_group_column() {
    let d = tempfile::tempdir().unwrap();
    let mut text = String::from("y,g\n");
    for i in 0..30 {
        let g = if i % 2 == 0 { "a" } else { "b" };
        let shift = if g == "a" { 1.0 } else { 0.0 };
        text.push_str(&format!("{},{g}\n", ((i * 7) % 13) as f64 / 5.0 + shift));
    }
    let f = write(d.path(), "g.csv", &text);
    let o = tbp(&[
        "test-audit",
        "--input",
        &f,
        "--column",
        "y",
        "--group-col",
        "g",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.to_string().contains("decision"), "{v}");
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let f = write(d.path(), "x.csv", &sample_csv());
    assert_eq!(tbp(&["nonsense"]).status.code(), Some(2));
    assert_eq!(
        tbp(&["fit", "--input", "/no/such/file.csv"]).status.code(),
        Some(3)
    );
    assert_eq!(
        tbp(&["fit", "--input", &f, "--column", "value", "--delta", "-1"])
            .status
            .code(),
        Some(2)
    );
    let bad = write(d.path(), "bad.csv", "1\n2\nabc\n");
    assert_eq!(tbp(&["fit", "--input", &bad]).status.code(), Some(3));
    assert_eq!(tbp(&["--help"]).status.code(), Some(0));
}
