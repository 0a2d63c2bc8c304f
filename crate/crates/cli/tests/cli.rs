use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn ptamc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptamc"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_reports_both_bounds_as_json() {
    let out = ptamc(&[
        "check",
        &fixture("two_task.toml"),
        "--complete",
        "--json",
        "--exact",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["exactMin"], "18/25");
    assert_eq!(v["exactMax"], "1197/1250");
    let (lo, hi) = (v["pMin"].as_f64().unwrap(), v["pMax"].as_f64().unwrap());
    assert!(lo <= hi);
    assert!((hi - 0.9576).abs() < 1e-9);
}

#[test]
fn empty_acceptance_gives_zero() {
    let out = ptamc(&["check", &fixture("empty_acceptance.toml"), "--complete"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("pMin = 0.0000000000"), "{text}");
    assert!(text.contains("pMax = 0.0000000000"), "{text}");
}

#[test]
fn plain_regions_give_the_same_answer() {
    let a = stdout(&ptamc(&["check", &fixture("two_task.toml"), "--complete"]));
    let b = stdout(&ptamc(&[
        "check",
        &fixture("two_task.toml"),
        "--complete",
        "--plain-regions",
    ]));
    let bounds = |s: &str| s.lines().take(2).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(bounds(&a), bounds(&b));
}

#[test]
fn generated_models_round_trip_through_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("robot.toml");
    let path = path.to_str().unwrap();
    let out = ptamc(&["gen", "--family", "robot3x2", "-o", path]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = ptamc(&["oracle", path, "--complete"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = ptamc(&["check", path, "--complete"]);
    assert!(stdout(&out).contains("pMax = 0.5648"), "{}", stdout(&out));
}

#[test]
fn product_tick_and_regions_emit_models() {
    let model = fixture("running_example.toml");
    let out = ptamc(&["product", &model, "--complete"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("WORK_alpha|q_alpha"));
    let out = ptamc(&["tick", &model, "--complete"]);
    assert!(stdout(&out).contains("tick"));
    let out = ptamc(&["regions", &model, "--complete"]);
    let text = stdout(&out);
    assert!(text.starts_with("mdp 1\n"), "{text}");
    assert!(text.contains("states 1742"));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        &fixture("two_task.toml"),
        "--complete",
        "--seed",
        "4",
        "--steps",
        "8",
        "--product",
    ];
    let a = ptamc(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&ptamc(&args)));
    assert!(stdout(&a).contains("weight"));
}

#[test]
fn bench_writes_csv_rows() {
    let out = ptamc(&["bench", "--family", "task", "--from", "2", "--to", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["family", "N", "seed", "size", "pMin", "pMax", "tMin", "tMax"]
    );
    assert_eq!(rows.records().count(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(ptamc(&["check"]).status.code(), Some(1));
    assert_eq!(
        ptamc(&["check", "does-not-exist.toml"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "format = 1\n[pta\n").unwrap();
    let out = ptamc(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
    let out = ptamc(&["check", &fixture("diagonal.toml")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("x + 1 <= w"), "{}", stderr(&out));
    let out = ptamc(&["check", &fixture("running_example.toml")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("totality"));
}
