use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ncgtwist(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncgtwist"))
        .args(args)
        .current_dir(dir)
        .env_remove("NCGTWIST_THREADS")
        .output()
        .expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("every line is JSON"))
        .collect()
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn record<'a>(records: &'a [Value], check: &str) -> &'a Value {
    records
        .iter()
        .find(|r| r["check"] == check)
        .unwrap_or_else(|| panic!("no record for {check}"))
}

#[test]
fn verify_complex_seed_42_passes() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "run.json",
        r#"{ "command": "verify-complex", "dim": 3, "n_max": 4, "seed": 42 }"#,
    );
    let out = ncgtwist(&["verify-complex", "--config", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let all = lines(&out);
    assert!(all[0].get("header").is_some());
    let records = &all[1..];
    assert_eq!(records.len(), 5);
    for r in records {
        assert!(r["defect"].as_f64().unwrap() <= 1e-10, "{r}");
        assert_eq!(r["pass"], true);
        assert_eq!(r["provenance"]["seed"], 42);
        for key in [
            "check",
            "defect",
            "tolerance",
            "pass",
            "runtime_ms",
            "provenance",
        ] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
    }
}

#[test]
fn suq2_haar_recovers_beta_star_beta() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "model.json",
        r#"{ "q": 0.5, "degree_cutoff": 6, "dirac": [], "epsilon_u": 0.05 }"#,
    );
    let cfg = write(&dir, "run.json", r#"{ "model": "model.json" }"#);
    let out = ncgtwist(&["suq2-haar", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let records = lines(&out);
    let r = record(&records, "recover-bstar-b");
    // h(β*β) = 1/(1 + q²).
    assert!((r["value"].as_f64().unwrap() - 0.8).abs() < 1e-8, "{r}");
    assert!(records[1..].iter().all(|r| r["pass"] == true));
}

#[test]
fn malformed_configs_exit_2_with_config_error() {
    let dir = TempDir::new().unwrap();
    write(
        &dir,
        "bad_model.json",
        r#"{ "q": 1.5, "degree_cutoff": 6 }"#,
    );
    let cases = [
        ("syntax.json", "{ not json"),
        ("unknown.json", r#"{ "betta": 1.0 }"#),
        ("beta.json", r#"{ "beta": -1.0 }"#),
        ("nmax.json", r#"{ "n_max": 0 }"#),
        ("mismatch.json", r#"{ "command": "verify-jlo" }"#),
        (
            "tolerance.json",
            r#"{ "tolerances": { "no-such-check": 1e-3 } }"#,
        ),
        ("model.json", r#"{ "model": "bad_model.json" }"#),
        ("missing_model.json", r#"{ "model": "nowhere.json" }"#),
    ];
    for (name, body) in cases {
        let cfg = write(&dir, name, body);
        let out = ncgtwist(&["verify-complex", "--config", &cfg], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}");
        let records = lines(&out);
        let err = record(&records, "config");
        assert_eq!(err["error"]["kind"], "ConfigError", "{name}");
        assert_eq!(err["pass"], false);
    }
    let out = ncgtwist(&["verify-complex", "--config", "absent.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_ncgtwist"))
        .args(["pairing-synthetic"])
        .env("NCGTWIST_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        record(&lines(&out), "config")["error"]["kind"],
        "ConfigError"
    );
}

#[test]
fn thread_cap_is_reported_in_the_header() {
    let out = Command::new(env!("CARGO_BIN_EXE_ncgtwist"))
        .args(["verify-complex", "--seed", "3"])
        .env("NCGTWIST_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(lines(&out)[0]["header"]["threads"], 2);
}

/// Drops the wall-clock field so report bodies can be compared.
fn body_without_timing(out: &Output) -> Vec<Value> {
    lines(out)[1..]
        .iter()
        .cloned()
        .map(|mut r| {
            r.as_object_mut().unwrap().remove("runtime_ms");
            r
        })
        .collect()
}

#[test]
fn reports_are_deterministic_in_the_seed() {
    let dir = TempDir::new().unwrap();
    let a = ncgtwist(&["verify-jlo", "--seed", "9"], dir.path());
    let b = Command::new(env!("CARGO_BIN_EXE_ncgtwist"))
        .args(["verify-jlo", "--seed", "9"])
        .env("NCGTWIST_THREADS", "3")
        .output()
        .unwrap();
    let c = ncgtwist(&["verify-jlo", "--seed", "10"], dir.path());
    assert_eq!(body_without_timing(&a), body_without_timing(&b));
    assert_ne!(body_without_timing(&a), body_without_timing(&c));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "run.json", r#"{ "seed": 5, "trials": 10 }"#);
    let a = ncgtwist(
        &["verify-complex", "--config", &cfg, "--seed", "6"],
        dir.path(),
    );
    assert_eq!(lines(&a)[1]["provenance"]["seed"], 6);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = TempDir::new().unwrap();
    let out = ncgtwist(&["pairing-synthetic", "--out", "report.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    let records: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let trivial = record(&records, "trivial-pairing");
    assert!((trivial["value"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!(record(&records, "beta-stability")["pass"] == true);
    assert!(record(&records, "homotopy")["pass"] == true);
}

#[test]
fn failing_asserted_check_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "run.json",
        r#"{ "trials": 20, "tolerances": { "b-squared": 0.0 } }"#,
    );
    let out = ncgtwist(
        &["verify-complex", "--config", &cfg, "--seed", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let records = lines(&out);
    let r = record(&records, "b-squared");
    assert_eq!(r["pass"], false);
    assert_eq!(r["tolerance"], 0.0);
}

#[test]
fn growth_probe_is_diagnostic_and_shows_the_contrast() {
    let dir = TempDir::new().unwrap();
    let out = ncgtwist(&["growth-probe"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let records = lines(&out);
    for cutoff in [3, 4, 5] {
        let r = record(&records, &format!("quantum-cutoff-{cutoff}"));
        assert_eq!(r["asserted"], false);
        assert_eq!(r["increasing_tail"], true);
        assert_eq!(r["exponents"].as_array().unwrap().len(), 11);
    }
    let classical = record(&records, "classical");
    assert!((classical["final_exponent"].as_f64().unwrap() - 1.5).abs() < 0.05);
}

#[test]
fn growth_probe_never_fails_the_run() {
    let dir = TempDir::new().unwrap();
    // A two-point grid leaves no tail to judge.
    let cfg = write(
        &dir,
        "run.json",
        r#"{ "t_grid": [1.0, 0.5], "cutoffs": [1] }"#,
    );
    let out = ncgtwist(&["growth-probe", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(record(&lines(&out), "quantum-cutoff-1")["pass"], false);
}

#[test]
fn suq2_invariance_reports_tail_bounded_defects() {
    let dir = TempDir::new().unwrap();
    write(&dir, "model.json", r#"{ "q": 0.5, "degree_cutoff": 4 }"#);
    let cfg = write(&dir, "run.json", r#"{ "model": "model.json" }"#);
    let out = ncgtwist(&["suq2-invariance", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let records = lines(&out);
    let eta = record(&records, "eta-invariance-n1");
    assert!(eta["defect"].as_f64().unwrap() <= eta["tolerance"].as_f64().unwrap());
    let untwisted = record(&records, "eta-untwisted-n1");
    assert!(untwisted["defect"].as_f64().unwrap() > 1e-3);
    assert_eq!(record(&records, "alpha-not-fixed")["bound"], "lower");
}

#[test]
fn pairing_suq2_is_exploratory() {
    let dir = TempDir::new().unwrap();
    write(&dir, "model.json", r#"{ "q": 0.5, "degree_cutoff": 2 }"#);
    let cfg = write(&dir, "run.json", r#"{ "model": "model.json", "terms": 4 }"#);
    let out = ncgtwist(&["pairing-suq2", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let records = lines(&out);
    let r = record(&records, "odd-pairing-u");
    assert_eq!(r["asserted"], false);
    assert!(r["value_re"].is_f64());
    assert!(r["tolerance"].is_null());
}

#[test]
fn list_checks_covers_every_command() {
    let dir = TempDir::new().unwrap();
    let out = ncgtwist(&["--list-checks"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let all = lines(&out);
    for command in [
        "verify-complex",
        "verify-jlo",
        "verify-cocycle",
        "suq2-haar",
        "suq2-invariance",
        "growth-probe",
        "pairing-synthetic",
        "pairing-suq2",
    ] {
        assert!(all.iter().any(|r| r["command"] == command), "{command}");
    }
    let one = lines(&ncgtwist(&["verify-jlo", "--list-checks"], dir.path()));
    assert_eq!(one.len(), 8);
    assert!(one.iter().all(|r| r["command"] == "verify-jlo"));
}

#[test]
fn no_command_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = ncgtwist(&[], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
