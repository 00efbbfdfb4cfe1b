use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const WERNER: &str = r#"{"dims":[2,2],"matrix":[
 [[0.1,0],[0,0],[0,0],[0,0]],
 [[0,0],[0.4,0],[-0.3,0],[0,0]],
 [[0,0],[-0.3,0],[0.4,0],[0,0]],
 [[0,0],[0,0],[0,0],[0.1,0]]]}"#;

const MIXTURE: &str = r#"{"weights":[0.5,0.5],"states":[
 {"dims":[2,2],"vector":[[0,0],[0.7071067811865476,0],[-0.7071067811865476,0],[0,0]]},
 {"dims":[2,2],"vector":[[1,0],[0,0],[0,0],[0,0]]}]}"#;

fn entcost(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_entcost"));
    cmd.args(args)
        .env_remove("ENTCOST_SEED")
        .env("RUST_LOG", "error");
    if let Some(s) = seed_env {
        cmd.env("ENTCOST_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// Concurrence of this Werner-type state is 2·0.3 - 2·0.1 = 0.4.
fn werner_eof() -> f64 {
    let c: f64 = 0.4;
    let p = 0.5 + 0.5 * (1.0 - c * c).sqrt();
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

#[test]
fn eof_reports_closed_form_and_reloadable_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "w.json", WERNER);
    let ens = dir.path().join("ens.json");
    let out = entcost(
        &[
            "eof",
            &input,
            "--restarts",
            "3",
            "--ensemble-out",
            ens.to_str().unwrap(),
        ],
        None,
    );
    let v = json(&out);
    assert_eq!(v["seed"], 0);
    assert_eq!(v["seed-source"], "default");
    let value = v["result"]["value"].as_f64().unwrap();
    let closed = v["result"]["closed_form"].as_f64().unwrap();
    assert!((closed - werner_eof()).abs() < 1e-12);
    assert!((value - closed).abs() < 1e-3, "{value} vs {closed}");
    assert_eq!(v["config"]["optimizer"]["ensemble_size"], 16);
    // the saved ensemble reloads and seeds a search that cannot do worse
    let again = json(&entcost(
        &["eof", ens.to_str().unwrap(), "--restarts", "0"],
        None,
    ));
    assert!(again["result"]["value"].as_f64().unwrap() <= value + 1e-9);
}

#[test]
fn same_seed_same_bytes_and_seed_sources() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "w.json", WERNER);
    let args = ["eof", input.as_str(), "--restarts", "2", "--seed", "17"];
    let a = entcost(&args, None);
    let b = entcost(&args, None);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed-source"], "flag");
    let env = json(&entcost(
        &["eof", input.as_str(), "--restarts", "2"],
        Some("17"),
    ));
    assert_eq!(env["seed"], 17);
    assert_eq!(env["seed-source"], "env");
    assert_eq!(env["result"], json(&a)["result"]);
    // the flag wins over the environment
    let both = json(&entcost(&args, Some("5")));
    assert_eq!(both["seed"], 17);
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = entcost(
        &["demo-divergence", "--format", "json", "--k-max", "1"],
        None,
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"bures\": 2.0000000000000009e-1"), "{text}");
}

#[test]
fn metrics_report_all_fields() {
    let dir = tempfile::tempdir().unwrap();
    let rho = write(dir.path(), "w.json", WERNER);
    let sigma = write(dir.path(), "m.json", MIXTURE);
    let v = json(&entcost(&["metrics", &rho, &sigma], None));
    let r = &v["result"];
    for key in ["fidelity", "bures", "trace", "chain_lower", "chain_upper"] {
        assert!(r[key].is_f64(), "{key}");
    }
    assert_eq!(r["chain_holds"], true);
    let (f, d) = (
        r["fidelity"].as_f64().unwrap(),
        r["trace"].as_f64().unwrap(),
    );
    assert!((r["bures"].as_f64().unwrap() - 2.0 * (1.0 - f).sqrt()).abs() < 1e-12);
    assert!(1.0 - f <= d + 1e-9 && d <= (1.0 - f * f).sqrt() + 1e-9);
}

#[test]
fn divergence_csv_is_default() {
    let out = entcost(&["demo-divergence", "--k-max", "460"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,fidelity,bures"));
    let rows: Vec<(usize, f64)> = lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 460);
    let first = rows.iter().find(|r| r.1 > 1.99).unwrap().0;
    assert_eq!(
        first,
        (1..)
            .find(|&k| 2.0 * (1.0 - 0.99f64.powi(k)).sqrt() > 1.99)
            .unwrap() as usize
    );
}

#[test]
fn regularize_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "w.json", WERNER);
    let out = entcost(
        &[
            "regularize",
            &input,
            "--n-max",
            "2",
            "--restarts",
            "2",
            "--format",
            "csv",
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    let a1: f64 = rows[0][1].parse().unwrap();
    let a2: f64 = rows[1][1].parse().unwrap();
    assert!((a1 - werner_eof()).abs() < 1e-3);
    assert!(a2 <= a1 + 1e-9);
}

#[test]
fn formation_on_ensemble_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "m.json", MIXTURE);
    let v = json(&entcost(&["formation", &input, "--n", "4"], None));
    let r = &v["result"];
    assert_eq!(r["mode"], "exact");
    assert_eq!(r["checks"]["holds"], true);
    let rate = r["rate"].as_f64().unwrap();
    assert!((rate - 0.5 - r["rate_slack"].as_f64().unwrap()).abs() < 1e-12);
    let sweep = json(&entcost(
        &["formation", &input, "--n", "4", "--sweep"],
        None,
    ));
    let ns: Vec<u64> = sweep["result"]["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["n"].as_u64().unwrap())
        .collect();
    let skipped: Vec<u64> = sweep["result"]["skipped"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["n"].as_u64().unwrap())
        .collect();
    let mut all = [ns, skipped].concat();
    all.sort();
    assert_eq!(all, vec![1, 2, 3, 4]);
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = entcost(
            &["verify", "--seed", "42", "--output", p.to_str().unwrap()],
            None,
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x, y);
    let v: Value = serde_json::from_slice(&x).unwrap();
    assert_eq!(v["result"]["holds"], true);
    assert_eq!(v["config"]["metric_pairs"], 1000);
}

#[test]
fn verify_config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"seed": 8, "metric_pairs": 4, "monotonicity_cases": 2, "continuity_cases": 2, "multiplicativity_cases": 2}"#,
    );
    let v = json(&entcost(
        &["verify", "--config", &cfg, "--pairs", "6"],
        None,
    ));
    assert_eq!(v["seed"], 8);
    assert_eq!(v["seed-source"], "config");
    assert_eq!(v["config"]["metric_pairs"], 6);
    let bad = write(dir.path(), "bad.json", r#"{"nonsense": 1}"#);
    assert_eq!(
        entcost(&["verify", "--config", &bad], None).status.code(),
        Some(2)
    );
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(
        entcost(&["eof", missing.to_str().unwrap()], None)
            .status
            .code(),
        Some(2)
    );
    let wrong = write(
        dir.path(),
        "wrong.json",
        r#"{"dims":[2,2],"matrix":[[[1,0]]]}"#,
    );
    assert_eq!(entcost(&["eof", &wrong], None).status.code(), Some(2));
    let not_psd = write(
        dir.path(),
        "neg.json",
        r#"{"dims":[2,1],"matrix":[[[1.5,0],[0,0]],[[0,0],[-0.5,0]]]}"#,
    );
    assert_eq!(entcost(&["eof", &not_psd], None).status.code(), Some(2));
    assert_eq!(entcost(&["eof"], None).status.code(), Some(2));
    assert_eq!(
        entcost(&["demo-divergence", "--fidelity", "1.5"], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        entcost(&["demo-divergence"], Some("abc")).status.code(),
        Some(2)
    );
}
