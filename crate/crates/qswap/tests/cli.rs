use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qswap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qswap")).args(args).output().unwrap()
}

const SCAN: &str = r#"{
  "network": { "d": 3, "ancilla": "hsps" },
  "scan": { "s_grid": { "logspace": [0.01, 0.5, 3] }, "ancilla_grid": [0.05, 0.3] }
}
"#;

const SWEEP: &str = r#"{
  "network": { "d": 2, "ancilla": "wcs" },
  "sweep": {
    "thetas": { "linspace": [0.0, 0.1, 3] },
    "series": [ { "d": 2, "ancilla": "wcs" } ],
    "coarse": 6,
    "rounds": 2
  }
}
"#;

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn scan_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scan.json");
    fs::write(&cfg, SCAN).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = qswap(&["scan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = fs::read(a.join("scan.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("scan.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,ancilla_param,bits_per_round,accept_probability,sift_probability,H_key,H_test");
    assert_eq!(lines.count(), 6);

    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(ma["command"], "scan");
    assert_eq!(ma["outputs"][0], "scan.csv");

    fs::write(&cfg, SCAN.replace("0.3]", "0.31]")).unwrap();
    let o = qswap(&["scan", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(manifest(&a)["config_sha256"], mb["config_sha256"]);
}

#[test]
fn sweep_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("sweep.json");
    fs::write(&cfg, SWEEP).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = qswap(&["--threads", "1", "sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let name = "sweep_d2_k2_wcs.csv";
    let csv = fs::read_to_string(a.join(name)).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join(name)).unwrap());
    assert!(csv.starts_with("theta,best_s,best_ancilla_param,bits_per_round,evaluations\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn config_errors_exit_2_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, SCAN.replace("\"d\": 3", "\"d\": 3, \"k\": 2")).unwrap();
    let o = qswap(&["scan", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:2:"), "{err}");

    fs::write(&cfg, "{ \"network\": { \"d\": 3, \"ancilla\": \"hsps\", \"gain\": 1 } }").unwrap();
    let o = qswap(&["scan", "--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gain"));

    let o = qswap(&["scan", "--config", "/nonexistent/x.json", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn heralds_command() {
    let o = qswap(&["heralds", "--d", "3"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("3 perfect heralds"));
    let o = qswap(&["heralds", "--d", "2", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["perfect"].as_array().unwrap().len(), 2);
    assert_eq!(qswap(&["heralds", "--d", "2", "--topology", "unmixed"]).status.code(), Some(3));
    assert_eq!(qswap(&["heralds", "--d", "9"]).status.code(), Some(2));
}
