use std::process::Command;

fn faylab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_faylab")).args(args).output().expect("binary runs")
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(faylab(&[]).status.code(), Some(1));
    assert_eq!(faylab(&["no-such-experiment"]).status.code(), Some(1));
    assert_eq!(faylab(&["delta-cdf", "--n", "4", "--m", "4"]).status.code(), Some(1));
    assert_eq!(faylab(&["delta-cdf", "--trials", "50"]).status.code(), Some(1));
    assert_eq!(faylab(&["collapse", "--sizes", "10"]).status.code(), Some(1));
    assert_eq!(faylab(&["pu-check", "--threshold", "bogus=1"]).status.code(), Some(1));
    assert_eq!(faylab(&["--help"]).status.code(), Some(0));
}

#[test]
fn spectrum_check_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec");
    let res = faylab(&[
        "spectrum-check",
        "--m",
        "50",
        "--n",
        "100",
        "--trials",
        "20",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
        "--assert",
        "--workers",
        "2",
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["counts"]["trials"], 20);
    let config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["ensemble"]["master_seed"], 4);
    let samples = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert!(samples.starts_with("trial,raw,scaled\n"));
    assert_eq!(samples.lines().count(), 1 + 20 * 50);
    let cdf = std::fs::read_to_string(out.join("cdf.csv")).unwrap();
    let last = cdf.lines().last().unwrap();
    assert_eq!(last.split(',').nth(1), Some("1"));
}

#[test]
fn failed_gate_exits_3_only_with_assert() {
    let args = ["vertex-norm", "--m", "10", "--n", "20", "--trials", "200", "--threshold", "ks_cauchy=0"];
    assert_eq!(faylab(&args).status.code(), Some(0));
    let mut with_assert = args.to_vec();
    with_assert.push("--assert");
    let res = faylab(&with_assert);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAIL"));
}

#[test]
fn collapse_of_barriers_writes_one_directory_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let res = faylab(&[
        "collapse",
        "--quantity",
        "beta",
        "--sizes",
        "3,4",
        "--ratio",
        "2",
        "--accepted",
        "200",
        "--trials",
        "5000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    for sub in ["m3_n6", "m4_n8"] {
        assert!(dir.path().join(sub).join("samples.csv").exists());
    }
}
