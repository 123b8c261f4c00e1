use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn drtool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drtool")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn toy1_build_pab_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region.json");
    let trace = dir.path().join("trace.json");
    let o = drtool(&[
        "build-pab",
        "--case", path(&fixture("toy1.json")),
        "--odps", path(&fixture("toy1.csv")),
        "--out", path(&out),
        "--trace", path(&trace),
        "--box-half-width", "1000",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let region = read_json(&out);
    assert_eq!(region["dimension"], 1);
    assert_eq!(region["converged"], true);
    let cuts: Vec<&Value> =
        region["boundaries"].as_array().unwrap().iter().filter(|b| b["origin"] != "init-box").collect();
    assert_eq!(cuts.len(), 2);
    assert_eq!(cuts[0]["origin"], "pab-iteration-1");
    let nu: Vec<u64> = read_json(&trace)["iterations"].as_array().unwrap().iter().map(|r| r["nu"].as_u64().unwrap()).collect();
    assert_eq!(nu, vec![2, 1, 0]);

    // the written region classifies and plots
    let o = drtool(&["classify", "--region", path(&out), "--odps", path(&fixture("toy1.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pab"].as_array().unwrap().len(), 2);
    let plots = dir.path().join("plots");
    let o = drtool(&[
        "plot-data",
        "--case", path(&fixture("toy1.json")),
        "--region", path(&out),
        "--odps", path(&fixture("toy1.csv")),
        "--out", path(&plots),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("vertices omitted"));
    let points = std::fs::read_to_string(plots.join("points.csv")).unwrap();
    assert_eq!(points.lines().count(), 7);
    assert!(points.starts_with("odp_id,dw_1,inside,s"));
}

#[test]
fn build_traditional_and_parallel_on_toy1() {
    let dir = tempfile::tempdir().unwrap();
    let trad = dir.path().join("trad.json");
    let o = drtool(&["build-traditional", "--case", path(&fixture("toy1.json")), "--out", path(&trad)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_json(&trad)["converged"], true);

    let par = dir.path().join("par.json");
    let trace = dir.path().join("workers.json");
    let o = drtool(&[
        "build-parallel",
        "--case", path(&fixture("toy1.json")),
        "--odps", path(&fixture("toy1.csv")),
        "--partitions", "2",
        "--out", path(&par),
        "--trace", path(&trace),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read_json(&trace)["workers"].as_array().unwrap().len(), 2);
    let region = read_json(&par);
    assert!(region["boundaries"]
        .as_array()
        .unwrap()
        .iter()
        .any(|b| b["origin"].as_str().unwrap().starts_with("shared-from-partition-")));
}

#[test]
fn check_reports_violations() {
    let o = drtool(&["check", "--case", path(&fixture("toy1.json")), "--odps", path(&fixture("toy1.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "odp_id,s,feasible");
    assert_eq!(lines[1], "1,2.0,false");
    assert_eq!(lines[6], "6,5.0,false");
    assert_eq!(lines.iter().filter(|l| l.ends_with(",true")).count(), 3);
}

#[test]
fn gen_odps_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = drtool(&["gen-odps", "--dim", "2", "--count", "50", "--std", "10,20", "--corr", "0.3", "--seed", "4", "--out", path(p)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(bytes).unwrap().lines().count(), 51);
}

#[test]
fn builds_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (case, points) = (fixture("toy1.json"), fixture("toy1.csv"));
    let mut outputs = Vec::new();
    for (i, seq) in [false, true].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.json"));
        let mut args = vec![
            "build-pab",
            "--case", path(&case),
            "--odps", path(&points),
            "--out", path(&out),
        ];
        if *seq {
            args.push("--sequential");
        }
        assert_eq!(code(&drtool(&args)), 0);
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn input_errors_exit_2_with_one_line() {
    let o = drtool(&["build-pab", "--odps", path(&fixture("toy1.csv")), "--out", "/tmp/unused.json"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr(&o).trim(), "error: missing required flag --case");

    let o = drtool(&["build-pab", "--bogus"]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr(&o).trim().lines().count(), 1);

    let o = drtool(&["check", "--case", path(&fixture("missing.json")), "--odps", path(&fixture("toy1.csv"))]);
    assert_eq!(code(&o), 2);
    assert_eq!(stderr(&o).trim().lines().count(), 1);

    // ODPs of the wrong dimension for the case
    let o = drtool(&["check", "--case", path(&fixture("mesh30.json")), "--odps", path(&fixture("toy1.csv"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn iteration_cap_exits_3_with_flagged_region() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region.json");
    let o = drtool(&[
        "build-pab",
        "--case", path(&fixture("toy1.json")),
        "--odps", path(&fixture("toy1.csv")),
        "--max-iter", "1",
        "--out", path(&out),
    ]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("budget exhausted"));
    assert_eq!(read_json(&out)["converged"], false);
}

#[test]
fn time_limited_compare_on_mesh30() {
    let dir = tempfile::tempdir().unwrap();
    let odps = dir.path().join("odps.csv");
    let o = drtool(&["gen-odps", "--case", path(&fixture("mesh30.json")), "--count", "60", "--std", "30", "--seed", "1", "--out", path(&odps)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("compare.json");
    let o = drtool(&[
        "compare",
        "--case", path(&fixture("mesh30.json")),
        "--odps", path(&odps),
        "--time-limit", "1",
        "--out", path(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let doc = read_json(&out);
    assert_eq!(doc["regions"]["traditional"]["converged"], false);
    assert_eq!(doc["report"]["traditional"]["converged"], false);
    assert_eq!(doc["regions"]["pab"]["converged"], true);
    assert_eq!(doc["regions"]["pab"]["dimension"], 4);
}
