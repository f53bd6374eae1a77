use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsd"))
        .args(args)
        .env_remove("FSD_CONFIG")
        .output()
        .expect("run fsd")
}

fn ok(args: &[&str]) -> String {
    let out = fsd(args);
    assert!(
        out.status.success(),
        "fsd {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn csv_pairs(text: &str) -> Vec<(u64, u64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

// Every a/(a+b) with a, b < 2^n; in each half of every k/2^n gap keep the
// smallest numerator, then the smallest denominator.
fn fsd_reference(n: u32) -> Vec<(u64, u64)> {
    let base = 1u64 << n;
    let mut rf = BTreeSet::new();
    for a in 0..base {
        for b in 0..base {
            if a + b > 0 {
                let g = gcd(a, a + b);
                rf.insert((a / g, (a + b) / g));
            }
        }
    }
    let mut keep: Vec<(u64, u64)> = (0..=base)
        .map(|k| (k / gcd(k, base), base / gcd(k, base)))
        .collect();
    for half in 0..2 * base {
        let (lo, hi) = (half, half + 1);
        let inside = |&&(p, q): &&(u64, u64)| lo * q < p * 2 * base && p * 2 * base < hi * q;
        if let Some(&x) = rf.iter().filter(inside).min() {
            keep.push(x);
        }
    }
    keep.sort_by(|x, y| (x.0 * y.1).cmp(&(y.0 * x.1)));
    keep.dedup();
    keep
}

#[test]
fn gen_fsd8_has_21_rows() {
    let out = ok(&["gen", "--n", "3", "--kind", "fsd"]);
    assert_eq!(out.lines().count(), 22);
    assert!(out
        .starts_with("index,numerator,denominator,decimal,kind\n0,0,1,0.000000000000,fsd\n1,1,8,"));
}

#[test]
fn gen_bs1_has_3_rows() {
    let out = ok(&["gen", "--n", "1", "--kind", "bs"]);
    assert_eq!(csv_pairs(&out), [(0, 1), (1, 2), (1, 1)]);
}

#[test]
fn gen_matches_brute_force() {
    for n in 1..=5 {
        let out = ok(&["gen", "--n", &n.to_string(), "--kind", "fsd"]);
        assert_eq!(csv_pairs(&out), fsd_reference(n), "n={n}");
    }
}

#[test]
fn gen_writes_csv_and_json_to_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = fsd(&[
        "gen",
        "--n",
        "2",
        "--kind",
        "rf",
        "--output",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("cardinality"), "{stderr}");
    let csv = fs::read_to_string(dir.path().join("rf_4.csv")).unwrap();
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rf_4.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], "fsd-dilution/v1");
    assert_eq!(json["kind"], "sequence");
    assert_eq!(
        json["data"]["cardinality"].as_u64().unwrap() as usize,
        csv.lines().count() - 1
    );
}

#[test]
fn gen_rejects_bad_level() {
    let out = fsd(&["gen", "--n", "0"]);
    assert!(!out.status.success());
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn approx_worked_example() {
    let out = ok(&["approx", "--target", "44.375/64", "--n", "6"]);
    assert!(out.contains("chosen       9/13"), "{out}");
    assert!(out.contains("error        -7/6656"), "{out}");
    assert!(out.contains("bs choice    11/16  error -3/512"), "{out}");
}

#[test]
fn approx_exact_target_has_zero_error() {
    let out = ok(&["approx", "--target", "1/2", "--n", "3", "--format", "csv"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[3], "1/2");
    assert_eq!(row[4], "0/1");
}

#[test]
fn approx_nineteen_fiftieths() {
    let out = ok(&[
        "approx", "--target", "19/50", "--n", "6", "--format", "json",
    ]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["kind"], "approximation");
    assert_eq!(doc["data"]["approximation"]["chosen"], "8/21");
    assert_eq!(doc["data"]["approximation"]["error"], "1/1050");
    assert_eq!(doc["data"]["comparison"]["bs"]["chosen"], "3/8");
}

#[test]
fn approx_rejects_garbage() {
    let out = fsd(&["approx", "--target", "twelve"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn plan_percentage_with_schematic() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("out.svg");
    let desc = dir.path().join("net.json");
    let out = ok(&[
        "plan",
        "--target",
        "69.3%",
        "--n",
        "6",
        "--svg",
        svg.to_str().unwrap(),
        "--description",
        desc.to_str().unwrap(),
    ]);
    assert!(out.contains("chosen     9/13 (error -9/13000"), "{out}");
    assert!(
        out.contains("0      1x     on          off           off         on"),
        "{out}"
    );
    let drawing = fs::read_to_string(&svg).unwrap();
    assert!(drawing.starts_with("<?xml") || drawing.starts_with("<svg"));
    assert!(drawing.matches("fill=\"green\"").count() >= 3);
    let net: Value = serde_json::from_str(&fs::read_to_string(&desc).unwrap()).unwrap();
    assert_eq!(net["kind"], "network");
}

#[test]
fn plan_nine_thirteenths_inlet_table() {
    let out = ok(&["plan", "--target", "9/13", "--n", "6", "--format", "csv"]);
    let cols = |i: usize| -> String {
        out.lines()
            .skip(1)
            .map(|l| {
                if l.split(',').nth(i).unwrap() == "on" {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    };
    assert_eq!(cols(2), "100100");
    assert_eq!(cols(3), "011011");
    assert_eq!(cols(4), "001000");
    assert_eq!(cols(5), "110111");
}

#[test]
fn plan_json_round_trips_units() {
    let out = ok(&["plan", "--target", "9/13", "--format", "json"]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(doc["kind"], "plan");
    assert_eq!(doc["data"]["plan"]["sample_units"], 9);
    assert_eq!(doc["data"]["plan"]["buffer_units"], 4);
    assert_eq!(doc["data"]["laminar"]["verdict"], "ok");
}

#[test]
fn plan_minimal() {
    let out = ok(&["plan", "--target", "0.5", "--n", "1"]);
    assert!(
        out.contains("units      sample 1, buffer 1, total 2"),
        "{out}"
    );
    assert!(out.contains("mix steps  sample x1, buffer x1"), "{out}");
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn batch_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", "9/13\n44.375/64\n1/2\n");
    let report = dir.path().join("report.csv");
    ok(&[
        "batch",
        "--input",
        &input,
        "--n",
        "6",
        "--output",
        report.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(report).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0]
        .starts_with("target,n,bs_choice,bs_error,fsd_choice,fsd_error,sample_units,buffer_units"));
    assert!(rows[1..].iter().all(|r| r.ends_with(",true")));
    assert_eq!(rows[2], "44.375/64,6,11/16,-3/512,9/13,-7/6656,9,4,true");
}

#[test]
fn batch_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "empty.csv", "");
    let out = ok(&["batch", "--input", &input]);
    assert_eq!(out.lines().count(), 1);
}

#[test]
fn batch_reports_bad_row_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.csv", "target\n1/3\n7/2\n0.25\n");
    let out = fsd(&["batch", "--input", &input]);
    assert!(!out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 3);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let errors: Vec<&str> = stderr.lines().filter(|l| l.contains(":3:")).collect();
    assert_eq!(errors.len(), 1, "{stderr}");
}

#[test]
fn throughput_tables() {
    let third = ok(&[
        "throughput",
        "--target",
        "1/3",
        "--n",
        "6",
        "--format",
        "csv",
    ]);
    assert!(third.starts_with("sample,buffer,rate\n1,2,3\n2,4,6\n3,6,9\n"));
    let fifths = ok(&[
        "throughput",
        "--target",
        "4/5",
        "--n",
        "6",
        "--format",
        "csv",
    ]);
    assert!(fifths.lines().any(|l| l == "20,5,25"));
    let half = ok(&[
        "throughput",
        "--target",
        "1/2",
        "--n",
        "1",
        "--format",
        "csv",
    ]);
    assert_eq!(half, "sample,buffer,rate\n1,1,2\n");
}

#[test]
fn throughput_rejects_unrepresentable() {
    let out = fsd(&["throughput", "--target", "9/13", "--n", "3"]);
    assert!(!out.status.success());
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fsd.conf", "n = 3\n");
    let out = ok(&["--config", &cfg, "gen"]);
    assert_eq!(out.lines().count(), 22);
    let out = ok(&["--config", &cfg, "gen", "--n", "2"]);
    assert_eq!(out.lines().count(), 10);

    let via_env = Command::new(env!("CARGO_BIN_EXE_fsd"))
        .args(["gen", "--kind", "bs"])
        .env("FSD_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(
        String::from_utf8(via_env.stdout).unwrap().lines().count(),
        10
    );

    let bad = write(dir.path(), "bad.conf", "viscosity = 0\n");
    let out = fsd(&["--config", &bad, "plan", "--target", "1/2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn outputs_are_deterministic() {
    let args = ["plan", "--target", "19/50", "--format", "json"];
    assert_eq!(ok(&args), ok(&args));
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.svg");
    let b = dir.path().join("b.svg");
    ok(&["plan", "--target", "19/50", "--svg", a.to_str().unwrap()]);
    ok(&["plan", "--target", "19/50", "--svg", b.to_str().unwrap()]);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}
