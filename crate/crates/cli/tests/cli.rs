//! End-to-end runs of the mixlab binary: file round-trips, exit codes,
//! report shapes, determinism of emitted artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mixlab")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn mixlab")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "mixlab {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn tmpdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_ingest_roundtrip_and_stats() {
    let dir = tmpdir();
    let edges = dir.path().join("tri.edges");
    std::fs::write(&edges, "0\t1\n1\t2\n2\t0\n").unwrap();
    let out_file = dir.path().join("tri.mxg");
    let stdout = run_ok(&[
        "ingest",
        "--input",
        path_str(&edges),
        "--output",
        path_str(&out_file),
    ]);
    assert!(stdout.contains("nodes=3"), "{stdout}");
    assert!(stdout.contains("edges=3(undirected)"), "{stdout}");
    assert!(out_file.exists());
}

#[test]
fn ingest_directed_keeps_orientation() {
    let dir = tmpdir();
    let edges = dir.path().join("d.edges");
    std::fs::write(&edges, "0\t1\n1\t2\n").unwrap();
    let out_file = dir.path().join("d.mxg");
    let stdout = run_ok(&[
        "ingest",
        "--input",
        path_str(&edges),
        "--directed",
        "--output",
        path_str(&out_file),
    ]);
    assert!(stdout.contains("nnz=2"), "{stdout}");
}

#[test]
fn ingest_empty_file() {
    let dir = tmpdir();
    let edges = dir.path().join("empty.edges");
    std::fs::write(&edges, "").unwrap();
    let out_file = dir.path().join("empty.mxg");
    let stdout = run_ok(&[
        "ingest",
        "--input",
        path_str(&edges),
        "--output",
        path_str(&out_file),
    ]);
    assert!(stdout.contains("nodes=0"), "{stdout}");
}

#[test]
fn malformed_edge_list_exits_2() {
    let dir = tmpdir();
    let edges = dir.path().join("bad.edges");
    std::fs::write(&edges, "0\t1\nnot numbers\n").unwrap();
    let out = run(&[
        "ingest",
        "--input",
        path_str(&edges),
        "--output",
        path_str(&dir.path().join("bad.mxg")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn gen_is_deterministic_byte_for_byte() {
    let dir = tmpdir();
    let a = dir.path().join("a.mxg");
    let b = dir.path().join("b.mxg");
    let spec = r#"{"kind":"rmat","n":512,"edges":4096}"#;
    run_ok(&[
        "gen",
        "--spec",
        spec,
        "--seed",
        "9",
        "--output",
        path_str(&a),
    ]);
    run_ok(&[
        "gen",
        "--spec",
        spec,
        "--seed",
        "9",
        "--output",
        path_str(&b),
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn gen_rejects_bad_spec() {
    let dir = tmpdir();
    let out = run(&[
        "gen",
        "--spec",
        r#"{"kind":"rmat","n":100,"edges":10}"#, // not a power of two
        "--output",
        path_str(&dir.path().join("x.mxg")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trainsim_equivalence_exit_zero() {
    let stdout = run_ok(&[
        "trainsim",
        "--gen",
        r#"{"kind":"path","n":8}"#,
        "--dims",
        "4,6,3",
        "--schemes",
        "pp-bfs,mop",
        "--m",
        "1,2,4",
        "--iterations",
        "5",
        "--lr",
        "0.2",
        "--dropout",
        "0.5",
        "--seed",
        "3",
    ]);
    assert!(stdout.contains("equivalence ok"), "{stdout}");
}

#[test]
fn trainsim_writes_traces() {
    let dir = tmpdir();
    run_ok(&[
        "trainsim",
        "--gen",
        r#"{"kind":"cycle","n":12}"#,
        "--dims",
        "3,4,2",
        "--schemes",
        "mop",
        "--m",
        "2",
        "--iterations",
        "4",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(dir.path().join("reference.json").exists());
    assert!(dir.path().join("mop_m2.json").exists());
}

#[test]
fn analyze_emits_json_and_csv() {
    let dir = tmpdir();
    let stdout = run_ok(&[
        "analyze",
        "--gen",
        r#"{"kind":"rmat","n":256,"edges":2048}"#,
        "--dims",
        "16,8",
        "--schemes",
        "pp-random,mop",
        "--m",
        "2,4",
        "--seed",
        "5",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(stdout.lines().next().unwrap().starts_with("scheme,m,"));
    for name in [
        "pp-random_m2.json",
        "pp-random_m4.json",
        "mop_m2.json",
        "mop_m4.json",
        "analyze.csv",
        "comm_layers.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    // mop comm totals identical across m
    let csv = std::fs::read_to_string(dir.path().join("analyze.csv")).unwrap();
    let mop_rows: Vec<&str> = csv.lines().filter(|l| l.starts_with("mop,")).collect();
    let elems: Vec<&str> = mop_rows
        .iter()
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(elems[0], elems[1]);
}

#[test]
fn analyze_reruns_are_byte_identical() {
    let a = tmpdir();
    let b = tmpdir();
    let args = |dir: &Path| -> Vec<String> {
        vec![
            "analyze".into(),
            "--gen".into(),
            r#"{"kind":"grid","rows":8,"cols":8}"#.into(),
            "--dims".into(),
            "8,4".into(),
            "--schemes".into(),
            "pp-bfs,mop".into(),
            "--m".into(),
            "2,4".into(),
            "--out-dir".into(),
            dir.to_str().unwrap().into(),
        ]
    };
    let to_refs = |v: &[String]| -> Vec<String> { v.to_vec() };
    let out_a = Command::new(bin())
        .args(to_refs(&args(a.path())))
        .output()
        .unwrap();
    let out_b = Command::new(bin())
        .args(to_refs(&args(b.path())))
        .output()
        .unwrap();
    assert!(out_a.status.success() && out_b.status.success());
    assert_eq!(
        std::fs::read(a.path().join("analyze.csv")).unwrap(),
        std::fs::read(b.path().join("analyze.csv")).unwrap()
    );
}

#[test]
fn reorder_and_pipeline_flow() {
    let dir = tmpdir();
    let graph = dir.path().join("p.mxg");
    run_ok(&[
        "gen",
        "--spec",
        r#"{"kind":"path","n":100}"#,
        "--output",
        path_str(&graph),
    ]);
    let order = dir.path().join("order.txt");
    let stdout = run_ok(&[
        "reorder",
        "--graph",
        path_str(&graph),
        "--output",
        path_str(&order),
    ]);
    assert!(stdout.contains("reordered=1"), "{stdout}");
    assert!(stdout.contains("min_stages=3"), "{stdout}");
    assert_eq!(
        std::fs::read_to_string(&order).unwrap().lines().count(),
        100
    );

    let csv = dir.path().join("timeline.csv");
    let stdout = run_ok(&[
        "pipeline",
        "--graph",
        path_str(&graph),
        "--order",
        path_str(&order),
        "--stages",
        "3",
        "--timeline-csv",
        path_str(&csv),
    ]);
    assert!(stdout.contains("steady_sparse_idle=0"), "{stdout}");
    let timeline = std::fs::read_to_string(&csv).unwrap();
    assert!(timeline.starts_with("step,dense,sparse"));

    // scan mode prints the bound table and succeeds
    let scan = run_ok(&["pipeline", "--graph", path_str(&graph)]);
    assert!(scan.contains("stage-bound sufficiency holds"), "{scan}");
}

#[test]
fn kernelbench_and_costmodel_json() {
    let dir = tmpdir();
    let graph = dir.path().join("g.mxg");
    run_ok(&[
        "gen",
        "--spec",
        r#"{"kind":"erdos_renyi","n":64,"p":0.2}"#,
        "--seed",
        "4",
        "--output",
        path_str(&graph),
    ]);
    let bench = run_ok(&[
        "kernelbench",
        "--graph",
        path_str(&graph),
        "--cols",
        "8",
        "--density",
        "0.5",
    ]);
    let parsed: serde_json::Value = serde_json::from_str(&bench).unwrap();
    assert!(parsed["full"]["flops"].as_u64().unwrap() > 0);

    let est = run_ok(&[
        "costmodel",
        "--graph",
        path_str(&graph),
        "--cols",
        "8",
        "--density",
        "1.0",
    ]);
    let parsed: serde_json::Value = serde_json::from_str(&est).unwrap();
    assert_eq!(parsed["fused_speedup"].as_f64().unwrap(), 1.0);

    // config file override
    let cfg = dir.path().join("accel.json");
    std::fs::write(&cfg, r#"{"adders": 64, "hbm_bytes_per_sec": 1e30}"#).unwrap();
    let est = run_ok(&[
        "costmodel",
        "--graph",
        path_str(&graph),
        "--config",
        path_str(&cfg),
        "--cols",
        "8",
        "--density",
        "0.5",
    ]);
    let parsed: serde_json::Value = serde_json::from_str(&est).unwrap();
    assert_eq!(parsed["config"]["adders"].as_u64().unwrap(), 64);
    assert_eq!(parsed["full"]["bound"].as_str().unwrap(), "compute");
}

#[test]
fn trainsim_accepts_feature_file() {
    let dir = tmpdir();
    // MXF1: magic, u64 rows, u64 cols, row-major f32
    let mut bytes = b"MXF1".to_vec();
    bytes.extend_from_slice(&8u64.to_le_bytes());
    bytes.extend_from_slice(&4u64.to_le_bytes());
    for i in 0..32 {
        bytes.extend_from_slice(&(i as f32 * 0.1 - 1.5).to_le_bytes());
    }
    let feat = dir.path().join("x.mxf");
    std::fs::write(&feat, bytes).unwrap();
    let stdout = run_ok(&[
        "trainsim",
        "--gen",
        r#"{"kind":"path","n":8}"#,
        "--dims",
        "4,3,2",
        "--schemes",
        "mop",
        "--m",
        "1,2",
        "--iterations",
        "3",
        "--features",
        path_str(&feat),
    ]);
    assert!(stdout.contains("equivalence ok"), "{stdout}");

    // column mismatch is a validation error
    let out = run(&[
        "trainsim",
        "--gen",
        r#"{"kind":"path","n":8}"#,
        "--dims",
        "5,2",
        "--features",
        path_str(&feat),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_colocated_discounts_mop_volume() {
    let base = run_ok(&[
        "analyze",
        "--gen",
        r#"{"kind":"cycle","n":32}"#,
        "--dims",
        "8,4",
        "--schemes",
        "mop",
        "--m",
        "2",
    ]);
    let disc = run_ok(&[
        "analyze",
        "--gen",
        r#"{"kind":"cycle","n":32}"#,
        "--dims",
        "8,4",
        "--schemes",
        "mop",
        "--m",
        "2",
        "--colocated",
    ]);
    let elems = |s: &str| -> u64 {
        s.lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(elems(&disc) * 2, elems(&base)); // half stays local at m = 2
}

#[test]
fn spec_file_drives_trainsim() {
    let dir = tmpdir();
    let spec = dir.path().join("exp.json");
    std::fs::write(
        &spec,
        r#"{
            "graph": {"kind": "path", "n": 8},
            "dims": [3, 4, 2],
            "schemes": ["pp-random", "mop"],
            "m": [1, 2],
            "iterations": 3,
            "learning_rate": 0.1,
            "dropout": 0.0,
            "seed": 1
        }"#,
    )
    .unwrap();
    let stdout = run_ok(&["trainsim", "--spec", path_str(&spec)]);
    assert!(stdout.contains("equivalence ok"), "{stdout}");
}

#[test]
fn missing_graph_is_validation_error() {
    let out = run(&["trainsim", "--dims", "4,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_graph_file_exits_2() {
    let dir = tmpdir();
    let bogus: PathBuf = dir.path().join("bogus.mxg");
    std::fs::write(&bogus, b"NOPE").unwrap();
    let out = run(&["reorder", "--graph", path_str(&bogus)]);
    assert_eq!(out.status.code(), Some(2));
}
