use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const PARTITION_EXAMPLE: &str = r#"{"v":1,"dim":2,"vectors":[[1,0],[0,1],[0,10]],
  "matroid":{"kind":"partition","parts":[0,1,1],"capacities":[1,1]}}"#;

fn detmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_detmax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_partition_example() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", PARTITION_EXAMPLE);
    let out = detmax(&["solve", &f]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert_eq!(r["iterations"], 1);
    assert_eq!(r["final_set"], serde_json::json!([0, 2]));
    let factor = r["per_iteration"][0]["improvement_factor"]
        .as_f64()
        .unwrap();
    assert!((factor - 100.0).abs() < 1e-9);
    assert!((r["log_det_ln"].as_f64().unwrap() - 100f64.ln()).abs() < 1e-9);
    assert!(r.get("sparsified_support").is_some());
}

#[test]
fn no_sparsify_drops_support_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", PARTITION_EXAMPLE);
    let r = json(&detmax(&["solve", &f, "--no-sparsify"]));
    assert!(r.get("sparsified_support").is_none());
    assert_eq!(r["config"]["use_sparsify"], false);
}

#[test]
fn zero_optimum_reports_null() {
    let gen = detmax(&["gen", "adversarial-collinear", "--d", "2", "--n", "5"]);
    assert_eq!(gen.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "c.json",
        &String::from_utf8(gen.stdout).unwrap(),
    );
    let r = json(&detmax(&["solve", &f]));
    assert!(r["log_det_ln"].is_null());
    assert_eq!(r["value"], 0.0);
    let o = json(&detmax(&["oracle", &f]));
    assert!(o["log_det_ln"].is_null());
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"v":1,"dim":2,"vectors":[[1]],"matroid":{"kind":"uniform","rank":1}}"#,
    );
    let out = detmax(&["solve", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(
        detmax(&["solve", "/nonexistent/file.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        detmax(&["gen", "nsw", "--players", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        detmax(&["verify", "--suite", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(detmax(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_suites_pass() {
    let out = detmax(&[
        "verify",
        "--suite",
        "weight-identity",
        "--trials",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["passed"], true);
    let out = detmax(&["verify", "--suite", "permanent-bound", "--lmax", "6"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", PARTITION_EXAMPLE);
    let out = detmax(&["verify", &f]);
    assert_eq!(out.status.code(), Some(0));
    let names: Vec<String> = json(&out)["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    for n in [
        "weight-identity",
        "det-update",
        "gram-inequalities",
        "minimality",
        "improvement",
    ] {
        assert!(names.iter().any(|x| x == n), "{n} missing from {names:?}");
    }
}

#[test]
fn injected_fault_names_weight_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", PARTITION_EXAMPLE);
    for args in [
        vec!["verify", f.as_str(), "--inject-fault"],
        vec![
            "verify",
            "--suite",
            "weight-identity",
            "--trials",
            "40",
            "--inject-fault",
        ],
    ] {
        let out = detmax(&args);
        assert_eq!(out.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&out.stderr).contains("weight-identity"));
        let report = json(&out);
        let failed: Vec<&Value> = report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["passed"] == false)
            .map(|c| &c["name"])
            .collect();
        assert_eq!(failed, vec!["weight-identity"]);
    }
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let args = [
        "gen",
        "random-uniform",
        "--n",
        "10",
        "--d",
        "3",
        "--r",
        "4",
        "--seed",
        "5",
    ];
    let a = detmax(&args);
    let b = detmax(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let file = detmax::format::InstanceFile::parse(&text).unwrap();
    assert_eq!(file.to_json(), text.trim_end());

    for kind in [
        vec!["nsw", "--players", "2", "--items", "2", "--seed", "1"],
        vec!["random-partition", "--n", "9", "--d", "2", "--parts", "3"],
        vec!["network", "--vertices", "5", "--extra", "3"],
        vec!["adversarial-collinear", "--d", "2"],
    ] {
        let mut args = vec!["gen"];
        args.extend(kind);
        let out = detmax(&args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        detmax::format::parse_instance(&String::from_utf8(out.stdout).unwrap()).unwrap();
    }
}

#[test]
fn dump_graph_writes_every_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.json", PARTITION_EXAMPLE);
    let g = dir.path().join("g.json");
    let out = detmax(&[
        "solve",
        &f,
        "--no-sparsify",
        "--dump-graph",
        g.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let graphs: Value = serde_json::from_str(&std::fs::read_to_string(&g).unwrap()).unwrap();
    // one graph per search: the improving one and the final one
    let graphs = graphs.as_array().unwrap();
    assert_eq!(graphs.len(), 2);
    let arcs = graphs[0]["arcs"].as_array().unwrap();
    assert!(arcs
        .iter()
        .any(|a| a["kind"] == "fwd1" && a["from"] == 2 && a["to"] == 1));
}

#[test]
fn oracle_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "n.json",
        r#"{"v":1,"dim":2,"app":{"nsw":{"valuations":[[1,2],[3,4]]}}}"#,
    );
    let float = json(&detmax(&["oracle", &f]));
    let exact = json(&detmax(&["oracle", &f, "--exact-oracle"]));
    assert_eq!(float["best_set"], serde_json::json!([1, 2]));
    assert_eq!(float["best_set"], exact["best_set"]);
    assert_eq!(exact["mode"], "exact");
    assert!((exact["log_det_ln"].as_f64().unwrap() - 6f64.ln()).abs() < 1e-12);
}

#[test]
fn bench_tables() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..50u64 {
        let (d, seed_arg) = ((1 + seed % 3).to_string(), seed.to_string());
        let args = [
            "gen",
            "random-uniform",
            "--n",
            "8",
            "--d",
            &d,
            "--r",
            "3",
            "--seed",
            &seed_arg,
        ];
        let out = detmax(&args);
        write(
            dir.path(),
            &format!("i{seed:02}.json"),
            &String::from_utf8(out.stdout).unwrap(),
        );
    }
    let pattern = format!("{}/*.json", dir.path().display());
    let out = detmax(&["bench", &pattern, "--with-oracle", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 50);
    for row in rows {
        assert!(row["error"].is_null(), "{row}");
        assert!(row["gap_ln"].as_f64().unwrap() >= -1e-9, "{row}");
    }

    let csv = detmax(&["bench", &pattern]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().count(), 51);
    assert!(text.starts_with("file,n,d,r,iterations,wall_ms,log_det_ln"));

    let empty = detmax(&["bench", &format!("{}/none-*.json", dir.path().display())]);
    assert_eq!(empty.status.code(), Some(0));
    assert_eq!(String::from_utf8(empty.stdout).unwrap().lines().count(), 1);
}

#[test]
fn bench_records_bad_files_per_row() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", PARTITION_EXAMPLE);
    write(dir.path(), "b.json", "not json");
    let out = detmax(&[
        "bench",
        &format!("{}/*.json", dir.path().display()),
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = json(&out);
    assert!(rows[0]["error"].is_null());
    assert!(rows[1]["error"]
        .as_str()
        .unwrap()
        .contains("invalid instance"));
}
