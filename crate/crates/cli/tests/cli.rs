use std::path::Path;
use std::process::{Command, Output};

const D1: &str = "country,latency\nde,10\nde,20\nfr,15\nfr,25\nus,30\nus,30\n";

fn pdrill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdrill")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn import_d1(dir: &Path) -> String {
    let csv = dir.join("d1.csv");
    std::fs::write(&csv, D1).unwrap();
    let store = dir.join("store");
    let out = pdrill(&[
        "import",
        "--input",
        csv.to_str().unwrap(),
        "--partition-fields",
        "country",
        "--max-chunk-rows",
        "2",
        "--out",
        store.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("country"));
    store.to_str().unwrap().to_string()
}

#[test]
fn import_then_query_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let store = import_d1(dir.path());
    let sql = "SELECT country, SUM(latency) AS s FROM data GROUP BY country";
    let out = pdrill(&["query", "--store", &store, "--sql", sql, "--oracle-check"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout), "country,s\nde,30\nfr,40\nus,60\n");
    assert!(text(&out.stderr).contains("oracle check: ok"));

    let out = pdrill(&["query", "--store", &store, "--sql", sql, "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"], serde_json::json!([["de", 30], ["fr", 40], ["us", 60]]));
    assert_eq!(v["stats"]["chunks_total"], 3);
}

#[test]
fn cluster_mode_matches_and_reports_double_failure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let mut body = String::from("k,v\n");
    for i in 0..500 {
        body.push_str(&format!("k{},{}\n", i % 7, i));
    }
    std::fs::write(&csv, body).unwrap();
    let store = dir.path().join("s");
    let store = store.to_str().unwrap();
    let out = pdrill(&[
        "import",
        "--input",
        csv.to_str().unwrap(),
        "--shard-rows",
        "100",
        "--out",
        store,
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let sql = "SELECT k, COUNT(*), SUM(v) FROM data GROUP BY k";
    let single = pdrill(&["query", "--store", store, "--sql", sql]);
    let tree = pdrill(&[
        "query",
        "--store",
        store,
        "--sql",
        sql,
        "--levels",
        "3",
        "--dead",
        "1:0",
        "--oracle-check",
    ]);
    assert!(tree.status.success(), "{}", text(&tree.stderr));
    assert_eq!(single.stdout, tree.stdout);

    let dead = pdrill(&[
        "query", "--store", store, "--sql", sql, "--levels", "2", "--dead", "2:0,2:1",
    ]);
    assert_eq!(dead.status.code(), Some(3), "{}", text(&dead.stderr));
    assert!(text(&dead.stderr).contains('2'));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let store = import_d1(dir.path());
    // usage
    assert_eq!(pdrill(&["query", "--store", &store]).status.code(), Some(1));
    assert_eq!(pdrill(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        pdrill(&[
            "query",
            "--store",
            &store,
            "--sql",
            "SELECT COUNT(*) FROM data",
            "--levels",
            "2",
            "--dead",
            "x"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(pdrill(&["--help"]).status.code(), Some(0));
    // data
    let out = pdrill(&["query", "--store", &store, "--sql", "SELECT FROM"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("pdrill:"));
    assert_eq!(
        pdrill(&["query", "--store", "/nonexistent", "--sql", "SELECT COUNT(*) FROM data"])
            .status
            .code(),
        Some(2)
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,\"x\n").unwrap();
    let out = pdrill(&[
        "import",
        "--input",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 2"), "{}", text(&out.stderr));
}

#[test]
fn small_bench_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.json");
    std::fs::write(
        &cfg,
        r#"{"logs": {"rows": 5000, "table_names": 800}, "max_chunk_rows": 500, "repeats": 1}"#,
    )
    .unwrap();
    let json = dir.path().join("report.json");
    let out = pdrill(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--json",
        json.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("reorder") && stdout.contains("optcols"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
    assert_eq!(report["rows"], 5000);
    assert_eq!(report["gates"].as_array().unwrap().len(), 3);
}
