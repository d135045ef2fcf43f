use std::path::Path;

use pdrill_core::{Engine, Value};
use pdrill_ingest::synth::{logs_table, LogsConfig};
use pdrill_ingest::{import_table, ingest_csv, ImportConfig, IngestError, Store};

const D1: &str = "country,latency\nde,10\nde,20\nfr,15\nfr,25\nus,30\nus,30\n";

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn d1_config() -> ImportConfig {
    ImportConfig {
        partition_fields: vec!["country".into()],
        max_chunk_rows: 2,
        ..Default::default()
    }
}

#[test]
fn d1_imports_into_three_chunks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "d1.csv", D1);
    let out = dir.path().join("store");
    let report = ingest_csv(&csv, &d1_config(), &out).unwrap();
    assert_eq!((report.rows, report.shards, report.chunks), (6, 1, 3));
    let country = report.column("country").unwrap();
    assert!(country.elements_bytes <= 3, "{report}");
    assert!(report.to_string().contains("country"));

    let e = Engine::default();
    Store::open(&out).unwrap().attach(&e).unwrap();
    let r = e
        .query("SELECT country, SUM(latency) FROM data GROUP BY country")
        .unwrap();
    let want: Vec<Vec<Value>> = [("de", 30), ("fr", 40), ("us", 60)]
        .iter()
        .map(|(c, s)| vec![Value::from(*c), Value::I64(*s)])
        .collect();
    assert_eq!(r.rows, want);
    let r = e.query("SELECT COUNT(*) FROM data WHERE country = 'fr'").unwrap();
    assert_eq!(r.rows, vec![vec![Value::I64(2)]]);
    assert_eq!(r.stats.chunks_skipped, 2);
}

#[test]
fn header_only_csv_gives_an_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "empty.csv", "country,latency\n");
    let out = dir.path().join("store");
    let report = ingest_csv(&csv, &d1_config(), &out).unwrap();
    assert_eq!(report.rows, 0);
    let store = Store::open(&out).unwrap();
    let shards = store.load_shards().unwrap();
    assert!(shards.iter().all(|s| s.num_rows() == 0));
    let e = Engine::default();
    store.attach(&e).unwrap();
    assert_eq!(
        e.query("SELECT COUNT(*) FROM data").unwrap().rows,
        vec![vec![Value::I64(0)]]
    );
}

#[test]
fn malformed_quoting_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "bad.csv", "a,b\n1,2\n3,\"x\n");
    match ingest_csv(&csv, &ImportConfig::default(), &dir.path().join("s")) {
        Err(IngestError::Csv { line: 3, .. }) => {}
        other => panic!("{other:?}"),
    }
    assert!(!dir.path().join("s").exists());
}

#[test]
fn type_mismatch_names_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "bad.csv",
        D1.replace("us,30\nus,30", "us,30\nus,slow").as_str(),
    );
    let cfg = ImportConfig {
        schema: vec![("latency".into(), pdrill_core::ValueKind::I64)],
        ..Default::default()
    };
    let e = ingest_csv(&csv, &cfg, &dir.path().join("s")).unwrap_err();
    assert!(e.is_data_error());
    match e {
        IngestError::Type { line, column, .. } => assert_eq!((line, column.as_str()), (7, "latency")),
        other => panic!("{other}"),
    }
}

#[test]
fn import_is_deterministic() {
    let t = logs_table(&LogsConfig {
        rows: 30_000,
        table_names: 2000,
        ..Default::default()
    });
    let cfg = ImportConfig {
        partition_fields: vec!["country".into(), "table_name".into()],
        max_chunk_rows: 1500,
        shard_rows: 7000,
        seed: 11,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = import_table(&t, &cfg, &a).unwrap();
    import_table(&t, &cfg, &b).unwrap();
    assert_eq!(ra.shards, 5);
    let store = Store::open(&a).unwrap();
    for name in &store.manifest.shards {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );

    // all shards together hold the table
    let e = Engine::default();
    store.attach(&e).unwrap();
    let r = e.query("SELECT COUNT(*), SUM(latency) FROM data").unwrap();
    let sum: i64 = t
        .column("latency")
        .unwrap()
        .iter()
        .map(|v| match v {
            Value::I64(x) => *x,
            _ => unreachable!(),
        })
        .sum();
    assert_eq!(r.rows, vec![vec![Value::I64(30_000), Value::I64(sum)]]);
}

#[test]
fn corrupt_store_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(dir.path(), "d1.csv", D1);
    let out = dir.path().join("store");
    ingest_csv(&csv, &d1_config(), &out).unwrap();
    let shard = out.join("shard-00000.pdrl");
    let mut bytes = std::fs::read(&shard).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&shard, bytes).unwrap();
    assert!(Store::open(&out).unwrap().load_shards().is_err());
    std::fs::remove_file(out.join("manifest.json")).unwrap();
    assert!(matches!(Store::open(&out), Err(IngestError::Io { .. })));
}

#[test]
fn several_files_form_one_table() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "country,latency\nde,10\nde,20\nfr,15\n");
    let b = write(dir.path(), "b.csv", "country,latency\nfr,25\nus,30\nus,30\n");
    let out = dir.path().join("store");
    let report = pdrill_ingest::ingest_csv_files(&[&a, &b], &d1_config(), &out).unwrap();
    assert_eq!((report.rows, report.chunks), (6, 3));

    let c = write(dir.path(), "c.csv", "country,latency\nfr,slow\n");
    let e = pdrill_ingest::ingest_csv_files(&[&a, &c], &d1_config(), &dir.path().join("s2")).unwrap_err();
    assert!(e.to_string().contains("latency"), "{e}");
    let d = write(dir.path(), "d.csv", "country,lat\nfr,1\n");
    assert!(pdrill_ingest::ingest_csv_files(&[&a, &d], &d1_config(), &dir.path().join("s3")).is_err());
}
