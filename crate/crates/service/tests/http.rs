use std::net::SocketAddr;
use std::sync::Arc;

use serde_json::{json, Value};

use pdrill_core::Engine;
use pdrill_ingest::{ingest_csv, ImportConfig};
use pdrill_service::{load_engine, spawn};

const D1: &str = "country,latency\nde,10\nde,20\nfr,15\nfr,25\nus,30\nus,30\n";
const QUERY_1: &str = "SELECT country, COUNT(*) as c FROM data GROUP BY country ORDER BY c DESC LIMIT 10";

fn d1_service() -> (tempfile::TempDir, Arc<Engine>, String) {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d1.csv");
    std::fs::write(&csv, D1).unwrap();
    let cfg = ImportConfig {
        partition_fields: vec!["country".into()],
        max_chunk_rows: 2,
        ..Default::default()
    };
    ingest_csv(&csv, &cfg, &dir.path().join("store")).unwrap();
    let engine = load_engine(&dir.path().join("store"), 1 << 20).unwrap();
    let addr: SocketAddr = spawn(engine.clone(), "127.0.0.1:0").unwrap();
    (dir, engine, format!("http://{addr}/v1"))
}

async fn post(client: &reqwest::Client, base: &str, body: Value) -> (u16, Value) {
    let r = client.post(format!("{base}/query")).json(&body).send().await.unwrap();
    (r.status().as_u16(), r.json().await.unwrap())
}

#[tokio::test]
async fn query_one_on_d1() {
    let (_dir, _e, base) = d1_service();
    let client = reqwest::Client::new();
    let (status, body) = post(&client, &base, json!({ "sql": QUERY_1 })).await;
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["rows"], json!([["de", 2], ["fr", 2], ["us", 2]]));
    assert_eq!(
        body["columns"],
        json!([{"name": "country", "type": "string"}, {"name": "c", "type": "int64"}])
    );
    let s = &body["stats"];
    let total: f64 = ["skipped_fraction", "cached_fraction", "scanned_fraction"]
        .iter()
        .map(|k| s[k].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9, "{s}");
    assert_eq!(s["chunks_total"], 3);
    assert!(body["elapsed_ms"].as_f64().unwrap() >= 0.0);
    assert!(body.get("trace").is_none());

    let (status, body) = post(
        &client,
        &base,
        json!({ "sql": "SELECT SUM(latency) FROM data WHERE country = 'fr'", "trace": true }),
    )
    .await;
    assert_eq!(status, 200);
    assert_eq!(body["rows"], json!([[40]]));
    assert_eq!(body["stats"]["chunks_skipped"], 2);
    assert!(body["trace"]["canonical_sql"].as_str().unwrap().contains("fr"));
}

#[tokio::test]
async fn syntax_errors_are_400_with_position() {
    let (_dir, _e, base) = d1_service();
    let client = reqwest::Client::new();
    let (status, body) = post(&client, &base, json!({ "sql": "SELECT country FROM data GROUP BY" })).await;
    assert_eq!(status, 400, "{body}");
    assert!(body["error"].is_string());
    assert!(body["position"].as_u64().unwrap() > 0);

    let (status, body) = post(&client, &base, json!({ "sql": "SELECT COUNT(*) FROM nowhere" })).await;
    assert_eq!(status, 404, "{body}");
    let (status, body) = post(&client, &base, json!({ "sql": "SELECT nope FROM data" })).await;
    assert_eq!(status, 400, "{body}");
    assert!(body.get("position").is_none());
}

#[tokio::test]
async fn discovery_endpoints() {
    let (_dir, _e, base) = d1_service();
    let client = reqwest::Client::new();
    let health = client.get(format!("{base}/healthz")).send().await.unwrap();
    assert_eq!(health.status().as_u16(), 200);
    assert_eq!(health.text().await.unwrap(), "ok");

    let tables: Value = client
        .get(format!("{base}/tables"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(
        tables["tables"],
        json!([{"name": "data", "rows": 6, "shards": 1, "chunks": 3}])
    );

    let schema: Value = client
        .get(format!("{base}/tables/data/schema"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(
        schema["fields"][0],
        json!({"name": "country", "type": "string", "nullable": false, "distinct": 3, "role": "dimension"})
    );
    assert_eq!(schema["fields"][1]["distinct"], 5);
    let missing = client.get(format!("{base}/tables/nope/schema")).send().await.unwrap();
    assert_eq!(missing.status().as_u16(), 404);

    // preflight from a browser origin
    let pre = client
        .request(reqwest::Method::OPTIONS, format!("{base}/query"))
        .header("Origin", "http://localhost:5173")
        .header("Access-Control-Request-Method", "POST")
        .header("Access-Control-Request-Headers", "content-type")
        .send()
        .await
        .unwrap();
    assert!(pre.headers().contains_key("access-control-allow-origin"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_clients_agree() {
    let (_dir, engine, base) = d1_service();
    let client = reqwest::Client::new();
    let queries = [
        QUERY_1,
        "SELECT country, SUM(latency), AVG(latency) FROM data GROUP BY country",
        "SELECT COUNT(*) FROM data WHERE country IN ('de', 'us')",
        "SELECT latency, COUNT(*) FROM data WHERE country <> 'fr' GROUP BY latency",
    ];
    let mut expected = Vec::new();
    for q in queries {
        expected.push(post(&client, &base, json!({ "sql": q })).await.1["rows"].clone());
    }
    let (before, _) = engine.cumulative_stats();
    let tasks: Vec<_> = (0..32)
        .map(|c| {
            let (client, base, expected) = (client.clone(), base.clone(), expected.clone());
            tokio::spawn(async move {
                for i in 0..100 {
                    let k = (c + i) % queries.len();
                    let (status, body) = post(&client, &base, json!({ "sql": queries[k] })).await;
                    assert_eq!(status, 200);
                    assert_eq!(body["rows"], expected[k], "client {c} query {i}");
                }
            })
        })
        .collect();
    for r in futures::future::join_all(tasks).await {
        r.unwrap();
    }
    let stats: Value = client
        .get(format!("{base}/stats"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(stats["queries"].as_u64().unwrap(), before + 3200);
    let (n, cumulative) = engine.cumulative_stats();
    assert_eq!(n, before + 3200);
    assert_eq!(
        cumulative.chunks_total,
        cumulative.chunks_skipped + cumulative.chunks_cached + cumulative.chunks_scanned
    );
    assert!(stats["element_cache"]["budget"].as_u64().unwrap() > 0);
}
