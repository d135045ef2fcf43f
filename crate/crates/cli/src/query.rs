//! `pdrill query`: single-node or simulated-cluster execution, output as
//! CSV or JSON, optionally checked against the row-scan oracle.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde_json::json;

use pdrill_core::distribute::{Cluster, Faults, TreeOptions};
use pdrill_core::query::{parse, AggFunc, Query};
use pdrill_core::{Engine, ExecOptions, QueryResult, Value};
use pdrill_ingest::oracle::rows_match;
use pdrill_ingest::{oracle_query, OracleTable, Store};
use pdrill_service::json::QueryResponse;

use crate::Failure;

#[derive(Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct QueryArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    sql: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Re-run the query with the row-scan oracle and compare.
    #[arg(long)]
    oracle_check: bool,
    #[command(flatten)]
    cluster: ClusterArgs,
}

/// Setting `--levels` runs the query on a simulated aggregation tree with
/// one worker per shard replica.
#[derive(Args)]
struct ClusterArgs {
    /// Tree depth: 2 = root over leaves, 3 adds internal nodes.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = 2)]
    replicas: usize,
    #[arg(long)]
    fan_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    fault_seed: u64,
    /// Uniform per-response latency range `lo,hi` in milliseconds.
    #[arg(long, value_parser = parse_range, default_value = "1,10")]
    latency_ms: (f64, f64),
    /// Replicas that never answer, as `shard:replica,...`.
    #[arg(long, default_value = "")]
    dead: String,
    #[arg(long, default_value_t = 0.0)]
    fail_probability: f64,
    #[arg(long)]
    timeout_ms: Option<f64>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
    if !(0.0..=hi).contains(&lo) {
        return Err("need 0 <= lo <= hi".into());
    }
    Ok((lo, hi))
}

fn parse_dead(s: &str) -> Result<Vec<(u32, usize)>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| format!("`{p}` is not shard:replica"))?;
            Ok((
                a.parse().map_err(|_| format!("bad shard `{a}`"))?,
                b.parse().map_err(|_| format!("bad replica `{b}`"))?,
            ))
        })
        .collect()
}

fn has_distinct(q: &Query) -> bool {
    let mut found = false;
    for item in &q.select {
        item.expr.walk(&mut |e| {
            if let pdrill_core::query::Expr::Agg {
                func: AggFunc::CountDistinct,
                ..
            } = e
            {
                found = true;
            }
        });
    }
    found
}

pub fn run(a: QueryArgs) -> Result<(), Failure> {
    let q = parse(&a.sql)?;
    let store = Store::open(&a.store)?;
    let start = Instant::now();
    let (result, trace) = match a.cluster.levels {
        None => {
            let engine = Engine::new(ExecOptions::default());
            store.attach(&engine)?;
            (engine.execute(&q)?, None)
        }
        Some(levels) => {
            let c = &a.cluster;
            if c.replicas == 0 || levels < 2 {
                return Err(Failure::Usage("need --replicas >= 1 and --levels >= 2".into()));
            }
            let shards = store.shared_shards()?;
            let cluster = Cluster::new(
                &store.manifest.table,
                shards
                    .into_iter()
                    .map(|s| vec![s; c.replicas])
                    .collect::<Vec<Vec<Arc<_>>>>(),
                ExecOptions::default(),
            )?;
            let mut opts = TreeOptions {
                levels,
                timeout_ms: c.timeout_ms,
                faults: Faults {
                    seed: c.fault_seed,
                    latency_ms: c.latency_ms,
                    dead: parse_dead(&c.dead).map_err(|e| Failure::Usage(format!("--dead: {e}")))?,
                    fail_probability: c.fail_probability,
                    slow: vec![],
                },
                ..Default::default()
            };
            if let Some(f) = c.fan_in {
                opts.fan_in = f;
            }
            let r = cluster.execute(&q, &opts)?;
            let trace = json!({ "tree": r.tree, "leaf_sql": r.leaf_sql, "root_sql": r.root_sql });
            (r.result, Some(trace))
        }
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut stdout = std::io::stdout().lock();
    match a.format {
        Format::Csv => {
            write_csv(&result, &mut stdout)?;
            let s = &result.stats;
            eprintln!(
                "{} rows; chunks {} skipped / {} cached / {} scanned of {}; {:.1} ms",
                result.rows.len(),
                s.chunks_skipped,
                s.chunks_cached,
                s.chunks_scanned,
                s.chunks_total,
                elapsed_ms
            );
        }
        Format::Json => {
            let mut resp = QueryResponse::new(&result, elapsed_ms);
            resp.trace = trace;
            serde_json::to_writer_pretty(&mut stdout, &resp).map_err(|e| Failure::Internal(e.to_string()))?;
            writeln!(stdout).map_err(|e| Failure::Internal(e.to_string()))?;
        }
    }
    drop(stdout);

    if a.oracle_check {
        let mut rows = Vec::new();
        for shard in store.load_shards()? {
            let t = shard.to_table()?;
            rows.extend((0..t.num_rows()).map(|r| t.row(r)));
        }
        let mut schema = store.manifest.schema.clone();
        schema.table_name = store.manifest.table.clone();
        let want = oracle_query(&OracleTable { schema, rows }, &q)?;
        if !rows_match(&result.rows, &want.rows, 1e-9) {
            let note = if has_distinct(&q) {
                " (COUNT(DISTINCT) is approximate above the sketch size)"
            } else {
                ""
            };
            return Err(Failure::Internal(format!(
                "oracle check failed{note}: oracle gives {:?}",
                want.rows
            )));
        }
        eprintln!("oracle check: ok ({} rows)", want.rows.len());
    }
    Ok(())
}

fn write_csv(r: &QueryResult, out: impl Write) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Internal(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(r.columns.iter().map(|c| c.name.as_str())).map_err(io)?;
    for row in &r.rows {
        w.write_record(row.iter().map(|v| match v {
            Value::F64(f) => format!("{f:?}"),
            v => v.to_string(),
        }))
        .map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Internal(e.to_string()))
}
