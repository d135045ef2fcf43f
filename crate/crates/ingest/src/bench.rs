//! The storage optimization ladder on synthetic logs.
//!
//! Each rung adds one optimization to the previous one:
//!
//! | rung      | layout                                                    |
//! |-----------|-----------------------------------------------------------|
//! | basic     | one chunk, 4-byte global ids, sorted-array dictionaries   |
//! | chunks    | partitioned chunks with chunk dictionaries, 4-byte ids    |
//! | optcols   | bit-width adaptive elements                               |
//! | optdicts  | trie string dictionaries                                  |
//! | codec     | elements and chunk dictionaries lz4-compressed            |
//! | reorder   | rows sorted lexicographically inside the partitioning     |
//!
//! Up to `codec` the chunks keep their rows in input order, so `reorder`
//! isolates the effect of row order on compression.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use pdrill_core::cache::{CacheConfig, Codec, Lz4};
use pdrill_core::partition::{partition, reorder_rows, PartitionSpec};
use pdrill_core::{Engine, ExecOptions, Shard, ShardOptions, Table};

use crate::error::{IngestError, Result};
use crate::synth::{logs_table, LogsConfig};

pub const DRILLDOWN_QUERIES: [&str; 3] = [
    "SELECT country, COUNT(*) as c FROM data GROUP BY country ORDER BY c DESC LIMIT 10",
    "SELECT date(timestamp) as date, COUNT(*), SUM(latency) FROM data GROUP BY date ORDER BY date ASC LIMIT 10",
    "SELECT table_name, COUNT(*) as c FROM data GROUP BY table_name ORDER BY c DESC LIMIT 10",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub logs: LogsConfig,
    pub partition_fields: Vec<String>,
    pub max_chunk_rows: usize,
    /// Timed runs per query; the median is reported. 0 skips timing.
    pub repeats: usize,
    pub queries: Vec<String>,
    /// Element cache budget for the compressed rungs.
    pub cache_bytes: usize,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            logs: LogsConfig::default(),
            partition_fields: vec!["country".into(), "table_name".into()],
            max_chunk_rows: 50_000,
            repeats: 3,
            queries: DRILLDOWN_QUERIES.iter().map(|s| s.to_string()).collect(),
            cache_bytes: 64 << 20,
            parallel: true,
        }
    }
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| IngestError::Config(format!("bench config: {e}")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ColumnBytes {
    pub dict: usize,
    pub chunk_dicts: usize,
    pub elements: usize,
}

impl ColumnBytes {
    pub fn total(&self) -> usize {
        self.dict + self.chunk_dicts + self.elements
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Rung {
    pub name: &'static str,
    pub chunks: usize,
    pub columns: BTreeMap<String, ColumnBytes>,
    /// lz4 of each column's elements plus chunk dictionaries, in this
    /// rung's id width.
    pub compressed: BTreeMap<String, usize>,
    /// Median milliseconds per query, in config order.
    pub latency_ms: Vec<f64>,
}

impl Rung {
    pub fn total(&self) -> usize {
        self.columns.values().map(ColumnBytes::total).sum()
    }

    pub fn elements_and_chunk_dicts(&self) -> usize {
        self.columns.values().map(|c| c.elements + c.chunk_dicts).sum()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    /// Whether the value must exceed the threshold rather than reach it.
    pub strict: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: usize,
    pub queries: Vec<String>,
    pub rungs: Vec<Rung>,
    pub gates: Vec<Gate>,
}

impl BenchReport {
    pub fn rung(&self, name: &str) -> Option<&Rung> {
        self.rungs.iter().find(|r| r.name == name)
    }

    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

fn u32_bytes(ids: impl IntoIterator<Item = u32>) -> Vec<u8> {
    ids.into_iter().flat_map(u32::to_le_bytes).collect()
}

fn lz4_len(bytes: &[u8]) -> usize {
    if bytes.is_empty() {
        0
    } else {
        Lz4.compress(bytes).len()
    }
}

/// Per-column bytes of a shard under the given accounting, plus the lz4
/// size of the same elements and chunk dictionaries.
fn measure(
    shard: &Shard,
    wide_ids: bool,
    trie: bool,
    codec: bool,
) -> Result<(BTreeMap<String, ColumnBytes>, BTreeMap<String, usize>)> {
    let single = shard.num_chunks() == 1;
    let mut sizes = BTreeMap::new();
    let mut compressed = BTreeMap::new();
    for col in shard.columns() {
        let mut b = ColumnBytes {
            dict: if trie {
                col.dict.size_bytes()
            } else {
                col.dict.flat_size_bytes()?
            },
            ..Default::default()
        };
        let mut z = 0;
        for chunk in &col.chunks {
            let payload = if wide_ids {
                // a lone chunk stores global ids and needs no chunk dictionary
                u32_bytes((0..chunk.rows()).map(|r| {
                    if single {
                        chunk.global_id(r)
                    } else {
                        chunk.elements.get(r)
                    }
                }))
            } else {
                let mut p = Vec::new();
                chunk.elements.write_payload(&mut p);
                p
            };
            let dict = if single { 0 } else { chunk.dict.size_bytes() };
            let dict_z = if single {
                0
            } else {
                lz4_len(&u32_bytes(chunk.dict.global_ids().iter().copied()))
            };
            let payload_z = lz4_len(&payload);
            z += payload_z + dict_z;
            if codec {
                b.elements += payload_z;
                b.chunk_dicts += dict_z;
            } else {
                b.elements += payload.len();
                b.chunk_dicts += dict;
            }
        }
        sizes.insert(col.name.clone(), b);
        compressed.insert(col.name.clone(), z);
    }
    Ok((sizes, compressed))
}

/// Partition boundaries of the sorted table, with each chunk's rows put
/// back in input order.
fn unordered_layout(table: &Table, spec: &PartitionSpec) -> Result<(Table, Vec<std::ops::Range<usize>>)> {
    let mut perm = reorder_rows(table, spec)?;
    let bounds = partition(&table.permuted(&perm), spec)?;
    for r in &bounds {
        perm[r.clone()].sort_unstable();
    }
    Ok((table.permuted(&perm), bounds))
}

fn time_queries(engine: &Engine, cfg: &BenchConfig) -> Result<Vec<f64>> {
    cfg.queries
        .iter()
        .map(|sql| {
            if cfg.repeats == 0 {
                return Ok(f64::NAN);
            }
            let mut ms = Vec::with_capacity(cfg.repeats);
            for _ in 0..cfg.repeats {
                let t = Instant::now();
                engine.query(sql)?;
                ms.push(t.elapsed().as_secs_f64() * 1e3);
            }
            ms.sort_by(f64::total_cmp);
            Ok(ms[ms.len() / 2])
        })
        .collect()
}

fn engine_for(shard: Shard, cached: Option<usize>, parallel: bool) -> Result<Engine> {
    let mut e = Engine::new(ExecOptions {
        parallel,
        use_result_cache: false,
        ..Default::default()
    })
    .with_result_cache(None);
    if let Some(budget) = cached {
        e = e.with_element_cache(CacheConfig::two_q(budget).with_codec(Arc::new(Lz4)));
    }
    e.add_table("data", vec![shard])?;
    Ok(e)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    run_on(&logs_table(&cfg.logs), cfg)
}

/// Runs the ladder on an existing table named `data`.
pub fn run_on(table: &Table, cfg: &BenchConfig) -> Result<BenchReport> {
    let spec = PartitionSpec::new(cfg.partition_fields.iter().cloned(), cfg.max_chunk_rows);
    let flat = ShardOptions {
        trie_strings: false,
        parallel: cfg.parallel,
    };
    let tries = ShardOptions {
        trie_strings: true,
        ..flat
    };
    let basic = Shard::build_unchunked(0, table, flat)?;
    let (unordered, bounds) = unordered_layout(table, &spec)?;
    let chunked = Shard::build(0, &unordered, &bounds, flat)?;
    let chunked_trie = Shard::build(0, &unordered, &bounds, tries)?;
    let sorted = table.permuted(&reorder_rows(table, &spec)?);
    let reordered = Shard::build(0, &sorted, &bounds, tries)?;

    let mut rungs = Vec::new();
    let plan: [(&'static str, &Shard, bool, bool, bool); 6] = [
        ("basic", &basic, true, false, false),
        ("chunks", &chunked, true, false, false),
        ("optcols", &chunked, false, false, false),
        ("optdicts", &chunked_trie, false, true, false),
        ("codec", &chunked_trie, false, true, true),
        ("reorder", &reordered, false, true, true),
    ];
    for (name, shard, wide, trie, codec) in plan {
        let (columns, compressed) = measure(shard, wide, trie, codec)?;
        rungs.push(Rung {
            name,
            chunks: shard.num_chunks(),
            columns,
            compressed,
            latency_ms: Vec::new(),
        });
    }
    if cfg.repeats > 0 {
        let engines = [
            engine_for(Shard::build_unchunked(0, table, flat)?, None, cfg.parallel)?,
            engine_for(Shard::build(0, &unordered, &bounds, flat)?, None, cfg.parallel)?,
            engine_for(Shard::build(0, &unordered, &bounds, flat)?, None, cfg.parallel)?,
            engine_for(Shard::build(0, &unordered, &bounds, tries)?, None, cfg.parallel)?,
            engine_for(chunked_trie, Some(cfg.cache_bytes), cfg.parallel)?,
            engine_for(reordered, Some(cfg.cache_bytes), cfg.parallel)?,
        ];
        for (rung, engine) in rungs.iter_mut().zip(&engines) {
            rung.latency_ms = time_queries(engine, cfg)?;
        }
    }

    let lead = cfg.partition_fields.first().cloned().unwrap_or_default();
    let get = |rung: &str| rungs.iter().find(|r| r.name == rung).expect("rung exists");
    let lead_elements = |rung: &str| get(rung).columns.get(&lead).map_or(0, |c| c.elements);
    let shrink = lead_elements("chunks") as f64 / lead_elements("optcols").max(1) as f64;
    let unpartitioned_compressed: usize = get("basic").compressed.values().sum();
    let codec = get("codec").elements_and_chunk_dicts();
    let reorder = get("reorder").elements_and_chunk_dicts() as f64;
    let gate = |name, value: f64, threshold, strict| Gate {
        name,
        value,
        threshold,
        strict,
        pass: if strict { value > threshold } else { value >= threshold },
    };
    let gates = vec![
        gate("optcols element shrink on leading field", shrink, 50.0, false),
        gate(
            "compression gain from partitioning",
            unpartitioned_compressed as f64 / codec.max(1) as f64,
            1.0,
            true,
        ),
        gate(
            "compression gain from reordering",
            codec as f64 / reorder.max(1.0),
            1.1,
            false,
        ),
    ];
    Ok(BenchReport {
        rows: table.num_rows(),
        queries: cfg.queries.clone(),
        rungs,
        gates,
    })
}

fn mb(b: usize) -> String {
    format!("{:.3}", b as f64 / (1 << 20) as f64)
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} rows", self.rows)?;
        let names: Vec<&String> = self
            .rungs
            .first()
            .map(|r| r.columns.keys().collect())
            .unwrap_or_default();
        write!(f, "{:<10} {:>7} {:>10}", "config", "chunks", "total MB")?;
        for n in &names {
            write!(f, " {:>12}", n)?;
        }
        writeln!(f)?;
        for r in &self.rungs {
            write!(f, "{:<10} {:>7} {:>10}", r.name, r.chunks, mb(r.total()))?;
            for n in &names {
                write!(f, " {:>12}", mb(r.columns[*n].total()))?;
            }
            writeln!(f)?;
        }
        writeln!(f, "\nelements MB per column")?;
        for r in &self.rungs {
            write!(f, "{:<10}", r.name)?;
            for n in &names {
                write!(f, " {:>12}", mb(r.columns[*n].elements))?;
            }
            writeln!(f)?;
        }
        if self.rungs.iter().any(|r| !r.latency_ms.is_empty()) {
            writeln!(f, "\nlatency ms (median)")?;
            for (i, q) in self.queries.iter().enumerate() {
                writeln!(f, "  q{}: {q}", i + 1)?;
            }
            for r in &self.rungs {
                write!(f, "{:<10}", r.name)?;
                for ms in &r.latency_ms {
                    write!(f, " {:>10.2}", ms)?;
                }
                writeln!(f)?;
            }
        }
        writeln!(f, "\nlz4 of elements and chunk dictionaries, MB per column")?;
        for r in &self.rungs {
            write!(f, "{:<10} {:>7} {:>10}", r.name, "", mb(r.compressed.values().sum()))?;
            for n in &names {
                write!(f, " {:>12}", mb(r.compressed[*n]))?;
            }
            writeln!(f)?;
        }
        writeln!(f)?;
        for g in &self.gates {
            writeln!(
                f,
                "{} {}: {:.2} (need {} {:.2})",
                if g.pass { "PASS" } else { "FAIL" },
                g.name,
                g.value,
                if g.strict { ">" } else { ">=" },
                g.threshold
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unordered_layout_keeps_chunk_membership() {
        let t = logs_table(&LogsConfig {
            rows: 3000,
            ..Default::default()
        });
        let spec = PartitionSpec::new(["country", "table_name"], 500);
        let (u, bounds) = unordered_layout(&t, &spec).unwrap();
        let sorted = t.permuted(&reorder_rows(&t, &spec).unwrap());
        for r in bounds {
            let mut a: Vec<_> = r.clone().map(|i| u.row(i)).collect();
            let mut b: Vec<_> = r.map(|i| sorted.row(i)).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn small_ladder_runs() {
        let cfg = BenchConfig {
            logs: LogsConfig {
                rows: 20_000,
                table_names: 3000,
                ..Default::default()
            },
            max_chunk_rows: 2000,
            repeats: 1,
            ..Default::default()
        };
        let r = run_bench(&cfg).unwrap();
        assert_eq!(r.rungs.len(), 6);
        assert_eq!(r.rung("basic").unwrap().chunks, 1);
        let basic = r.rung("basic").unwrap();
        assert_eq!(basic.columns["country"].elements, 4 * 20_000);
        assert!(basic.columns.values().all(|c| c.chunk_dicts == 0));
        let codec = r.rung("codec").unwrap();
        assert_eq!(
            codec.elements_and_chunk_dicts(),
            codec.compressed.values().sum::<usize>()
        );
        assert_eq!(codec.compressed, r.rung("optdicts").unwrap().compressed);
        assert!(r.rungs.iter().all(|g| g.latency_ms.len() == 3));
        assert!(r.to_string().contains("optcols"));
        assert!(
            BenchConfig::from_json(r#"{"max_chunk_rows": 7}"#)
                .unwrap()
                .max_chunk_rows
                == 7
        );
    }
}
