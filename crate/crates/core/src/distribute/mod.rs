//! Tree-structured execution over replicated shards.
//!
//! Leaves aggregate their shard and ship partial groups upward; internal
//! nodes merge; the root finalizes, orders and limits. Network behaviour is
//! simulated on a virtual clock: every request goes to all replicas of a
//! shard, the fastest surviving response wins and later ones are dropped.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::query::accumulate::{AggAcc, GroupAcc};
use crate::query::analyze::{AggCall, Plan};
use crate::query::ast::{AggFunc, Expr};
use crate::query::engine::{
    finalize_rows, result_columns, Engine, ExecOptions, PartialGroups, QueryResult, QueryStats,
};
use crate::query::parser::parse;
use crate::query::{analyze, Query};
use crate::store::Shard;
use crate::value::Value;

/// Maximum children per internal node.
pub const DEFAULT_FAN_IN: usize = 32;

/// How the root computes an original aggregate from leaf aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootAgg {
    Sum(usize),
    /// Sum of leaf counts; zero when no leaf saw a row.
    Count(usize),
    Min(usize),
    Max(usize),
    /// SUM(x) / COUNT(x) of two leaf aggregates.
    Avg {
        sum: usize,
        count: usize,
    },
    Distinct(usize),
}

/// A query split into leaf and root halves.
#[derive(Debug, Clone)]
pub struct TreePlan {
    pub leaf: Plan,
    pub root: Plan,
    pub mapping: Vec<RootAgg>,
    pub leaf_sql: String,
    pub root_sql: String,
}

/// Splits `plan` for tree execution. `exact_distinct` asks for exact
/// distinct counts, which do not decompose.
pub fn rewrite(plan: &Plan, exact_distinct: bool) -> Result<TreePlan> {
    let mut leaf_aggs: Vec<AggCall> = Vec::new();
    let mut intern = |func: AggFunc, arg: Option<Expr>| -> usize {
        let call = AggCall { func, arg };
        match leaf_aggs.iter().position(|a| *a == call) {
            Some(i) => i,
            None => {
                leaf_aggs.push(call);
                leaf_aggs.len() - 1
            }
        }
    };
    let mut mapping = Vec::with_capacity(plan.aggs.len());
    for a in &plan.aggs {
        let arg = a.arg.clone();
        mapping.push(match a.func {
            AggFunc::CountStar => RootAgg::Count(intern(AggFunc::Sum, Some(Expr::lit(1i64)))),
            AggFunc::Count => RootAgg::Count(intern(AggFunc::Count, arg)),
            AggFunc::Sum => RootAgg::Sum(intern(AggFunc::Sum, arg)),
            AggFunc::Min => RootAgg::Min(intern(AggFunc::Min, arg)),
            AggFunc::Max => RootAgg::Max(intern(AggFunc::Max, arg)),
            AggFunc::Avg => RootAgg::Avg {
                sum: intern(AggFunc::Sum, arg.clone()),
                count: intern(AggFunc::Count, arg),
            },
            AggFunc::CountDistinct if exact_distinct => {
                return Err(Error::Unsupported(format!(
                    "{} has no exact decomposition across shards",
                    a.canonical()
                )))
            }
            AggFunc::CountDistinct => RootAgg::Distinct(intern(AggFunc::CountDistinct, arg)),
        });
    }
    let leaf = Plan {
        table: plan.table.clone(),
        keys: plan.keys.clone(),
        aggs: leaf_aggs,
        outputs: vec![],
        filter: plan.filter.clone(),
        having: None,
        order: vec![],
        limit: None,
    };
    let leaf_sql = leaf_text(&leaf);
    let root_sql = root_text(plan, &mapping, &leaf);
    Ok(TreePlan {
        leaf,
        root: plan.clone(),
        mapping,
        leaf_sql,
        root_sql,
    })
}

fn leaf_text(leaf: &Plan) -> String {
    let mut cols: Vec<String> = leaf.keys.iter().map(|k| k.to_string()).collect();
    cols.extend(leaf.aggs.iter().map(|a| a.expr().to_string()));
    let mut s = format!("SELECT {} FROM {}", cols.join(", "), leaf.table);
    if let Some(f) = &leaf.filter {
        s += &format!(" WHERE {f}");
    }
    if !leaf.keys.is_empty() {
        s += &format!(
            " GROUP BY {}",
            leaf.keys.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ")
        );
    }
    s
}

fn root_text(plan: &Plan, mapping: &[RootAgg], leaf: &Plan) -> String {
    let p = |j: usize| format!("p{j}");
    let agg = |m: &RootAgg| match *m {
        RootAgg::Sum(j) | RootAgg::Count(j) => format!("SUM({})", p(j)),
        RootAgg::Min(j) => format!("MIN({})", p(j)),
        RootAgg::Max(j) => format!("MAX({})", p(j)),
        RootAgg::Avg { sum, count } => format!("SUM({}) / SUM({})", p(sum), p(count)),
        RootAgg::Distinct(j) => format!("KMV_UNION({})", p(j)),
    };
    let keys: Vec<String> = (0..plan.keys.len()).map(|i| format!("k{i}")).collect();
    let mut cols = keys.clone();
    cols.extend(mapping.iter().map(agg));
    let mut s = format!("SELECT {} FROM leaves({})", cols.join(", "), leaf.aggs.len());
    if !keys.is_empty() {
        s += &format!(" GROUP BY {}", keys.join(", "));
    }
    if plan.having.is_some() {
        s += " HAVING ...";
    }
    if !plan.order.is_empty() {
        s += " ORDER BY ...";
    }
    if let Some(l) = plan.limit {
        s += &format!(" LIMIT {l}");
    }
    s
}

/// Root-level value of each original aggregate.
fn root_finals(mapping: &[RootAgg], acc: &GroupAcc, bias_corrected: bool) -> Result<Vec<Value>> {
    let bad = || Error::Internal("leaf accumulator has an unexpected shape".into());
    let count = |j: usize| -> Result<u64> {
        match acc.aggs.get(j).ok_or_else(bad)? {
            AggAcc::Count(c) => Ok(*c),
            AggAcc::Sum { int, n, .. } => Ok(if *n == 0 { 0 } else { *int as u64 }),
            _ => Err(bad()),
        }
    };
    mapping
        .iter()
        .map(|m| match *m {
            RootAgg::Count(j) => Ok(Value::I64(count(j)? as i64)),
            RootAgg::Sum(j) => Ok(acc.aggs.get(j).ok_or_else(bad)?.finalize(AggFunc::Sum, bias_corrected)),
            RootAgg::Min(j) => Ok(acc.aggs.get(j).ok_or_else(bad)?.finalize(AggFunc::Min, bias_corrected)),
            RootAgg::Max(j) => Ok(acc.aggs.get(j).ok_or_else(bad)?.finalize(AggFunc::Max, bias_corrected)),
            RootAgg::Distinct(j) => Ok(acc
                .aggs
                .get(j)
                .ok_or_else(bad)?
                .finalize(AggFunc::CountDistinct, bias_corrected)),
            RootAgg::Avg { sum, count: c } => {
                let s = acc
                    .aggs
                    .get(sum)
                    .ok_or_else(bad)?
                    .finalize(AggFunc::Sum, bias_corrected);
                let n = count(c)?;
                Ok(match (s.as_f64(), n) {
                    (Some(s), n) if n > 0 => Value::F64(s / n as f64),
                    _ => Value::Null,
                })
            }
        })
        .collect()
}

/// Seeded network behaviour.
#[derive(Debug, Clone)]
pub struct Faults {
    pub seed: u64,
    /// Per-response latency drawn uniformly from this range, milliseconds.
    pub latency_ms: (f64, f64),
    /// Replicas that never answer, as (shard, replica).
    pub dead: Vec<(u32, usize)>,
    /// Additional independent failure probability per replica.
    pub fail_probability: f64,
    /// Latency multipliers for individual replicas, as ((shard, replica), factor).
    pub slow: Vec<((u32, usize), f64)>,
}

impl Default for Faults {
    fn default() -> Self {
        Faults {
            seed: 0,
            latency_ms: (1.0, 10.0),
            dead: vec![],
            fail_probability: 0.0,
            slow: vec![],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TreeOptions {
    /// 2 = root over leaves; 3 adds a layer of internal nodes.
    pub levels: usize,
    pub fan_in: usize,
    pub timeout_ms: Option<f64>,
    pub faults: Faults,
    pub exact_distinct: bool,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions {
            levels: 2,
            fan_in: DEFAULT_FAN_IN,
            timeout_ms: None,
            faults: Faults::default(),
            exact_distinct: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub leaves: u64,
    pub internal_nodes: u64,
    pub replicas_failed: u64,
    pub late_discarded: u64,
    /// Winning replica per shard.
    pub served_by: Vec<usize>,
    pub bytes_shipped: u64,
    /// Completion time on the virtual clock.
    pub virtual_ms: f64,
    pub query: QueryStats,
}

#[derive(Debug, Clone)]
pub struct TreeResult {
    pub result: QueryResult,
    pub tree: TreeStats,
    pub leaf_sql: String,
    pub root_sql: String,
}

/// One replica of one shard, with its own caches.
struct Worker {
    shard: Arc<Shard>,
    engine: Engine,
}

/// A table spread over shards, each held by one or more replicas.
pub struct Cluster {
    table: String,
    shards: Vec<Vec<Worker>>,
    opts: ExecOptions,
}

/// A node's merged output and its completion time.
struct Response {
    groups: PartialGroups,
    at_ms: f64,
    stats: QueryStats,
    bytes: u64,
}

impl Cluster {
    /// `shards[i]` lists the replicas of shard i.
    pub fn new(table: &str, shards: Vec<Vec<Arc<Shard>>>, opts: ExecOptions) -> Result<Self> {
        if shards.is_empty() || shards.iter().any(|r| r.is_empty()) {
            return Err(Error::Invalid("every shard needs at least one replica".into()));
        }
        let shards = shards
            .into_iter()
            .map(|replicas| {
                replicas
                    .into_iter()
                    .map(|shard| Worker {
                        shard,
                        engine: Engine::new(opts.clone()),
                    })
                    .collect()
            })
            .collect();
        Ok(Cluster {
            table: table.to_string(),
            shards,
            opts,
        })
    }

    pub fn num_shards(&self) -> usize {
        self.shards.len()
    }

    pub fn query(&self, sql: &str, opts: &TreeOptions) -> Result<TreeResult> {
        self.execute(&parse(sql)?, opts)
    }

    pub fn execute(&self, q: &Query, opts: &TreeOptions) -> Result<TreeResult> {
        if q.from != self.table {
            return Err(Error::UnknownTable(q.from.clone()));
        }
        let schema = self.shards[0][0].shard.schema.clone();
        let plan = analyze(q, &schema)?;
        let tree = rewrite(&plan, opts.exact_distinct)?;
        let mut stats = TreeStats::default();

        let leaves = parallel::map_range(self.shards.len(), self.opts.parallel, |i| {
            self.leaf(i, &tree.leaf, opts)
        });
        let mut responses = Vec::with_capacity(leaves.len());
        for r in leaves {
            let (resp, winner, failed, late) = r?;
            stats.served_by.push(winner);
            stats.replicas_failed += failed;
            stats.late_discarded += late;
            stats.bytes_shipped += resp.bytes;
            responses.push(resp);
        }
        stats.leaves = responses.len() as u64;

        if opts.levels >= 3 && responses.len() > 1 {
            let groups = (responses.len().div_ceil(opts.fan_in.max(1)))
                .max(2)
                .min(responses.len());
            let per = responses.len().div_ceil(groups);
            let mut next = Vec::with_capacity(groups);
            let mut rng = ChaCha8Rng::seed_from_u64(opts.faults.seed ^ 0x1f7e_2a11);
            let mut it = responses.into_iter().peekable();
            while it.peek().is_some() {
                let children: Vec<Response> = it.by_ref().take(per).collect();
                let hop = sample_latency(&mut rng, opts.faults.latency_ms);
                let merged = merge(children, hop)?;
                stats.bytes_shipped += merged.bytes;
                next.push(merged);
            }
            stats.internal_nodes = next.len() as u64;
            responses = next;
        } else if responses.len() > opts.fan_in.max(1) {
            return Err(Error::Invalid(format!(
                "{} leaves exceed the fan-in of {} for a two-level tree",
                responses.len(),
                opts.fan_in
            )));
        }

        let root = merge(responses, 0.0)?;
        stats.virtual_ms = root.at_ms;
        let mut qstats = root.stats;
        qstats.kmv_seed = self.opts.kmv_seed;
        qstats.finish();
        stats.query = qstats.clone();

        let bias = self.opts.bias_corrected;
        let rows = root
            .groups
            .iter()
            .map(|(k, acc)| Ok((k.clone(), root_finals(&tree.mapping, acc, bias)?)))
            .collect::<Result<Vec<_>>>()?;
        let empty_acc = GroupAcc::new(
            &tree.leaf.aggs.iter().map(|a| a.func).collect::<Vec<_>>(),
            self.opts.kmv_m,
        );
        let empty = root_finals(&tree.mapping, &empty_acc, bias)?;
        let rows = finalize_rows(&tree.root, rows, empty)?;
        let columns = result_columns(&tree.root, &schema, &rows);
        Ok(TreeResult {
            result: QueryResult {
                columns,
                rows,
                stats: qstats,
            },
            tree: stats,
            leaf_sql: tree.leaf_sql,
            root_sql: tree.root_sql,
        })
    }

    /// Sends the leaf plan to every replica of shard `i`. Every surviving
    /// replica computes the full answer (keeping its caches warm); the first
    /// to arrive wins. Returns it with the winner, failure and late counts.
    fn leaf(&self, i: usize, leaf: &Plan, opts: &TreeOptions) -> Result<(Response, usize, u64, u64)> {
        let replicas = &self.shards[i];
        let mut rng = ChaCha8Rng::seed_from_u64(opts.faults.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ i as u64);
        // (replica, arrival time) of answers that arrive at all
        let mut arrivals: Vec<(usize, f64)> = Vec::new();
        let mut failed = 0;
        for r in 0..replicas.len() {
            let slow = opts
                .faults
                .slow
                .iter()
                .find(|(k, _)| *k == (i as u32, r))
                .map_or(1.0, |s| s.1);
            let at = sample_latency(&mut rng, opts.faults.latency_ms) * slow;
            let dead =
                opts.faults.dead.contains(&(i as u32, r)) || rng.gen_bool(opts.faults.fail_probability.clamp(0.0, 1.0));
            let late = opts.timeout_ms.is_some_and(|t| at > t);
            if dead || late {
                failed += 1;
            } else {
                arrivals.push((r, at));
            }
        }
        arrivals.sort_by(|a, b| a.1.total_cmp(&b.1));
        let Some(&(winner, at_ms)) = arrivals.first() else {
            return Err(Error::Distributed {
                shard: i as u32,
                message: format!("no response from any of {} replicas", replicas.len()),
            });
        };
        let w = &replicas[winner];
        let (groups, stats) = w.engine.partial(leaf, std::slice::from_ref(&w.shard))?;
        let canon = canonical(&groups);
        for &(r, _) in &arrivals[1..] {
            let o = &replicas[r];
            let (other, _) = o.engine.partial(leaf, std::slice::from_ref(&o.shard))?;
            if canonical(&other) != canon {
                return Err(Error::Internal(format!(
                    "shard {i}: replicas {winner} and {r} returned different results"
                )));
            }
        }
        let bytes = ship(&groups)?;
        Ok((
            Response {
                groups,
                at_ms,
                stats,
                bytes,
            },
            winner,
            failed,
            arrivals.len() as u64 - 1,
        ))
    }
}

fn sample_latency(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Serialized size of a partial result, after a decode check.
fn ship(groups: &PartialGroups) -> Result<u64> {
    let bytes = bincode::serialize(groups).map_err(|e| Error::Internal(format!("encoding partial result: {e}")))?;
    let back: PartialGroups =
        bincode::deserialize(&bytes).map_err(|e| Error::Internal(format!("decoding partial result: {e}")))?;
    if back.len() != groups.len() {
        return Err(Error::Internal("partial result did not survive transport".into()));
    }
    Ok(bytes.len() as u64)
}

fn canonical(groups: &PartialGroups) -> PartialGroups {
    let mut g = groups.clone();
    g.sort_by(|a, b| a.0.cmp(&b.0));
    g
}

/// Re-aggregates children; completes `hop_ms` after the slowest child.
fn merge(children: Vec<Response>, hop_ms: f64) -> Result<Response> {
    let mut at: f64 = 0.0;
    let mut stats = QueryStats::default();
    let mut merged: HashMap<Vec<Value>, GroupAcc> = HashMap::new();
    for c in children {
        at = at.max(c.at_ms);
        stats.add(&c.stats);
        for (k, acc) in c.groups {
            match merged.get_mut(&k) {
                Some(m) => m.merge(&acc)?,
                None => {
                    merged.insert(k, acc);
                }
            }
        }
    }
    let groups: PartialGroups = merged.into_iter().collect();
    let bytes = ship(&groups)?;
    Ok(Response {
        groups,
        at_ms: at + hop_ms,
        stats,
        bytes,
    })
}
