//! Query execution over a catalog of sharded tables.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::accumulate::{aggregate_chunk, ChunkParams, ChunkPartial, GroupAcc, Measure};
use super::analyze::{analyze, parse_ref, Plan};
use super::ast::{AggFunc, Expr, Query};
use super::functions::{eval, eval_predicate, infer_kind};
use super::kmv;
use super::parser::parse;
use super::restriction::{split_restriction, BoundRestriction, Restriction, Status};
use super::virtual_field;
use crate::cache::{ArtifactCache, CacheConfig, CacheStats, ChunkKey, ResultKey};
use crate::error::{Error, Result};
use crate::parallel;
use crate::schema::Schema;
use crate::store::{Column, ElementsEncoding, Shard};
use crate::value::{tuple_key, Value, ValueKind};

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub parallel: bool,
    pub kmv_m: usize,
    pub kmv_seed: u64,
    pub bias_corrected: bool,
    pub use_result_cache: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            parallel: parallel::available(),
            kmv_m: kmv::DEFAULT_M,
            kmv_seed: kmv::DEFAULT_SEED,
            bias_corrected: false,
            use_result_cache: true,
        }
    }
}

/// Chunk and row accounting of one execution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryStats {
    pub shards: u64,
    pub chunks_total: u64,
    pub chunks_skipped: u64,
    pub chunks_cached: u64,
    pub chunks_scanned: u64,
    pub rows_total: u64,
    pub rows_skipped: u64,
    pub rows_cached: u64,
    pub rows_scanned: u64,
    /// Row-weighted fractions.
    pub skipped_fraction: f64,
    pub cached_fraction: f64,
    pub scanned_fraction: f64,
    pub virtual_fields_materialized: u64,
    pub kmv_seed: u64,
    pub elapsed_ms: f64,
}

impl QueryStats {
    pub fn add(&mut self, o: &QueryStats) {
        self.shards += o.shards;
        self.chunks_total += o.chunks_total;
        self.chunks_skipped += o.chunks_skipped;
        self.chunks_cached += o.chunks_cached;
        self.chunks_scanned += o.chunks_scanned;
        self.rows_total += o.rows_total;
        self.rows_skipped += o.rows_skipped;
        self.rows_cached += o.rows_cached;
        self.rows_scanned += o.rows_scanned;
        self.virtual_fields_materialized += o.virtual_fields_materialized;
        self.elapsed_ms += o.elapsed_ms;
        self.finish();
    }

    /// Recomputes the fractions; an empty input counts as fully skipped.
    pub fn finish(&mut self) {
        if self.rows_total == 0 {
            self.skipped_fraction = 1.0;
            self.cached_fraction = 0.0;
            self.scanned_fraction = 0.0;
        } else {
            let t = self.rows_total as f64;
            self.skipped_fraction = self.rows_skipped as f64 / t;
            self.cached_fraction = self.rows_cached as f64 / t;
            self.scanned_fraction = self.rows_scanned as f64 / t;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub kind: Option<ValueKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub columns: Vec<ColumnInfo>,
    pub rows: Vec<Vec<Value>>,
    pub stats: QueryStats,
}

/// Group keys with their merged accumulators.
pub type PartialGroups = Vec<(Vec<Value>, GroupAcc)>;

pub struct Table {
    pub schema: Schema,
    pub shards: Vec<Arc<Shard>>,
}

pub struct Engine {
    opts: ExecOptions,
    tables: RwLock<HashMap<String, Arc<Table>>>,
    elements: Option<ArtifactCache<ChunkKey, ElementsEncoding>>,
    results: Option<ArtifactCache<ResultKey, ChunkPartial>>,
    cumulative: Mutex<(u64, QueryStats)>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("opts", &self.opts)
            .field("tables", &self.table_names())
            .finish()
    }
}

/// Default result-cache budget.
pub const RESULT_CACHE_BYTES: usize = 256 << 20;

/// How an aggregate's argument is read inside a shard.
enum MeasureSrc {
    None,
    Const(Value),
    Column(Arc<Column>),
}

/// What one chunk contributed.
enum Outcome {
    Skipped,
    Cached(Arc<ChunkPartial>),
    Scanned(Arc<ChunkPartial>),
}

impl Engine {
    pub fn new(opts: ExecOptions) -> Self {
        let results = Some(ArtifactCache::new(CacheConfig::two_q(RESULT_CACHE_BYTES)));
        Engine {
            opts,
            tables: RwLock::new(HashMap::new()),
            elements: None,
            results,
            cumulative: Mutex::new((0, QueryStats::default())),
        }
    }

    /// Serves chunk elements through a cache with this configuration.
    pub fn with_element_cache(mut self, cfg: CacheConfig) -> Self {
        self.elements = Some(ArtifactCache::new(cfg));
        self
    }

    /// Replaces the result cache; `None` disables it.
    pub fn with_result_cache(mut self, cfg: Option<CacheConfig>) -> Self {
        self.results = cfg.map(ArtifactCache::new);
        self
    }

    pub fn options(&self) -> &ExecOptions {
        &self.opts
    }

    /// Registers (or replaces) a table. Shards must share one schema.
    pub fn add_table(&self, name: &str, shards: Vec<Shard>) -> Result<()> {
        let first = shards
            .first()
            .ok_or_else(|| Error::Invalid(format!("table `{name}` has no shards")))?;
        let fields = first.schema.fields.clone();
        if shards.iter().any(|s| s.schema.fields != fields) {
            return Err(Error::Schema(format!("shards of `{name}` disagree on the schema")));
        }
        let schema = Schema::new(name, fields)?;
        let t = Table {
            schema,
            shards: shards.into_iter().map(Arc::new).collect(),
        };
        self.tables.write().insert(name.to_string(), Arc::new(t));
        if let Some(c) = &self.elements {
            c.clear();
        }
        if let Some(c) = &self.results {
            c.clear();
        }
        Ok(())
    }

    pub fn table_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.tables.read().keys().cloned().collect();
        v.sort();
        v
    }

    pub fn table(&self, name: &str) -> Result<Arc<Table>> {
        self.tables
            .read()
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn plan(&self, q: &Query) -> Result<Plan> {
        let t = self.table(&q.from)?;
        analyze(q, &t.schema)
    }

    pub fn query(&self, sql: &str) -> Result<QueryResult> {
        self.execute(&parse(sql)?)
    }

    pub fn execute(&self, q: &Query) -> Result<QueryResult> {
        let start = Instant::now();
        let t = self.table(&q.from)?;
        let plan = analyze(q, &t.schema)?;
        let (rows, mut stats) = if t.shards.len() == 1 {
            self.single_shard(&plan, &t.shards[0])?
        } else {
            let (groups, stats) = self.partial(&plan, &t.shards)?;
            (self.finalize(&plan, groups)?, stats)
        };
        stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
        stats.kmv_seed = self.opts.kmv_seed;
        {
            let mut c = self.cumulative.lock();
            c.0 += 1;
            c.1.add(&stats);
        }
        Ok(QueryResult {
            columns: result_columns(&plan, &t.schema, &rows),
            rows,
            stats,
        })
    }

    /// Queries executed and their summed stats.
    pub fn cumulative_stats(&self) -> (u64, QueryStats) {
        self.cumulative.lock().clone()
    }

    pub fn element_cache_stats(&self) -> Option<CacheStats> {
        self.elements.as_ref().map(|c| c.stats())
    }

    pub fn result_cache_stats(&self) -> Option<CacheStats> {
        self.results.as_ref().map(|c| c.stats())
    }

    /// Per-group accumulators over `shards`, keys materialized as values.
    pub fn partial(&self, plan: &Plan, shards: &[Arc<Shard>]) -> Result<(PartialGroups, QueryStats)> {
        let restriction = plan.filter.as_ref().map(split_restriction);
        let per_shard = parallel::map(shards, self.opts.parallel, |s| -> Result<_> {
            let (groups, group_col, stats) = self.shard_groups(plan, s, restriction.as_ref())?;
            let kinds = self.key_kinds(plan, s)?;
            let mut out = Vec::with_capacity(groups.len());
            for (gid, acc) in groups {
                out.push((decode_key(plan, group_col.as_deref(), &kinds, gid)?, acc));
            }
            Ok((out, stats))
        });
        let mut merged: HashMap<Vec<Value>, GroupAcc> = HashMap::new();
        let mut stats = QueryStats::default();
        for r in per_shard {
            let (groups, s) = r?;
            stats.add(&s);
            for (k, acc) in groups {
                match merged.get_mut(&k) {
                    Some(m) => m.merge(&acc)?,
                    None => {
                        merged.insert(k, acc);
                    }
                }
            }
        }
        stats.finish();
        Ok((merged.into_iter().collect(), stats))
    }

    /// Applies HAVING, ORDER BY, LIMIT and the select list.
    pub fn finalize(&self, plan: &Plan, groups: PartialGroups) -> Result<Vec<Vec<Value>>> {
        let funcs: Vec<AggFunc> = plan.aggs.iter().map(|a| a.func).collect();
        let bias = self.opts.bias_corrected;
        let finals =
            |acc: &GroupAcc| -> Vec<Value> { acc.aggs.iter().zip(&funcs).map(|(a, f)| a.finalize(*f, bias)).collect() };
        let rows = groups.iter().map(|(k, acc)| (k.clone(), finals(acc))).collect();
        let empty = finals(&GroupAcc::new(&funcs, self.opts.kmv_m));
        finalize_rows(plan, rows, empty)
    }

    fn key_kinds(&self, plan: &Plan, shard: &Shard) -> Result<Vec<ValueKind>> {
        if plan.keys.len() < 2 {
            return Ok(vec![]);
        }
        let col = |c: &str| shard.schema.field(c).map(|f| f.kind);
        plan.keys
            .iter()
            .map(|k| match infer_kind(k, &col) {
                Some(kind) => Ok(kind),
                None => Ok(virtual_field::resolve(shard, k)?.kind),
            })
            .collect()
    }

    /// One shard answered with keys materialized only for surviving groups.
    fn single_shard(&self, plan: &Plan, shard: &Arc<Shard>) -> Result<(Vec<Vec<Value>>, QueryStats)> {
        let restriction = plan.filter.as_ref().map(split_restriction);
        if !late_materializable(plan) {
            let (groups, stats) = self.partial(plan, std::slice::from_ref(shard))?;
            return Ok((self.finalize(plan, groups)?, stats));
        }
        let (groups, group_col, mut stats) = self.shard_groups(plan, shard, restriction.as_ref())?;
        stats.finish();
        let funcs: Vec<AggFunc> = plan.aggs.iter().map(|a| a.func).collect();
        let bias = self.opts.bias_corrected;
        let finals =
            |acc: &GroupAcc| -> Vec<Value> { acc.aggs.iter().zip(&funcs).map(|(a, f)| a.finalize(*f, bias)).collect() };
        if plan.keys.is_empty() {
            let rows = groups.iter().map(|(_, acc)| (vec![], finals(acc))).collect();
            let empty = finals(&GroupAcc::new(&funcs, self.opts.kmv_m));
            return Ok((finalize_rows(plan, rows, empty)?, stats));
        }

        // (gid, finals, order values); no key values needed yet
        let mut rows: Vec<(u32, Vec<Value>, Vec<Value>)> = Vec::with_capacity(groups.len());
        for (gid, acc) in &groups {
            let f = finals(acc);
            let lookup = |name: &str| agg_lookup(name, &f);
            if let Some(h) = &plan.having {
                if !eval_predicate(h, &lookup)? {
                    continue;
                }
            }
            let ord = plan
                .order
                .iter()
                .map(|(e, _)| if is_key0(e) { Ok(Value::Null) } else { eval(e, &lookup) })
                .collect::<Result<Vec<_>>>()?;
            rows.push((*gid, f, ord));
        }
        rows.sort_by(|a, b| {
            for (i, (e, desc)) in plan.order.iter().enumerate() {
                let o = if is_key0(e) { a.0.cmp(&b.0) } else { a.2[i].cmp(&b.2[i]) };
                let o = if *desc { o.reverse() } else { o };
                if o != Ordering::Equal {
                    return o;
                }
            }
            a.0.cmp(&b.0)
        });
        if let Some(l) = plan.limit {
            rows.truncate(l as usize);
        }
        let kinds = self.key_kinds(plan, shard)?;
        let mut out = Vec::with_capacity(rows.len());
        for (gid, f, _) in rows {
            let keys = decode_key(plan, group_col.as_deref(), &kinds, gid)?;
            out.push(project(plan, &keys, &f)?);
        }
        Ok((out, stats))
    }

    /// Aggregates one shard by the group field's global-id.
    fn shard_groups(
        &self,
        plan: &Plan,
        shard: &Arc<Shard>,
        restriction: Option<&Restriction>,
    ) -> Result<(Vec<(u32, GroupAcc)>, Option<Arc<Column>>, QueryStats)> {
        let before = shard.virtuals().evaluations();
        let bound = restriction.map(|r| BoundRestriction::bind(r, shard)).transpose()?;
        let group_expr = group_expr(plan);
        let group_col = group_expr
            .as_ref()
            .map(|e| virtual_field::resolve(shard, e))
            .transpose()?;
        let measures: Vec<MeasureSrc> = plan
            .aggs
            .iter()
            .map(|a| match (&a.func, &a.arg) {
                (AggFunc::CountStar, _) | (_, None) => Ok(MeasureSrc::None),
                (_, Some(Expr::Literal(v))) => Ok(MeasureSrc::Const(v.clone())),
                (_, Some(e)) => Ok(MeasureSrc::Column(virtual_field::resolve(shard, e)?)),
            })
            .collect::<Result<_>>()?;
        let funcs: Vec<AggFunc> = plan.aggs.iter().map(|a| a.func).collect();
        let fragment = format!(
            "{}|{}|m{}s{}",
            group_expr.as_ref().map(|e| e.canonical()).unwrap_or_default(),
            plan.aggs.iter().map(|a| a.canonical()).collect::<Vec<_>>().join(","),
            self.opts.kmv_m,
            self.opts.kmv_seed
        );
        let table = plan.table.clone();
        let params = ChunkParams {
            kmv_m: self.opts.kmv_m,
            kmv_seed: self.opts.kmv_seed,
        };
        let chunk_rows = shard.chunk_rows();

        let outcomes = parallel::map_range(shard.num_chunks(), self.opts.parallel, |c| -> Result<Outcome> {
            let status = bound.as_ref().map_or(Status::Full, |b| b.classify(c));
            let rows = chunk_rows[c] as usize;
            let run = |mask| -> Result<ChunkPartial> {
                self.aggregate(
                    &table,
                    shard,
                    c,
                    rows,
                    group_col.as_deref(),
                    &funcs,
                    &measures,
                    mask,
                    &params,
                )
            };
            match status {
                Status::Skip => Ok(Outcome::Skipped),
                Status::Full => {
                    let cache = self.results.as_ref().filter(|_| self.opts.use_result_cache);
                    let Some(cache) = cache else {
                        return Ok(Outcome::Scanned(Arc::new(run(None)?)));
                    };
                    let key = ResultKey {
                        table: table.clone(),
                        shard: shard.id,
                        field: fragment.clone(),
                        chunk: c as u32,
                    };
                    if let Some(p) = cache.get(&key)? {
                        return Ok(Outcome::Cached(p));
                    }
                    let p = run(None)?;
                    cache.insert(key, p.clone());
                    Ok(Outcome::Scanned(Arc::new(p)))
                }
                Status::Partial => {
                    let mask = bound.as_ref().expect("partial implies a restriction").mask(c, rows)?;
                    if mask.count() == 0 {
                        return Ok(Outcome::Scanned(Arc::new(ChunkPartial { groups: vec![] })));
                    }
                    Ok(Outcome::Scanned(Arc::new(run(Some(&mask))?)))
                }
            }
        });

        let mut stats = QueryStats {
            shards: 1,
            ..Default::default()
        };
        let mut groups: HashMap<u32, GroupAcc> = HashMap::new();
        for (c, o) in outcomes.into_iter().enumerate() {
            let rows = chunk_rows[c] as u64;
            stats.chunks_total += 1;
            stats.rows_total += rows;
            let p = match o? {
                Outcome::Skipped => {
                    stats.chunks_skipped += 1;
                    stats.rows_skipped += rows;
                    continue;
                }
                Outcome::Cached(p) => {
                    stats.chunks_cached += 1;
                    stats.rows_cached += rows;
                    p
                }
                Outcome::Scanned(p) => {
                    stats.chunks_scanned += 1;
                    stats.rows_scanned += rows;
                    p
                }
            };
            for (gid, acc) in &p.groups {
                match groups.get_mut(gid) {
                    Some(g) => g.merge(acc)?,
                    None => {
                        groups.insert(*gid, acc.clone());
                    }
                }
            }
        }
        stats.virtual_fields_materialized = shard.virtuals().evaluations() - before;
        let mut groups: Vec<(u32, GroupAcc)> = groups.into_iter().collect();
        groups.sort_unstable_by_key(|g| g.0);
        Ok((groups, group_col, stats))
    }

    #[allow(clippy::too_many_arguments)]
    fn aggregate(
        &self,
        table: &str,
        shard: &Shard,
        chunk: usize,
        rows: usize,
        group: Option<&Column>,
        funcs: &[AggFunc],
        sources: &[MeasureSrc],
        mask: Option<&super::mask::RowMask>,
        params: &ChunkParams,
    ) -> Result<ChunkPartial> {
        let group_elems = group.map(|g| self.elements_of(table, shard, g, chunk)).transpose()?;
        let measure_elems: Vec<Option<Arc<ElementsEncoding>>> = sources
            .iter()
            .map(|s| match s {
                MeasureSrc::Column(col) => self.elements_of(table, shard, col, chunk).map(Some),
                _ => Ok(None),
            })
            .collect::<Result<_>>()?;
        let measures: Vec<Measure> = sources
            .iter()
            .zip(&measure_elems)
            .map(|(s, e)| match s {
                MeasureSrc::None => Ok(Measure::constant(Value::Null)),
                MeasureSrc::Const(v) => Ok(Measure::constant(v.clone())),
                MeasureSrc::Column(col) => Ok(Measure {
                    ids: e.as_deref(),
                    values: col.chunks[chunk]
                        .dict
                        .global_ids()
                        .iter()
                        .map(|&g| col.dict.value_at(g))
                        .collect::<Result<_>>()?,
                }),
            })
            .collect::<Result<_>>()?;
        let g = group
            .zip(group_elems.as_deref())
            .map(|(col, e)| (e, col.chunks[chunk].dict.len()));
        let out = aggregate_chunk(rows, g, funcs, &measures, mask, params);
        // chunk-ids to global-ids
        let groups = match group {
            Some(col) => {
                let d = &col.chunks[chunk].dict;
                out.into_iter().map(|(s, acc)| (d.global_id(s), acc)).collect()
            }
            None => out,
        };
        Ok(ChunkPartial { groups })
    }

    fn elements_of(&self, table: &str, shard: &Shard, col: &Column, chunk: usize) -> Result<Arc<ElementsEncoding>> {
        match &self.elements {
            None => Ok(Arc::new(col.chunks[chunk].elements.clone())),
            Some(cache) => {
                let key = ChunkKey {
                    table: table.to_string(),
                    shard: shard.id,
                    field: col.name.clone(),
                    chunk: chunk as u32,
                };
                cache.get_or_load(&key, || Ok(col.chunks[chunk].elements.clone()))
            }
        }
    }
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new(ExecOptions::default())
    }
}

/// The expression whose global-ids identify a group.
fn group_expr(plan: &Plan) -> Option<Expr> {
    match plan.keys.len() {
        0 => None,
        1 => Some(plan.keys[0].clone()),
        _ => Some(Expr::Func {
            name: "composite".into(),
            args: plan.keys.clone(),
        }),
    }
}

fn decode_key(plan: &Plan, group: Option<&Column>, kinds: &[ValueKind], gid: u32) -> Result<Vec<Value>> {
    let Some(col) = group else {
        return Ok(vec![]);
    };
    let v = col.dict.value_at(gid)?;
    if plan.keys.len() == 1 {
        return Ok(vec![v]);
    }
    let s = v
        .as_str()
        .ok_or_else(|| Error::Internal("composite key is not a string".into()))?;
    tuple_key::decode(s, kinds).ok_or_else(|| Error::Internal("undecodable composite key".into()))
}

fn is_key0(e: &Expr) -> bool {
    matches!(e, Expr::Column(c) if c == "#k0")
}

fn refs_keys(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| {
        if let Expr::Column(c) = x {
            if matches!(parse_ref(c), Some((true, _))) {
                found = true;
            }
        }
    });
    found
}

/// True when ordering can use global-ids in place of key values.
fn late_materializable(plan: &Plan) -> bool {
    let having_ok = plan.having.as_ref().map_or(true, |h| !refs_keys(h));
    let order_ok = plan
        .order
        .iter()
        .all(|(e, _)| !refs_keys(e) || (plan.keys.len() == 1 && is_key0(e)));
    having_ok && order_ok
}

fn agg_lookup(name: &str, finals: &[Value]) -> Result<Value> {
    match parse_ref(name) {
        Some((false, j)) => finals
            .get(j)
            .cloned()
            .ok_or_else(|| Error::Internal(format!("no aggregate {name}"))),
        _ => Err(Error::Internal(format!(
            "unexpected reference `{name}` after aggregation"
        ))),
    }
}

fn ref_lookup(name: &str, keys: &[Value], finals: &[Value]) -> Result<Value> {
    match parse_ref(name) {
        Some((true, i)) => keys.get(i).cloned(),
        Some((false, j)) => finals.get(j).cloned(),
        None => None,
    }
    .ok_or_else(|| Error::Internal(format!("unresolved reference `{name}` after aggregation")))
}

fn project(plan: &Plan, keys: &[Value], finals: &[Value]) -> Result<Vec<Value>> {
    let lookup = |n: &str| ref_lookup(n, keys, finals);
    plan.outputs.iter().map(|(_, e)| eval(e, &lookup)).collect()
}

/// HAVING, ORDER BY (ties by keys ascending), LIMIT and projection over
/// finalized groups. `empty` supplies the aggregates of the single row a
/// query without GROUP BY returns on empty input.
pub fn finalize_rows(
    plan: &Plan,
    mut groups: Vec<(Vec<Value>, Vec<Value>)>,
    empty: Vec<Value>,
) -> Result<Vec<Vec<Value>>> {
    if plan.keys.is_empty() && groups.is_empty() {
        groups.push((vec![], empty));
    }
    let mut rows = Vec::with_capacity(groups.len());
    for (keys, finals) in groups {
        let lookup = |n: &str| ref_lookup(n, &keys, &finals);
        if let Some(h) = &plan.having {
            if !eval_predicate(h, &lookup)? {
                continue;
            }
        }
        let ord = plan
            .order
            .iter()
            .map(|(e, _)| eval(e, &lookup))
            .collect::<Result<Vec<_>>>()?;
        rows.push((ord, keys, finals));
    }
    rows.sort_by(|a, b| {
        for (i, (_, desc)) in plan.order.iter().enumerate() {
            let o = a.0[i].cmp(&b.0[i]);
            let o = if *desc { o.reverse() } else { o };
            if o != Ordering::Equal {
                return o;
            }
        }
        a.1.cmp(&b.1)
    });
    if let Some(l) = plan.limit {
        rows.truncate(l as usize);
    }
    rows.iter().map(|(_, k, f)| project(plan, k, f)).collect()
}

/// Output names with static kinds, falling back to the first non-null value.
pub fn result_columns(plan: &Plan, schema: &Schema, rows: &[Vec<Value>]) -> Vec<ColumnInfo> {
    plan.outputs
        .iter()
        .zip(plan.output_kinds(schema))
        .enumerate()
        .map(|(i, ((name, _), kind))| ColumnInfo {
            name: name.clone(),
            kind: kind.or_else(|| rows.iter().find_map(|r| r[i].kind())),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Field;
    use crate::store::{ShardOptions, Table as Rows};

    fn engine(shards: usize) -> Engine {
        let schema = Schema::new(
            "data",
            vec![
                Field::new("country", ValueKind::Str, false),
                Field::new("n", ValueKind::I64, true),
            ],
        )
        .unwrap();
        let countries = ["de", "fr", "us", "jp"];
        let rows: Vec<Vec<Value>> = (0..400i64)
            .map(|i| {
                let n = if i % 17 == 0 { Value::Null } else { Value::I64(i % 23) };
                vec![Value::from(countries[(i % 4) as usize]), n]
            })
            .collect();
        let t = Rows::from_rows(schema, rows).unwrap();
        let per = 400 / shards;
        let built = (0..shards)
            .map(|s| {
                let part = t.select_rows(&(s * per..(s + 1) * per).collect::<Vec<_>>());
                let b: Vec<_> = (0..per).step_by(25).map(|a| a..(a + 25).min(per)).collect();
                Shard::build(s as u32, &part, &b, ShardOptions::default()).unwrap()
            })
            .collect();
        let e = Engine::default();
        e.add_table("data", built).unwrap();
        e
    }

    #[test]
    fn single_and_multi_shard_agree() {
        let sqls = [
            "SELECT country, COUNT(*), SUM(n), MIN(n), MAX(n), AVG(n), COUNT(n) FROM data GROUP BY country",
            "SELECT country, COUNT(*) AS c FROM data WHERE n > 5 GROUP BY country ORDER BY c DESC LIMIT 2",
            "SELECT country, n, COUNT(*) FROM data WHERE country IN ('de', 'jp') GROUP BY country, n ORDER BY country DESC, n LIMIT 7",
            "SELECT COUNT(*), COUNT(DISTINCT n) FROM data WHERE country = 'xx'",
        ];
        let (one, four) = (engine(1), engine(4));
        for sql in sqls {
            assert_eq!(one.query(sql).unwrap().rows, four.query(sql).unwrap().rows, "{sql}");
        }
    }

    #[test]
    fn empty_restriction_returns_one_row_without_group_by() {
        let r = engine(1)
            .query("SELECT COUNT(*), SUM(n) FROM data WHERE country = 'xx'")
            .unwrap();
        assert_eq!(r.rows, vec![vec![Value::I64(0), Value::Null]]);
        assert_eq!(r.stats.skipped_fraction, 1.0);
    }

    #[test]
    fn second_run_is_served_from_the_result_cache() {
        let e = engine(2);
        let a = e.query("SELECT country, COUNT(*) FROM data GROUP BY country").unwrap();
        let b = e.query("SELECT country, COUNT(*) FROM data GROUP BY country").unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.stats.chunks_cached, 0);
        assert_eq!(b.stats.chunks_cached, b.stats.chunks_total);
        assert_eq!(b.stats.cached_fraction, 1.0);
    }

    #[test]
    fn unknown_table_is_reported() {
        assert!(matches!(
            engine(1).query("SELECT COUNT(*) FROM nope"),
            Err(Error::UnknownTable(_))
        ));
    }
}
