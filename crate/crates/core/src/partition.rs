//! Composite range partitioning and lexicographic row reordering.
//!
//! Rows are first sorted by the partition fields. The sorted range is then
//! split heaviest-first: the largest pending chunk is cut in two at the
//! value boundary of its first non-constant partition field that lies
//! closest to the row midpoint, until every chunk fits the threshold or
//! cannot be split without cutting through a value.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{Shard, ShardOptions, Table};

pub const DEFAULT_MAX_CHUNK_ROWS: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub fields: Vec<String>,
    pub max_chunk_rows: usize,
}

impl PartitionSpec {
    pub fn new<S: Into<String>>(fields: impl IntoIterator<Item = S>, max_chunk_rows: usize) -> Self {
        PartitionSpec {
            fields: fields.into_iter().map(Into::into).collect(),
            max_chunk_rows,
        }
    }

    fn validate(&self, table: &Table) -> Result<Vec<usize>> {
        if self.max_chunk_rows == 0 {
            return Err(Error::Invalid("max_chunk_rows must be at least 1".into()));
        }
        self.fields
            .iter()
            .map(|f| table.schema.index_of(f).ok_or_else(|| Error::UnknownField(f.clone())))
            .collect()
    }
}

/// Dense ranks of each row's value, per spec field.
fn dense_ids(table: &Table, cols: &[usize]) -> Vec<Vec<u32>> {
    cols.iter()
        .map(|&c| {
            let values = &table.columns[c];
            let mut distinct: Vec<&crate::value::Value> = values.iter().collect();
            distinct.sort_unstable();
            distinct.dedup();
            values
                .iter()
                .map(|v| distinct.binary_search(&v).expect("value present") as u32)
                .collect()
        })
        .collect()
}

/// Permutation sorting rows by the spec fields, stable on the original index.
pub fn reorder_rows(table: &Table, spec: &PartitionSpec) -> Result<Vec<usize>> {
    let cols = spec.validate(table)?;
    let ids = dense_ids(table, &cols);
    let mut order: Vec<usize> = (0..table.num_rows()).collect();
    order.sort_by(|&a, &b| {
        for f in &ids {
            match f[a].cmp(&f[b]) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(order)
}

/// Splits `[s, e)` on the first spec field that is not constant there.
fn split_point(ids: &[Vec<u32>], s: usize, e: usize) -> Option<usize> {
    // every earlier field is constant in the range, so this field is sorted
    let f = ids.iter().find(|f| f[s] != f[e - 1])?;
    let run = &f[s..e];
    let m = (s + e) / 2;
    let v = f[m];
    let lo = s + run.partition_point(|&x| x < v);
    let hi = s + run.partition_point(|&x| x <= v);
    let dist = |b: usize| (2 * b).abs_diff(s + e);
    Some(match (lo > s, hi < e) {
        (true, true) if dist(lo) < dist(hi) => lo,
        (true, true) => hi,
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => unreachable!("field has at least two values"),
    })
}

/// Chunk boundaries over rows already ordered by [`reorder_rows`].
pub fn partition(table: &Table, spec: &PartitionSpec) -> Result<Vec<Range<usize>>> {
    let cols = spec.validate(table)?;
    let n = table.num_rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let ids = dense_ids(table, &cols);
    let mut pending = BinaryHeap::from([(n, Reverse(0usize))]);
    let mut done = Vec::new();
    while let Some((len, Reverse(s))) = pending.pop() {
        let e = s + len;
        if len <= spec.max_chunk_rows {
            done.push(s..e);
            done.extend(pending.drain().map(|(l, Reverse(s))| s..s + l));
            break;
        }
        match split_point(&ids, s, e) {
            Some(b) => {
                pending.push((b - s, Reverse(s)));
                pending.push((e - b, Reverse(b)));
            }
            None => done.push(s..e),
        }
    }
    done.sort_by_key(|r| r.start);
    Ok(done)
}

/// Reorders, partitions and encodes a table into one shard. Without a spec
/// the rows keep their order and form a single chunk.
pub fn build_shard(id: u32, table: &Table, spec: Option<&PartitionSpec>, opts: ShardOptions) -> Result<Shard> {
    match spec {
        None => Shard::build_unchunked(id, table, opts),
        Some(spec) => {
            let sorted = table.permuted(&reorder_rows(table, spec)?);
            let boundaries = partition(&sorted, spec)?;
            Shard::build(id, &sorted, &boundaries, opts)
        }
    }
}
