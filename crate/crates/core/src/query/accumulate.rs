//! Per-chunk aggregation over chunk-ids and mergeable group accumulators.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ast::AggFunc;
use super::kmv::Kmv;
use super::mask::RowMask;
use crate::cache::Artifact;
use crate::error::{Error, Result};
use crate::store::ElementsEncoding;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AggAcc {
    Count(u64),
    /// Integer and floating parts are kept apart so integer sums stay exact.
    Sum {
        int: i128,
        float: f64,
        n: u64,
        any_float: bool,
    },
    Min(Option<Value>),
    Max(Option<Value>),
    Distinct(Kmv),
}

impl AggAcc {
    pub fn new(func: AggFunc, kmv_m: usize) -> Self {
        match func {
            AggFunc::CountStar | AggFunc::Count => AggAcc::Count(0),
            AggFunc::Sum | AggFunc::Avg => AggAcc::Sum {
                int: 0,
                float: 0.0,
                n: 0,
                any_float: false,
            },
            AggFunc::Min => AggAcc::Min(None),
            AggFunc::Max => AggAcc::Max(None),
            AggFunc::CountDistinct => AggAcc::Distinct(Kmv::new(kmv_m)),
        }
    }

    pub fn merge(&mut self, other: &AggAcc) -> Result<()> {
        match (self, other) {
            (AggAcc::Count(a), AggAcc::Count(b)) => *a += b,
            (
                AggAcc::Sum {
                    int,
                    float,
                    n,
                    any_float,
                },
                AggAcc::Sum {
                    int: i2,
                    float: f2,
                    n: n2,
                    any_float: a2,
                },
            ) => {
                *int += i2;
                *float += f2;
                *n += n2;
                *any_float |= a2;
            }
            (AggAcc::Min(a), AggAcc::Min(b)) => {
                if let Some(b) = b {
                    if a.as_ref().map_or(true, |a| b < a) {
                        *a = Some(b.clone());
                    }
                }
            }
            (AggAcc::Max(a), AggAcc::Max(b)) => {
                if let Some(b) = b {
                    if a.as_ref().map_or(true, |a| b > a) {
                        *a = Some(b.clone());
                    }
                }
            }
            (AggAcc::Distinct(a), AggAcc::Distinct(b)) => a.merge(b),
            _ => return Err(Error::Internal("merging accumulators of different aggregates".into())),
        }
        Ok(())
    }

    /// Sum as a value: exact integer when possible, NULL when empty.
    pub fn sum_value(int: i128, float: f64, n: u64, any_float: bool) -> Value {
        if n == 0 {
            Value::Null
        } else if any_float {
            Value::F64(int as f64 + float)
        } else {
            i64::try_from(int).map_or(Value::F64(int as f64), Value::I64)
        }
    }

    pub fn finalize(&self, func: AggFunc, bias_corrected: bool) -> Value {
        match (func, self) {
            (_, AggAcc::Count(c)) => Value::I64(*c as i64),
            (AggFunc::Avg, AggAcc::Sum { int, float, n, .. }) => {
                if *n == 0 {
                    Value::Null
                } else {
                    Value::F64((*int as f64 + float) / *n as f64)
                }
            }
            (
                _,
                AggAcc::Sum {
                    int,
                    float,
                    n,
                    any_float,
                },
            ) => Self::sum_value(*int, *float, *n, *any_float),
            (_, AggAcc::Min(v)) | (_, AggAcc::Max(v)) => v.clone().unwrap_or(Value::Null),
            (_, AggAcc::Distinct(k)) => Value::I64(k.estimate(bias_corrected).round() as i64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAcc {
    pub rows: u64,
    pub aggs: Vec<AggAcc>,
}

impl GroupAcc {
    pub fn new(funcs: &[AggFunc], kmv_m: usize) -> Self {
        GroupAcc {
            rows: 0,
            aggs: funcs.iter().map(|&f| AggAcc::new(f, kmv_m)).collect(),
        }
    }

    pub fn merge(&mut self, other: &GroupAcc) -> Result<()> {
        if self.aggs.len() != other.aggs.len() {
            return Err(Error::Internal("merging groups of different shapes".into()));
        }
        self.rows += other.rows;
        for (a, b) in self.aggs.iter_mut().zip(&other.aggs) {
            a.merge(b)?;
        }
        Ok(())
    }
}

/// Aggregation result of one chunk, keyed by the group field's global-id
/// (0 when there is no group field).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkPartial {
    pub groups: Vec<(u32, GroupAcc)>,
}

impl Artifact for ChunkPartial {
    fn weight(&self) -> usize {
        bincode::serialized_size(self).map_or(usize::MAX, |n| n as usize)
    }

    fn encode(&self) -> Vec<u8> {
        bincode::serialize(self).expect("in-memory serialization")
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        bincode::deserialize(bytes).map_err(|e| Error::Internal(format!("cached chunk result: {e}")))
    }
}

/// One aggregate's input within a chunk: chunk-ids per row (or a constant)
/// and the decoded value of each chunk-id.
#[derive(Debug)]
pub struct Measure<'a> {
    /// `None` for constants: every row has chunk-id 0.
    pub ids: Option<&'a ElementsEncoding>,
    /// Decoded chunk-dictionary, ascending.
    pub values: Vec<Value>,
}

impl Measure<'_> {
    pub fn constant(v: Value) -> Measure<'static> {
        Measure {
            ids: None,
            values: vec![v],
        }
    }

    #[inline]
    fn id(&self, row: usize) -> usize {
        self.ids.map_or(0, |e| e.get(row)) as usize
    }
}

enum State {
    Count {
        star: bool,
        n: Vec<u64>,
    },
    Sum(Vec<(i128, f64, u64, bool)>),
    /// Best chunk-id per slot; chunk-ids are ordered like their values.
    Best {
        max: bool,
        best: Vec<Option<u32>>,
    },
    Distinct(HashSet<(u32, u32)>),
}

pub struct ChunkParams {
    pub kmv_m: usize,
    pub kmv_seed: u64,
}

/// Aggregates one chunk. `group` holds the group field's elements and its
/// chunk-dictionary size; results are returned per chunk-id of that field.
pub fn aggregate_chunk(
    rows: usize,
    group: Option<(&ElementsEncoding, usize)>,
    funcs: &[AggFunc],
    measures: &[Measure],
    mask: Option<&RowMask>,
    params: &ChunkParams,
) -> Vec<(u32, GroupAcc)> {
    let slots = group.map_or(1, |(_, n)| n.max(1));
    let mut counts = vec![0u64; slots];

    // the counts-array inner loop
    if mask.is_none() && funcs.iter().all(|f| *f == AggFunc::CountStar) {
        match group {
            Some((e, _)) => e.for_each(|_, c| counts[c as usize] += 1),
            None => counts[0] = rows as u64,
        }
        return counts
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(s, &n)| {
                let acc = GroupAcc {
                    rows: n,
                    aggs: funcs.iter().map(|_| AggAcc::Count(n)).collect(),
                };
                (s as u32, acc)
            })
            .collect();
    }

    let nulls: Vec<Vec<bool>> = measures
        .iter()
        .map(|m| m.values.iter().map(Value::is_null).collect())
        .collect();
    let mut states: Vec<State> = funcs
        .iter()
        .map(|f| match f {
            AggFunc::CountStar | AggFunc::Count => State::Count {
                star: *f == AggFunc::CountStar,
                n: vec![0; slots],
            },
            AggFunc::Sum | AggFunc::Avg => State::Sum(vec![(0, 0.0, 0, false); slots]),
            AggFunc::Min | AggFunc::Max => State::Best {
                max: *f == AggFunc::Max,
                best: vec![None; slots],
            },
            AggFunc::CountDistinct => State::Distinct(HashSet::new()),
        })
        .collect();

    let mut visit = |r: usize| {
        let s = group.map_or(0, |(e, _)| e.get(r)) as usize;
        counts[s] += 1;
        for (j, st) in states.iter_mut().enumerate() {
            let m = &measures[j];
            match st {
                State::Count { star: true, n } => n[s] += 1,
                State::Count { star: false, n } => {
                    if !nulls[j][m.id(r)] {
                        n[s] += 1
                    }
                }
                State::Sum(acc) => match &m.values[m.id(r)] {
                    Value::I64(x) => {
                        acc[s].0 += *x as i128;
                        acc[s].2 += 1;
                    }
                    Value::F64(x) => {
                        acc[s].1 += x;
                        acc[s].2 += 1;
                        acc[s].3 = true;
                    }
                    _ => {}
                },
                State::Best { max, best } => {
                    let c = m.id(r);
                    if !nulls[j][c] {
                        let c = c as u32;
                        best[s] = Some(match best[s] {
                            None => c,
                            Some(b) if *max => b.max(c),
                            Some(b) => b.min(c),
                        });
                    }
                }
                State::Distinct(seen) => {
                    let c = m.id(r);
                    if !nulls[j][c] {
                        seen.insert((s as u32, c as u32));
                    }
                }
            }
        }
    };
    match mask {
        Some(m) => m.ones_iter().for_each(&mut visit),
        None => (0..rows).for_each(&mut visit),
    }

    let mut distinct: Vec<Vec<Kmv>> = Vec::new();
    for (j, st) in states.iter().enumerate() {
        if let State::Distinct(seen) = st {
            let mut per_slot = vec![Kmv::new(params.kmv_m); slots];
            for &(s, c) in seen {
                per_slot[s as usize].add(&measures[j].values[c as usize], params.kmv_seed);
            }
            distinct.push(per_slot);
        }
    }

    let mut out = Vec::new();
    for (s, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let mut d = 0;
        let aggs = states
            .iter()
            .enumerate()
            .map(|(j, st)| match st {
                State::Count { n, .. } => AggAcc::Count(n[s]),
                State::Sum(acc) => {
                    let (int, float, n, any_float) = acc[s];
                    AggAcc::Sum {
                        int,
                        float,
                        n,
                        any_float,
                    }
                }
                State::Best { max, best } => {
                    let v = best[s].map(|c| measures[j].values[c as usize].clone());
                    if *max {
                        AggAcc::Max(v)
                    } else {
                        AggAcc::Min(v)
                    }
                }
                State::Distinct(_) => {
                    d += 1;
                    AggAcc::Distinct(std::mem::replace(&mut distinct[d - 1][s], Kmv::new(1)))
                }
            })
            .collect();
        out.push((s as u32, GroupAcc { rows: n, aggs }));
    }
    out
}
