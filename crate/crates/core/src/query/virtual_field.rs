//! Expressions materialized as encoded columns.
//!
//! A virtual field is evaluated once per shard and stored in the shard's
//! registry under the expression's canonical text, with the same chunk
//! layout as the stored columns. Evaluation is per distinct input: per
//! chunk-dictionary entry for single-column expressions, per distinct
//! global-id tuple otherwise.

use std::collections::HashMap;
use std::sync::Arc;

use super::ast::Expr;
use super::functions::eval;
use crate::error::{Error, Result};
use crate::store::{ChunkDictionary, Column, ColumnChunk, ElementsEncoding, GlobalDictionary, Shard};
use crate::value::{Value, ValueKind};

/// The column for `expr` in `shard`: a stored column for a bare reference,
/// otherwise the (possibly freshly materialized) virtual field.
pub fn resolve(shard: &Shard, expr: &Expr) -> Result<Arc<Column>> {
    if let Expr::Column(name) = expr {
        if shard.schema.index_of(name).is_none() {
            return Err(Error::UnknownField(name.clone()));
        }
        return shard.column(name).ok_or_else(|| Error::UnknownField(name.clone()));
    }
    let key = expr.canonical();
    shard.virtuals().get_or_materialize(&key, || build(shard, expr, &key))
}

fn build(shard: &Shard, expr: &Expr, name: &str) -> Result<Column> {
    let names = expr.columns();
    let inputs: Vec<Arc<Column>> = names
        .iter()
        .map(|n| match shard.schema.index_of(n) {
            Some(i) => Ok(shard.columns()[i].clone()),
            None => Err(Error::UnknownField(n.clone())),
        })
        .collect::<Result<_>>()?;
    let n_chunks = shard.num_chunks();

    // distinct output values and, per chunk, each row's index into them
    let mut outs: Vec<Value> = Vec::new();
    let mut out_ids: HashMap<Value, u32> = HashMap::new();
    let mut intern = |v: Value| -> u32 {
        if let Some(&i) = out_ids.get(&v) {
            return i;
        }
        let i = outs.len() as u32;
        out_ids.insert(v.clone(), i);
        outs.push(v);
        i
    };
    let mut rows: Vec<Vec<u32>> = Vec::with_capacity(n_chunks);

    if inputs.len() == 1 {
        let col = &inputs[0];
        let mut by_gid: HashMap<u32, u32> = HashMap::new();
        for chunk in &col.chunks {
            let mut table = Vec::with_capacity(chunk.dict.len());
            for &g in chunk.dict.global_ids() {
                let o = match by_gid.get(&g) {
                    Some(&o) => o,
                    None => {
                        let x = col.dict.value_at(g)?;
                        let v = eval(expr, &|_| Ok(x.clone()))?;
                        let o = intern(v);
                        by_gid.insert(g, o);
                        o
                    }
                };
                table.push(o);
            }
            let mut r = Vec::with_capacity(chunk.rows());
            chunk.elements.for_each(|_, c| r.push(table[c as usize]));
            rows.push(r);
        }
    } else {
        let mut by_tuple: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut decoded: Vec<HashMap<u32, Value>> = vec![HashMap::new(); inputs.len()];
        for (c, &n) in shard.chunk_rows().iter().enumerate() {
            let mut r = Vec::with_capacity(n as usize);
            let mut key = vec![0u32; inputs.len()];
            for row in 0..n as usize {
                for (k, col) in inputs.iter().enumerate() {
                    key[k] = col.chunks[c].global_id(row);
                }
                let o = match by_tuple.get(&key) {
                    Some(&o) => o,
                    None => {
                        let mut vals = Vec::with_capacity(inputs.len());
                        for (k, col) in inputs.iter().enumerate() {
                            let v = match decoded[k].get(&key[k]) {
                                Some(v) => v.clone(),
                                None => {
                                    let v = col.dict.value_at(key[k])?;
                                    decoded[k].insert(key[k], v.clone());
                                    v
                                }
                            };
                            vals.push(v);
                        }
                        let lookup = |n: &str| {
                            let i = names
                                .binary_search_by(|x| x.as_str().cmp(n))
                                .map_err(|_| Error::UnknownField(n.into()))?;
                            Ok(vals[i].clone())
                        };
                        let o = intern(eval(expr, &lookup)?);
                        by_tuple.insert(key.clone(), o);
                        o
                    }
                };
                r.push(o);
            }
            rows.push(r);
        }
    }

    let mut kind = None;
    for v in &outs {
        match (kind, v.kind()) {
            (_, None) => {}
            (None, k) => kind = k,
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Invalid(format!(
                    "expression `{expr}` yields both {a} and {b} values"
                )))
            }
            _ => {}
        }
    }
    let kind = kind.unwrap_or(ValueKind::Str);

    // ranks of the distinct outputs in value order become global-ids
    let mut order: Vec<u32> = (0..outs.len() as u32).collect();
    order.sort_by(|&a, &b| outs[a as usize].cmp(&outs[b as usize]));
    let mut gid_of = vec![0u32; outs.len()];
    for (g, &o) in order.iter().enumerate() {
        gid_of[o as usize] = g as u32;
    }
    let sorted: Vec<Value> = order.iter().map(|&o| outs[o as usize].clone()).collect();
    let dict = GlobalDictionary::from_sorted(kind, sorted)?;

    let mut slot = vec![u32::MAX; gid_of.len()];
    let mut chunks = Vec::with_capacity(n_chunks);
    for r in rows {
        let mut present: Vec<u32> = r.iter().map(|&o| gid_of[o as usize]).collect();
        present.sort_unstable();
        present.dedup();
        for (c, &g) in present.iter().enumerate() {
            slot[g as usize] = c as u32;
        }
        let local: Vec<u32> = r.iter().map(|&o| slot[gid_of[o as usize] as usize]).collect();
        chunks.push(ColumnChunk {
            elements: ElementsEncoding::encode(&local, present.len()),
            dict: ChunkDictionary::new(present)?,
        });
    }
    Column::from_parts(name.to_string(), kind, dict, chunks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parser::parse_expr;
    use crate::schema::{Field, Schema};
    use crate::store::{ShardOptions, Table};

    fn shard() -> Shard {
        let schema = Schema::new(
            "t",
            vec![
                Field::new("ts", ValueKind::Timestamp, false),
                Field::new("a", ValueKind::Str, true),
                Field::new("n", ValueKind::I64, false),
            ],
        )
        .unwrap();
        let day = 86_400;
        let base = 1_330_387_200; // 2012-02-28
        let rows = (0..9)
            .map(|i| {
                vec![
                    Value::Timestamp(base + (i / 3) * day + i * 60),
                    if i == 4 {
                        Value::Null
                    } else {
                        Value::from(["x", "y"][i as usize % 2])
                    },
                    Value::I64(i),
                ]
            })
            .collect();
        let t = Table::from_rows(schema, rows).unwrap();
        Shard::build(0, &t, &[0..3, 3..6, 6..9], ShardOptions::default()).unwrap()
    }

    #[test]
    fn date_field_has_three_values_and_matches_rows() {
        let s = shard();
        let e = parse_expr("date(ts)").unwrap();
        let col = resolve(&s, &e).unwrap();
        assert_eq!(col.dict.len(), 3);
        assert_eq!(col.chunks[1].dict.len(), 1);
        assert_eq!(col.value(1, 0).unwrap(), Value::from("2012-02-29"));
        // second use hits the registry
        resolve(&s, &parse_expr("DATE(ts)").unwrap()).unwrap();
        assert_eq!(s.virtuals().evaluations(), 1);
    }

    #[test]
    fn multi_column_expression_matches_row_evaluation() {
        let s = shard();
        let e = parse_expr("concat(a, n % 2)").unwrap();
        let col = resolve(&s, &e).unwrap();
        let t = s.to_table().unwrap();
        let mut row = 0;
        for c in 0..s.num_chunks() {
            for r in 0..s.chunk_rows()[c] as usize {
                let lookup = |n: &str| Ok(t.columns[t.schema.index_of(n).unwrap()][row].clone());
                assert_eq!(col.value(c, r).unwrap(), eval(&e, &lookup).unwrap());
                row += 1;
            }
        }
        assert!(col.dict.null_id().is_some());
    }

    #[test]
    fn unknown_column_is_rejected() {
        assert!(resolve(&shard(), &parse_expr("date(zz)").unwrap()).is_err());
    }
}
