//! WHERE clauses as trees of dictionary-checkable operators.
//!
//! [`split_restriction`] pulls AND, OR, NOT, IN, NOT IN, = and != to the top
//! of the tree. Their operands become field expressions (stored columns or
//! virtual fields) compared against literals; anything else stays a
//! residual row predicate. Binding to a shard resolves every leaf to the set
//! of matching global-ids, after which a chunk is classified from its
//! chunk-dictionary alone.

use std::collections::HashMap;
use std::sync::Arc;

use super::ast::{BinOp, Expr, UnaryOp};
use super::functions::{eval_predicate, leaf_matches, LeafOp};
use super::mask::RowMask;
use super::virtual_field;
use crate::error::{Error, Result};
use crate::store::{Column, Shard};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr {
    /// Column name or canonical text of the expression.
    pub key: String,
    pub expr: Expr,
}

impl FieldExpr {
    pub fn is_virtual(&self) -> bool {
        !matches!(self.expr, Expr::Column(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Restriction {
    And(Vec<Restriction>),
    Or(Vec<Restriction>),
    Not(Box<Restriction>),
    Leaf {
        op: LeafOp,
        field: FieldExpr,
        values: Vec<Value>,
    },
    Residual(Expr),
}

fn is_special(e: &Expr) -> bool {
    matches!(
        e,
        Expr::Binary {
            op: BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Neq,
            ..
        } | Expr::Unary { op: UnaryOp::Not, .. }
            | Expr::InList { .. }
    )
}

fn contains_special(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= is_special(x));
    found
}

fn field(e: &Expr) -> Option<FieldExpr> {
    if matches!(e, Expr::Literal(_)) || contains_special(e) || e.contains_aggregate() {
        return None;
    }
    Some(FieldExpr {
        key: match e {
            Expr::Column(c) => c.clone(),
            other => other.canonical(),
        },
        expr: e.clone(),
    })
}

fn literal(e: &Expr) -> Option<Value> {
    match e {
        Expr::Literal(v) => Some(v.clone()),
        _ => None,
    }
}

pub fn split_restriction(e: &Expr) -> Restriction {
    match e {
        Expr::Binary {
            op: op @ (BinOp::And | BinOp::Or),
            ..
        } => {
            let mut parts = Vec::new();
            flatten(*op, e, &mut parts);
            let kids = parts.into_iter().map(split_restriction).collect();
            if *op == BinOp::And {
                Restriction::And(kids)
            } else {
                Restriction::Or(kids)
            }
        }
        Expr::Unary { op: UnaryOp::Not, expr } => Restriction::Not(Box::new(split_restriction(expr))),
        Expr::Binary {
            op: op @ (BinOp::Eq | BinOp::Neq),
            left,
            right,
        } => {
            // literals are normalized to the right
            let pair = match (literal(right), literal(left)) {
                (Some(v), _) => field(left).map(|f| (f, v)),
                (None, Some(v)) => field(right).map(|f| (f, v)),
                (None, None) => None,
            };
            match pair {
                Some((field, v)) => Restriction::Leaf {
                    op: if *op == BinOp::Eq { LeafOp::Eq } else { LeafOp::Neq },
                    field,
                    values: vec![v],
                },
                None => Restriction::Residual(e.clone()),
            }
        }
        Expr::InList { expr, list, negated } => {
            let values: Option<Vec<Value>> = list.iter().map(literal).collect();
            match (field(expr), values) {
                (Some(field), Some(values)) if !values.is_empty() => Restriction::Leaf {
                    op: if *negated { LeafOp::NotIn } else { LeafOp::In },
                    field,
                    values,
                },
                _ => Restriction::Residual(e.clone()),
            }
        }
        other => Restriction::Residual(other.clone()),
    }
}

fn flatten<'a>(op: BinOp, e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Binary { op: o, left, right } if *o == op => {
            flatten(op, left, out);
            flatten(op, right, out);
        }
        other => out.push(other),
    }
}

impl Restriction {
    /// Field expressions that must be materialized as virtual fields.
    pub fn virtual_fields(&self) -> Vec<&FieldExpr> {
        let mut out = Vec::new();
        self.visit(&mut |r| {
            if let Restriction::Leaf { field, .. } = r {
                if field.is_virtual() && !out.iter().any(|f: &&FieldExpr| f.key == field.key) {
                    out.push(field);
                }
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Restriction)) {
        f(self);
        match self {
            Restriction::And(k) | Restriction::Or(k) => k.iter().for_each(|c| c.visit(f)),
            Restriction::Not(c) => c.visit(f),
            _ => {}
        }
    }
}

/// Three-valued chunk status derived from dictionaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Skip,
    Full,
    Partial,
}

/// Global-ids satisfying a leaf: `ids` or, when `complement`, every id not
/// in `ids`.
#[derive(Debug, Clone)]
struct LeafIds {
    ids: Vec<u32>,
    complement: bool,
}

impl LeafIds {
    #[inline]
    fn matches(&self, g: u32) -> bool {
        self.ids.binary_search(&g).is_ok() != self.complement
    }
}

#[derive(Debug)]
enum Node {
    And(Vec<Node>),
    Or(Vec<Node>),
    Not(Box<Node>),
    Leaf {
        column: Arc<Column>,
        ids: LeafIds,
    },
    Residual {
        expr: Expr,
        columns: Vec<(String, Arc<Column>)>,
    },
}

/// A restriction resolved against one shard.
#[derive(Debug)]
pub struct BoundRestriction {
    root: Node,
}

/// Matching global-ids of a leaf over a column's dictionary.
fn resolve_leaf(column: &Column, op: LeafOp, values: &[Value]) -> Result<LeafIds> {
    let dict = &column.dict;
    let kind = dict.kind();
    let coerced: Option<Vec<Value>> = values.iter().map(|v| v.coerce_to(kind)).collect();
    if let Some(lits) = coerced {
        // same kind on both sides: equality is dictionary lookup
        let mut ids: Vec<u32> = lits
            .iter()
            .filter(|v| !v.is_null())
            .filter_map(|v| dict.lookup_id(v))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        return Ok(match op {
            LeafOp::Eq | LeafOp::In => LeafIds { ids, complement: false },
            LeafOp::Neq if lits[0].is_null() => LeafIds {
                ids: vec![],
                complement: false,
            },
            LeafOp::Neq | LeafOp::NotIn => {
                if let Some(n) = dict.null_id() {
                    ids.push(n);
                    ids.sort_unstable();
                }
                LeafIds { ids, complement: true }
            }
        });
    }
    let ids = dict
        .values()?
        .iter()
        .enumerate()
        .filter(|(_, x)| leaf_matches(op, x, values))
        .map(|(g, _)| g as u32)
        .collect();
    Ok(LeafIds { ids, complement: false })
}

impl BoundRestriction {
    /// Resolves every leaf in `shard`, materializing virtual fields first.
    pub fn bind(r: &Restriction, shard: &Shard) -> Result<Self> {
        Ok(BoundRestriction {
            root: bind_node(r, shard)?,
        })
    }

    pub fn classify(&self, chunk: usize) -> Status {
        classify(&self.root, chunk)
    }

    /// Rows of `chunk` satisfying the restriction.
    pub fn mask(&self, chunk: usize, rows: usize) -> Result<RowMask> {
        mask(&self.root, chunk, rows)
    }
}

fn bind_node(r: &Restriction, shard: &Shard) -> Result<Node> {
    Ok(match r {
        Restriction::And(k) => Node::And(k.iter().map(|c| bind_node(c, shard)).collect::<Result<_>>()?),
        Restriction::Or(k) => Node::Or(k.iter().map(|c| bind_node(c, shard)).collect::<Result<_>>()?),
        Restriction::Not(c) => Node::Not(Box::new(bind_node(c, shard)?)),
        Restriction::Leaf { op, field, values } => {
            let column = virtual_field::resolve(shard, &field.expr)?;
            let ids = resolve_leaf(&column, *op, values)?;
            Node::Leaf { column, ids }
        }
        Restriction::Residual(expr) => {
            let columns = expr
                .columns()
                .into_iter()
                .map(|c| {
                    let col = match shard.schema.index_of(&c) {
                        Some(i) => shard.columns()[i].clone(),
                        None => return Err(Error::UnknownField(c)),
                    };
                    Ok((c, col))
                })
                .collect::<Result<_>>()?;
            Node::Residual {
                expr: expr.clone(),
                columns,
            }
        }
    })
}

fn classify(n: &Node, chunk: usize) -> Status {
    match n {
        Node::And(kids) => {
            let mut all_full = true;
            for k in kids {
                match classify(k, chunk) {
                    Status::Skip => return Status::Skip,
                    Status::Partial => all_full = false,
                    Status::Full => {}
                }
            }
            if all_full {
                Status::Full
            } else {
                Status::Partial
            }
        }
        Node::Or(kids) => {
            let mut all_skip = true;
            for k in kids {
                match classify(k, chunk) {
                    Status::Full => return Status::Full,
                    Status::Partial => all_skip = false,
                    Status::Skip => {}
                }
            }
            if all_skip {
                Status::Skip
            } else {
                Status::Partial
            }
        }
        Node::Not(c) => match classify(c, chunk) {
            Status::Skip => Status::Full,
            Status::Full => Status::Skip,
            Status::Partial => Status::Partial,
        },
        Node::Leaf { column, ids } => {
            let cd = column.chunks[chunk].dict.global_ids();
            if cd.is_empty() {
                return Status::Skip;
            }
            let hits = if !ids.complement && ids.ids.len() < cd.len() {
                ids.ids.iter().filter(|g| cd.binary_search(g).is_ok()).count()
            } else {
                cd.iter().filter(|&&g| ids.matches(g)).count()
            };
            match hits {
                0 => Status::Skip,
                h if h == cd.len() => Status::Full,
                _ => Status::Partial,
            }
        }
        Node::Residual { .. } => Status::Partial,
    }
}

fn mask(n: &Node, chunk: usize, rows: usize) -> Result<RowMask> {
    match classify(n, chunk) {
        Status::Skip => return Ok(RowMask::zeros(rows)),
        Status::Full => return Ok(RowMask::ones(rows)),
        Status::Partial => {}
    }
    Ok(match n {
        Node::And(kids) => {
            let mut m = RowMask::ones(rows);
            for k in kids {
                m.and(&mask(k, chunk, rows)?);
            }
            m
        }
        Node::Or(kids) => {
            let mut m = RowMask::zeros(rows);
            for k in kids {
                m.or(&mask(k, chunk, rows)?);
            }
            m
        }
        Node::Not(c) => {
            let mut m = mask(c, chunk, rows)?;
            m.not();
            m
        }
        Node::Leaf { column, ids } => {
            let ch = &column.chunks[chunk];
            let table: Vec<bool> = ch.dict.global_ids().iter().map(|&g| ids.matches(g)).collect();
            let mut m = RowMask::zeros(rows);
            ch.elements.for_each(|r, c| {
                if table[c as usize] {
                    m.set(r)
                }
            });
            m
        }
        Node::Residual { expr, columns } => {
            // chunk-dictionary values decoded once, then looked up per row
            let decoded: Vec<Vec<Value>> = columns
                .iter()
                .map(|(_, col)| {
                    col.chunks[chunk]
                        .dict
                        .global_ids()
                        .iter()
                        .map(|&g| col.dict.value_at(g))
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            let index: HashMap<&str, usize> = columns.iter().enumerate().map(|(i, (n, _))| (n.as_str(), i)).collect();
            let mut m = RowMask::zeros(rows);
            for r in 0..rows {
                let lookup = |name: &str| -> Result<Value> {
                    let i = *index.get(name).ok_or_else(|| Error::UnknownField(name.to_string()))?;
                    let c = columns[i].1.chunks[chunk].elements.get(r);
                    Ok(decoded[i][c as usize].clone())
                };
                if eval_predicate(expr, &lookup)? {
                    m.set(r);
                }
            }
            m
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parser::parse_expr;
    use crate::schema::{Field, Schema};
    use crate::store::{ShardOptions, Table};
    use crate::value::ValueKind;
    use proptest::prelude::*;

    fn split(s: &str) -> Restriction {
        split_restriction(&parse_expr(s).unwrap())
    }

    #[test]
    fn special_operators_rise_to_the_top() {
        let r = split("abs(x) IN (1, 2) AND length(y) = 3");
        let Restriction::And(kids) = &r else { panic!("{r:?}") };
        assert_eq!(kids.len(), 2);
        assert!(
            matches!(&kids[0], Restriction::Leaf { op: LeafOp::In, field, values } if field.key == "abs(x)" && values.len() == 2)
        );
        assert!(matches!(&kids[1], Restriction::Leaf { op: LeafOp::Eq, field, .. } if field.key == "length(y)"));
        assert_eq!(r.virtual_fields().len(), 2);

        let r = split("a = 5");
        assert!(matches!(&r, Restriction::Leaf { op: LeafOp::Eq, field, .. } if !field.is_virtual()));
        assert!(r.virtual_fields().is_empty());

        let r = split("NOT (a IN (1))");
        assert!(matches!(&r, Restriction::Not(c) if matches!(**c, Restriction::Leaf { op: LeafOp::In, .. })));
        assert!(r.virtual_fields().is_empty());

        assert!(matches!(split("5 != a"), Restriction::Leaf { op: LeafOp::Neq, .. }));
        assert!(matches!(split("latency > 100"), Restriction::Residual(_)));
        assert!(matches!(split("a = b"), Restriction::Residual(_)));
    }

    fn d1() -> Shard {
        let schema = Schema::new(
            "data",
            vec![
                Field::new("country", ValueKind::Str, false),
                Field::new("latency", ValueKind::I64, false),
            ],
        )
        .unwrap();
        let rows = [("de", 10), ("de", 20), ("fr", 15), ("fr", 25), ("us", 30), ("us", 30)]
            .iter()
            .map(|(c, l)| vec![Value::from(*c), Value::I64(*l)])
            .collect();
        let t = Table::from_rows(schema, rows).unwrap();
        Shard::build(0, &t, &[0..2, 2..4, 4..6], ShardOptions::default()).unwrap()
    }

    fn statuses(s: &Shard, sql: &str) -> Vec<Status> {
        let b = BoundRestriction::bind(&split(sql), s).unwrap();
        (0..s.num_chunks()).map(|c| b.classify(c)).collect()
    }

    #[test]
    fn equality_classifies_by_chunk_dictionary() {
        let s = d1();
        use Status::*;
        assert_eq!(statuses(&s, "country = 'fr'"), vec![Skip, Full, Skip]);
        assert_eq!(statuses(&s, "country = 'xx'"), vec![Skip, Skip, Skip]);
        assert_eq!(statuses(&s, "country != 'fr'"), vec![Full, Skip, Full]);
        assert_eq!(statuses(&s, "NOT country IN ('de', 'us')"), vec![Skip, Full, Skip]);
        assert_eq!(
            statuses(&s, "country = 'de' OR latency = 25"),
            vec![Full, Partial, Skip]
        );
        assert_eq!(
            statuses(&s, "country = 'us' AND latency > 1"),
            vec![Skip, Skip, Partial]
        );
        assert_eq!(statuses(&s, "latency = '30'"), vec![Skip, Skip, Full]);
        assert_eq!(statuses(&s, "country = 1"), vec![Skip, Skip, Skip]);
    }

    fn random_shard(seed: u64, rows: usize, chunk: usize) -> (Shard, Table) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let schema = Schema::new(
            "t",
            vec![
                Field::new("a", ValueKind::Str, true),
                Field::new("b", ValueKind::I64, true),
            ],
        )
        .unwrap();
        let data = (0..rows)
            .map(|_| {
                let a = match rng.gen_range(0..5) {
                    0 => Value::Null,
                    i => Value::from(format!("v{i}")),
                };
                let b = if rng.gen_bool(0.1) {
                    Value::Null
                } else {
                    Value::I64(rng.gen_range(0..6))
                };
                vec![a, b]
            })
            .collect();
        let t = Table::from_rows(schema, data).unwrap();
        let bounds: Vec<_> = (0..rows).step_by(chunk).map(|s| s..(s + chunk).min(rows)).collect();
        let shard = Shard::build(0, &t, &bounds, ShardOptions::default()).unwrap();
        (shard, t)
    }

    const PREDICATES: &[&str] = &[
        "a = 'v1'",
        "a != 'v2'",
        "a IN ('v1', 'v3', 'zz')",
        "a NOT IN ('v1', NULL)",
        "NOT a = 'v4'",
        "b = 3 OR a = 'v2'",
        "b != 2 AND NOT (a IN ('v1'))",
        "b > 2 OR b IS NULL",
        "concat(a, b) = 'v13'",
        "b = 2.0",
        "b = '4'",
        "b IN (1, 'x', 2.5)",
        "NOT (b = 1 OR b = 2) AND a IS NOT NULL",
    ];

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn skipping_is_sound_and_masks_are_exact(seed in any::<u64>(), rows in 0usize..60, chunk in 1usize..12) {
            let (s, t) = random_shard(seed, rows, chunk);
            for sql in PREDICATES {
                let e = parse_expr(sql).unwrap();
                let b = BoundRestriction::bind(&split_restriction(&e), &s).unwrap();
                let mut row = 0;
                for c in 0..s.num_chunks() {
                    let n = s.chunk_rows()[c] as usize;
                    let truth: Vec<bool> = (row..row + n)
                        .map(|r| {
                            let lookup = |name: &str| Ok(t.columns[t.schema.index_of(name).unwrap()][r].clone());
                            eval_predicate(&e, &lookup).unwrap()
                        })
                        .collect();
                    match b.classify(c) {
                        Status::Skip => prop_assert!(truth.iter().all(|x| !x), "{sql} chunk {c}"),
                        Status::Full => prop_assert!(truth.iter().all(|x| *x), "{sql} chunk {c}"),
                        Status::Partial => {}
                    }
                    let m = b.mask(c, n).unwrap();
                    for (r, &want) in truth.iter().enumerate() {
                        prop_assert_eq!(m.get(r), want, "{} chunk {} row {}", sql, c, r);
                    }
                    row += n;
                }
            }
        }
    }
}
