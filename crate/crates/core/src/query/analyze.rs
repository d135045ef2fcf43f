//! Binding of a parsed query against a schema.
//!
//! The select list, HAVING and ORDER BY are rewritten into post-aggregation
//! expressions over synthetic columns `#k<i>` (group key i) and `#a<j>`
//! (aggregate j), so the same scalar evaluator finalizes every row.

use serde::{Deserialize, Serialize};

use super::ast::{AggFunc, Expr, Query};
use super::functions::infer_kind;
use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::value::ValueKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggCall {
    pub func: AggFunc,
    pub arg: Option<Expr>,
}

impl AggCall {
    pub fn expr(&self) -> Expr {
        Expr::agg(self.func, self.arg.clone())
    }

    pub fn canonical(&self) -> String {
        self.expr().canonical()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub table: String,
    pub keys: Vec<Expr>,
    pub aggs: Vec<AggCall>,
    /// Output name and post-aggregation expression, in select order.
    pub outputs: Vec<(String, Expr)>,
    pub filter: Option<Expr>,
    pub having: Option<Expr>,
    pub order: Vec<(Expr, bool)>,
    pub limit: Option<u64>,
}

pub fn key_ref(i: usize) -> String {
    format!("#k{i}")
}

pub fn agg_ref(j: usize) -> String {
    format!("#a{j}")
}

/// Parses `#k3` / `#a0` back into (is_key, index).
pub fn parse_ref(name: &str) -> Option<(bool, usize)> {
    let rest = name.strip_prefix('#')?;
    let (tag, idx) = rest.split_at(1);
    let i = idx.parse().ok()?;
    match tag {
        "k" => Some((true, i)),
        "a" => Some((false, i)),
        _ => None,
    }
}

impl Plan {
    /// Static kind of the group key expressions.
    pub fn key_kinds(&self, schema: &Schema) -> Vec<Option<ValueKind>> {
        let col = |c: &str| schema.field(c).map(|f| f.kind);
        self.keys.iter().map(|k| infer_kind(k, &col)).collect()
    }

    /// Static kinds of the outputs, `None` where unknown.
    pub fn output_kinds(&self, schema: &Schema) -> Vec<Option<ValueKind>> {
        let keys = self.key_kinds(schema);
        let col = |c: &str| schema.field(c).map(|f| f.kind);
        let aggs: Vec<Option<ValueKind>> = self
            .aggs
            .iter()
            .map(|a| match a.func {
                AggFunc::Sum => match a.arg.as_ref().and_then(|x| infer_kind(x, &col)) {
                    Some(ValueKind::I64) => Some(ValueKind::I64),
                    _ => Some(ValueKind::F64),
                },
                _ => infer_kind(&a.expr(), &col),
            })
            .collect();
        let post = |c: &str| match parse_ref(c) {
            Some((true, i)) => keys[i],
            Some((false, j)) => aggs[j],
            None => None,
        };
        self.outputs.iter().map(|(_, e)| infer_kind(e, &post)).collect()
    }
}

struct Binder<'a> {
    schema: &'a Schema,
    keys: Vec<Expr>,
    key_canon: Vec<String>,
    aggs: Vec<AggCall>,
}

impl Binder<'_> {
    fn check_columns(&self, e: &Expr) -> Result<()> {
        for c in e.columns() {
            if self.schema.index_of(&c).is_none() {
                return Err(Error::UnknownField(c));
            }
        }
        Ok(())
    }

    fn agg_index(&mut self, func: AggFunc, arg: Option<&Expr>) -> Result<usize> {
        let call = AggCall {
            func,
            arg: arg.cloned(),
        };
        if let Some(a) = &call.arg {
            self.check_columns(a)?;
            if matches!(func, AggFunc::Sum | AggFunc::Avg) {
                let col = |c: &str| self.schema.field(c).map(|f| f.kind);
                if let Some(k) = infer_kind(a, &col) {
                    if !k.is_numeric() {
                        return Err(Error::Invalid(format!(
                            "{}() needs a numeric argument but `{a}` is {k}",
                            func.name()
                        )));
                    }
                }
            }
        }
        let canon = call.canonical();
        if let Some(j) = self.aggs.iter().position(|a| a.canonical() == canon) {
            return Ok(j);
        }
        self.aggs.push(call);
        Ok(self.aggs.len() - 1)
    }

    /// Rewrites an expression into post-aggregation form.
    fn post(&mut self, e: &Expr) -> Result<Expr> {
        let canon = e.canonical();
        if let Some(i) = self.key_canon.iter().position(|k| *k == canon) {
            return Ok(Expr::Column(key_ref(i)));
        }
        Ok(match e {
            Expr::Agg { func, arg } => Expr::Column(agg_ref(self.agg_index(*func, arg.as_deref())?)),
            Expr::Column(c) => {
                return Err(if self.schema.index_of(c).is_none() {
                    Error::UnknownField(c.clone())
                } else {
                    Error::Invalid(format!("column `{c}` must appear in GROUP BY or inside an aggregate"))
                })
            }
            Expr::Literal(_) => e.clone(),
            Expr::Func { name, args } => Expr::Func {
                name: name.clone(),
                args: args.iter().map(|a| self.post(a)).collect::<Result<_>>()?,
            },
            Expr::Unary { op, expr } => Expr::Unary {
                op: *op,
                expr: Box::new(self.post(expr)?),
            },
            Expr::Binary { op, left, right } => Expr::binary(*op, self.post(left)?, self.post(right)?),
            Expr::InList { expr, list, negated } => Expr::InList {
                expr: Box::new(self.post(expr)?),
                list: list.iter().map(|a| self.post(a)).collect::<Result<_>>()?,
                negated: *negated,
            },
            Expr::IsNull { expr, negated } => Expr::IsNull {
                expr: Box::new(self.post(expr)?),
                negated: *negated,
            },
        })
    }
}

/// Output name of a select item: its alias, else its SQL text.
pub fn output_name(e: &Expr, alias: Option<&str>) -> String {
    alias.map_or_else(|| e.to_string(), str::to_string)
}

pub fn analyze(q: &Query, schema: &Schema) -> Result<Plan> {
    let mut keys = Vec::new();
    for g in &q.group_by {
        let resolved = match g {
            Expr::Column(c) if schema.index_of(c).is_none() => q
                .select
                .iter()
                .find(|s| s.alias.as_deref() == Some(c.as_str()))
                .map(|s| s.expr.clone())
                .ok_or_else(|| Error::UnknownField(c.clone()))?,
            other => other.clone(),
        };
        if resolved.contains_aggregate() {
            return Err(Error::Invalid(format!("GROUP BY `{g}` contains an aggregate")));
        }
        for c in resolved.columns() {
            if schema.index_of(&c).is_none() {
                return Err(Error::UnknownField(c));
            }
        }
        if !keys.iter().any(|k: &Expr| k.canonical() == resolved.canonical()) {
            keys.push(resolved);
        }
    }
    if let Some(f) = &q.filter {
        if f.contains_aggregate() {
            return Err(Error::Invalid("aggregate functions are not allowed in WHERE".into()));
        }
        for c in f.columns() {
            if schema.index_of(&c).is_none() {
                return Err(Error::UnknownField(c));
            }
        }
    }

    let mut b = Binder {
        schema,
        key_canon: keys.iter().map(Expr::canonical).collect(),
        keys,
        aggs: Vec::new(),
    };
    let mut outputs = Vec::new();
    for item in &q.select {
        let post = b.post(&item.expr)?;
        outputs.push((output_name(&item.expr, item.alias.as_deref()), post));
    }
    if b.aggs.is_empty() && b.keys.is_empty() {
        return Err(Error::Invalid("query needs GROUP BY or an aggregate".into()));
    }

    // ORDER BY and HAVING may name output aliases
    let alias_post = |b: &mut Binder, e: &Expr| -> Result<Expr> {
        if let Expr::Column(c) = e {
            if let Some(i) = q.select.iter().position(|s| s.alias.as_deref() == Some(c.as_str())) {
                return Ok(outputs[i].1.clone());
            }
        }
        b.post(e)
    };
    let mut order = Vec::new();
    for o in &q.order_by {
        let p = alias_post(&mut b, &o.expr).map_err(|e| match e {
            Error::UnknownField(f) => Error::Invalid(format!("ORDER BY refers to unknown alias or field `{f}`")),
            e => e,
        })?;
        order.push((p, o.desc));
    }
    let having = q
        .having
        .as_ref()
        .map(|h| substitute_aliases(h, q).and_then(|h| b.post(&h)))
        .transpose()?;

    Ok(Plan {
        table: q.from.clone(),
        keys: b.keys,
        aggs: b.aggs,
        outputs,
        filter: q.filter.clone(),
        having,
        order,
        limit: q.limit,
    })
}

/// Replaces bare alias references inside HAVING with the aliased expression.
fn substitute_aliases(e: &Expr, q: &Query) -> Result<Expr> {
    Ok(match e {
        Expr::Column(c) => match q.select.iter().find(|s| s.alias.as_deref() == Some(c.as_str())) {
            Some(s) => s.expr.clone(),
            None => e.clone(),
        },
        Expr::Literal(_) | Expr::Agg { .. } => e.clone(),
        Expr::Func { name, args } => Expr::Func {
            name: name.clone(),
            args: args.iter().map(|a| substitute_aliases(a, q)).collect::<Result<_>>()?,
        },
        Expr::Unary { op, expr } => Expr::Unary {
            op: *op,
            expr: Box::new(substitute_aliases(expr, q)?),
        },
        Expr::Binary { op, left, right } => {
            Expr::binary(*op, substitute_aliases(left, q)?, substitute_aliases(right, q)?)
        }
        Expr::InList { expr, list, negated } => Expr::InList {
            expr: Box::new(substitute_aliases(expr, q)?),
            list: list.iter().map(|a| substitute_aliases(a, q)).collect::<Result<_>>()?,
            negated: *negated,
        },
        Expr::IsNull { expr, negated } => Expr::IsNull {
            expr: Box::new(substitute_aliases(expr, q)?),
            negated: *negated,
        },
    })
}
