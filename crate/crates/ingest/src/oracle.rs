//! Brute-force row-scan evaluator used as ground truth for the engine.
//!
//! It works from the parsed AST and raw row values only: no dictionaries,
//! chunks, plans or accumulators. Every expression is evaluated row by row,
//! and every aggregate is recomputed from the group's rows.
//!
//! Semantics it pins down:
//! - predicates are two-valued; any comparison with NULL is false
//! - GROUP BY names a column first, then a select alias
//! - HAVING and ORDER BY may name select aliases
//! - rows sort by ORDER BY, ties and the default order by group key ascending
//! - without GROUP BY there is exactly one result row, even for no input

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use pdrill_core::query::ast::{AggFunc, BinOp, Expr, Query, UnaryOp};
use pdrill_core::query::parse;
use pdrill_core::{Error, Result, Schema, Table, Value, ValueKind};

/// Raw rows as parsed values, kept verbatim.
#[derive(Debug, Clone)]
pub struct OracleTable {
    pub schema: Schema,
    pub rows: Vec<Vec<Value>>,
}

impl OracleTable {
    pub fn from_table(t: &Table) -> Self {
        OracleTable {
            schema: t.schema.clone(),
            rows: (0..t.num_rows()).map(|r| t.row(r)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

pub fn oracle_sql(table: &OracleTable, sql: &str) -> Result<OracleResult> {
    oracle_query(table, &parse(sql)?)
}

pub fn oracle_query(table: &OracleTable, q: &Query) -> Result<OracleResult> {
    if q.from != table.schema.table_name {
        return Err(Error::UnknownTable(q.from.clone()));
    }
    let schema = &table.schema;
    let exists = |c: &str| schema.fields.iter().any(|f| f.name == c);
    let check_columns = |e: &Expr| -> Result<()> {
        let mut missing = None;
        e.walk(&mut |x| {
            if let Expr::Column(c) = x {
                if !exists(c) && missing.is_none() {
                    missing = Some(c.clone());
                }
            }
        });
        missing.map_or(Ok(()), |c| Err(Error::UnknownField(c)))
    };
    let has_agg = |e: &Expr| {
        let mut found = false;
        e.walk(&mut |x| found |= matches!(x, Expr::Agg { .. }));
        found
    };

    // group keys, deduplicated by canonical text
    let mut keys: Vec<Expr> = Vec::new();
    for g in &q.group_by {
        let key = match g {
            Expr::Column(c) if !exists(c) => q
                .select
                .iter()
                .find(|s| s.alias.as_deref() == Some(c))
                .map(|s| s.expr.clone())
                .ok_or_else(|| Error::UnknownField(c.clone()))?,
            other => other.clone(),
        };
        if has_agg(&key) {
            return Err(Error::Invalid(format!("GROUP BY `{g}` contains an aggregate")));
        }
        check_columns(&key)?;
        if !keys.iter().any(|k| k.canonical() == key.canonical()) {
            keys.push(key);
        }
    }
    if let Some(f) = &q.filter {
        if has_agg(f) {
            return Err(Error::Invalid("aggregate in WHERE".into()));
        }
        check_columns(f)?;
    }
    let key_canon: Vec<String> = keys.iter().map(Expr::canonical).collect();
    let mut any_agg = false;
    for s in &q.select {
        any_agg |= has_agg(&s.expr);
        check_grouped(&s.expr, &key_canon, &check_columns)?;
    }
    if keys.is_empty() && !any_agg {
        return Err(Error::Invalid("query needs GROUP BY or an aggregate".into()));
    }
    let alias_of = |c: &str| q.select.iter().find(|s| s.alias.as_deref() == Some(c)).map(|s| &s.expr);
    let order: Vec<(Expr, bool)> = q
        .order_by
        .iter()
        .map(|o| {
            let e = match &o.expr {
                Expr::Column(c) => alias_of(c).cloned().unwrap_or_else(|| o.expr.clone()),
                e => e.clone(),
            };
            (e, o.desc)
        })
        .collect();
    for (e, _) in &order {
        check_grouped(e, &key_canon, &check_columns)?;
    }
    let having = q.having.as_ref().map(|h| substitute(h, &alias_of));
    if let Some(h) = &having {
        check_grouped(h, &key_canon, &check_columns)?;
    }

    // scan
    let index: HashMap<&str, usize> = schema
        .fields
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i))
        .collect();
    let mut groups: BTreeMap<Vec<Value>, Vec<usize>> = BTreeMap::new();
    if keys.is_empty() {
        groups.insert(Vec::new(), Vec::new());
    }
    for (r, row) in table.rows.iter().enumerate() {
        let hook = |e: &Expr| row_hook(e, row, &index);
        if let Some(f) = &q.filter {
            if !predicate(f, &hook)? {
                continue;
            }
        }
        let key = keys.iter().map(|k| value(k, &hook)).collect::<Result<Vec<_>>>()?;
        groups.entry(key).or_default().push(r);
    }

    // finalize
    let mut out = Vec::new();
    for (key, members) in &groups {
        let rows: Vec<&Vec<Value>> = members.iter().map(|&r| &table.rows[r]).collect();
        let g = Group {
            key_canon: &key_canon,
            key,
            rows: &rows,
            index: &index,
        };
        let hook = |e: &Expr| g.hook(e);
        if let Some(h) = &having {
            if !predicate(h, &hook)? {
                continue;
            }
        }
        let sort = order.iter().map(|(e, _)| value(e, &hook)).collect::<Result<Vec<_>>>()?;
        let projected = q
            .select
            .iter()
            .map(|s| value(&s.expr, &hook))
            .collect::<Result<Vec<_>>>()?;
        out.push((sort, key.clone(), projected));
    }
    out.sort_by(|a, b| {
        for (i, (_, desc)) in order.iter().enumerate() {
            let o = a.0[i].cmp(&b.0[i]);
            let o = if *desc { o.reverse() } else { o };
            if o != Ordering::Equal {
                return o;
            }
        }
        a.1.cmp(&b.1)
    });
    if let Some(l) = q.limit {
        out.truncate(l as usize);
    }
    Ok(OracleResult {
        columns: q
            .select
            .iter()
            .map(|s| s.alias.clone().unwrap_or_else(|| s.expr.to_string()))
            .collect(),
        rows: out.into_iter().map(|(_, _, p)| p).collect(),
    })
}

/// Columns outside aggregates must be group keys.
fn check_grouped(e: &Expr, keys: &[String], check_columns: &dyn Fn(&Expr) -> Result<()>) -> Result<()> {
    if keys.contains(&e.canonical()) {
        return Ok(());
    }
    match e {
        Expr::Column(c) => {
            check_columns(e)?;
            Err(Error::Invalid(format!(
                "column `{c}` is neither grouped nor aggregated"
            )))
        }
        Expr::Literal(_) => Ok(()),
        Expr::Agg { arg, .. } => arg.as_deref().map_or(Ok(()), check_columns),
        Expr::Func { args, .. } => args.iter().try_for_each(|a| check_grouped(a, keys, check_columns)),
        Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } => check_grouped(expr, keys, check_columns),
        Expr::Binary { left, right, .. } => {
            check_grouped(left, keys, check_columns)?;
            check_grouped(right, keys, check_columns)
        }
        Expr::InList { expr, list, .. } => {
            check_grouped(expr, keys, check_columns)?;
            list.iter().try_for_each(|a| check_grouped(a, keys, check_columns))
        }
    }
}

fn substitute<'a>(e: &Expr, alias_of: &dyn Fn(&str) -> Option<&'a Expr>) -> Expr {
    let sub = |x: &Expr| substitute(x, alias_of);
    match e {
        Expr::Column(c) => alias_of(c).cloned().unwrap_or_else(|| e.clone()),
        Expr::Literal(_) | Expr::Agg { .. } => e.clone(),
        Expr::Func { name, args } => Expr::Func {
            name: name.clone(),
            args: args.iter().map(sub).collect(),
        },
        Expr::Unary { op, expr } => Expr::Unary {
            op: *op,
            expr: Box::new(sub(expr)),
        },
        Expr::Binary { op, left, right } => Expr::binary(*op, sub(left), sub(right)),
        Expr::InList { expr, list, negated } => Expr::InList {
            expr: Box::new(sub(expr)),
            list: list.iter().map(sub).collect(),
            negated: *negated,
        },
        Expr::IsNull { expr, negated } => Expr::IsNull {
            expr: Box::new(sub(expr)),
            negated: *negated,
        },
    }
}

/// Resolves leaves of an expression; `None` means evaluate structurally.
type Hook<'a> = dyn Fn(&Expr) -> Option<Result<Value>> + 'a;

fn row_hook(e: &Expr, row: &[Value], index: &HashMap<&str, usize>) -> Option<Result<Value>> {
    match e {
        Expr::Column(c) => Some(
            index
                .get(c.as_str())
                .map(|&i| row[i].clone())
                .ok_or_else(|| Error::UnknownField(c.clone())),
        ),
        Expr::Agg { .. } => Some(Err(Error::Invalid(format!("aggregate `{e}` used per row")))),
        _ => None,
    }
}

struct Group<'a> {
    key_canon: &'a [String],
    key: &'a [Value],
    rows: &'a [&'a Vec<Value>],
    index: &'a HashMap<&'a str, usize>,
}

impl Group<'_> {
    fn hook(&self, e: &Expr) -> Option<Result<Value>> {
        if matches!(e, Expr::Literal(_)) {
            return None;
        }
        if let Some(i) = self.key_canon.iter().position(|k| *k == e.canonical()) {
            return Some(Ok(self.key[i].clone()));
        }
        match e {
            Expr::Agg { func, arg } => Some(self.aggregate(*func, arg.as_deref())),
            Expr::Column(c) => Some(Err(Error::Invalid(format!(
                "column `{c}` is neither grouped nor aggregated"
            )))),
            _ => None,
        }
    }

    fn aggregate(&self, func: AggFunc, arg: Option<&Expr>) -> Result<Value> {
        let arg = match (func, arg) {
            (AggFunc::CountStar, _) | (_, None) => return Ok(Value::I64(self.rows.len() as i64)),
            (_, Some(a)) => a,
        };
        let mut vals = Vec::with_capacity(self.rows.len());
        for row in self.rows {
            let v = value(arg, &|e: &Expr| row_hook(e, row, self.index))?;
            if !v.is_null() {
                vals.push(v);
            }
        }
        Ok(match func {
            AggFunc::CountStar => unreachable!("handled above"),
            AggFunc::Count => Value::I64(vals.len() as i64),
            AggFunc::CountDistinct => Value::I64(vals.iter().collect::<HashSet<_>>().len() as i64),
            AggFunc::Min => vals.into_iter().min().unwrap_or(Value::Null),
            AggFunc::Max => vals.into_iter().max().unwrap_or(Value::Null),
            AggFunc::Sum | AggFunc::Avg => {
                let (mut int, mut float, mut n, mut any_float) = (0i128, 0f64, 0u64, false);
                for v in &vals {
                    match v {
                        Value::I64(x) => {
                            int += *x as i128;
                            n += 1;
                        }
                        Value::F64(x) => {
                            float += x;
                            any_float = true;
                            n += 1;
                        }
                        _ => {}
                    }
                }
                if n == 0 {
                    Value::Null
                } else if func == AggFunc::Avg {
                    Value::F64((int as f64 + float) / n as f64)
                } else if any_float {
                    Value::F64(int as f64 + float)
                } else {
                    i64::try_from(int).map_or(Value::F64(int as f64), Value::I64)
                }
            }
        })
    }
}

fn predicate(e: &Expr, hook: &Hook) -> Result<bool> {
    Ok(match e {
        Expr::Binary {
            op: BinOp::And,
            left,
            right,
        } => predicate(left, hook)? && predicate(right, hook)?,
        Expr::Binary {
            op: BinOp::Or,
            left,
            right,
        } => predicate(left, hook)? || predicate(right, hook)?,
        Expr::Unary { op: UnaryOp::Not, expr } => !predicate(expr, hook)?,
        Expr::Binary { op, left, right } if is_comparison(*op) => {
            let (a, b) = (value(left, hook)?, value(right, hook)?);
            match loose_cmp(&a, &b) {
                None => false,
                Some(o) => match op {
                    BinOp::Eq => o.is_eq(),
                    BinOp::Neq => o.is_ne(),
                    BinOp::Lt => o.is_lt(),
                    BinOp::Le => o.is_le(),
                    BinOp::Gt => o.is_gt(),
                    _ => o.is_ge(),
                },
            }
        }
        Expr::InList { expr, list, negated } => {
            let x = value(expr, hook)?;
            let mut hit = false;
            for item in list {
                hit |= loose_cmp(&x, &value(item, hook)?) == Some(Ordering::Equal);
            }
            if *negated {
                !x.is_null() && !hit
            } else {
                hit
            }
        }
        Expr::IsNull { expr, negated } => value(expr, hook)?.is_null() != *negated,
        other => match value(other, hook)? {
            Value::I64(x) => x != 0,
            Value::F64(x) => x != 0.0,
            _ => false,
        },
    })
}

fn is_comparison(op: BinOp) -> bool {
    matches!(
        op,
        BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
    )
}

fn value(e: &Expr, hook: &Hook) -> Result<Value> {
    if let Some(v) = hook(e) {
        return v;
    }
    match e {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Column(c) => Err(Error::UnknownField(c.clone())),
        Expr::Agg { .. } => Err(Error::Invalid(format!("aggregate `{e}` out of place"))),
        Expr::Binary { op, .. } if is_comparison(*op) || matches!(op, BinOp::And | BinOp::Or) => {
            Ok(Value::I64(predicate(e, hook)? as i64))
        }
        Expr::Unary { op: UnaryOp::Not, .. } | Expr::InList { .. } | Expr::IsNull { .. } => {
            Ok(Value::I64(predicate(e, hook)? as i64))
        }
        Expr::Unary { op: UnaryOp::Neg, expr } => match value(expr, hook)? {
            Value::Null => Ok(Value::Null),
            Value::I64(x) => x.checked_neg().map(Value::I64).ok_or_else(|| overflow(e)),
            Value::F64(x) => Ok(Value::F64(-x)),
            v => Err(Error::Invalid(format!("cannot negate {v}"))),
        },
        Expr::Binary { op, left, right } => arithmetic(*op, value(left, hook)?, value(right, hook)?, e),
        Expr::Func { name, args } => {
            let vals = args.iter().map(|a| value(a, hook)).collect::<Result<Vec<_>>>()?;
            function(name, vals)
        }
    }
}

fn overflow(e: &Expr) -> Error {
    Error::Invalid(format!("integer overflow in `{e}`"))
}

fn arithmetic(op: BinOp, a: Value, b: Value, e: &Expr) -> Result<Value> {
    if a.is_null() || b.is_null() {
        return Ok(Value::Null);
    }
    if let (Value::I64(x), Value::I64(y)) = (&a, &b) {
        let (x, y) = (*x, *y);
        return match op {
            BinOp::Add => x.checked_add(y).map(Value::I64).ok_or_else(|| overflow(e)),
            BinOp::Sub => x.checked_sub(y).map(Value::I64).ok_or_else(|| overflow(e)),
            BinOp::Mul => x.checked_mul(y).map(Value::I64).ok_or_else(|| overflow(e)),
            BinOp::Div | BinOp::Mod if y == 0 => Ok(Value::Null),
            BinOp::Div => Ok(Value::F64(x as f64 / y as f64)),
            // i64::MIN % -1 is 0 mathematically
            BinOp::Mod => Ok(Value::I64(if y == -1 { 0 } else { x % y })),
            _ => Err(Error::Invalid(format!("`{}` is not arithmetic", op.symbol()))),
        };
    }
    let num = |v: &Value| match v {
        Value::I64(x) => Some(*x as f64),
        Value::F64(x) => Some(*x),
        _ => None,
    };
    let (Some(x), Some(y)) = (num(&a), num(&b)) else {
        return Err(Error::Invalid(format!("cannot apply `{}` to {a} and {b}", op.symbol())));
    };
    Ok(match op {
        BinOp::Div | BinOp::Mod if y == 0.0 => Value::Null,
        BinOp::Add => Value::F64(x + y),
        BinOp::Sub => Value::F64(x - y),
        BinOp::Mul => Value::F64(x * y),
        BinOp::Div => Value::F64(x / y),
        BinOp::Mod => Value::F64(x % y),
        _ => return Err(Error::Invalid(format!("`{}` is not arithmetic", op.symbol()))),
    })
}

fn function(name: &str, args: Vec<Value>) -> Result<Value> {
    let arity = match name {
        "date" | "lower" | "upper" | "length" | "abs" => Some(1),
        "concat" => None,
        _ => return Err(Error::UnknownFunction(name.to_string())),
    };
    if args.is_empty() || arity.is_some_and(|n| n != args.len()) {
        return Err(Error::Invalid(format!("{name}() given {} arguments", args.len())));
    }
    if args.iter().any(Value::is_null) {
        return Ok(Value::Null);
    }
    let text = |v: &Value| v.to_string();
    Ok(match name {
        "date" => calendar_date(&args[0]).map_or(Value::Null, Value::Str),
        "concat" => Value::Str(args.iter().map(text).collect()),
        "lower" => Value::Str(text(&args[0]).to_lowercase()),
        "upper" => Value::Str(text(&args[0]).to_uppercase()),
        "length" => Value::I64(text(&args[0]).chars().count() as i64),
        _ => match &args[0] {
            Value::I64(x) => Value::I64(x.checked_abs().ok_or_else(|| Error::Invalid("abs overflow".into()))?),
            Value::F64(x) => Value::F64(x.abs()),
            v => return Err(Error::Invalid(format!("abs() of {v}"))),
        },
    })
}

fn epoch_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch")
}

fn ymd(d: NaiveDate) -> String {
    d.format("%Y-%m-%d").to_string()
}

fn seconds_to_date(s: i64) -> Option<String> {
    DateTime::from_timestamp(s, 0).map(|t| ymd(t.date_naive()))
}

fn text_to_seconds(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc().timestamp())
}

fn text_to_days(s: &str) -> Option<i32> {
    let d = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()?;
    i32::try_from((d - epoch_day()).num_days()).ok()
}

fn calendar_date(v: &Value) -> Option<String> {
    match v {
        Value::Timestamp(s) | Value::I64(s) => seconds_to_date(*s),
        Value::Date(d) => epoch_day()
            .checked_add_signed(chrono::Duration::days(*d as i64))
            .map(ymd),
        Value::Str(s) => text_to_seconds(s)
            .and_then(seconds_to_date)
            .or_else(|| NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok().map(ymd)),
        _ => None,
    }
}

/// Converts `v` to `kind` when it denotes a value of that kind.
fn convert(v: &Value, kind: ValueKind) -> Option<Value> {
    Some(match (v, kind) {
        (Value::I64(x), ValueKind::F64) => Value::F64(*x as f64),
        (Value::F64(x), ValueKind::I64) if x.fract() == 0.0 && *x >= -(2f64.powi(63)) && *x < 2f64.powi(63) => {
            Value::I64(*x as i64)
        }
        (Value::I64(x), ValueKind::Timestamp) => Value::Timestamp(*x),
        (Value::Timestamp(x), ValueKind::I64) => Value::I64(*x),
        (Value::Date(d), ValueKind::Timestamp) => Value::Timestamp(*d as i64 * 86_400),
        (Value::Str(s), ValueKind::Date) => Value::Date(text_to_days(s)?),
        (Value::Str(s), ValueKind::Timestamp) => Value::Timestamp(text_to_seconds(s)?),
        (Value::Str(s), ValueKind::I64) => Value::I64(s.trim().parse().ok()?),
        (Value::Str(s), ValueKind::F64) => Value::F64(s.trim().parse().ok()?),
        _ => return None,
    })
}

/// Comparison for predicates; `None` when NULL or incomparable.
fn loose_cmp(a: &Value, b: &Value) -> Option<Ordering> {
    let (ka, kb) = (a.kind()?, b.kind()?);
    if ka == kb {
        return Some(a.cmp(b));
    }
    match (a, b) {
        (Value::I64(x), Value::F64(y)) => return (*x as f64).partial_cmp(y),
        (Value::F64(x), Value::I64(y)) => return x.partial_cmp(&(*y as f64)),
        _ => {}
    }
    convert(b, ka)
        .map(|b| a.cmp(&b))
        .or_else(|| convert(a, kb).map(|a| a.cmp(b)))
}

/// Whether two result row lists agree: exact, except floats within
/// `rel_tol` relative error.
pub fn rows_match(a: &[Vec<Value>], b: &[Vec<Value>], rel_tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.len() == y.len()
                && x.iter().zip(y).all(|(u, v)| match (u, v) {
                    (Value::F64(p), Value::F64(q)) => {
                        p == q || (p - q).abs() <= rel_tol * p.abs().max(q.abs()) || (p.is_nan() && q.is_nan())
                    }
                    _ => u == v,
                })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pdrill_core::Field;

    fn d1() -> OracleTable {
        let schema = Schema::new(
            "data",
            vec![
                Field::new("country", ValueKind::Str, false),
                Field::new("latency", ValueKind::I64, true),
            ],
        )
        .unwrap();
        let rows = [("de", 10), ("de", 20), ("fr", 15), ("fr", 25), ("us", 30), ("us", 30)]
            .iter()
            .map(|(c, l)| vec![Value::from(*c), Value::I64(*l)])
            .collect();
        OracleTable { schema, rows }
    }

    fn rows(sql: &str) -> Vec<Vec<Value>> {
        oracle_sql(&d1(), sql).unwrap().rows
    }

    fn r(c: &str, n: i64) -> Vec<Value> {
        vec![Value::from(c), Value::I64(n)]
    }

    #[test]
    fn top_countries() {
        let got = rows("SELECT country, COUNT(*) AS c FROM data GROUP BY country ORDER BY c DESC LIMIT 10");
        assert_eq!(got, vec![r("de", 2), r("fr", 2), r("us", 2)]);
        let got = rows("SELECT country, COUNT(*) AS c FROM data GROUP BY country ORDER BY c DESC LIMIT 2");
        assert_eq!(got, vec![r("de", 2), r("fr", 2)]);
    }

    #[test]
    fn sums_by_country() {
        let got = rows("SELECT country, SUM(latency) FROM data GROUP BY country");
        assert_eq!(got, vec![r("de", 30), r("fr", 40), r("us", 60)]);
        let got = rows("SELECT SUM(latency) / COUNT(*), AVG(latency), COUNT(DISTINCT latency) FROM data");
        assert_eq!(
            got,
            vec![vec![Value::F64(130.0 / 6.0), Value::F64(130.0 / 6.0), Value::I64(5)]]
        );
    }

    #[test]
    fn filters_having_and_aliases() {
        let got = rows("SELECT country AS k, MAX(latency) AS m FROM data WHERE latency > 12 GROUP BY k HAVING m >= 25 ORDER BY m DESC");
        assert_eq!(got, vec![r("us", 30), r("fr", 25)]);
        let got = rows(
            "SELECT country, COUNT(*) FROM data WHERE country NOT IN ('de', NULL) AND latency != 30 GROUP BY country",
        );
        assert_eq!(got, vec![r("fr", 2)]);
    }

    #[test]
    fn empty_input() {
        let mut t = d1();
        t.rows.clear();
        assert!(oracle_sql(&t, "SELECT country, COUNT(*) FROM data GROUP BY country")
            .unwrap()
            .rows
            .is_empty());
        let got = oracle_sql(
            &t,
            "SELECT COUNT(*), SUM(latency), MIN(latency), AVG(latency) FROM data",
        )
        .unwrap();
        assert_eq!(
            got.rows,
            vec![vec![Value::I64(0), Value::Null, Value::Null, Value::Null]]
        );
    }

    #[test]
    fn nulls_are_two_valued() {
        let mut t = d1();
        t.rows.push(vec![Value::from("de"), Value::Null]);
        let sql = "SELECT country, COUNT(*), COUNT(latency) FROM data WHERE latency != 10 OR latency IS NULL GROUP BY country LIMIT 1";
        assert_eq!(
            oracle_sql(&t, sql).unwrap().rows,
            vec![vec![Value::from("de"), Value::I64(2), Value::I64(1)]]
        );
        let sql = "SELECT COUNT(*) FROM data WHERE NOT latency = 10";
        assert_eq!(oracle_sql(&t, sql).unwrap().rows, vec![vec![Value::I64(6)]]);
    }

    #[test]
    fn rejects_bad_queries() {
        let t = d1();
        for sql in [
            "SELECT country FROM data",
            "SELECT latency, COUNT(*) FROM data GROUP BY country",
            "SELECT nope, COUNT(*) FROM data GROUP BY nope",
            "SELECT COUNT(*) FROM other",
            "SELECT COUNT(*) FROM data WHERE SUM(latency) > 1",
        ] {
            assert!(oracle_sql(&t, sql).is_err(), "{sql}");
        }
    }

    #[test]
    fn loose_comparison() {
        assert_eq!(loose_cmp(&Value::I64(2), &Value::F64(2.0)), Some(Ordering::Equal));
        assert_eq!(
            loose_cmp(&Value::Date(1), &Value::from("1970-01-02")),
            Some(Ordering::Equal)
        );
        assert_eq!(loose_cmp(&Value::from("x"), &Value::I64(1)), None);
        assert_eq!(loose_cmp(&Value::Null, &Value::Null), None);
    }

    #[test]
    fn tolerant_float_match() {
        let a = vec![vec![Value::F64(1.0)]];
        assert!(rows_match(&a, &[vec![Value::F64(1.0 + 1e-12)]], 1e-9));
        assert!(!rows_match(&a, &[vec![Value::F64(1.001)]], 1e-9));
        assert!(!rows_match(&a, &[vec![Value::I64(1)]], 1e-9));
    }
}
