//! Scalar expression evaluation for the engine: predicates, arithmetic and functions.
//!
//! Predicates are two-valued: a comparison involving NULL, or between values
//! whose kinds cannot be reconciled, is false, and NOT simply negates. In
//! value context a predicate yields `I64` 0 or 1.

use std::cmp::Ordering;

use super::ast::{BinOp, Expr, UnaryOp};
use crate::error::{Error, Result};
use crate::value::{date_of_timestamp, format_date, parse_date, parse_timestamp, tuple_key, Value, ValueKind};

const SCALARS: &[(&str, usize, usize)] = &[
    ("date", 1, 1),
    ("concat", 1, usize::MAX),
    ("lower", 1, 1),
    ("upper", 1, 1),
    ("length", 1, 1),
    ("abs", 1, 1),
    // internal: order-preserving key for multi-field GROUP BY
    ("composite", 1, usize::MAX),
];

pub fn is_scalar(name: &str) -> bool {
    SCALARS.iter().any(|(n, ..)| *n == name)
}

pub fn check_arity(name: &str, n: usize) -> std::result::Result<(), String> {
    let (_, lo, hi) = SCALARS
        .iter()
        .find(|(f, ..)| *f == name)
        .ok_or_else(|| format!("unknown function `{name}`"))?;
    if n < *lo || n > *hi {
        return Err(format!(
            "{name}() takes {} argument(s), got {n}",
            if lo == hi {
                lo.to_string()
            } else {
                format!("at least {lo}")
            }
        ));
    }
    Ok(())
}

/// The special operators with dictionary-level evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafOp {
    Eq,
    Neq,
    In,
    NotIn,
}

/// Whether `x` satisfies `x <op> lits`. Shared by row evaluation and by
/// dictionary scans so the two can never disagree.
pub fn leaf_matches(op: LeafOp, x: &Value, lits: &[Value]) -> bool {
    let eq = |l: &Value| x.compare_loose(l) == Some(Ordering::Equal);
    match op {
        LeafOp::Eq | LeafOp::In => lits.iter().any(eq),
        LeafOp::Neq => matches!(x.compare_loose(&lits[0]), Some(o) if o != Ordering::Equal),
        LeafOp::NotIn => !x.is_null() && !lits.iter().any(eq),
    }
}

fn compare(op: BinOp, a: &Value, b: &Value) -> bool {
    match a.compare_loose(b) {
        None => false,
        Some(o) => match op {
            BinOp::Eq => o == Ordering::Equal,
            BinOp::Neq => o != Ordering::Equal,
            BinOp::Lt => o == Ordering::Less,
            BinOp::Le => o != Ordering::Greater,
            BinOp::Gt => o == Ordering::Greater,
            BinOp::Ge => o != Ordering::Less,
            _ => unreachable!("not a comparison"),
        },
    }
}

fn truthy(v: &Value) -> bool {
    match v {
        Value::I64(x) => *x != 0,
        Value::F64(x) => *x != 0.0,
        _ => false,
    }
}

/// Evaluates a predicate; `row` resolves column names to the row's values.
pub fn eval_predicate(e: &Expr, row: &dyn Fn(&str) -> Result<Value>) -> Result<bool> {
    Ok(match e {
        Expr::Binary {
            op: BinOp::And,
            left,
            right,
        } => eval_predicate(left, row)? && eval_predicate(right, row)?,
        Expr::Binary {
            op: BinOp::Or,
            left,
            right,
        } => eval_predicate(left, row)? || eval_predicate(right, row)?,
        Expr::Unary { op: UnaryOp::Not, expr } => !eval_predicate(expr, row)?,
        Expr::Binary { op, left, right } if op.is_comparison() => compare(*op, &eval(left, row)?, &eval(right, row)?),
        Expr::InList { expr, list, negated } => {
            let x = eval(expr, row)?;
            let lits = list.iter().map(|l| eval(l, row)).collect::<Result<Vec<_>>>()?;
            leaf_matches(if *negated { LeafOp::NotIn } else { LeafOp::In }, &x, &lits)
        }
        Expr::IsNull { expr, negated } => eval(expr, row)?.is_null() != *negated,
        other => truthy(&eval(other, row)?),
    })
}

pub fn eval(e: &Expr, row: &dyn Fn(&str) -> Result<Value>) -> Result<Value> {
    match e {
        Expr::Column(c) => row(c),
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Agg { .. } => Err(Error::Internal(format!("aggregate `{e}` evaluated as a scalar"))),
        Expr::Binary { op, left, right } if matches!(op, BinOp::And | BinOp::Or) || op.is_comparison() => {
            let _ = (left, right);
            Ok(Value::I64(eval_predicate(e, row)? as i64))
        }
        Expr::Unary { op: UnaryOp::Not, .. } | Expr::InList { .. } | Expr::IsNull { .. } => {
            Ok(Value::I64(eval_predicate(e, row)? as i64))
        }
        Expr::Unary { op: UnaryOp::Neg, expr } => match eval(expr, row)? {
            Value::Null => Ok(Value::Null),
            Value::I64(x) => x
                .checked_neg()
                .map(Value::I64)
                .ok_or_else(|| Error::Invalid(format!("integer overflow in `{e}`"))),
            Value::F64(x) => Ok(Value::F64(-x)),
            v => Err(Error::Invalid(format!("cannot negate {}", kind_name(&v)))),
        },
        Expr::Binary { op, left, right } => arith(*op, eval(left, row)?, eval(right, row)?),
        Expr::Func { name, args } => {
            let vals = args.iter().map(|a| eval(a, row)).collect::<Result<Vec<_>>>()?;
            call(name, vals)
        }
    }
}

fn kind_name(v: &Value) -> &'static str {
    v.kind().map_or("null", ValueKind::name)
}

pub fn arith(op: BinOp, a: Value, b: Value) -> Result<Value> {
    if a.is_null() || b.is_null() {
        return Ok(Value::Null);
    }
    let overflow = || Error::Invalid(format!("integer overflow in {a} {} {b}", op.symbol()));
    if let (Value::I64(x), Value::I64(y)) = (&a, &b) {
        let (x, y) = (*x, *y);
        return match op {
            BinOp::Add => x.checked_add(y).map(Value::I64).ok_or_else(overflow),
            BinOp::Sub => x.checked_sub(y).map(Value::I64).ok_or_else(overflow),
            BinOp::Mul => x.checked_mul(y).map(Value::I64).ok_or_else(overflow),
            BinOp::Div if y == 0 => Ok(Value::Null),
            BinOp::Div => Ok(Value::F64(x as f64 / y as f64)),
            BinOp::Mod if y == 0 => Ok(Value::Null),
            BinOp::Mod => Ok(Value::I64(x.checked_rem(y).unwrap_or(0))),
            _ => unreachable!("not arithmetic"),
        };
    }
    let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) else {
        return Err(Error::Invalid(format!(
            "cannot apply `{}` to {} and {}",
            op.symbol(),
            kind_name(&a),
            kind_name(&b)
        )));
    };
    Ok(match op {
        BinOp::Add => Value::F64(x + y),
        BinOp::Sub => Value::F64(x - y),
        BinOp::Mul => Value::F64(x * y),
        BinOp::Div | BinOp::Mod if y == 0.0 => Value::Null,
        BinOp::Div => Value::F64(x / y),
        BinOp::Mod => Value::F64(x % y),
        _ => unreachable!("not arithmetic"),
    })
}

/// `date()` of a timestamp, date, epoch seconds or date-like string.
fn date_of(v: &Value) -> Value {
    let s = match v {
        Value::Timestamp(t) | Value::I64(t) => date_of_timestamp(*t),
        Value::Date(d) => Some(format_date(*d)),
        Value::Str(s) => parse_timestamp(s)
            .and_then(date_of_timestamp)
            .or_else(|| parse_date(s).map(format_date)),
        Value::F64(_) | Value::Null => None,
    };
    s.map_or(Value::Null, Value::Str)
}

pub fn call(name: &str, args: Vec<Value>) -> Result<Value> {
    let text = |v: &Value| v.to_string();
    Ok(match name {
        "composite" => Value::Str(tuple_key::encode(&args)),
        _ if args.iter().any(Value::is_null) => Value::Null,
        "date" => date_of(&args[0]),
        "concat" => Value::Str(args.iter().map(text).collect()),
        "lower" => Value::Str(text(&args[0]).to_lowercase()),
        "upper" => Value::Str(text(&args[0]).to_uppercase()),
        "length" => Value::I64(text(&args[0]).chars().count() as i64),
        "abs" => match &args[0] {
            Value::I64(x) => Value::I64(
                x.checked_abs()
                    .ok_or_else(|| Error::Invalid("integer overflow in abs()".into()))?,
            ),
            Value::F64(x) => Value::F64(x.abs()),
            v => return Err(Error::Invalid(format!("abs() of {}", kind_name(v)))),
        },
        other => return Err(Error::UnknownFunction(other.to_string())),
    })
}

/// Static result kind, when it can be told without data. `None` means
/// unknown or always NULL.
pub fn infer_kind(e: &Expr, column: &dyn Fn(&str) -> Option<ValueKind>) -> Option<ValueKind> {
    use crate::query::ast::AggFunc;
    match e {
        Expr::Column(c) => column(c),
        Expr::Literal(v) => v.kind(),
        Expr::Binary { op, left, right } => {
            if op.is_comparison() || matches!(op, BinOp::And | BinOp::Or) {
                return Some(ValueKind::I64);
            }
            let (l, r) = (infer_kind(left, column), infer_kind(right, column));
            match op {
                BinOp::Div => Some(ValueKind::F64),
                _ if l == Some(ValueKind::I64) && r == Some(ValueKind::I64) => Some(ValueKind::I64),
                _ if l.is_some_and(ValueKind::is_numeric) && r.is_some_and(ValueKind::is_numeric) => {
                    Some(ValueKind::F64)
                }
                _ => None,
            }
        }
        Expr::Unary { op: UnaryOp::Neg, expr } => infer_kind(expr, column),
        Expr::Unary { op: UnaryOp::Not, .. } | Expr::InList { .. } | Expr::IsNull { .. } => Some(ValueKind::I64),
        Expr::Func { name, args } => match name.as_str() {
            "date" | "concat" | "lower" | "upper" | "composite" => Some(ValueKind::Str),
            "length" => Some(ValueKind::I64),
            "abs" => args.first().and_then(|a| infer_kind(a, column)),
            _ => None,
        },
        Expr::Agg { func, arg } => match func {
            AggFunc::CountStar | AggFunc::Count | AggFunc::CountDistinct => Some(ValueKind::I64),
            AggFunc::Avg => Some(ValueKind::F64),
            AggFunc::Sum | AggFunc::Min | AggFunc::Max => arg.as_ref().and_then(|a| infer_kind(a, column)),
        },
    }
}
