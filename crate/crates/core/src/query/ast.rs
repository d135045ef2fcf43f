use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{format_date, format_timestamp, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "=",
            BinOp::Neq => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "AND",
            BinOp::Or => "OR",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::Neq | BinOp::And | BinOp::Or
        )
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Neq | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggFunc {
    CountStar,
    Count,
    CountDistinct,
    Sum,
    Min,
    Max,
    Avg,
}

impl AggFunc {
    pub fn name(self) -> &'static str {
        match self {
            AggFunc::CountStar | AggFunc::Count | AggFunc::CountDistinct => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Avg => "AVG",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Column(String),
    Literal(Value),
    Func {
        name: String,
        args: Vec<Expr>,
    },
    Agg {
        func: AggFunc,
        arg: Option<Box<Expr>>,
    },
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    InList {
        expr: Box<Expr>,
        list: Vec<Expr>,
        negated: bool,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
}

impl Expr {
    pub fn col(name: &str) -> Expr {
        Expr::Column(name.to_string())
    }

    pub fn lit(v: impl Into<Value>) -> Expr {
        Expr::Literal(v.into())
    }

    pub fn binary(op: BinOp, left: Expr, right: Expr) -> Expr {
        Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn agg(func: AggFunc, arg: Option<Expr>) -> Expr {
        Expr::Agg {
            func,
            arg: arg.map(Box::new),
        }
    }

    /// Visits this node and every descendant, pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Column(_) | Expr::Literal(_) => {}
            Expr::Func { args, .. } => args.iter().for_each(|a| a.walk(f)),
            Expr::Agg { arg, .. } => {
                if let Some(a) = arg {
                    a.walk(f)
                }
            }
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } => expr.walk(f),
            Expr::Binary { left, right, .. } => {
                left.walk(f);
                right.walk(f);
            }
            Expr::InList { expr, list, .. } => {
                expr.walk(f);
                list.iter().for_each(|a| a.walk(f));
            }
        }
    }

    pub fn contains_aggregate(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= matches!(e, Expr::Agg { .. }));
        found
    }

    /// Distinct column names referenced, sorted.
    pub fn columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Column(c) = e {
                out.push(c.clone());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    /// Normalized text used to identify expressions: lowercase function
    /// names, single spaces, commutative operands sorted.
    pub fn canonical(&self) -> String {
        match self {
            Expr::Binary { op, .. } if op.is_commutative() => {
                let mut parts = Vec::new();
                if matches!(op, BinOp::Eq | BinOp::Neq) {
                    if let Expr::Binary { left, right, .. } = self {
                        parts.push(left.as_ref());
                        parts.push(right.as_ref());
                    }
                } else {
                    flatten(*op, self, &mut parts);
                }
                let mut texts: Vec<String> = parts.iter().map(|p| wrap_canonical(p, *op)).collect();
                texts.sort();
                texts.join(&format!(" {} ", op.symbol()))
            }
            Expr::Binary { op, left, right } => {
                format!(
                    "{} {} {}",
                    wrap_canonical(left, *op),
                    op.symbol(),
                    wrap_canonical_right(right, *op)
                )
            }
            Expr::Func { name, args } => {
                let a: Vec<String> = args.iter().map(Expr::canonical).collect();
                format!("{}({})", name.to_ascii_lowercase(), a.join(", "))
            }
            Expr::Agg { func, arg } => agg_text(*func, arg.as_deref(), Expr::canonical),
            Expr::Unary { op: UnaryOp::Not, expr } => format!("NOT {}", wrap_unary(expr, Expr::canonical)),
            Expr::Unary { op: UnaryOp::Neg, expr } => format!("-{}", wrap_unary(expr, Expr::canonical)),
            Expr::InList { expr, list, negated } => {
                let mut items: Vec<String> = list.iter().map(Expr::canonical).collect();
                items.sort();
                items.dedup();
                format!(
                    "{} {}IN ({})",
                    wrap_in(expr, Expr::canonical),
                    if *negated { "NOT " } else { "" },
                    items.join(", ")
                )
            }
            Expr::IsNull { expr, negated } => format!(
                "{} IS {}NULL",
                wrap_in(expr, Expr::canonical),
                if *negated { "NOT " } else { "" }
            ),
            Expr::Column(_) | Expr::Literal(_) => self.to_string(),
        }
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

fn needs_parens(child: &Expr, parent: BinOp, right: bool) -> bool {
    match child {
        Expr::Binary { op, .. } => {
            op.precedence() < parent.precedence()
                || (right && op.precedence() == parent.precedence())
                || (op.is_comparison() && parent.is_comparison())
        }
        Expr::InList { .. } | Expr::IsNull { .. } => parent.precedence() >= 4,
        Expr::Unary { op: UnaryOp::Not, .. } => parent.precedence() > 2,
        _ => false,
    }
}

fn wrap_canonical(e: &Expr, parent: BinOp) -> String {
    if needs_parens(e, parent, false) {
        format!("({})", e.canonical())
    } else {
        e.canonical()
    }
}

fn wrap_canonical_right(e: &Expr, parent: BinOp) -> String {
    if needs_parens(e, parent, true) {
        format!("({})", e.canonical())
    } else {
        e.canonical()
    }
}

fn wrap_unary(e: &Expr, render: fn(&Expr) -> String) -> String {
    match e {
        Expr::Binary { .. } | Expr::InList { .. } | Expr::IsNull { .. } => format!("({})", render(e)),
        _ => render(e),
    }
}

fn wrap_in(e: &Expr, render: fn(&Expr) -> String) -> String {
    match e {
        Expr::Binary { .. } | Expr::InList { .. } | Expr::IsNull { .. } | Expr::Unary { op: UnaryOp::Not, .. } => {
            format!("({})", render(e))
        }
        _ => render(e),
    }
}

fn agg_text(func: AggFunc, arg: Option<&Expr>, render: fn(&Expr) -> String) -> String {
    match (func, arg) {
        (AggFunc::CountStar, _) | (_, None) => "COUNT(*)".to_string(),
        (AggFunc::CountDistinct, Some(a)) => format!("COUNT(DISTINCT {})", render(a)),
        (f, Some(a)) => format!("{}({})", f.name(), render(a)),
    }
}

fn quote_str(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn is_plain_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        && !super::lexer::is_reserved(s)
}

/// Renders an identifier, backquoting it when it is not a plain word.
pub fn quote_ident(s: &str) -> String {
    if is_plain_ident(s) {
        s.to_string()
    } else {
        format!("`{}`", s.replace('`', "``"))
    }
}

pub fn literal_sql(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Str(s) => quote_str(s),
        Value::I64(x) => x.to_string(),
        Value::F64(x) if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 => format!("{x:.1}"),
        Value::F64(x) => format!("{x:?}"),
        Value::Date(d) => quote_str(&format_date(*d)),
        Value::Timestamp(t) => quote_str(&format_timestamp(*t)),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let render = |e: &Expr| e.to_string();
        match self {
            Expr::Column(c) => f.write_str(&quote_ident(c)),
            Expr::Literal(v) => f.write_str(&literal_sql(v)),
            Expr::Func { name, args } => {
                let a: Vec<String> = args.iter().map(|x| x.to_string()).collect();
                write!(f, "{}({})", name.to_ascii_lowercase(), a.join(", "))
            }
            Expr::Agg { func, arg } => f.write_str(&agg_text(*func, arg.as_deref(), render)),
            Expr::Unary { op: UnaryOp::Not, expr } => write!(f, "NOT {}", wrap_unary(expr, render)),
            Expr::Unary { op: UnaryOp::Neg, expr } => write!(f, "-{}", wrap_unary(expr, render)),
            Expr::Binary { op, left, right } => {
                let l = if needs_parens(left, *op, false) {
                    format!("({left})")
                } else {
                    left.to_string()
                };
                let r = if needs_parens(right, *op, true) {
                    format!("({right})")
                } else {
                    right.to_string()
                };
                write!(f, "{l} {} {r}", op.symbol())
            }
            Expr::InList { expr, list, negated } => {
                let items: Vec<String> = list.iter().map(|x| x.to_string()).collect();
                write!(
                    f,
                    "{} {}IN ({})",
                    wrap_in(expr, render),
                    if *negated { "NOT " } else { "" },
                    items.join(", ")
                )
            }
            Expr::IsNull { expr, negated } => {
                write!(
                    f,
                    "{} IS {}NULL",
                    wrap_in(expr, render),
                    if *negated { "NOT " } else { "" }
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectItem {
    pub expr: Expr,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderItem {
    pub expr: Expr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub select: Vec<SelectItem>,
    pub from: String,
    pub filter: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self
            .select
            .iter()
            .map(|s| match &s.alias {
                Some(a) => format!("{} AS {}", s.expr, quote_ident(a)),
                None => s.expr.to_string(),
            })
            .collect();
        write!(f, "SELECT {} FROM {}", items.join(", "), quote_ident(&self.from))?;
        if let Some(w) = &self.filter {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            let g: Vec<String> = self.group_by.iter().map(|e| e.to_string()).collect();
            write!(f, " GROUP BY {}", g.join(", "))?;
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        if !self.order_by.is_empty() {
            let o: Vec<String> = self
                .order_by
                .iter()
                .map(|o| format!("{} {}", o.expr, if o.desc { "DESC" } else { "ASC" }))
                .collect();
            write!(f, " ORDER BY {}", o.join(", "))?;
        }
        if let Some(l) = self.limit {
            write!(f, " LIMIT {l}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sorts_commutative_operands() {
        let a = Expr::binary(BinOp::Add, Expr::col("b"), Expr::col("a"));
        let b = Expr::binary(BinOp::Add, Expr::col("a"), Expr::col("b"));
        assert_eq!(a.canonical(), b.canonical());
        let c = Expr::binary(BinOp::Sub, Expr::col("b"), Expr::col("a"));
        let d = Expr::binary(BinOp::Sub, Expr::col("a"), Expr::col("b"));
        assert_ne!(c.canonical(), d.canonical());
        let f = Expr::Func {
            name: "DATE".into(),
            args: vec![Expr::col("timestamp")],
        };
        assert_eq!(f.canonical(), "date(timestamp)");
    }

    #[test]
    fn display_parenthesizes_by_precedence() {
        let e = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::col("a"), Expr::lit(1i64)),
            Expr::col("c"),
        );
        assert_eq!(e.to_string(), "(a + 1) * c");
        let e = Expr::binary(
            BinOp::Sub,
            Expr::col("a"),
            Expr::binary(BinOp::Sub, Expr::col("b"), Expr::col("c")),
        );
        assert_eq!(e.to_string(), "a - (b - c)");
        assert_eq!(Expr::lit("it's").to_string(), "'it''s'");
        assert_eq!(Expr::agg(AggFunc::CountStar, None).to_string(), "COUNT(*)");
    }
}
