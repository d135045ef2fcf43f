//! Recursive-descent parser for the supported SQL subset.
//!
//! ```text
//! query    := SELECT item (, item)* FROM ident [WHERE expr] [GROUP BY expr (, expr)*]
//!             [HAVING expr] [ORDER BY expr [ASC|DESC] (, ...)*] [LIMIT int] [;]
//! item     := expr [[AS] ident]
//! expr     := or
//! or       := and (OR and)*
//! and      := not (AND not)*
//! not      := NOT not | cmp
//! cmp      := add [(=|!=|<>|<|<=|>|>=) add | [NOT] IN (list) | IS [NOT] NULL]
//! add      := mul ((+|-) mul)*
//! mul      := unary ((*|/|%) unary)*
//! unary    := - unary | primary
//! primary  := literal | ident | func ( args ) | agg | ( expr )
//! ```

use super::ast::{AggFunc, BinOp, Expr, OrderItem, Query, SelectItem, UnaryOp};
use super::functions;
use super::lexer::{is_reserved, tokenize, Tok, Token};
use crate::error::{Error, Result};
use crate::value::Value;

pub fn parse(sql: &str) -> Result<Query> {
    let mut p = Parser {
        toks: tokenize(sql)?,
        i: 0,
    };
    let q = p.query()?;
    if p.peek() == &Tok::Semicolon {
        p.i += 1;
    }
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of query"));
    }
    Ok(q)
}

/// Parses a standalone expression, e.g. a restriction typed in isolation.
pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser {
        toks: tokenize(text)?,
        i: 0,
    };
    let e = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.i].pos
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Error {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            Tok::Word(w) | Tok::Quoted(w) => format!("`{w}`"),
            Tok::Str(s) => format!("'{s}'"),
            other => format!("{other:?}"),
        };
        Error::syntax(self.pos(), format!("expected {wanted}, found {found}"))
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn is_kw_at(&self, offset: usize, kw: &str) -> bool {
        matches!(self.toks.get(self.i + offset).map(|t| &t.tok), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Quoted(s) => {
                self.next();
                Ok(s)
            }
            Tok::Word(w) if !is_reserved(&w) => {
                self.next();
                Ok(w)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn query(&mut self) -> Result<Query> {
        self.expect_kw("select")?;
        let mut select = vec![self.select_item()?];
        while self.eat(&Tok::Comma) {
            select.push(self.select_item()?);
        }
        self.expect_kw("from")?;
        let from = self.ident()?;

        let mut filter = None;
        if self.is_kw("where") {
            self.next();
            let at = self.pos();
            let e = self.expr()?;
            if e.contains_aggregate() {
                return Err(Error::syntax(at, "aggregate functions are not allowed in WHERE"));
            }
            filter = Some(e);
        }
        let mut group_by = Vec::new();
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            group_by.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                group_by.push(self.expr()?);
            }
        }
        let having = if self.eat_kw("having") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut order_by = Vec::new();
        if self.eat_kw("order") {
            self.expect_kw("by")?;
            loop {
                let expr = self.expr()?;
                let desc = if self.eat_kw("desc") {
                    true
                } else {
                    self.eat_kw("asc");
                    false
                };
                order_by.push(OrderItem { expr, desc });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_kw("limit") {
            match self.next() {
                Tok::Int(n) if n >= 0 => Some(n as u64),
                _ => {
                    self.i -= 1;
                    return Err(self.unexpected("non-negative integer"));
                }
            }
        } else {
            None
        };
        Ok(Query {
            select,
            from,
            filter,
            group_by,
            having,
            order_by,
            limit,
        })
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        let expr = self.expr()?;
        let alias = if self.eat_kw("as") {
            Some(self.ident()?)
        } else {
            match self.peek() {
                Tok::Quoted(_) => Some(self.ident()?),
                Tok::Word(w) if !is_reserved(w) => Some(self.ident()?),
                _ => None,
            }
        };
        Ok(SelectItem { expr, alias })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.and()?;
        while self.eat_kw("or") {
            e = Expr::binary(BinOp::Or, e, self.and()?);
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut e = self.not()?;
        while self.eat_kw("and") {
            e = Expr::binary(BinOp::And, e, self.not()?);
        }
        Ok(e)
    }

    fn not(&mut self) -> Result<Expr> {
        if self.eat_kw("not") {
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(self.not()?),
            });
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr> {
        let left = self.add()?;
        let op = match self.peek() {
            Tok::Eq => Some(BinOp::Eq),
            Tok::Neq => Some(BinOp::Neq),
            Tok::Lt => Some(BinOp::Lt),
            Tok::Le => Some(BinOp::Le),
            Tok::Gt => Some(BinOp::Gt),
            Tok::Ge => Some(BinOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            return Ok(Expr::binary(op, left, self.add()?));
        }
        if self.is_kw("in") || (self.is_kw("not") && self.is_kw_at(1, "in")) {
            let negated = self.eat_kw("not");
            self.expect_kw("in")?;
            self.expect(Tok::LParen, "`(`")?;
            let mut list = vec![self.expr()?];
            while self.eat(&Tok::Comma) {
                list.push(self.expr()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::InList {
                expr: Box::new(left),
                list,
                negated,
            });
        }
        if self.eat_kw("is") {
            let negated = self.eat_kw("not");
            self.expect_kw("null")?;
            return Ok(Expr::IsNull {
                expr: Box::new(left),
                negated,
            });
        }
        Ok(left)
    }

    fn add(&mut self) -> Result<Expr> {
        let mut e = self.mul()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(e),
            };
            self.next();
            e = Expr::binary(op, e, self.mul()?);
        }
    }

    fn mul(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(e),
            };
            self.next();
            e = Expr::binary(op, e, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary()? {
                Expr::Literal(Value::I64(v)) => Expr::Literal(Value::I64(-v)),
                Expr::Literal(Value::F64(v)) => Expr::Literal(Value::F64(-v)),
                e => Expr::Unary {
                    op: UnaryOp::Neg,
                    expr: Box::new(e),
                },
            });
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let at = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Expr::Literal(Value::I64(v)))
            }
            Tok::Float(v) => {
                self.next();
                Ok(Expr::Literal(Value::F64(v)))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Expr::Literal(Value::Str(s)))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Quoted(s) => {
                self.next();
                Ok(Expr::Column(s))
            }
            Tok::Word(w) if w.eq_ignore_ascii_case("null") => {
                self.next();
                Ok(Expr::Literal(Value::Null))
            }
            Tok::Word(w) if !is_reserved(&w) => {
                self.next();
                if self.peek() != &Tok::LParen {
                    return Ok(Expr::Column(w));
                }
                self.next();
                self.call(&w, at)
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    /// After `name(`.
    fn call(&mut self, name: &str, at: usize) -> Result<Expr> {
        let lower = name.to_ascii_lowercase();
        let agg = match lower.as_str() {
            "count" => Some(AggFunc::Count),
            "sum" => Some(AggFunc::Sum),
            "min" => Some(AggFunc::Min),
            "max" => Some(AggFunc::Max),
            "avg" => Some(AggFunc::Avg),
            _ => None,
        };
        if let Some(mut func) = agg {
            if func == AggFunc::Count && self.eat(&Tok::Star) {
                self.expect(Tok::RParen, "`)`")?;
                return Ok(Expr::agg(AggFunc::CountStar, None));
            }
            if func == AggFunc::Count && self.eat_kw("distinct") {
                func = AggFunc::CountDistinct;
            }
            let arg_at = self.pos();
            let arg = self.expr()?;
            if arg.contains_aggregate() {
                return Err(Error::syntax(arg_at, "aggregate functions cannot be nested"));
            }
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::agg(func, Some(arg)));
        }
        if !functions::is_scalar(&lower) {
            return Err(Error::UnknownFunction(name.to_string()));
        }
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            args.push(self.expr()?);
            while self.eat(&Tok::Comma) {
                args.push(self.expr()?);
            }
            self.expect(Tok::RParen, "`)`")?;
        }
        functions::check_arity(&lower, args.len()).map_err(|m| Error::syntax(at, m))?;
        Ok(Expr::Func { name: lower, args })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = "SELECT search_string, COUNT(*) as c FROM data
        WHERE search_string IN
              (\"la redoute\", \"voyages snfc\")
        GROUP BY search_string ORDER BY c DESC LIMIT 10;";

    #[test]
    fn drill_down_example() {
        let q = parse(EXAMPLE).unwrap();
        assert_eq!(q.from, "data");
        assert_eq!(q.select[1].alias.as_deref(), Some("c"));
        match q.filter.unwrap() {
            Expr::InList { list, negated, .. } => {
                assert!(!negated);
                assert_eq!(list, vec![Expr::lit("la redoute"), Expr::lit("voyages snfc")]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(q.group_by, vec![Expr::col("search_string")]);
        assert_eq!(q.order_by.len(), 1);
        assert!(q.order_by[0].desc);
        assert_eq!(q.limit, Some(10));
    }

    #[test]
    fn benchmark_queries_parse() {
        for sql in [
            "SELECT country, COUNT(*) as c FROM data GROUP BY country ORDER BY c DESC LIMIT 10",
            "SELECT date(timestamp) as date, COUNT(*),\nSUM(latency) FROM data\nGROUP BY date ORDER BY date ASC LIMIT 10;",
            "SELECT table_name, COUNT(*) as c FROM data\nGROUP BY table_name ORDER BY c DESC LIMIT 10;",
            "select a, count(distinct b) from t where not (a = 1 or b != 'x') and c is not null group by a having count(*) > 1",
        ] {
            let q = parse(sql).unwrap();
            // rendering and reparsing is a fixed point
            let again = parse(&q.to_string()).unwrap();
            assert_eq!(again, q, "{sql}");
        }
    }

    #[test]
    fn errors() {
        let e = parse("SELECT COUNT(*) FROM data GROUP BY").unwrap_err();
        assert!(matches!(e, Error::Syntax { position: 34, .. }), "{e}");
        assert!(matches!(
            parse("SELECT frob(a) FROM t GROUP BY a").unwrap_err(),
            Error::UnknownFunction(_)
        ));
        let e = parse("SELECT a FROM t WHERE SUM(a) > 1 GROUP BY a").unwrap_err();
        assert!(e.to_string().contains("WHERE"), "{e}");
        assert!(parse("SELECT a FROM t LIMIT -1").is_err());
        assert!(parse("SELECT a FROM t extra").is_err());
    }

    #[test]
    fn precedence() {
        let e = parse_expr("a = 1 OR b = 2 AND NOT c IN (3)").unwrap();
        assert_eq!(e.to_string(), "a = 1 OR b = 2 AND NOT (c IN (3))");
        let e = parse_expr("1 + 2 * 3 - -x").unwrap();
        assert_eq!(e.to_string(), "1 + 2 * 3 - -x");
    }
}
