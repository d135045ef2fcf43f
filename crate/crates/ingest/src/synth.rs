//! Synthetic data: a query-log table for benchmarks and random
//! (table, query) cases for differential testing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pdrill_core::value::format_date;
use pdrill_core::{Field, Schema, Table, Value, ValueKind};

/// Shape of the synthetic query log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogsConfig {
    pub rows: usize,
    pub countries: usize,
    /// Size of the table-name universe rows draw from.
    pub table_names: usize,
    /// Zipf exponent of table-name popularity; 0 draws names uniformly.
    pub table_skew: f64,
    pub teams: usize,
    pub days: u32,
    pub seed: u64,
}

impl Default for LogsConfig {
    fn default() -> Self {
        LogsConfig {
            rows: 1_000_000,
            countries: 25,
            table_names: 150_000,
            table_skew: 1.0,
            teams: 60,
            days: 14,
            seed: 42,
        }
    }
}

const COUNTRY_CODES: [&str; 40] = [
    "us", "de", "jp", "gb", "fr", "br", "in", "ca", "it", "es", "mx", "kr", "nl", "au", "ru", "se", "ch", "pl", "be",
    "tr", "ar", "at", "no", "dk", "fi", "ie", "pt", "cz", "gr", "hu", "il", "nz", "sg", "za", "cl", "co", "ro", "th",
    "ua", "vn",
];

const DATACENTERS: [&str; 8] = ["ams", "atl", "bru", "dls", "hkg", "lpp", "tpe", "yul"];
const WORDS: [&str; 12] = [
    "clicks", "queries", "ads", "users", "sessions", "billing", "crawl", "index", "mail", "maps", "photos", "video",
];

pub fn logs_schema() -> Schema {
    Schema::new(
        "data",
        vec![
            Field::new("timestamp", ValueKind::Timestamp, false),
            Field::new("country", ValueKind::Str, false),
            Field::new("datacenter", ValueKind::Str, false),
            Field::new("table_name", ValueKind::Str, false),
            Field::new("user", ValueKind::Str, false),
            Field::new("status", ValueKind::Str, false),
            Field::new("latency", ValueKind::I64, false),
        ],
    )
    .expect("static schema")
}

/// The `i`-th table name: deep shared path prefixes, grouped by team.
pub fn table_name(i: usize, universe: usize, teams: usize) -> String {
    let team = i * teams / universe.max(1);
    let word = WORDS[(i / 97) % WORDS.len()];
    format!(
        "/cns/{}/home/team{team:03}/logs/{word}/part-{i:06}",
        DATACENTERS[team % DATACENTERS.len()]
    )
}

fn zipf_cdf(n: usize, exponent: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w / total;
            Some(*acc)
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&p| p < u).min(cdf.len() - 1)
}

/// Query-log analog: Zipf-skewed countries, prefix-heavy table names,
/// ascending timestamps, and fields correlated with those two.
pub fn logs_table(cfg: &LogsConfig) -> Table {
    let countries = cfg.countries.clamp(1, COUNTRY_CODES.len());
    let universe = cfg.table_names.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cdf = zipf_cdf(countries, 1.0);
    let name_cdf = zipf_cdf(universe, cfg.table_skew);
    // popularity rank -> name, so popular names spread over all teams
    let mut by_rank: Vec<usize> = (0..universe).collect();
    by_rank.shuffle(&mut rng);
    let home_dc: Vec<usize> = (0..countries).map(|_| rng.gen_range(0..DATACENTERS.len())).collect();
    let start = 1_330_560_000i64; // 2012-03-01
    let span = cfg.days as i64 * 86_400;

    let mut cols: Vec<Vec<Value>> = (0..7).map(|_| Vec::with_capacity(cfg.rows)).collect();
    for i in 0..cfg.rows {
        let c = draw(&cdf, rng.gen());
        let name = by_rank[draw(&name_cdf, rng.gen())];
        let team = name * cfg.teams / universe;
        let ts = start + (i as i64 * span) / cfg.rows.max(1) as i64 + rng.gen_range(0..60);
        let dc = if rng.gen_bool(0.9) {
            home_dc[c]
        } else {
            rng.gen_range(0..DATACENTERS.len())
        };
        let failing = team % 7 == 3;
        let status = if rng.gen_bool(if failing { 0.2 } else { 0.01 }) {
            "error"
        } else {
            "ok"
        };
        let base = 20 + (team % 10) as i64 * 15;
        let latency = base + (base as f64 * rng.gen::<f64>().powi(4) * 30.0) as i64;

        cols[0].push(Value::Timestamp(ts));
        cols[1].push(Value::from(COUNTRY_CODES[c]));
        cols[2].push(Value::from(DATACENTERS[dc]));
        cols[3].push(Value::Str(table_name(name, universe, cfg.teams)));
        cols[4].push(Value::Str(format!("team{team:03}-svc{}", name % 3)));
        cols[5].push(Value::from(status));
        cols[6].push(Value::I64(latency));
    }
    Table::new(logs_schema(), cols).expect("columns match schema")
}

/// A prefix-heavy corpus of `n` distinct sorted names.
pub fn name_corpus(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (0..n).map(|i| table_name(i, n, 60)).collect();
    v.sort();
    v.dedup();
    v
}

// ---- random differential cases ----

/// Schema of random test tables. Floats are multiples of 1/4 so sums are
/// exact in any order; every column has fewer than 2048 distinct values so
/// approximate distinct counts are exact.
pub fn random_schema() -> Schema {
    Schema::new(
        "t",
        vec![
            Field::new("s1", ValueKind::Str, true),
            Field::new("s2", ValueKind::Str, false),
            Field::new("n1", ValueKind::I64, true),
            Field::new("n2", ValueKind::I64, false),
            Field::new("f", ValueKind::F64, true),
            Field::new("d", ValueKind::Date, false),
            Field::new("ts", ValueKind::Timestamp, true),
        ],
    )
    .expect("static schema")
}

const S1: [&str; 8] = ["de", "fr", "us", "jp", "br", "in", "Mx", "it"];

fn maybe_null(rng: &mut ChaCha8Rng, p: f64, v: impl FnOnce(&mut ChaCha8Rng) -> Value) -> Value {
    if rng.gen_bool(p) {
        Value::Null
    } else {
        v(rng)
    }
}

pub fn random_table(rng: &mut ChaCha8Rng, max_rows: usize) -> Table {
    let rows = if rng.gen_bool(0.05) {
        0
    } else {
        rng.gen_range(1..=max_rows)
    };
    let s1_card = rng.gen_range(1..=S1.len());
    let s2_card = rng.gen_range(1..=300);
    let n1_range = rng.gen_range(1..=20i64);
    let null_p = if rng.gen_bool(0.5) { 0.0 } else { 0.1 };
    let data = (0..rows)
        .map(|_| {
            vec![
                maybe_null(rng, null_p, |r| Value::from(S1[r.gen_range(0..s1_card)])),
                Value::Str(format!("name-{:03}", rng.gen_range(0..s2_card))),
                maybe_null(rng, null_p, |r| Value::I64(r.gen_range(-n1_range..=n1_range))),
                Value::I64(rng.gen_range(0..1500)),
                maybe_null(rng, null_p, |r| Value::F64(r.gen_range(-400..=400) as f64 / 4.0)),
                Value::Date(15_400 + rng.gen_range(0..60)),
                maybe_null(rng, null_p, |r| {
                    Value::Timestamp(1_330_560_000 + r.gen_range(0..10 * 86_400))
                }),
            ]
        })
        .collect();
    Table::from_rows(random_schema(), data).expect("rows match schema")
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty")
}

/// A literal for comparing against `col`, usually one present in `t`.
fn literal(rng: &mut ChaCha8Rng, t: &Table, col: &str) -> String {
    let vals = t.column(col).expect("known column");
    let v = if !vals.is_empty() && rng.gen_bool(0.8) {
        vals[rng.gen_range(0..vals.len())].clone()
    } else {
        match col {
            "s1" => Value::from("zz"),
            "s2" => Value::from("name-999"),
            "f" => Value::F64(1000.25),
            "d" => Value::Date(15_000),
            "ts" => Value::Timestamp(1_000_000_000),
            _ => Value::I64(-77),
        }
    };
    match v {
        Value::Null => "NULL".into(),
        Value::Str(s) => format!("'{s}'"),
        Value::F64(f) => format!("{f:?}"),
        Value::Date(d) => format!("'{}'", format_date(d)),
        Value::Timestamp(_) => format!("'{v}'"),
        v => v.to_string(),
    }
}

fn leaf(rng: &mut ChaCha8Rng, t: &Table) -> String {
    let col = *pick(rng, &["s1", "s2", "n1", "n2", "f", "d", "ts"]);
    match rng.gen_range(0..9) {
        0 | 1 => format!("{col} = {}", literal(rng, t, col)),
        2 => format!("{col} != {}", literal(rng, t, col)),
        3 | 4 => {
            let n = rng.gen_range(1..=4);
            let items: Vec<String> = (0..n).map(|_| literal(rng, t, col)).collect();
            let not = if rng.gen_bool(0.3) { "NOT " } else { "" };
            format!("{col} {not}IN ({})", items.join(", "))
        }
        5 => format!("{col} {} {}", pick(rng, &["<", "<=", ">", ">="]), literal(rng, t, col)),
        6 => format!("{col} IS {}NULL", if rng.gen_bool(0.5) { "NOT " } else { "" }),
        7 => format!("n1 + n2 {} {}", pick(rng, &["<", ">"]), rng.gen_range(0..1500)),
        _ => format!("lower(s1) = '{}'", pick(rng, &["mx", "de", "us"])),
    }
}

fn predicate(rng: &mut ChaCha8Rng, t: &Table, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.4) {
        return leaf(rng, t);
    }
    match rng.gen_range(0..3) {
        0 => format!("{} AND {}", predicate(rng, t, depth - 1), predicate(rng, t, depth - 1)),
        1 => format!("({} OR {})", predicate(rng, t, depth - 1), predicate(rng, t, depth - 1)),
        _ => format!("NOT ({})", predicate(rng, t, depth - 1)),
    }
}

const KEYS: [&str; 9] = ["s1", "s2", "n1", "d", "date(ts)", "lower(s1)", "n1 % 3", "f", "ts"];
const NUMERIC: [&str; 5] = ["n1", "n2", "f", "n1 * 2 + f", "abs(n1)"];
const ANY: [&str; 7] = ["s1", "s2", "n1", "n2", "f", "d", "ts"];

fn aggregate(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..8) {
        0 => "COUNT(*)".into(),
        1 => format!("COUNT({})", pick(rng, &ANY)),
        2 => format!(
            "COUNT(DISTINCT {})",
            pick(rng, &["s1", "s2", "n1", "n2", "d", "date(ts)"])
        ),
        3 => format!("SUM({})", pick(rng, &NUMERIC)),
        4 => format!("MIN({})", pick(rng, &ANY)),
        5 => format!("MAX({})", pick(rng, &ANY)),
        6 => format!("AVG({})", pick(rng, &NUMERIC)),
        _ => format!("SUM({}) / COUNT(*)", pick(rng, &["n1", "n2", "f"])),
    }
}

/// A random query over [`random_schema`] covering filters, zero to two
/// group keys, aliases, HAVING, ORDER BY and LIMIT.
pub fn random_query(rng: &mut ChaCha8Rng, t: &Table) -> String {
    let nkeys = rng.gen_range(0..=2);
    let mut keys: Vec<&str> = KEYS.choose_multiple(rng, nkeys).copied().collect();
    keys.sort_unstable();
    let mut select = Vec::new();
    let mut group = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if rng.gen_bool(0.3) {
            let alias = format!("k{i}");
            select.push(format!("{k} AS {alias}"));
            group.push(alias);
        } else {
            select.push(k.to_string());
            group.push(k.to_string());
        }
    }
    let naggs = rng.gen_range(1..=3);
    let mut agg_aliases = Vec::new();
    for j in 0..naggs {
        let a = aggregate(rng);
        if rng.gen_bool(0.5) {
            select.push(format!("{a} AS a{j}"));
            agg_aliases.push(format!("a{j}"));
        } else {
            select.push(a);
        }
    }
    if !keys.is_empty() && rng.gen_bool(0.2) {
        select.push("COUNT(*) + 1".into());
    }
    select.shuffle(rng);

    let mut sql = format!("SELECT {} FROM t", select.join(", "));
    if rng.gen_bool(0.7) {
        sql += &format!(" WHERE {}", predicate(rng, t, 2));
    }
    if !group.is_empty() {
        sql += &format!(" GROUP BY {}", group.join(", "));
        if rng.gen_bool(0.25) {
            let h = match agg_aliases.first() {
                Some(a) if rng.gen_bool(0.5) => format!("{a} IS NOT NULL"),
                _ => format!("COUNT(*) > {}", rng.gen_range(0..4)),
            };
            sql += &format!(" HAVING {h}");
        }
        if rng.gen_bool(0.6) {
            let mut order = Vec::new();
            if let Some(a) = agg_aliases.first() {
                order.push(format!("{a} {}", pick(rng, &["ASC", "DESC"])));
            } else {
                order.push(format!("COUNT(*) {}", pick(rng, &["ASC", "DESC"])));
            }
            if rng.gen_bool(0.4) {
                order.push(format!("{} DESC", group[0]));
            }
            sql += &format!(" ORDER BY {}", order.join(", "));
        }
        if rng.gen_bool(0.4) {
            sql += &format!(" LIMIT {}", rng.gen_range(1..=10));
        }
    }
    sql
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logs_are_deterministic_and_shaped() {
        let cfg = LogsConfig {
            rows: 20_000,
            ..Default::default()
        };
        let a = logs_table(&cfg);
        assert_eq!(a.columns, logs_table(&cfg).columns);
        let countries: std::collections::HashSet<_> = a.column("country").unwrap().iter().collect();
        assert_eq!(countries.len(), 25);
        let ts = a.column("timestamp").unwrap();
        assert!(ts.windows(2).all(
            |w| w[0] <= w[1] || matches!((&w[0], &w[1]), (Value::Timestamp(x), Value::Timestamp(y)) if x - y < 60)
        ));
    }

    #[test]
    fn corpus_is_distinct_and_prefix_heavy() {
        let c = name_corpus(1000);
        assert_eq!(c.len(), 1000);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert!(c.iter().all(|n| n.starts_with("/cns/")));
    }

    #[test]
    fn random_queries_parse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let t = random_table(&mut rng, 50);
            let sql = random_query(&mut rng, &t);
            pdrill_core::query::parse(&sql).unwrap_or_else(|e| panic!("{sql}: {e}"));
        }
    }
}
