//! JSON encoding of values and results.
//!
//! | kind      | JSON                                                    |
//! |-----------|---------------------------------------------------------|
//! | NULL      | `null`                                                  |
//! | int64     | number when \|x\| <= 2^53, else a decimal string        |
//! | float64   | number                                                  |
//! | string    | string                                                  |
//! | date      | `"YYYY-MM-DD"`                                          |
//! | timestamp | `"YYYY-MM-DD HH:MM:SS"` (UTC)                           |

use serde::Serialize;
use serde_json::{json, Value as Json};

use pdrill_core::{QueryResult, QueryStats, Value};

/// Largest magnitude every f64 consumer reads back exactly.
pub const MAX_SAFE_INTEGER: i64 = 1 << 53;

pub fn value(v: &Value) -> Json {
    match v {
        Value::Null => Json::Null,
        Value::I64(x) if x.unsigned_abs() <= MAX_SAFE_INTEGER as u64 => json!(x),
        Value::I64(x) => Json::String(x.to_string()),
        Value::F64(f) => serde_json::Number::from_f64(*f).map_or(Json::Null, Json::Number),
        v => Json::String(v.to_string()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: String,
    /// Kind name, or null for an all-NULL expression.
    #[serde(rename = "type")]
    pub kind: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryResponse {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Json>>,
    pub stats: QueryStats,
    pub elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Json>,
}

impl QueryResponse {
    pub fn new(r: &QueryResult, elapsed_ms: f64) -> Self {
        QueryResponse {
            columns: r
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    kind: c.kind.map(|k| k.name()),
                })
                .collect(),
            rows: r.rows.iter().map(|row| row.iter().map(value).collect()).collect(),
            stats: r.stats.clone(),
            elapsed_ms,
            trace: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers_beyond_53_bits_become_strings() {
        assert_eq!(value(&Value::I64(1 << 53)), json!(9007199254740992i64));
        assert_eq!(value(&Value::I64(-(1 << 53))), json!(-9007199254740992i64));
        assert_eq!(value(&Value::I64((1 << 53) + 1)), json!("9007199254740993"));
        assert_eq!(value(&Value::I64(i64::MIN)), json!("-9223372036854775808"));
    }

    #[test]
    fn other_kinds() {
        assert_eq!(value(&Value::Null), Json::Null);
        assert_eq!(value(&Value::F64(0.5)), json!(0.5));
        assert_eq!(value(&Value::from("fr")), json!("fr"));
        assert_eq!(value(&Value::Date(15_400)), json!("2012-03-01"));
        assert_eq!(value(&Value::Timestamp(1_330_560_000)), json!("2012-03-01 00:00:00"));
    }
}
