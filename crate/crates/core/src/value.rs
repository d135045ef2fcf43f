//! Scalar values stored in columns.
//!
//! Every column holds values of a single [`ValueKind`] plus `Null`. The total
//! order defined here is the order of global dictionaries: `Null` first, then
//! strings byte-wise, numerics numerically and dates/timestamps
//! chronologically.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ValueKind {
    Str,
    I64,
    F64,
    Date,
    Timestamp,
}

impl ValueKind {
    pub fn tag(self) -> u8 {
        match self {
            ValueKind::Str => 1,
            ValueKind::I64 => 2,
            ValueKind::F64 => 3,
            ValueKind::Date => 4,
            ValueKind::Timestamp => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            1 => ValueKind::Str,
            2 => ValueKind::I64,
            3 => ValueKind::F64,
            4 => ValueKind::Date,
            5 => ValueKind::Timestamp,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueKind::Str => "string",
            ValueKind::I64 => "int64",
            ValueKind::F64 => "float64",
            ValueKind::Date => "date",
            ValueKind::Timestamp => "timestamp",
        }
    }

    pub fn parse_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "string" | "str" | "text" => ValueKind::Str,
            "int64" | "i64" | "int" | "integer" => ValueKind::I64,
            "float64" | "f64" | "float" | "double" => ValueKind::F64,
            "date" => ValueKind::Date,
            "timestamp" | "ts" => ValueKind::Timestamp,
            _ => return None,
        })
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ValueKind::I64 | ValueKind::F64)
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single cell value.
///
/// `Date` counts days since 1970-01-01 and `Timestamp` counts seconds since
/// the epoch, both UTC.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Value {
    Null,
    Str(String),
    I64(i64),
    F64(f64),
    Date(i32),
    Timestamp(i64),
}

impl Value {
    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            Value::Null => None,
            Value::Str(_) => Some(ValueKind::Str),
            Value::I64(_) => Some(ValueKind::I64),
            Value::F64(_) => Some(ValueKind::F64),
            Value::Date(_) => Some(ValueKind::Date),
            Value::Timestamp(_) => Some(ValueKind::Timestamp),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    fn rank(&self) -> u8 {
        match self.kind() {
            None => 0,
            Some(k) => k.tag(),
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric view used by SUM/AVG and arithmetic.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::I64(v) => Some(*v as f64),
            Value::F64(v) => Some(*v),
            _ => None,
        }
    }

    /// Converts a literal to the kind of the column it is compared against.
    ///
    /// Returns `None` when the literal cannot denote any value of that kind;
    /// such a literal matches no row.
    pub fn coerce_to(&self, kind: ValueKind) -> Option<Value> {
        if self.kind() == Some(kind) || self.is_null() {
            return Some(self.clone());
        }
        match (self, kind) {
            (Value::I64(v), ValueKind::F64) => Some(Value::F64(*v as f64)),
            (Value::F64(v), ValueKind::I64) => {
                if v.fract() == 0.0 && *v >= i64::MIN as f64 && *v < i64::MAX as f64 {
                    Some(Value::I64(*v as i64))
                } else {
                    None
                }
            }
            (Value::I64(v), ValueKind::Timestamp) => Some(Value::Timestamp(*v)),
            (Value::Timestamp(v), ValueKind::I64) => Some(Value::I64(*v)),
            (Value::Str(s), ValueKind::Date) => parse_date(s).map(Value::Date),
            (Value::Str(s), ValueKind::Timestamp) => parse_timestamp(s).map(Value::Timestamp),
            (Value::Str(s), ValueKind::I64) => s.trim().parse().ok().map(Value::I64),
            (Value::Str(s), ValueKind::F64) => s.trim().parse().ok().map(Value::F64),
            (Value::Date(d), ValueKind::Timestamp) => Some(Value::Timestamp(*d as i64 * 86_400)),
            _ => None,
        }
    }

    /// Comparison used by WHERE/HAVING predicates: `None` when either side is
    /// NULL or the kinds cannot be reconciled.
    pub fn compare_loose(&self, other: &Value) -> Option<Ordering> {
        match (self.kind(), other.kind()) {
            (None, _) | (_, None) => None,
            (Some(a), Some(b)) if a == b => Some(self.cmp(other)),
            (Some(a), Some(b)) if a.is_numeric() && b.is_numeric() => match (self, other) {
                (Value::I64(x), Value::F64(y)) => (*x as f64).partial_cmp(y),
                (Value::F64(x), Value::I64(y)) => x.partial_cmp(&(*y as f64)),
                _ => None,
            },
            (Some(a), Some(b)) => other
                .coerce_to(a)
                .map(|o| self.cmp(&o))
                .or_else(|| self.coerce_to(b).map(|s| s.cmp(other))),
        }
    }

    /// Canonical byte encoding used for hashing: kind tag then payload.
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.push(self.rank());
        match self {
            Value::Null => {}
            Value::Str(s) => out.extend_from_slice(s.as_bytes()),
            Value::I64(v) | Value::Timestamp(v) => out.extend_from_slice(&v.to_le_bytes()),
            Value::F64(v) => out.extend_from_slice(&canonical_f64_bits(*v).to_le_bytes()),
            Value::Date(v) => out.extend_from_slice(&v.to_le_bytes()),
        }
    }

    /// Seeded 64-bit hash (XXH64 over the canonical encoding).
    pub fn hash64(&self, seed: u64) -> u64 {
        let mut buf = Vec::with_capacity(16);
        self.write_canonical(&mut buf);
        let mut h = XxHash64::with_seed(seed);
        h.write(&buf);
        h.finish()
    }
}

fn canonical_f64_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else if v.is_nan() {
        f64::NAN.to_bits()
    } else {
        v.to_bits()
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Str(a), Value::Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Value::I64(a), Value::I64(b)) => a.cmp(b),
            (Value::F64(a), Value::F64(b)) => {
                // -0.0 and 0.0 are one value
                if *a == 0.0 && *b == 0.0 {
                    Ordering::Equal
                } else {
                    a.total_cmp(b)
                }
            }
            (Value::Date(a), Value::Date(b)) => a.cmp(b),
            (Value::Timestamp(a), Value::Timestamp(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u8(self.rank());
        match self {
            Value::Null => {}
            Value::Str(s) => s.hash(state),
            Value::I64(v) | Value::Timestamp(v) => v.hash(state),
            Value::F64(v) => canonical_f64_bits(*v).hash(state),
            Value::Date(v) => v.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Str(s) => f.write_str(s),
            Value::I64(v) => write!(f, "{v}"),
            Value::F64(v) => write!(f, "{v}"),
            Value::Date(d) => f.write_str(&format_date(*d)),
            Value::Timestamp(t) => f.write_str(&format_timestamp(*t)),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_owned())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::I64(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::F64(v)
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid epoch")
}

/// Parses `YYYY-MM-DD` into days since the epoch.
pub fn parse_date(s: &str) -> Option<i32> {
    let d = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()?;
    i32::try_from((d - epoch()).num_days()).ok()
}

pub fn format_date(days: i32) -> String {
    match epoch().checked_add_signed(chrono::Duration::days(days as i64)) {
        Some(d) => d.format("%Y-%m-%d").to_string(),
        None => format!("#{days}"),
    }
}

/// Parses `YYYY-MM-DD HH:MM:SS`, `YYYY-MM-DDTHH:MM:SS` or RFC 3339 into
/// seconds since the epoch (UTC).
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    None
}

pub fn format_timestamp(secs: i64) -> String {
    match DateTime::from_timestamp(secs, 0) {
        Some(dt) => dt.format("%Y-%m-%d %H:%M:%S").to_string(),
        None => format!("#{secs}"),
    }
}

/// Calendar date (`YYYY-MM-DD`) of an epoch-seconds timestamp, UTC.
pub fn date_of_timestamp(secs: i64) -> Option<String> {
    DateTime::from_timestamp(secs, 0).map(|dt| dt.format("%Y-%m-%d").to_string())
}

/// Order-preserving encoding of value tuples into printable strings.
///
/// Byte-wise comparison of two encodings equals lexicographic comparison of
/// the tuples under the [`Value`] order, provided component kinds agree
/// position by position. Used for composite group-by keys.
pub mod tuple_key {
    use super::{Value, ValueKind};

    const HEX: &[u8; 16] = b"0123456789abcdef";

    pub fn encode(values: &[Value]) -> String {
        let mut raw = Vec::new();
        for v in values {
            match v {
                Value::Null => raw.push(0),
                Value::Str(s) => {
                    raw.push(1);
                    for &b in s.as_bytes() {
                        raw.push(b);
                        if b == 0 {
                            raw.push(0xff);
                        }
                    }
                    raw.extend_from_slice(&[0, 0]);
                }
                Value::I64(x) | Value::Timestamp(x) => {
                    raw.push(1);
                    raw.extend_from_slice(&((*x as u64) ^ (1 << 63)).to_be_bytes());
                }
                Value::F64(x) => {
                    raw.push(1);
                    let x = if *x == 0.0 { 0.0 } else { *x };
                    let bits = x.to_bits();
                    let ordered = if bits >> 63 == 1 { !bits } else { bits | (1 << 63) };
                    raw.extend_from_slice(&ordered.to_be_bytes());
                }
                Value::Date(x) => {
                    raw.push(1);
                    raw.extend_from_slice(&((*x as u32) ^ (1 << 31)).to_be_bytes());
                }
            }
        }
        let mut out = String::with_capacity(raw.len() * 2);
        for b in raw {
            out.push(HEX[(b >> 4) as usize] as char);
            out.push(HEX[(b & 15) as usize] as char);
        }
        out
    }

    pub fn decode(key: &str, kinds: &[ValueKind]) -> Option<Vec<Value>> {
        let hex = key.as_bytes();
        if hex.len() % 2 != 0 {
            return None;
        }
        let nib = |c: u8| -> Option<u8> {
            match c {
                b'0'..=b'9' => Some(c - b'0'),
                b'a'..=b'f' => Some(c - b'a' + 10),
                _ => None,
            }
        };
        let raw: Vec<u8> = hex
            .chunks(2)
            .map(|p| Some((nib(p[0])? << 4) | nib(p[1])?))
            .collect::<Option<_>>()?;
        let mut pos = 0;
        let mut out = Vec::with_capacity(kinds.len());
        for &kind in kinds {
            let marker = *raw.get(pos)?;
            pos += 1;
            if marker == 0 {
                out.push(Value::Null);
                continue;
            }
            let fixed = |pos: &mut usize, n: usize| -> Option<Vec<u8>> {
                let s = raw.get(*pos..*pos + n)?.to_vec();
                *pos += n;
                Some(s)
            };
            let v = match kind {
                ValueKind::Str => {
                    let mut bytes = Vec::new();
                    loop {
                        let b = *raw.get(pos)?;
                        pos += 1;
                        if b == 0 {
                            let next = *raw.get(pos)?;
                            pos += 1;
                            if next == 0 {
                                break;
                            }
                            bytes.push(0);
                        } else {
                            bytes.push(b);
                        }
                    }
                    Value::Str(String::from_utf8(bytes).ok()?)
                }
                ValueKind::I64 | ValueKind::Timestamp => {
                    let b: [u8; 8] = fixed(&mut pos, 8)?.try_into().ok()?;
                    let x = (u64::from_be_bytes(b) ^ (1 << 63)) as i64;
                    if kind == ValueKind::I64 {
                        Value::I64(x)
                    } else {
                        Value::Timestamp(x)
                    }
                }
                ValueKind::F64 => {
                    let b: [u8; 8] = fixed(&mut pos, 8)?.try_into().ok()?;
                    let o = u64::from_be_bytes(b);
                    let bits = if o >> 63 == 1 { o & !(1 << 63) } else { !o };
                    Value::F64(f64::from_bits(bits))
                }
                ValueKind::Date => {
                    let b: [u8; 4] = fixed(&mut pos, 4)?.try_into().ok()?;
                    Value::Date((u32::from_be_bytes(b) ^ (1 << 31)) as i32)
                }
            };
            out.push(v);
        }
        (pos == raw.len()).then_some(out)
    }
}
