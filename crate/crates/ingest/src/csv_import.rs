//! RFC-4180 CSV into typed tables.
//!
//! Column kinds come from explicit overrides or are inferred from the data:
//! the first of int64, float64, date, timestamp that parses every non-empty
//! cell, else string. Empty cells are NULL.

use std::io::Read;
use std::path::Path;

use pdrill_core::value::{parse_date, parse_timestamp};
use pdrill_core::{Field, Schema, Table, Value, ValueKind};

use crate::error::{IngestError, Result};

/// Parses `name:kind,name:kind`.
pub fn parse_schema_spec(spec: &str) -> Result<Vec<(String, ValueKind)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (name, kind) = item
                .split_once(':')
                .ok_or_else(|| IngestError::Config(format!("schema entry `{item}` is not name:kind")))?;
            let kind = ValueKind::parse_name(kind.trim())
                .ok_or_else(|| IngestError::Config(format!("unknown kind `{}` for `{}`", kind.trim(), name.trim())))?;
            Ok((name.trim().to_string(), kind))
        })
        .collect()
}

const INFERENCE_ORDER: [ValueKind; 4] = [ValueKind::I64, ValueKind::F64, ValueKind::Date, ValueKind::Timestamp];

/// Parses one non-empty cell as `kind`.
pub fn parse_cell(cell: &str, kind: ValueKind) -> Option<Value> {
    let t = cell.trim();
    match kind {
        ValueKind::Str => Some(Value::Str(cell.to_string())),
        ValueKind::I64 => t.parse().ok().map(Value::I64),
        ValueKind::F64 => t.parse::<f64>().ok().filter(|f| f.is_finite()).map(Value::F64),
        ValueKind::Date => parse_date(t).map(Value::Date),
        // integer seconds or a datetime
        ValueKind::Timestamp => t.parse().ok().or_else(|| parse_timestamp(t)).map(Value::Timestamp),
    }
}

/// Kind of a column from its cells.
pub fn infer_kind<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> ValueKind {
    let mut present = cells.filter(|c| !c.is_empty());
    if present.clone().next().is_none() {
        return ValueKind::Str;
    }
    for kind in INFERENCE_ORDER {
        if kind == ValueKind::Timestamp {
            // integer seconds infer as int64 above; only datetimes land here
            if present.clone().all(|c| parse_timestamp(c).is_some()) {
                return kind;
            }
        } else if present.all_ok(kind) {
            return kind;
        }
    }
    ValueKind::Str
}

trait AllParse {
    fn all_ok(&mut self, kind: ValueKind) -> bool;
}

impl<'a, I: Iterator<Item = &'a str> + Clone> AllParse for I {
    fn all_ok(&mut self, kind: ValueKind) -> bool {
        self.clone().all(|c| parse_cell(c, kind).is_some())
    }
}

/// Rejects unterminated quotes and quotes inside unquoted fields, which
/// the csv reader would otherwise accept silently.
fn check_quoting(data: &[u8]) -> Result<()> {
    let mut line = 1u64;
    let mut open_line = 0;
    let mut in_quotes = false;
    let mut field_start = true;
    let mut i = 0;
    while i < data.len() {
        let b = data[i];
        if in_quotes {
            match b {
                b'"' if data.get(i + 1) == Some(&b'"') => i += 1,
                b'"' => {
                    in_quotes = false;
                    match data.get(i + 1) {
                        None | Some(b',') | Some(b'\n') | Some(b'\r') => {}
                        Some(_) => {
                            return Err(IngestError::Csv {
                                line,
                                message: "characters after a closing quote".into(),
                            })
                        }
                    }
                }
                b'\n' => line += 1,
                _ => {}
            }
        } else {
            match b {
                b'"' if field_start => {
                    in_quotes = true;
                    open_line = line;
                }
                b'"' => {
                    return Err(IngestError::Csv {
                        line,
                        message: "quote inside an unquoted field".into(),
                    })
                }
                b',' => {
                    field_start = true;
                    i += 1;
                    continue;
                }
                b'\n' => {
                    line += 1;
                    field_start = true;
                    i += 1;
                    continue;
                }
                _ => {}
            }
        }
        field_start = false;
        i += 1;
    }
    if in_quotes {
        return Err(IngestError::Csv {
            line: open_line,
            message: "unterminated quoted field".into(),
        });
    }
    Ok(())
}

/// Reads CSV with a header row into a table named `table_name`.
pub fn read_csv(mut input: impl Read, table_name: &str, overrides: &[(String, ValueKind)]) -> Result<Table> {
    let mut data = Vec::new();
    input.read_to_end(&mut data).map_err(|e| IngestError::Csv {
        line: 0,
        message: e.to_string(),
    })?;
    check_quoting(&data)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(data.as_slice());
    let csv_err = |e: csv::Error| IngestError::Csv {
        line: e.position().map_or(0, |p| p.line()),
        message: match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("expected {expected_len} fields, found {len}")
            }
            _ => e.to_string(),
        },
    };
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IngestError::Csv {
            line: 1,
            message: "missing header row".into(),
        });
    }
    for (name, _) in overrides {
        if !header.contains(name) {
            return Err(IngestError::Config(format!(
                "schema names `{name}`, which is not a CSV column"
            )));
        }
    }
    let mut lines = Vec::new();
    let mut records = Vec::new();
    for r in reader.records() {
        let r = r.map_err(csv_err)?;
        lines.push(r.position().map_or(0, |p| p.line()));
        records.push(r);
    }

    let mut fields = Vec::with_capacity(header.len());
    let mut columns = Vec::with_capacity(header.len());
    for (c, name) in header.iter().enumerate() {
        let cells = records.iter().map(|r| &r[c]);
        let kind = overrides
            .iter()
            .find(|(n, _)| n == name)
            .map_or_else(|| infer_kind(cells.clone()), |(_, k)| *k);
        let mut values = Vec::with_capacity(records.len());
        for (r, cell) in cells.enumerate() {
            if cell.is_empty() {
                values.push(Value::Null);
                continue;
            }
            values.push(parse_cell(cell, kind).ok_or_else(|| IngestError::Type {
                line: lines[r],
                column: name.clone(),
                expected: kind.to_string(),
                value: cell.to_string(),
            })?);
        }
        let nullable = values.iter().any(Value::is_null);
        fields.push(Field::new(name.clone(), kind, nullable));
        columns.push(values);
    }
    let schema = Schema::new(table_name, fields)?;
    Ok(Table::new(schema, columns)?)
}

pub fn read_csv_path(path: &Path, table_name: &str, overrides: &[(String, ValueKind)]) -> Result<Table> {
    let f = std::fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_csv(std::io::BufReader::new(f), table_name, overrides)
}

/// Writes a table as CSV; NULL becomes an empty cell. Reading the output
/// back infers the same kinds, except all-NULL columns become strings.
pub fn write_csv(table: &Table, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| IngestError::Csv {
        line: 0,
        message: e.to_string(),
    };
    w.write_record(table.schema.fields.iter().map(|f| f.name.as_str()))
        .map_err(io)?;
    for r in 0..table.num_rows() {
        let row: Vec<String> = table
            .row(r)
            .iter()
            .map(|v| match v {
                Value::Null => String::new(),
                // keep a decimal point so floats re-infer as floats
                Value::F64(f) => format!("{f:?}"),
                v => v.to_string(),
            })
            .collect();
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| IngestError::Csv {
        line: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_in_order() {
        let csv = "a,b,c,d,e,f\n1,1.5,2012-02-29,2012-02-29 10:00:00,x,\n-3,2,2012-03-01,2012-03-01T00:00:01,7,\n";
        let t = read_csv(csv.as_bytes(), "t", &[]).unwrap();
        let kinds: Vec<ValueKind> = t.schema.fields.iter().map(|f| f.kind).collect();
        use ValueKind::*;
        assert_eq!(kinds, vec![I64, F64, Date, Timestamp, Str, Str]);
        assert_eq!(t.row(1)[1], Value::F64(2.0));
        assert_eq!(t.row(0)[5], Value::Null);
        assert!(t.schema.fields[5].nullable && !t.schema.fields[0].nullable);
    }

    #[test]
    fn overrides_win() {
        let csv = "ts,zip\n1330473600,01234\n";
        let o = parse_schema_spec("ts:timestamp, zip:string").unwrap();
        let t = read_csv(csv.as_bytes(), "t", &o).unwrap();
        assert_eq!(t.row(0), vec![Value::Timestamp(1_330_473_600), Value::from("01234")]);
        assert!(parse_schema_spec("a:blob").is_err());
        assert!(matches!(
            read_csv(csv.as_bytes(), "t", &parse_schema_spec("q:int").unwrap()),
            Err(IngestError::Config(_))
        ));
    }

    #[test]
    fn quoting_follows_rfc4180() {
        let csv = "s,n\n\"a, \"\"quoted\"\"\n line\",1\n";
        let t = read_csv(csv.as_bytes(), "t", &[]).unwrap();
        assert_eq!(t.row(0)[0], Value::from("a, \"quoted\"\n line"));
    }

    #[test]
    fn errors_name_the_line() {
        let e = read_csv("a,b\n1,2\n3,\"x\n4,5\n".as_bytes(), "t", &[]).unwrap_err();
        assert!(matches!(e, IngestError::Csv { line: 3, .. }), "{e}");
        let e = read_csv("a,b\n1,2\n3,x\"y\n".as_bytes(), "t", &[]).unwrap_err();
        assert!(matches!(e, IngestError::Csv { line: 3, .. }), "{e}");
        let e = read_csv("a,b\n1,2\n3\n".as_bytes(), "t", &[]).unwrap_err();
        assert!(matches!(e, IngestError::Csv { line: 3, .. }), "{e}");
        let e = read_csv("a,b\n1,2\nx,3\n".as_bytes(), "t", &[("a".into(), ValueKind::I64)]).unwrap_err();
        match e {
            IngestError::Type { line, column, .. } => assert_eq!((line, column.as_str()), (3, "a")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn header_only_is_an_empty_table() {
        let t = read_csv("a,b\n".as_bytes(), "t", &[]).unwrap();
        assert_eq!(t.num_rows(), 0);
        assert_eq!(t.schema.fields[0].kind, ValueKind::Str);
    }

    #[test]
    fn csv_roundtrip() {
        let csv = "s,n,f\n\"x,y\",1,0.25\n,,\n";
        let t = read_csv(csv.as_bytes(), "t", &[]).unwrap();
        let mut out = Vec::new();
        write_csv(&t, &mut out).unwrap();
        let back = read_csv(out.as_slice(), "t", &[]).unwrap();
        assert_eq!(back.columns, t.columns);
    }
}
