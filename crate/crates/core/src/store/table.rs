use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::value::Value;

/// Uncompressed column-major rows, used for ingest and as the oracle input.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: Schema,
    pub columns: Vec<Vec<Value>>,
}

impl Table {
    /// Checks column count, equal lengths, kinds and nullability.
    pub fn new(schema: Schema, columns: Vec<Vec<Value>>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::Schema(format!(
                "{} columns for {} fields",
                columns.len(),
                schema.len()
            )));
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (field, col) in schema.fields.iter().zip(&columns) {
            if col.len() != rows {
                return Err(Error::Schema(format!(
                    "column `{}` has {} rows, expected {rows}",
                    field.name,
                    col.len()
                )));
            }
            for v in col {
                match v.kind() {
                    None if !field.nullable => {
                        return Err(Error::Schema(format!("null in non-nullable column `{}`", field.name)))
                    }
                    Some(k) if k != field.kind => {
                        return Err(Error::TypeMismatch {
                            column: field.name.clone(),
                            expected: field.kind,
                            found: k,
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(Table { schema, columns })
    }

    pub fn from_rows(schema: Schema, rows: Vec<Vec<Value>>) -> Result<Self> {
        let mut columns: Vec<Vec<Value>> = vec![Vec::with_capacity(rows.len()); schema.len()];
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Schema(format!(
                    "row {i} has {} values for {} fields",
                    row.len(),
                    schema.len()
                )));
            }
            for (c, v) in row.into_iter().enumerate() {
                columns[c].push(v);
            }
        }
        Table::new(schema, columns)
    }

    pub fn empty(schema: Schema) -> Self {
        let columns = vec![Vec::new(); schema.len()];
        Table { schema, columns }
    }

    pub fn num_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[Value]> {
        self.schema.index_of(name).map(|i| self.columns[i].as_slice())
    }

    pub fn row(&self, i: usize) -> Vec<Value> {
        self.columns.iter().map(|c| c[i].clone()).collect()
    }

    /// Rows reordered so that output row `i` is input row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| order.iter().map(|&i| c[i].clone()).collect())
                .collect(),
        }
    }

    /// The rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Table {
        self.permuted(indices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Field;
    use crate::value::ValueKind;

    #[test]
    fn validates_kinds_and_nulls() {
        let s = Schema::new("t", vec![Field::new("a", ValueKind::I64, false)]).unwrap();
        assert!(Table::new(s.clone(), vec![vec![Value::Null]]).is_err());
        assert!(Table::new(s.clone(), vec![vec![Value::from("x")]]).is_err());
        let t = Table::from_rows(s, vec![vec![Value::I64(2)], vec![Value::I64(1)]]).unwrap();
        assert_eq!(t.permuted(&[1, 0]).columns[0], vec![Value::I64(1), Value::I64(2)]);
    }
}
