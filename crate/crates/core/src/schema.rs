use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::ValueKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub kind: ValueKind,
    pub nullable: bool,
}

impl Field {
    pub fn new(name: impl Into<String>, kind: ValueKind, nullable: bool) -> Self {
        Field {
            name: name.into(),
            kind,
            nullable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub table_name: String,
    pub fields: Vec<Field>,
}

impl Schema {
    /// Field names must be unique and the list non-empty.
    pub fn new(table_name: impl Into<String>, fields: Vec<Field>) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Schema("schema has no fields".into()));
        }
        for (i, f) in fields.iter().enumerate() {
            if f.name.is_empty() {
                return Err(Error::Schema(format!("field {i} has an empty name")));
            }
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::Schema(format!("duplicate field `{}`", f.name)));
            }
        }
        Ok(Schema {
            table_name: table_name.into(),
            fields,
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_empty() {
        assert!(Schema::new("t", vec![]).is_err());
        let f = Field::new("a", ValueKind::I64, false);
        assert!(Schema::new("t", vec![f.clone(), f.clone()]).is_err());
        let s = Schema::new("t", vec![f, Field::new("b", ValueKind::Str, true)]).unwrap();
        assert_eq!(s.index_of("b"), Some(1));
        assert!(s.field("c").is_none());
    }
}
