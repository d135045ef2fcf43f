use std::collections::HashMap;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};

use super::{Column, Table};
use crate::error::{Error, Result};
use crate::parallel;
use crate::schema::Schema;
use crate::value::Value;

#[derive(Debug, Clone, Copy)]
pub struct ShardOptions {
    /// Store string global dictionaries as tries instead of sorted arrays.
    pub trie_strings: bool,
    pub parallel: bool,
}

impl Default for ShardOptions {
    fn default() -> Self {
        ShardOptions {
            trie_strings: true,
            parallel: true,
        }
    }
}

/// Columns computed from expressions, materialized on first use.
///
/// Materializations are serialized so concurrent first uses of a key
/// evaluate it once.
#[derive(Debug, Default)]
pub struct VirtualRegistry {
    columns: RwLock<HashMap<String, Arc<Column>>>,
    build: Mutex<()>,
    evaluations: AtomicU64,
}

impl VirtualRegistry {
    pub fn get(&self, key: &str) -> Option<Arc<Column>> {
        self.columns.read().get(key).cloned()
    }

    pub fn get_or_materialize(&self, key: &str, f: impl FnOnce() -> Result<Column>) -> Result<Arc<Column>> {
        if let Some(c) = self.get(key) {
            return Ok(c);
        }
        let _guard = self.build.lock();
        if let Some(c) = self.get(key) {
            return Ok(c);
        }
        let col = Arc::new(f()?);
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        self.columns.write().insert(key.to_string(), col.clone());
        Ok(col)
    }

    /// Number of materializations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.columns.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn keys(&self) -> Vec<String> {
        let mut k: Vec<String> = self.columns.read().keys().cloned().collect();
        k.sort();
        k
    }

    pub fn size_bytes(&self) -> usize {
        self.columns
            .read()
            .values()
            .map(|c| c.dict.size_bytes() + c.chunk_bytes())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSize {
    pub name: String,
    pub dict_bytes: usize,
    pub flat_dict_bytes: usize,
    pub chunk_dict_bytes: usize,
    pub elements_bytes: usize,
}

impl ColumnSize {
    pub fn total(&self) -> usize {
        self.dict_bytes + self.chunk_dict_bytes + self.elements_bytes
    }
}

/// A horizontal slice of a table, split into chunks and encoded per column.
#[derive(Debug)]
pub struct Shard {
    pub id: u32,
    pub schema: Schema,
    columns: Vec<Arc<Column>>,
    chunk_rows: Vec<u32>,
    virtuals: VirtualRegistry,
}

impl Shard {
    /// Encodes every column of `table` over the given chunk ranges.
    pub fn build(id: u32, table: &Table, boundaries: &[Range<usize>], opts: ShardOptions) -> Result<Self> {
        let fields: Vec<usize> = (0..table.schema.len()).collect();
        let columns = parallel::map(&fields, opts.parallel, |&i| {
            let f = &table.schema.fields[i];
            let col = Column::encode(&f.name, f.kind, &table.columns[i], boundaries)?;
            if opts.trie_strings {
                let Column {
                    name,
                    kind,
                    dict,
                    chunks,
                } = col;
                Column::from_parts(name, kind, dict.into_trie()?, chunks)
            } else {
                Ok(col)
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Shard::from_columns(id, table.schema.clone(), columns)
    }

    /// A shard with a single chunk holding every row (none if empty).
    pub fn build_unchunked(id: u32, table: &Table, opts: ShardOptions) -> Result<Self> {
        let n = table.num_rows();
        let b: Vec<Range<usize>> = if n == 0 { vec![] } else { vec![0..n] };
        Shard::build(id, table, &b, opts)
    }

    pub fn from_columns(id: u32, schema: Schema, columns: Vec<Column>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::Schema(format!(
                "{} columns for {} fields",
                columns.len(),
                schema.len()
            )));
        }
        let chunk_rows: Vec<u32> = columns[0].chunks.iter().map(|c| c.rows() as u32).collect();
        for (f, c) in schema.fields.iter().zip(&columns) {
            if c.name != f.name || c.kind != f.kind {
                return Err(Error::Schema(format!(
                    "column `{}` does not match field `{}`",
                    c.name, f.name
                )));
            }
            let rows: Vec<u32> = c.chunks.iter().map(|c| c.rows() as u32).collect();
            if rows != chunk_rows {
                return Err(Error::Schema(format!("column `{}` has different chunking", c.name)));
            }
            if !f.nullable && c.dict.null_id().is_some() {
                return Err(Error::Schema(format!("null in non-nullable column `{}`", f.name)));
            }
        }
        Ok(Shard {
            id,
            schema,
            columns: columns.into_iter().map(Arc::new).collect(),
            chunk_rows,
            virtuals: VirtualRegistry::default(),
        })
    }

    pub fn num_chunks(&self) -> usize {
        self.chunk_rows.len()
    }

    pub fn num_rows(&self) -> usize {
        self.chunk_rows.iter().map(|&r| r as usize).sum()
    }

    pub fn chunk_rows(&self) -> &[u32] {
        &self.chunk_rows
    }

    pub fn columns(&self) -> &[Arc<Column>] {
        &self.columns
    }

    /// A stored column or an already materialized virtual one.
    pub fn column(&self, name: &str) -> Option<Arc<Column>> {
        match self.schema.index_of(name) {
            Some(i) => Some(self.columns[i].clone()),
            None => self.virtuals.get(name),
        }
    }

    pub fn virtuals(&self) -> &VirtualRegistry {
        &self.virtuals
    }

    pub fn decode_element(&self, field: &str, chunk: usize, row: usize) -> Result<Value> {
        self.column(field)
            .ok_or_else(|| Error::UnknownField(field.to_string()))?
            .value(chunk, row)
    }

    /// Rows of the shard in storage order.
    pub fn to_table(&self) -> Result<Table> {
        let columns = self
            .columns
            .iter()
            .map(|c| c.decode_all())
            .collect::<Result<Vec<_>>>()?;
        Table::new(self.schema.clone(), columns)
    }

    pub fn column_sizes(&self) -> Result<Vec<ColumnSize>> {
        self.columns
            .iter()
            .map(|c| {
                Ok(ColumnSize {
                    name: c.name.clone(),
                    dict_bytes: c.dict.size_bytes(),
                    flat_dict_bytes: c.dict.flat_size_bytes()?,
                    chunk_dict_bytes: c.chunks.iter().map(|k| k.dict.size_bytes()).sum(),
                    elements_bytes: c.elements_bytes(),
                })
            })
            .collect()
    }
}
