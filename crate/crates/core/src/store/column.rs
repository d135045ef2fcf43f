use std::collections::HashMap;
use std::ops::Range;

use super::{ChunkDictionary, ElementsEncoding, GlobalDictionary};
use crate::error::{Error, Result};
use crate::value::{Value, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnChunk {
    pub dict: ChunkDictionary,
    pub elements: ElementsEncoding,
}

impl ColumnChunk {
    pub fn rows(&self) -> usize {
        self.elements.len()
    }

    #[inline]
    pub fn global_id(&self, row: usize) -> u32 {
        self.dict.global_id(self.elements.get(row))
    }

    pub fn size_bytes(&self) -> usize {
        self.dict.size_bytes() + self.elements.payload_bytes()
    }
}

/// One field of a shard: global dictionary plus one encoded chunk per chunk
/// of the shard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub kind: ValueKind,
    pub dict: GlobalDictionary,
    pub chunks: Vec<ColumnChunk>,
}

impl Column {
    /// Double-dictionary encodes `values` over the given contiguous,
    /// non-overlapping chunk ranges that together cover every row.
    pub fn encode(name: &str, kind: ValueKind, values: &[Value], boundaries: &[Range<usize>]) -> Result<Self> {
        let mut expected = 0;
        for r in boundaries {
            if r.start != expected || r.end < r.start {
                return Err(Error::Schema(format!(
                    "chunk boundaries not contiguous at row {expected}"
                )));
            }
            expected = r.end;
        }
        if expected != values.len() {
            return Err(Error::Schema(format!(
                "chunk boundaries cover {expected} of {} rows",
                values.len()
            )));
        }

        let mut distinct: Vec<&Value> = values.iter().collect();
        distinct.sort_unstable();
        distinct.dedup();
        for v in &distinct {
            if let Some(k) = v.kind() {
                if k != kind {
                    return Err(Error::TypeMismatch {
                        column: name.to_string(),
                        expected: kind,
                        found: k,
                    });
                }
            }
        }
        let ids: HashMap<&Value, u32> = distinct.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
        let dict = GlobalDictionary::from_sorted(kind, distinct.iter().map(|v| (*v).clone()).collect())?;
        let gids: Vec<u32> = values.iter().map(|v| ids[v]).collect();

        // slot[g] = chunk-id of g within the chunk being encoded
        let mut slot = vec![u32::MAX; dict.len()];
        let mut chunks = Vec::with_capacity(boundaries.len());
        for r in boundaries {
            let rows = &gids[r.clone()];
            let mut present: Vec<u32> = rows.to_vec();
            present.sort_unstable();
            present.dedup();
            for (c, &g) in present.iter().enumerate() {
                slot[g as usize] = c as u32;
            }
            let local: Vec<u32> = rows.iter().map(|&g| slot[g as usize]).collect();
            let elements = ElementsEncoding::encode(&local, present.len());
            for &g in &present {
                slot[g as usize] = u32::MAX;
            }
            chunks.push(ColumnChunk {
                dict: ChunkDictionary::new(present)?,
                elements,
            });
        }
        Ok(Column {
            name: name.to_string(),
            kind,
            dict,
            chunks,
        })
    }

    /// Column built from already-encoded parts, checked for consistency.
    pub fn from_parts(name: String, kind: ValueKind, dict: GlobalDictionary, chunks: Vec<ColumnChunk>) -> Result<Self> {
        for (i, c) in chunks.iter().enumerate() {
            if let Some(&last) = c.dict.global_ids().last() {
                if last as usize >= dict.len() {
                    return Err(Error::Schema(format!(
                        "column `{name}` chunk {i} refers to global-id {last} beyond dictionary of {}",
                        dict.len()
                    )));
                }
            }
            if let Some(m) = c.elements.max_id() {
                if m as usize >= c.dict.len().max(1) {
                    return Err(Error::Schema(format!(
                        "column `{name}` chunk {i} has chunk-id {m} beyond chunk-dictionary of {}",
                        c.dict.len()
                    )));
                }
            }
            if c.dict.is_empty() && !c.elements.is_empty() {
                return Err(Error::Schema(format!(
                    "column `{name}` chunk {i} has rows but no dictionary"
                )));
            }
        }
        Ok(Column {
            name,
            kind,
            dict,
            chunks,
        })
    }

    pub fn rows(&self) -> usize {
        self.chunks.iter().map(ColumnChunk::rows).sum()
    }

    pub fn value(&self, chunk: usize, row: usize) -> Result<Value> {
        let c = self
            .chunks
            .get(chunk)
            .ok_or_else(|| Error::Index(format!("chunk {chunk} of column `{}`", self.name)))?;
        if row >= c.rows() {
            return Err(Error::Index(format!(
                "row {row} of chunk {chunk} of column `{}`",
                self.name
            )));
        }
        self.dict.value_at(c.global_id(row))
    }

    /// Smallest and largest non-null value present in a chunk.
    pub fn chunk_range(&self, chunk: usize) -> Result<Option<(Value, Value)>> {
        let ids = self.chunks[chunk].dict.global_ids();
        let null = self.dict.null_id();
        let mut it = ids.iter().copied().filter(|&g| Some(g) != null);
        let Some(first) = it.next() else { return Ok(None) };
        let last = it.next_back().unwrap_or(first);
        Ok(Some((self.dict.value_at(first)?, self.dict.value_at(last)?)))
    }

    pub fn decode_all(&self) -> Result<Vec<Value>> {
        let values = self.dict.values()?;
        let mut out = Vec::with_capacity(self.rows());
        for c in &self.chunks {
            c.elements
                .for_each(|_, cid| out.push(values[c.dict.global_id(cid) as usize].clone()));
        }
        Ok(out)
    }

    /// Elements plus chunk-dictionaries, excluding the global dictionary.
    pub fn chunk_bytes(&self) -> usize {
        self.chunks.iter().map(ColumnChunk::size_bytes).sum()
    }

    pub fn elements_bytes(&self) -> usize {
        self.chunks.iter().map(|c| c.elements.payload_bytes()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ElementsKind;

    fn s(v: &str) -> Value {
        Value::from(v)
    }

    #[test]
    fn double_dictionary_encoding() {
        let vals = vec![s("b"), s("a"), s("b"), s("c"), s("c"), s("c")];
        let col = Column::encode("x", ValueKind::Str, &vals, &[0..3, 3..6]).unwrap();
        assert_eq!(col.dict.values().unwrap(), vec![s("a"), s("b"), s("c")]);
        assert_eq!(col.chunks[0].dict.global_ids(), &[0, 1]);
        assert_eq!(col.chunks[0].elements.to_ids(), vec![1, 0, 1]);
        assert_eq!(col.chunks[0].elements.kind(), ElementsKind::BitSet);
        assert_eq!(col.chunks[1].dict.global_ids(), &[2]);
        assert_eq!(col.chunks[1].elements.kind(), ElementsKind::Constant);
        assert_eq!(col.decode_all().unwrap(), vals);
        assert_eq!(col.chunk_range(0).unwrap(), Some((s("a"), s("b"))));
    }

    #[test]
    fn nulls_take_global_id_zero() {
        let vals = vec![Value::I64(5), Value::Null, Value::I64(-1)];
        let col = Column::encode("x", ValueKind::I64, &vals, &[0..3]).unwrap();
        assert_eq!(col.dict.null_id(), Some(0));
        assert_eq!(col.dict.value_at(1).unwrap(), Value::I64(-1));
        assert_eq!(col.chunk_range(0).unwrap(), Some((Value::I64(-1), Value::I64(5))));
        assert_eq!(col.decode_all().unwrap(), vals);
    }

    #[test]
    fn rejects_bad_boundaries_and_kinds() {
        let vals = vec![Value::I64(1), Value::I64(2)];
        assert!(Column::encode("x", ValueKind::I64, &vals, &[0..1]).is_err());
        assert!(Column::encode("x", ValueKind::I64, &vals, &[1..2, 0..1]).is_err());
        assert!(Column::encode("x", ValueKind::Str, &vals, &[0..2]).is_err());
    }
}
