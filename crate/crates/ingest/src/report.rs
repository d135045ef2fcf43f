//! Import report: chunk layout and per-column storage breakdown.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use pdrill_core::{Result, Shard};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EncodingUse {
    pub chunks: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColumnReport {
    pub name: String,
    pub kind: String,
    /// Global dictionary entries summed over shards.
    pub dict_entries: usize,
    pub dict_bytes: usize,
    /// Size the global dictionaries would have as sorted arrays.
    pub flat_dict_bytes: usize,
    pub trie: bool,
    pub chunk_dict_bytes: usize,
    pub elements_bytes: usize,
    /// Keyed by encoding name: constant, bitset, bytes1, bytes2, bytes4.
    pub encodings: BTreeMap<String, EncodingUse>,
}

impl ColumnReport {
    pub fn total_bytes(&self) -> usize {
        self.dict_bytes + self.chunk_dict_bytes + self.elements_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportReport {
    pub table: String,
    pub rows: usize,
    pub shards: usize,
    pub chunks: usize,
    /// Chunk counts per row-count bucket `[lo, hi)`, powers of two.
    pub chunk_histogram: Vec<(usize, usize, usize)>,
    pub columns: Vec<ColumnReport>,
    pub file_bytes: u64,
}

impl ImportReport {
    pub fn from_shards(table: &str, shards: &[Shard], file_bytes: u64) -> Result<Self> {
        let mut buckets: BTreeMap<u32, usize> = BTreeMap::new();
        for s in shards {
            for &r in s.chunk_rows() {
                *buckets.entry(bucket(r as usize)).or_default() += 1;
            }
        }
        let chunk_histogram = buckets
            .into_iter()
            .map(|(b, n)| if b == 0 { (0, 1, n) } else { (1 << (b - 1), 1 << b, n) })
            .collect();

        let mut columns: Vec<ColumnReport> = Vec::new();
        for s in shards {
            for (i, col) in s.columns().iter().enumerate() {
                if columns.len() <= i {
                    columns.push(ColumnReport {
                        name: col.name.clone(),
                        kind: col.kind.to_string(),
                        dict_entries: 0,
                        dict_bytes: 0,
                        flat_dict_bytes: 0,
                        trie: col.dict.is_trie(),
                        chunk_dict_bytes: 0,
                        elements_bytes: 0,
                        encodings: BTreeMap::new(),
                    });
                }
                let c = &mut columns[i];
                c.dict_entries += col.dict.len();
                c.dict_bytes += col.dict.size_bytes();
                c.flat_dict_bytes += col.dict.flat_size_bytes()?;
                for k in &col.chunks {
                    c.chunk_dict_bytes += k.dict.size_bytes();
                    let bytes = k.elements.payload_bytes();
                    c.elements_bytes += bytes;
                    let e = c.encodings.entry(k.elements.kind().name().to_string()).or_default();
                    e.chunks += 1;
                    e.bytes += bytes;
                }
            }
        }
        Ok(ImportReport {
            table: table.to_string(),
            rows: shards.iter().map(Shard::num_rows).sum(),
            shards: shards.len(),
            chunks: shards.iter().map(Shard::num_chunks).sum(),
            chunk_histogram,
            columns,
            file_bytes,
        })
    }

    pub fn column(&self, name: &str) -> Option<&ColumnReport> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// 0 for empty chunks, else the bit length of the row count.
fn bucket(rows: usize) -> u32 {
    usize::BITS - rows.leading_zeros()
}

impl fmt::Display for ImportReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "table {}: {} rows, {} shards, {} chunks, {} bytes on disk",
            self.table, self.rows, self.shards, self.chunks, self.file_bytes
        )?;
        writeln!(f, "chunk sizes:")?;
        for (lo, hi, n) in &self.chunk_histogram {
            writeln!(f, "  [{lo}, {hi}) rows: {n}")?;
        }
        writeln!(
            f,
            "{:<20} {:<9} {:>9} {:>12} {:>12} {:>12} {:>12}  encodings",
            "column", "kind", "distinct", "dict", "flat dict", "chunk dicts", "elements"
        )?;
        for c in &self.columns {
            let enc: Vec<String> = c
                .encodings
                .iter()
                .map(|(k, u)| format!("{k}:{}/{}B", u.chunks, u.bytes))
                .collect();
            writeln!(
                f,
                "{:<20} {:<9} {:>9} {:>12} {:>12} {:>12} {:>12}  {}{}",
                c.name,
                c.kind,
                c.dict_entries,
                c.dict_bytes,
                c.flat_dict_bytes,
                c.chunk_dict_bytes,
                c.elements_bytes,
                enc.join(" "),
                if c.trie { " (trie)" } else { "" }
            )?;
        }
        Ok(())
    }
}
