//! Binary shard files.
//!
//! ```text
//! "PDRL" u16 version u32 shard_id u16+bytes table_name
//! u16 field_count { u16+bytes name, u8 kind, u8 nullable }*
//! per field: u8 repr, u64 payload_len, payload
//!     repr 0: u32 count, u8 has_null, non-null values
//!     repr 1: u8 has_null, trie arena
//! u32 chunk_count
//! per chunk: u32 rows, per field: u32 n, n x u32 global-id, u8 elements tag, payload
//! u8 checksum tag, u64 checksum of every preceding byte
//! ```
//! All integers little-endian. Strings are u32 length + UTF-8 in value
//! payloads, u16 length + UTF-8 in names.

use std::hash::Hasher;
use std::path::Path;

use twox_hash::XxHash64;

use super::{ChunkDictionary, Column, ColumnChunk, DictRepr, ElementsEncoding, ElementsKind, GlobalDictionary, Shard};
use crate::error::{Error, FormatError, Result};
use crate::schema::{Field, Schema};
use crate::trie::TrieDictionary;
use crate::value::{Value, ValueKind};

pub const MAGIC: &[u8; 4] = b"PDRL";
pub const VERSION: u16 = 1;
pub const CHECKSUM_XXH64: u8 = 1;

fn xxh64(bytes: &[u8]) -> u64 {
    let mut h = XxHash64::with_seed(0);
    h.write(bytes);
    h.finish()
}

fn put_name(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| Error::Schema(format!("name too long: {} bytes", s.len())))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_value(out: &mut Vec<u8>, v: &Value) {
    match v {
        Value::Null => {}
        Value::Str(s) => {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        Value::I64(x) | Value::Timestamp(x) => out.extend_from_slice(&x.to_le_bytes()),
        Value::F64(x) => out.extend_from_slice(&x.to_bits().to_le_bytes()),
        Value::Date(d) => out.extend_from_slice(&d.to_le_bytes()),
    }
}

fn dictionary_payload(dict: &GlobalDictionary) -> (u8, Vec<u8>) {
    let mut p = Vec::new();
    match dict.repr() {
        DictRepr::SortedArray(values) => {
            let has_null = dict.null_id().is_some();
            p.extend_from_slice(&((values.len() - has_null as usize) as u32).to_le_bytes());
            p.push(has_null as u8);
            for v in values.iter().skip(has_null as usize) {
                put_value(&mut p, v);
            }
            (0, p)
        }
        DictRepr::Trie { has_null, trie } => {
            p.push(*has_null as u8);
            p.extend_from_slice(trie.arena());
            (1, p)
        }
    }
}

pub fn encode_shard(shard: &Shard) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&shard.id.to_le_bytes());
    put_name(&mut out, &shard.schema.table_name)?;
    out.extend_from_slice(&(shard.schema.len() as u16).to_le_bytes());
    for f in &shard.schema.fields {
        put_name(&mut out, &f.name)?;
        out.push(f.kind.tag());
        out.push(f.nullable as u8);
    }
    for col in shard.columns() {
        let (tag, payload) = dictionary_payload(&col.dict);
        out.push(tag);
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
    }
    out.extend_from_slice(&(shard.num_chunks() as u32).to_le_bytes());
    for (k, &rows) in shard.chunk_rows().iter().enumerate() {
        out.extend_from_slice(&rows.to_le_bytes());
        for col in shard.columns() {
            let c = &col.chunks[k];
            out.extend_from_slice(&(c.dict.len() as u32).to_le_bytes());
            for &g in c.dict.global_ids() {
                out.extend_from_slice(&g.to_le_bytes());
            }
            out.push(c.elements.kind().tag());
            c.elements.write_payload(&mut out);
        }
    }
    out.push(CHECKSUM_XXH64);
    let sum = xxh64(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).ok_or(FormatError::Truncated(self.pos))?;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or(FormatError::Truncated(self.buf.len()))?;
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, FormatError> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16, FormatError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn name(&mut self) -> Result<String, FormatError> {
        let n = self.u16()? as usize;
        utf8(self.take(n)?)
    }
    fn value(&mut self, kind: ValueKind) -> Result<Value, FormatError> {
        Ok(match kind {
            ValueKind::Str => {
                let n = self.u32()? as usize;
                Value::Str(utf8(self.take(n)?)?)
            }
            ValueKind::I64 => Value::I64(self.u64()? as i64),
            ValueKind::Timestamp => Value::Timestamp(self.u64()? as i64),
            ValueKind::F64 => Value::F64(f64::from_bits(self.u64()?)),
            ValueKind::Date => Value::Date(self.u32()? as i32),
        })
    }
}

fn utf8(b: &[u8]) -> Result<String, FormatError> {
    String::from_utf8(b.to_vec()).map_err(|_| FormatError::Malformed("invalid UTF-8".into()))
}

fn malformed(e: Error) -> Error {
    match e {
        Error::Format(f) => Error::Format(f),
        other => Error::Format(FormatError::Malformed(other.to_string())),
    }
}

fn read_dictionary(kind: ValueKind, tag: u8, payload: &[u8]) -> Result<GlobalDictionary> {
    let mut r = Reader { buf: payload, pos: 0 };
    let dict = match tag {
        0 => {
            let count = r.u32()? as usize;
            let has_null = r.u8()? != 0;
            let mut values = Vec::with_capacity(count.min(payload.len()) + has_null as usize);
            if has_null {
                values.push(Value::Null);
            }
            for _ in 0..count {
                values.push(r.value(kind)?);
            }
            GlobalDictionary::from_sorted(kind, values).map_err(malformed)?
        }
        1 => {
            if kind != ValueKind::Str {
                return Err(FormatError::Malformed(format!("trie dictionary for {kind} column")).into());
            }
            let has_null = r.u8()? != 0;
            let trie = TrieDictionary::from_arena(r.take(payload.len() - 1)?.to_vec()).map_err(malformed)?;
            GlobalDictionary::from_trie(has_null, trie)
        }
        t => return Err(FormatError::Malformed(format!("unknown dictionary representation {t}")).into()),
    };
    if r.pos != payload.len() {
        return Err(FormatError::Malformed("trailing bytes in dictionary block".into()).into());
    }
    Ok(dict)
}

pub fn decode_shard(bytes: &[u8]) -> Result<Shard> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic.into());
    }
    let mut r = Reader { buf: bytes, pos: 4 };
    let version = r.u16()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    // the checksum covers everything up to and including its tag byte
    if bytes.len() < 4 + 2 + 9 {
        return Err(FormatError::Truncated(bytes.len()).into());
    }
    let body_end = bytes.len() - 9;
    let tag = bytes[body_end];
    if tag != CHECKSUM_XXH64 {
        return Err(FormatError::UnknownChecksum(tag).into());
    }
    let stored = u64::from_le_bytes(bytes[body_end + 1..].try_into().unwrap());
    let computed = xxh64(&bytes[..=body_end]);
    if stored != computed {
        return Err(FormatError::ChecksumMismatch { stored, computed }.into());
    }
    let mut r = Reader {
        buf: &bytes[..body_end],
        pos: r.pos,
    };

    let id = r.u32()?;
    let table_name = r.name()?;
    let nfields = r.u16()? as usize;
    let mut fields = Vec::with_capacity(nfields);
    for _ in 0..nfields {
        let name = r.name()?;
        let t = r.u8()?;
        let kind = ValueKind::from_tag(t).ok_or_else(|| FormatError::Malformed(format!("unknown kind tag {t}")))?;
        let nullable = r.u8()? != 0;
        fields.push(Field::new(name, kind, nullable));
    }
    let schema = Schema::new(table_name, fields).map_err(malformed)?;

    let mut dicts = Vec::with_capacity(nfields);
    for f in &schema.fields {
        let tag = r.u8()?;
        let len = usize::try_from(r.u64()?).map_err(|_| FormatError::Truncated(r.pos))?;
        dicts.push(read_dictionary(f.kind, tag, r.take(len)?)?);
    }

    let nchunks = r.u32()? as usize;
    let mut chunks: Vec<Vec<ColumnChunk>> = (0..nfields).map(|_| Vec::new()).collect();
    for _ in 0..nchunks {
        let rows = r.u32()? as usize;
        for col_chunks in chunks.iter_mut() {
            let n = r.u32()? as usize;
            let raw = r.take(n.checked_mul(4).ok_or(FormatError::Truncated(r.pos))?)?;
            let ids = raw
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let dict = ChunkDictionary::new(ids).map_err(malformed)?;
            let t = r.u8()?;
            let kind =
                ElementsKind::from_tag(t).ok_or_else(|| FormatError::Malformed(format!("unknown elements tag {t}")))?;
            if kind != ElementsKind::for_cardinality(dict.len()) {
                return Err(FormatError::Malformed(format!(
                    "elements encoding {} for chunk-dictionary of {}",
                    kind.name(),
                    dict.len()
                ))
                .into());
            }
            let (elements, used) = ElementsEncoding::read_payload(kind, rows, &r.buf[r.pos..])
                .map_err(|_| FormatError::Truncated(r.buf.len()))?;
            r.pos += used;
            col_chunks.push(ColumnChunk { dict, elements });
        }
    }
    if r.pos != body_end {
        return Err(FormatError::Malformed(format!("{} trailing bytes", body_end - r.pos)).into());
    }

    let columns = schema
        .fields
        .iter()
        .zip(dicts)
        .zip(chunks)
        .map(|((f, d), c)| Column::from_parts(f.name.clone(), f.kind, d, c).map_err(malformed))
        .collect::<Result<Vec<_>>>()?;
    Shard::from_columns(id, schema, columns).map_err(malformed)
}

pub fn write_shard(path: &Path, shard: &Shard) -> Result<()> {
    std::fs::write(path, encode_shard(shard)?)?;
    Ok(())
}

pub fn read_shard(path: &Path) -> Result<Shard> {
    decode_shard(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{ShardOptions, Table};

    fn shard(trie: bool) -> Shard {
        let schema = Schema::new(
            "events",
            vec![
                Field::new("s", ValueKind::Str, true),
                Field::new("i", ValueKind::I64, false),
                Field::new("f", ValueKind::F64, false),
                Field::new("d", ValueKind::Date, false),
                Field::new("t", ValueKind::Timestamp, false),
            ],
        )
        .unwrap();
        let rows = (0..300)
            .map(|i| {
                vec![
                    if i % 7 == 0 {
                        Value::Null
                    } else {
                        Value::Str(format!("v{}", i % 40))
                    },
                    Value::I64(i as i64 * 1000 - 5),
                    Value::F64(i as f64 / 4.0),
                    Value::Date(15_000 + (i % 3)),
                    Value::Timestamp(1_300_000_000 + i as i64),
                ]
            })
            .collect();
        let t = Table::from_rows(schema, rows).unwrap();
        let opts = ShardOptions {
            trie_strings: trie,
            parallel: false,
        };
        Shard::build(3, &t, &[0..100, 100..290, 290..300], opts).unwrap()
    }

    #[test]
    fn roundtrip() {
        for trie in [false, true] {
            let s = shard(trie);
            let bytes = encode_shard(&s).unwrap();
            let back = decode_shard(&bytes).unwrap();
            assert_eq!(back.id, 3);
            assert_eq!(back.schema, s.schema);
            assert_eq!(back.chunk_rows(), s.chunk_rows());
            for (a, b) in back.columns().iter().zip(s.columns()) {
                assert_eq!(**a, **b);
            }
            assert_eq!(encode_shard(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn header_errors_are_distinct() {
        let bytes = encode_shard(&shard(true)).unwrap();

        let mut b = bytes.clone();
        b[0] = b'X';
        assert!(matches!(decode_shard(&b), Err(Error::Format(FormatError::BadMagic))));

        let mut b = bytes.clone();
        b[4] = 9;
        assert!(matches!(
            decode_shard(&b),
            Err(Error::Format(FormatError::UnsupportedVersion(9)))
        ));

        let mut b = bytes.clone();
        b[40] ^= 0x10;
        assert!(matches!(
            decode_shard(&b),
            Err(Error::Format(FormatError::ChecksumMismatch { .. }))
        ));

        let mut b = bytes.clone();
        let n = b.len();
        b[n - 9] = 7;
        assert!(matches!(
            decode_shard(&b),
            Err(Error::Format(FormatError::UnknownChecksum(7)))
        ));

        assert!(matches!(
            decode_shard(&bytes[..5]),
            Err(Error::Format(FormatError::Truncated(_)))
        ));
    }

    #[test]
    fn truncation_never_panics() {
        let bytes = encode_shard(&shard(false)).unwrap();
        for cut in (0..bytes.len()).step_by(37) {
            assert!(decode_shard(&bytes[..cut]).is_err());
        }
    }
}
