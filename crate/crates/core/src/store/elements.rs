//! Bit-width-adaptive storage of chunk-ids.

use crate::error::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementsKind {
    Constant,
    BitSet,
    Bytes1,
    Bytes2,
    Bytes4,
}

impl ElementsKind {
    /// Encoding chosen for a chunk-dictionary of `cardinality` entries.
    pub fn for_cardinality(cardinality: usize) -> Self {
        match cardinality {
            0 | 1 => ElementsKind::Constant,
            2 => ElementsKind::BitSet,
            c if c <= 1 << 8 => ElementsKind::Bytes1,
            c if c <= 1 << 16 => ElementsKind::Bytes2,
            _ => ElementsKind::Bytes4,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ElementsKind::Constant => 0,
            ElementsKind::BitSet => 1,
            ElementsKind::Bytes1 => 2,
            ElementsKind::Bytes2 => 3,
            ElementsKind::Bytes4 => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => ElementsKind::Constant,
            1 => ElementsKind::BitSet,
            2 => ElementsKind::Bytes1,
            3 => ElementsKind::Bytes2,
            4 => ElementsKind::Bytes4,
            _ => return None,
        })
    }

    /// Payload size in bytes for `n` rows.
    pub fn payload_bytes(self, n: usize) -> usize {
        match self {
            ElementsKind::Constant => 0,
            ElementsKind::BitSet => n.div_ceil(8),
            ElementsKind::Bytes1 => n,
            ElementsKind::Bytes2 => 2 * n,
            ElementsKind::Bytes4 => 4 * n,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementsKind::Constant => "constant",
            ElementsKind::BitSet => "bitset",
            ElementsKind::Bytes1 => "bytes1",
            ElementsKind::Bytes2 => "bytes2",
            ElementsKind::Bytes4 => "bytes4",
        }
    }
}

/// The chunk-ids of one column within one chunk, in row order.
///
/// `BitSet` packs row `r` at bit `r % 8` of byte `r / 8`; multi-byte widths
/// are little-endian on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementsEncoding {
    Constant { n: u32 },
    BitSet { n: u32, bits: Vec<u8> },
    Bytes1(Vec<u8>),
    Bytes2(Vec<u16>),
    Bytes4(Vec<u32>),
}

impl ElementsEncoding {
    /// Encodes chunk-ids drawn from a chunk-dictionary of `cardinality`
    /// entries. Every id must be below `cardinality`.
    pub fn encode(ids: &[u32], cardinality: usize) -> Self {
        debug_assert!(ids.iter().all(|&id| (id as usize) < cardinality.max(1)));
        let n = ids.len() as u32;
        match ElementsKind::for_cardinality(cardinality) {
            ElementsKind::Constant => ElementsEncoding::Constant { n },
            ElementsKind::BitSet => {
                let mut bits = vec![0u8; ids.len().div_ceil(8)];
                for (r, &id) in ids.iter().enumerate() {
                    if id == 1 {
                        bits[r / 8] |= 1 << (r % 8);
                    }
                }
                ElementsEncoding::BitSet { n, bits }
            }
            ElementsKind::Bytes1 => ElementsEncoding::Bytes1(ids.iter().map(|&i| i as u8).collect()),
            ElementsKind::Bytes2 => ElementsEncoding::Bytes2(ids.iter().map(|&i| i as u16).collect()),
            ElementsKind::Bytes4 => ElementsEncoding::Bytes4(ids.to_vec()),
        }
    }

    pub fn kind(&self) -> ElementsKind {
        match self {
            ElementsEncoding::Constant { .. } => ElementsKind::Constant,
            ElementsEncoding::BitSet { .. } => ElementsKind::BitSet,
            ElementsEncoding::Bytes1(_) => ElementsKind::Bytes1,
            ElementsEncoding::Bytes2(_) => ElementsKind::Bytes2,
            ElementsEncoding::Bytes4(_) => ElementsKind::Bytes4,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ElementsEncoding::Constant { n } | ElementsEncoding::BitSet { n, .. } => *n as usize,
            ElementsEncoding::Bytes1(v) => v.len(),
            ElementsEncoding::Bytes2(v) => v.len(),
            ElementsEncoding::Bytes4(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, row: usize) -> u32 {
        match self {
            ElementsEncoding::Constant { .. } => 0,
            ElementsEncoding::BitSet { bits, .. } => ((bits[row / 8] >> (row % 8)) & 1) as u32,
            ElementsEncoding::Bytes1(v) => v[row] as u32,
            ElementsEncoding::Bytes2(v) => v[row] as u32,
            ElementsEncoding::Bytes4(v) => v[row],
        }
    }

    /// Calls `f(row, chunk_id)` for every row. The variant dispatch happens
    /// once, outside the loop.
    #[inline]
    pub fn for_each(&self, mut f: impl FnMut(usize, u32)) {
        match self {
            ElementsEncoding::Constant { n } => (0..*n as usize).for_each(|r| f(r, 0)),
            ElementsEncoding::BitSet { n, bits } => {
                for r in 0..*n as usize {
                    f(r, ((bits[r / 8] >> (r % 8)) & 1) as u32);
                }
            }
            ElementsEncoding::Bytes1(v) => v.iter().enumerate().for_each(|(r, &c)| f(r, c as u32)),
            ElementsEncoding::Bytes2(v) => v.iter().enumerate().for_each(|(r, &c)| f(r, c as u32)),
            ElementsEncoding::Bytes4(v) => v.iter().enumerate().for_each(|(r, &c)| f(r, c)),
        }
    }

    pub fn to_ids(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each(|_, c| out.push(c));
        out
    }

    pub fn payload_bytes(&self) -> usize {
        self.kind().payload_bytes(self.len())
    }

    pub fn write_payload(&self, out: &mut Vec<u8>) {
        match self {
            ElementsEncoding::Constant { .. } => {}
            ElementsEncoding::BitSet { bits, .. } => out.extend_from_slice(bits),
            ElementsEncoding::Bytes1(v) => out.extend_from_slice(v),
            ElementsEncoding::Bytes2(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            ElementsEncoding::Bytes4(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        }
    }

    /// Decodes a payload of `n` rows; returns the encoding and bytes consumed.
    pub fn read_payload(kind: ElementsKind, n: usize, bytes: &[u8]) -> Result<(Self, usize), FormatError> {
        let need = kind.payload_bytes(n);
        let p = bytes.get(..need).ok_or(FormatError::Truncated(need))?;
        let enc = match kind {
            ElementsKind::Constant => ElementsEncoding::Constant { n: n as u32 },
            ElementsKind::BitSet => ElementsEncoding::BitSet {
                n: n as u32,
                bits: p.to_vec(),
            },
            ElementsKind::Bytes1 => ElementsEncoding::Bytes1(p.to_vec()),
            ElementsKind::Bytes2 => {
                ElementsEncoding::Bytes2(p.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect())
            }
            ElementsKind::Bytes4 => ElementsEncoding::Bytes4(
                p.chunks_exact(4)
                    .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            ),
        };
        Ok((enc, need))
    }

    pub fn max_id(&self) -> Option<u32> {
        match self {
            ElementsEncoding::Constant { n } => (*n > 0).then_some(0),
            ElementsEncoding::BitSet { n, .. } if *n == 0 => None,
            ElementsEncoding::BitSet { bits, .. } => Some(bits.iter().any(|&b| b != 0) as u32),
            ElementsEncoding::Bytes1(v) => v.iter().max().map(|&x| x as u32),
            ElementsEncoding::Bytes2(v) => v.iter().max().map(|&x| x as u32),
            ElementsEncoding::Bytes4(v) => v.iter().max().copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_follows_cardinality() {
        let cases = [
            (1, ElementsKind::Constant),
            (2, ElementsKind::BitSet),
            (3, ElementsKind::Bytes1),
            (256, ElementsKind::Bytes1),
            (257, ElementsKind::Bytes2),
            (65536, ElementsKind::Bytes2),
            (65537, ElementsKind::Bytes4),
        ];
        for (c, k) in cases {
            assert_eq!(ElementsKind::for_cardinality(c), k, "cardinality {c}");
        }
    }

    #[test]
    fn bitset_layout_is_lsb_first() {
        let e = ElementsEncoding::encode(&[1, 0, 1, 0, 0, 0, 0, 0, 1], 2);
        match &e {
            ElementsEncoding::BitSet { bits, .. } => assert_eq!(bits, &vec![0b0000_0101, 0b1]),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(e.payload_bytes(), 2);
        assert_eq!(e.to_ids(), vec![1, 0, 1, 0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn payload_roundtrip_every_width() {
        for card in [1usize, 2, 3, 300, 70_000] {
            let ids: Vec<u32> = (0..97u32).map(|i| (i * 7919) % card as u32).collect();
            let e = ElementsEncoding::encode(&ids, card);
            let mut buf = Vec::new();
            e.write_payload(&mut buf);
            assert_eq!(buf.len(), e.payload_bytes());
            let (back, used) = ElementsEncoding::read_payload(e.kind(), ids.len(), &buf).unwrap();
            assert_eq!(used, buf.len());
            assert_eq!(back, e);
            assert_eq!(back.to_ids(), ids);
        }
    }

    #[test]
    fn truncated_payload_is_an_error() {
        assert!(ElementsEncoding::read_payload(ElementsKind::Bytes2, 4, &[0; 7]).is_err());
    }
}
