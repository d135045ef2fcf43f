//! Artifact caching: codecs, the 2Q residency policy and cache keys.

pub mod codec;
mod twoq;

pub use codec::{Codec, Identity, Lz4};
pub use twoq::{Artifact, ArtifactCache, CacheConfig, CacheStats, Policy, Residency};

use crate::error::{Error, FormatError, Result};
use crate::store::{ElementsEncoding, ElementsKind};

/// Key of a per-chunk artifact of one column.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChunkKey {
    pub table: String,
    pub shard: u32,
    pub field: String,
    pub chunk: u32,
}

/// Key of a cached chunk result: the field is the query fragment (group
/// expression plus aggregate list).
pub type ResultKey = ChunkKey;

impl Artifact for ElementsEncoding {
    fn weight(&self) -> usize {
        8 + self.payload_bytes()
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.payload_bytes());
        out.push(self.kind().tag());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        self.write_payload(&mut out);
        out
    }

    fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(FormatError::Malformed(format!("cached elements: {m}")));
        let (&tag, rest) = bytes.split_first().ok_or_else(|| bad("empty"))?;
        let kind = ElementsKind::from_tag(tag).ok_or_else(|| bad("unknown kind"))?;
        let n = u32::from_le_bytes(rest.get(..4).ok_or_else(|| bad("short"))?.try_into().expect("4 bytes"));
        let (enc, used) = ElementsEncoding::read_payload(kind, n as usize, &rest[4..])?;
        if used != rest.len() - 4 {
            return Err(bad("trailing bytes"));
        }
        Ok(enc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elements_roundtrip_as_artifacts() {
        for card in [1, 2, 200, 300, 70_000] {
            let ids: Vec<u32> = (0..500u32).map(|i| (i * 7919) % card).collect();
            let e = ElementsEncoding::encode(&ids, card as usize);
            assert_eq!(ElementsEncoding::decode(&e.encode()).unwrap(), e);
        }
        assert!(ElementsEncoding::decode(&[9]).is_err());
    }
}
