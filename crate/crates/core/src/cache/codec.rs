use crate::error::{Error, Result};

/// Block compression for the cold cache layer.
pub trait Codec: Send + Sync + std::fmt::Debug {
    fn id(&self) -> u8;
    fn name(&self) -> &'static str;
    fn compress(&self, raw: &[u8]) -> Vec<u8>;
    fn decompress(&self, packed: &[u8]) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Codec for Identity {
    fn id(&self) -> u8 {
        0
    }

    fn name(&self) -> &'static str {
        "identity"
    }

    fn compress(&self, raw: &[u8]) -> Vec<u8> {
        raw.to_vec()
    }

    fn decompress(&self, packed: &[u8]) -> Result<Vec<u8>> {
        Ok(packed.to_vec())
    }
}

/// LZ4 block format with the uncompressed length prepended.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lz4;

impl Codec for Lz4 {
    fn id(&self) -> u8 {
        1
    }

    fn name(&self) -> &'static str {
        "lz4"
    }

    fn compress(&self, raw: &[u8]) -> Vec<u8> {
        lz4_flex::compress_prepend_size(raw)
    }

    fn decompress(&self, packed: &[u8]) -> Result<Vec<u8>> {
        lz4_flex::decompress_size_prepended(packed).map_err(|e| Error::Codec {
            codec: 1,
            message: e.to_string(),
        })
    }
}

/// Codec registered under `id`.
pub fn by_id(id: u8) -> Option<Box<dyn Codec>> {
    match id {
        0 => Some(Box::new(Identity)),
        1 => Some(Box::new(Lz4)),
        _ => None,
    }
}

pub fn by_name(name: &str) -> Option<Box<dyn Codec>> {
    match name.to_ascii_lowercase().as_str() {
        "identity" | "none" => Some(Box::new(Identity)),
        "lz4" => Some(Box::new(Lz4)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(raw in proptest::collection::vec(any::<u8>(), 0..4096)) {
            for id in [0, 1] {
                let c = by_id(id).unwrap();
                prop_assert_eq!(c.id(), id);
                prop_assert_eq!(c.decompress(&c.compress(&raw)).unwrap(), raw.clone());
            }
        }
    }

    #[test]
    fn lz4_shrinks_repetitive_input() {
        let raw: Vec<u8> = (0..10_000u32).map(|i| (i % 7) as u8).collect();
        assert!(Lz4.compress(&raw).len() < raw.len() / 4);
        let packed = Lz4.compress(&raw);
        assert!(Lz4.decompress(&packed[..packed.len() / 2]).is_err());
        assert!(by_id(9).is_none());
    }
}
