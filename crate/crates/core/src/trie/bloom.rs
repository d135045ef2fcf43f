use std::hash::Hasher;

use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

const SEED_A: u64 = 0x51_7c_c1_b7_27_22_0a_95;
const SEED_B: u64 = 0x9e_37_79_b9_7f_4a_7c_15;

/// Bloom filter over byte strings using double hashing.
///
/// Sized with `bits_per_element = ceil(-log2(fpr) / ln 2)` and
/// `k = round(bits_per_element * ln 2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BloomFilter {
    words: Vec<u64>,
    num_bits: u64,
    hashes: u32,
    items: u64,
}

fn hash_pair(value: &[u8]) -> (u64, u64) {
    let mut a = XxHash64::with_seed(SEED_A);
    a.write(value);
    let mut b = XxHash64::with_seed(SEED_B);
    b.write(value);
    (a.finish(), b.finish() | 1)
}

impl BloomFilter {
    pub fn bits_per_element(target_fpr: f64) -> u32 {
        let fpr = target_fpr.clamp(f64::MIN_POSITIVE, 0.999_999);
        (-fpr.log2() / std::f64::consts::LN_2).ceil().max(1.0) as u32
    }

    pub fn build<I, S>(values: I, target_fpr: f64) -> Self
    where
        I: IntoIterator<Item = S>,
        I::IntoIter: ExactSizeIterator,
        S: AsRef<[u8]>,
    {
        let values = values.into_iter();
        let n = values.len() as u64;
        let bpe = Self::bits_per_element(target_fpr);
        let hashes = ((bpe as f64) * std::f64::consts::LN_2).round().max(1.0) as u32;
        let num_bits = (n * bpe as u64).max(64);
        let mut filter = BloomFilter {
            words: vec![0; num_bits.div_ceil(64) as usize],
            num_bits,
            hashes,
            items: 0,
        };
        for v in values {
            filter.insert(v.as_ref());
        }
        filter
    }

    fn insert(&mut self, value: &[u8]) {
        let (h1, h2) = hash_pair(value);
        for i in 0..self.hashes as u64 {
            let bit = h1.wrapping_add(i.wrapping_mul(h2)) % self.num_bits;
            self.words[(bit / 64) as usize] |= 1 << (bit % 64);
        }
        self.items += 1;
    }

    /// `false` means definitely absent.
    pub fn maybe_contains(&self, value: &[u8]) -> bool {
        if self.items == 0 {
            return false;
        }
        let (h1, h2) = hash_pair(value);
        (0..self.hashes as u64).all(|i| {
            let bit = h1.wrapping_add(i.wrapping_mul(h2)) % self.num_bits;
            self.words[(bit / 64) as usize] & (1 << (bit % 64)) != 0
        })
    }

    pub fn size_bytes(&self) -> usize {
        self.words.len() * 8
    }

    pub fn hash_count(&self) -> u32 {
        self.hashes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameters_at_one_percent() {
        assert_eq!(BloomFilter::bits_per_element(0.01), 10);
        let f = BloomFilter::build(["a"], 0.01);
        assert_eq!(f.hash_count(), 7);
    }

    #[test]
    fn members_always_present() {
        let vals: Vec<String> = (0..2000).map(|i| format!("v{i}")).collect();
        let f = BloomFilter::build(&vals, 0.01);
        assert!(vals.iter().all(|v| f.maybe_contains(v.as_bytes())));
    }

    #[test]
    fn empty_filter_rejects_everything() {
        let f = BloomFilter::build(Vec::<&str>::new(), 0.01);
        assert!(!f.maybe_contains(b"anything"));
        assert!(!f.maybe_contains(b""));
    }

    #[test]
    fn false_positive_rate_within_twice_target() {
        let members: Vec<String> = (0..10_000).map(|i| format!("member-{i}")).collect();
        let f = BloomFilter::build(&members, 0.01);
        let probes = 100_000;
        let hits = (0..probes)
            .filter(|i| f.maybe_contains(format!("absent-{i}").as_bytes()))
            .count();
        let rate = hits as f64 / probes as f64;
        assert!(rate <= 0.02, "fpr {rate}");
    }
}
