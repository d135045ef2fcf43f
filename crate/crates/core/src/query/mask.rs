/// Fixed-length bit set over the rows of one chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowMask {
    words: Vec<u64>,
    len: usize,
}

impl RowMask {
    pub fn zeros(len: usize) -> Self {
        RowMask {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut m = RowMask {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        m.clear_tail();
        m
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut m = RowMask::zeros(len);
        for r in 0..len {
            if f(r) {
                m.set(r);
            }
        }
        m
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(w) = self.words.last_mut() {
                *w &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn set(&mut self, r: usize) {
        self.words[r / 64] |= 1 << (r % 64);
    }

    #[inline]
    pub fn get(&self, r: usize) -> bool {
        self.words[r / 64] >> (r % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and(&mut self, other: &RowMask) {
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a &= b);
    }

    pub fn or(&mut self, other: &RowMask) {
        self.words.iter_mut().zip(&other.words).for_each(|(a, b)| *a |= b);
    }

    pub fn not(&mut self) {
        self.words.iter_mut().for_each(|w| *w = !*w);
        self.clear_tail();
    }

    /// Indices of set bits, ascending.
    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matches_bool_vectors(a in proptest::collection::vec(any::<bool>(), 0..200), seed in any::<u64>()) {
            let b: Vec<bool> = a.iter().enumerate().map(|(i, _)| (seed >> (i % 64)) & 1 == 1).collect();
            let ma = RowMask::from_fn(a.len(), |i| a[i]);
            let mb = RowMask::from_fn(b.len(), |i| b[i]);
            let mut and = ma.clone();
            and.and(&mb);
            let mut or = ma.clone();
            or.or(&mb);
            let mut not = ma.clone();
            not.not();
            for i in 0..a.len() {
                prop_assert_eq!(and.get(i), a[i] && b[i]);
                prop_assert_eq!(or.get(i), a[i] || b[i]);
                prop_assert_eq!(not.get(i), !a[i]);
            }
            prop_assert_eq!(not.count(), a.iter().filter(|x| !**x).count());
            let ones: Vec<usize> = ma.ones_iter().collect();
            let expect: Vec<usize> = (0..a.len()).filter(|&i| a[i]).collect();
            prop_assert_eq!(ones, expect);
            prop_assert_eq!(RowMask::ones(a.len()).count(), a.len());
        }
    }
}
