//! Quasi-random assignment of rows to shards.
//!
//! Rows are ordered by a seeded hash of their index and the order is cut
//! into equal contiguous parts, so shard sizes differ by at most one row.
//! Each shard keeps its rows in original order.

use pdrill_core::Value;

pub fn shard_count(rows: usize, target_rows: usize) -> usize {
    rows.div_ceil(target_rows.max(1)).max(1)
}

/// Row indices of each shard.
pub fn assign(rows: usize, target_rows: usize, seed: u64) -> Vec<Vec<usize>> {
    let k = shard_count(rows, target_rows);
    if k == 1 {
        return vec![(0..rows).collect()];
    }
    let mut order: Vec<(u64, usize)> = (0..rows).map(|i| (Value::I64(i as i64).hash64(seed), i)).collect();
    order.sort_unstable();
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for s in 0..k {
        let len = rows / k + usize::from(s < rows % k);
        let mut part: Vec<usize> = order[start..start + len].iter().map(|&(_, i)| i).collect();
        part.sort_unstable();
        out.push(part);
        start += len;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn balanced_split() {
        let parts = assign(100, 40, 1);
        assert_eq!(parts.iter().map(Vec::len).collect::<Vec<_>>(), vec![34, 33, 33]);
        assert_eq!(assign(0, 40, 1), vec![Vec::<usize>::new()]);
        assert_eq!(shard_count(80, 40), 2);
        assert_eq!(shard_count(81, 40), 3);
    }

    #[test]
    fn seed_changes_assignment() {
        assert_ne!(assign(1000, 100, 1), assign(1000, 100, 2));
        assert_eq!(assign(1000, 100, 3), assign(1000, 100, 3));
    }

    proptest! {
        #[test]
        fn assignment_is_a_partition(rows in 0usize..2000, target in 1usize..500, seed: u64) {
            let parts = assign(rows, target, seed);
            prop_assert_eq!(parts.len(), shard_count(rows, target));
            let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..rows).collect::<Vec<_>>());
            let (lo, hi) = (parts.iter().map(Vec::len).min().unwrap(), parts.iter().map(Vec::len).max().unwrap());
            prop_assert!(hi - lo <= 1);
            prop_assert!(parts.iter().all(|p| p.windows(2).all(|w| w[0] < w[1])));
        }
    }
}
