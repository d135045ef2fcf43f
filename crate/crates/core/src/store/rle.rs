//! Simplified run-length cost of bit columns under a row order.
//!
//! Each column is stored as a sequence of run-length counters. The number of
//! counters is one per column plus one for every bit change between
//! consecutive rows, i.e. `d + Σ hamming(row_i, row_{i+1})`.

use crate::error::{Error, Result};

fn check(matrix: &[Vec<bool>], order: &[usize]) -> Result<usize> {
    let d = matrix.first().map_or(0, Vec::len);
    if matrix.iter().any(|r| r.len() != d) {
        return Err(Error::Invalid("bit matrix is not rectangular".into()));
    }
    let mut seen = vec![false; matrix.len()];
    if order.len() != matrix.len() {
        return Err(Error::Invalid("order is not a permutation of the rows".into()));
    }
    for &i in order {
        if i >= matrix.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Invalid("order is not a permutation of the rows".into()));
        }
    }
    Ok(d)
}

/// Number of counters via the Hamming-distance formula.
pub fn rle_bit_cost(matrix: &[Vec<bool>], order: &[usize]) -> Result<usize> {
    let d = check(matrix, order)?;
    if order.is_empty() {
        return Ok(0);
    }
    let flips: usize = order
        .windows(2)
        .map(|w| matrix[w[0]].iter().zip(&matrix[w[1]]).filter(|(a, b)| a != b).count())
        .sum();
    Ok(d + flips)
}

/// Run lengths of every column, column-major, after reordering.
pub fn rle_encode(matrix: &[Vec<bool>], order: &[usize]) -> Result<Vec<Vec<(bool, usize)>>> {
    let d = check(matrix, order)?;
    let mut cols = Vec::with_capacity(d);
    for c in 0..d {
        let mut runs: Vec<(bool, usize)> = Vec::new();
        for &r in order {
            let bit = matrix[r][c];
            match runs.last_mut() {
                Some((b, n)) if *b == bit => *n += 1,
                _ => runs.push((bit, 1)),
            }
        }
        cols.push(runs);
    }
    Ok(cols)
}

/// Counter count of an actual [`rle_encode`] output.
pub fn rle_counters(matrix: &[Vec<bool>], order: &[usize]) -> Result<usize> {
    Ok(rle_encode(matrix, order)?.iter().map(Vec::len).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(rows: &[&[u8]]) -> Vec<Vec<bool>> {
        rows.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect()
    }

    #[test]
    fn three_by_three_example() {
        let m = bits(&[&[0, 1, 0], &[0, 1, 1], &[1, 1, 0]]);
        assert_eq!(rle_bit_cost(&m, &[0, 1, 2]).unwrap(), 6);
        assert_eq!(rle_counters(&m, &[0, 1, 2]).unwrap(), 6);
    }

    #[test]
    fn single_row_costs_one_per_column() {
        let m = bits(&[&[1, 0, 1, 1]]);
        assert_eq!(rle_bit_cost(&m, &[0]).unwrap(), 4);
    }

    #[test]
    fn reordering_alternating_rows() {
        let m = bits(&[&[0, 0], &[1, 1], &[0, 0]]);
        assert_eq!(rle_bit_cost(&m, &[0, 1, 2]).unwrap(), 6);
        assert_eq!(rle_bit_cost(&m, &[0, 2, 1]).unwrap(), 4);
    }

    #[test]
    fn rejects_bad_orders() {
        let m = bits(&[&[0], &[1]]);
        assert!(rle_bit_cost(&m, &[0, 0]).is_err());
        assert!(rle_bit_cost(&m, &[0]).is_err());
        assert!(rle_bit_cost(&[vec![true], vec![]], &[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn formula_matches_encoder(
            (m, order) in (1usize..=10, 1usize..=10).prop_flat_map(|(r, c)| {
                (
                    proptest::collection::vec(proptest::collection::vec(any::<bool>(), c), r),
                    Just((0..r).collect::<Vec<_>>()).prop_shuffle(),
                )
            })
        ) {
            prop_assert_eq!(rle_bit_cost(&m, &order).unwrap(), rle_counters(&m, &order).unwrap());
        }
    }
}
