//! Enumeration of set partitions into exactly `K` nonempty blocks.

use crate::error::{Result, SkmError};

/// Largest instance the exhaustive searches accept.
pub const MAX_EXHAUSTIVE_PARTITIONS: u128 = 1_000_000;

/// Stirling number of the second kind `S(n, k)`, saturating at `u128::MAX`.
pub fn stirling2(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    // row[j] = S(i, j)
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] = (j as u128).saturating_mul(row[j]).saturating_add(row[j - 1]);
        }
        row[0] = 0;
    }
    row[k]
}

/// Reject instances whose partition count exceeds [`MAX_EXHAUSTIVE_PARTITIONS`].
pub fn check_exhaustive_size(n: usize, k: usize) -> Result<u128> {
    if k == 0 || k > n {
        return Err(SkmError::TooManyClusters { k, n });
    }
    let count = stirling2(n, k);
    if count > MAX_EXHAUSTIVE_PARTITIONS {
        return Err(SkmError::InstanceTooLarge(format!(
            "S({n}, {k}) = {count} partitions exceeds {MAX_EXHAUSTIVE_PARTITIONS}"
        )));
    }
    Ok(count)
}

/// Visit every partition of `0..n` into exactly `k` nonempty blocks as a
/// restricted growth string (item 0 in block 0, each new block opened in order).
/// Visiting order is lexicographic in the label vector.
pub fn for_each_partition(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut labels = vec![0usize; n];
    // prefix_max[i] = max(labels[..=i])
    let mut prefix_max = vec![0usize; n];
    fn rec(
        i: usize,
        n: usize,
        k: usize,
        labels: &mut [usize],
        prefix_max: &mut [usize],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if i == n {
            if prefix_max[n - 1] + 1 == k {
                visit(labels);
            }
            return;
        }
        let prev_max = prefix_max[i - 1];
        // remaining items must still be able to open the missing blocks
        let blocks_open = prev_max + 1;
        let remaining = n - i;
        let top = (prev_max + 1).min(k - 1);
        for label in 0..=top {
            let opened = blocks_open + usize::from(label > prev_max);
            if k - opened.min(k) > remaining - 1 {
                continue;
            }
            labels[i] = label;
            prefix_max[i] = prev_max.max(label);
            rec(i + 1, n, k, labels, prefix_max, visit);
        }
    }
    if n == 0 {
        return;
    }
    labels[0] = 0;
    prefix_max[0] = 0;
    rec(1, n, k, &mut labels, &mut prefix_max, &mut visit);
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn stirling_table() {
        assert_eq!(stirling2(4, 2), 7);
        assert_eq!(stirling2(10, 3), 9330);
        assert_eq!(stirling2(6, 2), 31);
        assert_eq!(stirling2(5, 5), 1);
        assert_eq!(stirling2(3, 4), 0);
        assert_eq!(stirling2(0, 0), 1);
    }

    #[test]
    fn enumeration_counts_match_stirling() {
        for n in 1..=8 {
            for k in 1..=n {
                let mut seen = HashSet::new();
                for_each_partition(n, k, |l| {
                    assert!(seen.insert(l.to_vec()));
                });
                assert_eq!(seen.len() as u128, stirling2(n, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn size_guard() {
        assert!(check_exhaustive_size(12, 3).is_ok());
        assert!(matches!(check_exhaustive_size(20, 4), Err(SkmError::InstanceTooLarge(_))));
        assert!(check_exhaustive_size(3, 4).is_err());
    }
}
