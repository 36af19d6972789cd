//! Next-reference tables for Belady's MIN.

use std::collections::HashMap;

use super::policy::NEVER;

/// `next_use[i]` is the smallest `j > i` with `blocks[j] == blocks[i]`, or
/// [`NEVER`].
pub fn next_use_of_blocks(blocks: &[u64]) -> Vec<u64> {
    let mut next_use = vec![NEVER; blocks.len()];
    let mut last_seen: HashMap<u64, u64> = HashMap::with_capacity(blocks.len().min(1 << 20));
    for (i, &b) in blocks.iter().enumerate().rev() {
        if let Some(j) = last_seen.insert(b, i as u64) {
            next_use[i] = j;
        }
    }
    next_use
}

/// Next-use table over byte addresses, grouped by `block_size` blocks.
pub fn precompute_next_use(addresses: impl IntoIterator<Item = u64>, block_size: u64) -> Vec<u64> {
    let bits = block_size.trailing_zeros();
    let blocks: Vec<u64> = addresses.into_iter().map(|a| a >> bits).collect();
    next_use_of_blocks(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(blocks: &[u64]) -> Vec<u64> {
        (0..blocks.len())
            .map(|i| {
                (i + 1..blocks.len())
                    .find(|&j| blocks[j] == blocks[i])
                    .map_or(NEVER, |j| j as u64)
            })
            .collect()
    }

    #[test]
    fn small_examples() {
        assert_eq!(next_use_of_blocks(&[1, 2, 1]), vec![2, NEVER, NEVER]);
        assert_eq!(next_use_of_blocks(&[1, 2, 3]), vec![NEVER; 3]);
        assert!(next_use_of_blocks(&[]).is_empty());
    }

    #[test]
    fn groups_by_block() {
        // 0x00 and 0x3f share a 64B block; 0x40 does not
        assert_eq!(precompute_next_use([0x00, 0x40, 0x3f], 64), vec![2, NEVER, NEVER]);
    }

    proptest! {
        #[test]
        fn matches_forward_scan(blocks in prop::collection::vec(0u64..16, 0..1000)) {
            prop_assert_eq!(next_use_of_blocks(&blocks), brute_force(&blocks));
        }
    }
}
