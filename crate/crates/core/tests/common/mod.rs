//! Oracles shared by the integration targets. Nothing here calls into the
//! simulator's replacement code.

#![allow(dead_code)]

use std::collections::HashMap;

/// Fewest misses any replacement schedule can achieve on a fully
/// associative cache of `ways` lines, found by exhaustive search over every
/// eviction choice (and over not allocating, when `bypass` is set).
pub fn min_misses(blocks: &[u64], ways: usize, bypass: bool) -> u64 {
    fn go(
        pos: usize,
        resident: Vec<u64>,
        blocks: &[u64],
        ways: usize,
        bypass: bool,
        memo: &mut HashMap<(usize, Vec<u64>), u64>,
    ) -> u64 {
        if pos == blocks.len() {
            return 0;
        }
        let key = (pos, resident.clone());
        if let Some(&m) = memo.get(&key) {
            return m;
        }
        let b = blocks[pos];
        let best = if resident.contains(&b) {
            go(pos + 1, resident, blocks, ways, bypass, memo)
        } else {
            let mut options = Vec::new();
            if bypass {
                options.push(resident.clone());
            }
            if resident.len() < ways {
                let mut next = resident.clone();
                next.push(b);
                options.push(next);
            } else {
                for i in 0..resident.len() {
                    let mut next = resident.clone();
                    next[i] = b;
                    options.push(next);
                }
            }
            1 + options
                .into_iter()
                .map(|mut next| {
                    next.sort_unstable();
                    go(pos + 1, next, blocks, ways, bypass, memo)
                })
                .min()
                .unwrap()
        };
        memo.insert(key, best);
        best
    }
    go(0, Vec::new(), blocks, ways, bypass, &mut HashMap::new())
}

/// Every sequence of length `len` over at most `max_blocks` symbols, up to
/// renaming of symbols (restricted growth strings: each symbol's first
/// appearance is in increasing order).
pub fn canonical_traces(len: usize, max_blocks: u64) -> Vec<Vec<u64>> {
    fn extend(cur: &mut Vec<u64>, next_new: u64, len: usize, max: u64, out: &mut Vec<Vec<u64>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in 0..=next_new.min(max - 1) {
            cur.push(s);
            extend(cur, next_new.max(s + 1), len, max, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(len), 0, len, max_blocks, &mut out);
    out
}
