use std::collections::BTreeMap;

use super::regions::ReuseHint;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
}

impl LevelStats {
    pub fn record(&mut self, hit: bool) {
        self.accesses += 1;
        if hit {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
    }

    pub fn miss_rate(&self) -> f64 {
        if self.accesses == 0 {
            0.0
        } else {
            self.misses as f64 / self.accesses as f64
        }
    }
}

impl std::ops::AddAssign for LevelStats {
    fn add_assign(&mut self, rhs: Self) {
        self.accesses += rhs.accesses;
        self.hits += rhs.hits;
        self.misses += rhs.misses;
    }
}

/// Outcome of replaying one trace through L1 and the LLC.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimStats {
    pub l1: LevelStats,
    pub llc: LevelStats,
    /// LLC traffic by array tag; `None` collects untagged accesses.
    pub per_tag: BTreeMap<Option<u8>, LevelStats>,
    /// LLC traffic by reuse hint, indexed by `ReuseHint::bits()`.
    pub per_hint: [LevelStats; 4],
    pub evictions: u64,
    pub bypasses: u64,
    pub pinned_peak: usize,
}

impl SimStats {
    pub fn llc_misses(&self) -> u64 {
        self.llc.misses
    }

    pub fn hint(&self, hint: ReuseHint) -> LevelStats {
        self.per_hint[hint.bits() as usize]
    }

    /// Checks the accounting identities; used by tests and debug builds.
    pub fn is_consistent(&self) -> bool {
        let level_ok = |s: &LevelStats| s.hits + s.misses == s.accesses;
        let sum = |it: &mut dyn Iterator<Item = LevelStats>| {
            it.fold(LevelStats::default(), |mut acc, s| {
                acc += s;
                acc
            })
        };
        level_ok(&self.l1)
            && level_ok(&self.llc)
            && self.per_tag.values().all(level_ok)
            && sum(&mut self.per_tag.values().copied()) == self.llc
            && sum(&mut self.per_hint.iter().copied()) == self.llc
    }
}

/// Percentage of `baseline` LLC misses that `candidate` removes; 0 when the
/// baseline has no misses.
pub fn miss_elimination_over(baseline: &SimStats, candidate: &SimStats) -> f64 {
    miss_elimination(baseline.llc_misses(), candidate.llc_misses())
}

pub fn miss_elimination(baseline_misses: u64, candidate_misses: u64) -> f64 {
    if baseline_misses == 0 {
        return 0.0;
    }
    100.0 * (baseline_misses as f64 - candidate_misses as f64) / baseline_misses as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_misses(misses: u64) -> SimStats {
        SimStats {
            llc: LevelStats {
                accesses: 2000,
                hits: 2000 - misses,
                misses,
            },
            ..SimStats::default()
        }
    }

    #[test]
    fn elimination_arithmetic() {
        assert_eq!(miss_elimination_over(&with_misses(1000), &with_misses(800)), 20.0);
        assert_eq!(miss_elimination_over(&with_misses(1000), &with_misses(1000)), 0.0);
        assert_eq!(miss_elimination_over(&with_misses(0), &with_misses(0)), 0.0);
        assert_eq!(miss_elimination(100, 150), -50.0);
    }
}
