//! L1-filtered last-level cache simulation.
//!
//! A run is split in two: [`filter_l1`] pushes the raw kernel trace through
//! an LRU L1-D and keeps the misses, and [`simulate_llc`] replays that LLC
//! stream under one replacement policy. The L1 does not depend on the LLC
//! policy, so one filtered stream serves every policy and LLC size.

mod cache;
mod config;
mod opt;
mod policy;
mod regions;
mod stats;

pub use cache::{AccessOutcome, Cache, CacheCounters, CacheLine};
pub use config::{CacheConfig, Geometry};
pub use opt::{next_use_of_blocks, precompute_next_use};
pub use policy::{
    PolicyKind, PolicyState, SetDueling, SetRole, NEVER, PSEL_MAX, RRPV_LONG, RRPV_MAX,
    SHIP_REGION_BYTES,
};
pub use regions::{classify, AbrPair, PropertyRegions, RegionMap, ReuseHint};
pub use stats::{miss_elimination, miss_elimination_over, LevelStats, SimStats};

use crate::error::Result;
use crate::trace::{AccessTrace, MemoryAccess, UNTAGGED};

/// Accesses that missed in L1, stored compactly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LlcStream {
    addresses: Vec<u64>,
    /// Array tag (or `UNTAGGED`) in the low byte, write flag in bit 8.
    meta: Vec<u16>,
    pub l1: LevelStats,
}

impl LlcStream {
    pub fn push(&mut self, acc: MemoryAccess) {
        self.addresses.push(acc.address);
        self.meta
            .push(acc.array_tag.unwrap_or(UNTAGGED) as u16 | (acc.is_write as u16) << 8);
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn addresses(&self) -> &[u64] {
        &self.addresses
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = MemoryAccess> + '_ {
        self.addresses.iter().zip(&self.meta).map(|(&address, &m)| {
            let tag = (m & 0xff) as u8;
            MemoryAccess {
                address,
                is_write: m & 0x100 != 0,
                array_tag: (tag != UNTAGGED).then_some(tag),
            }
        })
    }
}

impl FromIterator<MemoryAccess> for LlcStream {
    fn from_iter<I: IntoIterator<Item = MemoryAccess>>(iter: I) -> Self {
        let mut s = LlcStream::default();
        for acc in iter {
            s.push(acc);
        }
        s
    }
}

/// Runs `accesses` through the L1 (when enabled) and collects its misses.
pub fn filter_l1(accesses: impl IntoIterator<Item = MemoryAccess>, config: &CacheConfig) -> Result<LlcStream> {
    config.validate()?;
    if !config.l1_enabled {
        return Ok(accesses.into_iter().collect());
    }
    let geometry = config.l1();
    let mut l1 = Cache::new(geometry, PolicyState::new(PolicyKind::Lru, &geometry))?;
    let mut stream = LlcStream::default();
    for acc in accesses {
        if l1.access(acc.address, acc.is_write, ReuseHint::Default)? == AccessOutcome::Miss {
            stream.push(acc);
        }
    }
    stream.l1 = l1.counters().level;
    Ok(stream)
}

/// Replays an LLC stream under `policy`, classifying each access against
/// `regions` first.
pub fn simulate_llc(
    stream: &LlcStream,
    config: &CacheConfig,
    policy: PolicyKind,
    regions: Option<&RegionMap>,
) -> Result<SimStats> {
    let llc = config.llc();
    llc.validate()?;
    let mut state = PolicyState::new(policy, &llc);
    if policy.is_opt() {
        state = state.with_next_use(precompute_next_use(stream.addresses().iter().copied(), llc.block_size));
    }
    let mut cache = Cache::new(llc, state)?;
    let mut stats = SimStats {
        l1: stream.l1,
        ..SimStats::default()
    };
    for acc in stream.iter() {
        let hint = classify(acc.address, regions);
        let outcome = cache.access(acc.address, acc.is_write, hint)?;
        stats
            .per_tag
            .entry(acc.array_tag)
            .or_default()
            .record(outcome == AccessOutcome::Hit);
    }
    let c = cache.counters();
    stats.llc = c.level;
    stats.per_hint = c.per_hint;
    stats.evictions = c.evictions;
    stats.bypasses = c.bypasses;
    stats.pinned_peak = c.pinned_peak;
    debug_assert!(stats.is_consistent());
    Ok(stats)
}

/// L1 filter followed by the LLC under `policy`.
pub fn run_simulation(
    trace: &AccessTrace,
    config: &CacheConfig,
    policy: PolicyKind,
    regions: Option<&RegionMap>,
) -> Result<SimStats> {
    let stream = filter_l1(trace.accesses.iter().copied(), config)?;
    simulate_llc(&stream, config, policy, regions)
}
