//! Set-associative cache with per-line RRPV and pluggable replacement.

use super::config::Geometry;
use super::policy::{
    PolicyKind, PolicyState, NEVER, RRPV_LONG, RRPV_MAX, SHCT_INIT, SHCT_MAX, SHIP_REGION_BYTES,
};
use super::regions::ReuseHint;
use super::stats::LevelStats;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheLine {
    pub valid: bool,
    /// Block address (byte address / block size).
    pub tag: u64,
    pub rrpv: u8,
    pub pinned: bool,
    pub lru_stamp: u64,
    pub region_sig: u64,
    pub reused: bool,
    pub next_use: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessOutcome {
    Hit,
    Miss,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CacheCounters {
    pub level: LevelStats,
    /// Indexed by `ReuseHint::bits()`.
    pub per_hint: [LevelStats; 4],
    pub evictions: u64,
    pub bypasses: u64,
    pub pinned_peak: usize,
}

#[derive(Debug, Clone)]
pub struct Cache {
    geometry: Geometry,
    block_bits: u32,
    lines: Vec<CacheLine>,
    policy: PolicyState,
    clock: u64,
    pinned: usize,
    counters: CacheCounters,
}

impl Cache {
    pub fn new(geometry: Geometry, policy: PolicyState) -> Result<Self> {
        geometry.validate()?;
        Ok(Cache {
            block_bits: geometry.block_bits(),
            lines: vec![CacheLine::default(); geometry.lines()],
            geometry,
            policy,
            clock: 0,
            pinned: 0,
            counters: CacheCounters::default(),
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn policy(&self) -> &PolicyState {
        &self.policy
    }

    pub fn counters(&self) -> &CacheCounters {
        &self.counters
    }

    pub fn set_lines(&self, set: usize) -> &[CacheLine] {
        let w = self.geometry.ways;
        &self.lines[set * w..(set + 1) * w]
    }

    pub fn lines(&self) -> &[CacheLine] {
        &self.lines
    }

    pub fn pinned_count(&self) -> usize {
        self.pinned
    }

    pub fn set_of(&self, address: u64) -> usize {
        ((address >> self.block_bits) as usize) & (self.geometry.sets - 1)
    }

    pub fn contains(&self, address: u64) -> bool {
        let block = address >> self.block_bits;
        self.set_lines(self.set_of(address))
            .iter()
            .any(|l| l.valid && l.tag == block)
    }

    pub fn access(&mut self, address: u64, is_write: bool, hint: ReuseHint) -> Result<AccessOutcome> {
        // Writes allocate and update replacement state exactly like reads.
        let _ = is_write;
        let next_use = if self.policy.kind.is_opt() {
            let table = self.policy.next_use.as_ref().ok_or(Error::MissingNextUse)?;
            let nu = *table.get(self.policy.cursor).ok_or_else(|| {
                Error::contract("more LLC accesses than next-use entries")
            })?;
            self.policy.cursor += 1;
            nu
        } else {
            NEVER
        };
        self.clock += 1;

        let block = address >> self.block_bits;
        let set = (block as usize) & (self.geometry.sets - 1);
        let base = set * self.geometry.ways;
        let hit_way = self.lines[base..base + self.geometry.ways]
            .iter()
            .position(|l| l.valid && l.tag == block);

        let outcome = match hit_way {
            Some(way) => {
                self.on_hit(base + way, hint, next_use);
                AccessOutcome::Hit
            }
            None => {
                self.on_miss(set, block, address, hint, next_use);
                AccessOutcome::Miss
            }
        };
        let hit = outcome == AccessOutcome::Hit;
        self.counters.level.record(hit);
        self.counters.per_hint[hint.bits() as usize].record(hit);
        Ok(outcome)
    }

    fn on_hit(&mut self, idx: usize, hint: ReuseHint, next_use: u64) {
        let kind = self.policy.kind;
        let clock = self.clock;
        let line = &mut self.lines[idx];
        match kind {
            PolicyKind::Lru => line.lru_stamp = clock,
            PolicyKind::Opt | PolicyKind::OptNoBypass => line.next_use = next_use,
            PolicyKind::Grasp => match hint {
                ReuseHint::High | ReuseHint::Default => line.rrpv = 0,
                ReuseHint::Moderate | ReuseHint::Low => line.rrpv = line.rrpv.saturating_sub(1),
            },
            PolicyKind::ShipMem => {
                line.rrpv = 0;
                line.reused = true;
                let ctr = self.policy.shct.entry(line.region_sig).or_insert(SHCT_INIT);
                *ctr = (*ctr + 1).min(SHCT_MAX);
            }
            PolicyKind::Drrip
            | PolicyKind::GraspInsertionOnly
            | PolicyKind::RripHints
            | PolicyKind::Pin(_) => line.rrpv = 0,
        }
    }

    fn on_miss(&mut self, set: usize, block: u64, address: u64, hint: ReuseHint, next_use: u64) {
        let kind = self.policy.kind;
        let duels = match kind {
            PolicyKind::Drrip | PolicyKind::Pin(_) => true,
            PolicyKind::Grasp | PolicyKind::GraspInsertionOnly | PolicyKind::RripHints => {
                hint == ReuseHint::Default
            }
            _ => false,
        };
        if duels {
            if let Some(d) = self.policy.dueling.as_mut() {
                d.record_miss(set);
            }
        }

        let Some(way) = self.choose_victim(set, next_use) else {
            self.counters.bypasses += 1;
            return;
        };
        let idx = set * self.geometry.ways + way;
        let old = self.lines[idx];
        if old.valid {
            self.counters.evictions += 1;
            debug_assert!(!old.pinned, "pinned lines are never victims");
            if kind == PolicyKind::ShipMem && !old.reused {
                let ctr = self.policy.shct.entry(old.region_sig).or_insert(SHCT_INIT);
                *ctr = ctr.saturating_sub(1);
            }
        }

        let mut line = CacheLine {
            valid: true,
            tag: block,
            rrpv: RRPV_MAX,
            pinned: false,
            lru_stamp: self.clock,
            region_sig: 0,
            reused: false,
            next_use,
        };
        line.rrpv = match kind {
            PolicyKind::Lru | PolicyKind::Opt | PolicyKind::OptNoBypass => 0,
            PolicyKind::Drrip => self.dueling_rrpv(set),
            PolicyKind::Grasp | PolicyKind::GraspInsertionOnly => match hint {
                ReuseHint::High => 0,
                ReuseHint::Moderate => RRPV_LONG,
                ReuseHint::Low => RRPV_MAX,
                ReuseHint::Default => self.dueling_rrpv(set),
            },
            PolicyKind::RripHints => match hint {
                ReuseHint::High => RRPV_LONG,
                ReuseHint::Moderate | ReuseHint::Low => RRPV_MAX,
                ReuseHint::Default => self.dueling_rrpv(set),
            },
            PolicyKind::ShipMem => {
                line.region_sig = address / SHIP_REGION_BYTES;
                if self.policy.shct(line.region_sig) == 0 {
                    RRPV_MAX
                } else {
                    RRPV_LONG
                }
            }
            PolicyKind::Pin(_) => {
                if hint == ReuseHint::High && self.pinned < self.policy.pin_budget {
                    line.pinned = true;
                    self.pinned += 1;
                    self.counters.pinned_peak = self.counters.pinned_peak.max(self.pinned);
                    0
                } else {
                    self.dueling_rrpv(set)
                }
            }
        };
        self.lines[idx] = line;
    }

    fn dueling_rrpv(&mut self, set: usize) -> u8 {
        self.policy
            .dueling
            .as_mut()
            .map_or(RRPV_LONG, |d| d.insertion_rrpv(set))
    }

    /// Way to fill, or `None` to bypass.
    fn choose_victim(&mut self, set: usize, incoming_next_use: u64) -> Option<usize> {
        let ways = self.geometry.ways;
        let kind = self.policy.kind;
        let lines = &mut self.lines[set * ways..(set + 1) * ways];
        if let Some(free) = lines.iter().position(|l| !l.valid) {
            return Some(free);
        }
        match kind {
            PolicyKind::Lru => lines
                .iter()
                .enumerate()
                .min_by_key(|(_, l)| l.lru_stamp)
                .map(|(w, _)| w),
            PolicyKind::Opt | PolicyKind::OptNoBypass => {
                let (way, farthest) = farthest_next_use(lines);
                (kind == PolicyKind::OptNoBypass || incoming_next_use < farthest).then_some(way)
            }
            PolicyKind::Pin(_) => rrip_victim(lines, |l| !l.pinned),
            _ => rrip_victim(lines, |_| true),
        }
    }
}

/// Lowest way holding the line referenced farthest in the future.
fn farthest_next_use(lines: &[CacheLine]) -> (usize, u64) {
    let mut best = (0, lines[0].next_use);
    for (w, l) in lines.iter().enumerate().skip(1) {
        if l.next_use > best.1 {
            best = (w, l.next_use);
        }
    }
    best
}

/// RRIP victim among `eligible` lines: the first at `RRPV_MAX`, ageing all
/// eligible lines until one gets there. `None` if nothing is eligible.
pub(crate) fn rrip_victim(lines: &mut [CacheLine], eligible: impl Fn(&CacheLine) -> bool) -> Option<usize> {
    let oldest = lines.iter().filter(|l| eligible(l)).map(|l| l.rrpv).max()?;
    let age = RRPV_MAX - oldest;
    if age > 0 {
        for l in lines.iter_mut().filter(|l| eligible(l)) {
            l.rrpv += age;
        }
    }
    lines.iter().position(|l| eligible(l) && l.rrpv == RRPV_MAX)
}
