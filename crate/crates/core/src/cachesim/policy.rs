//! Replacement policy selection and the bookkeeping each policy carries.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Geometry;
use crate::error::{Error, Result};

pub const RRPV_MAX: u8 = 7;
/// "Long" re-reference interval used by SRRIP and as the near-LRU slot.
pub const RRPV_LONG: u8 = RRPV_MAX - 1;

pub const LEADER_SETS_PER_POLICY: usize = 32;
pub const PSEL_BITS: u32 = 10;
pub const PSEL_MAX: u16 = (1 << PSEL_BITS) - 1;
pub const PSEL_INIT: u16 = 1 << (PSEL_BITS - 1);
/// BRRIP inserts at `RRPV_LONG` once every this many fills (on average).
pub const BRRIP_LONG_ODDS: u32 = 32;
const DUELING_SEED: u64 = 0x5eed_d1e1;

pub const SHIP_REGION_BYTES: u64 = 16 * 1024;
pub const SHCT_MAX: u8 = 7;
pub const SHCT_INIT: u8 = 3;

/// Never referenced again.
pub const NEVER: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Lru,
    Drrip,
    Grasp,
    /// GRASP insertion with the unmodified RRIP hit promotion.
    GraspInsertionOnly,
    /// RRIP whose bimodal choice is made by the hint instead of a coin.
    RripHints,
    ShipMem,
    /// XMem-style pinning of High-Reuse blocks with the given percentage
    /// of LLC lines reserved.
    Pin(u8),
    /// Belady MIN, allowed to bypass the incoming block.
    Opt,
    /// Belady MIN that always allocates.
    OptNoBypass,
}

impl PolicyKind {
    pub fn is_opt(self) -> bool {
        matches!(self, PolicyKind::Opt | PolicyKind::OptNoBypass)
    }

    pub fn is_rrip(self) -> bool {
        !matches!(self, PolicyKind::Lru | PolicyKind::Opt | PolicyKind::OptNoBypass)
    }

    fn uses_dueling(self) -> bool {
        matches!(
            self,
            PolicyKind::Drrip
                | PolicyKind::Grasp
                | PolicyKind::GraspInsertionOnly
                | PolicyKind::RripHints
                | PolicyKind::Pin(_)
        )
    }

    pub fn parse_list(s: &str) -> Result<Vec<PolicyKind>> {
        let list: Vec<PolicyKind> = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if list.is_empty() {
            return Err(Error::config("empty policy list"));
        }
        Ok(list)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::Lru => f.write_str("lru"),
            PolicyKind::Drrip => f.write_str("drrip"),
            PolicyKind::Grasp => f.write_str("grasp"),
            PolicyKind::GraspInsertionOnly => f.write_str("grasp-ins"),
            PolicyKind::RripHints => f.write_str("rrip-hints"),
            PolicyKind::ShipMem => f.write_str("ship"),
            PolicyKind::Pin(p) => write!(f, "pin{p}"),
            PolicyKind::Opt => f.write_str("opt"),
            PolicyKind::OptNoBypass => f.write_str("opt-nobypass"),
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "lru" => PolicyKind::Lru,
            "drrip" | "rrip" => PolicyKind::Drrip,
            "grasp" => PolicyKind::Grasp,
            "grasp-ins" => PolicyKind::GraspInsertionOnly,
            "rrip-hints" => PolicyKind::RripHints,
            "ship" | "ship-mem" => PolicyKind::ShipMem,
            "opt" => PolicyKind::Opt,
            "opt-nobypass" => PolicyKind::OptNoBypass,
            other => match other.strip_prefix("pin").and_then(|p| p.parse::<u8>().ok()) {
                Some(pct @ 1..=100) => PolicyKind::Pin(pct),
                _ => return Err(Error::config(format!("unknown policy {s:?}"))),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRole {
    SrripLeader,
    BrripLeader,
    Follower,
}

/// DRRIP set dueling between SRRIP and bimodal RRIP.
///
/// Sets are split into up to 32 constituencies; each donates one SRRIP and
/// one BRRIP leader picked by hashing the constituency index. Leader misses
/// steer a 10-bit PSEL; followers use BRRIP while its MSB is set.
#[derive(Debug, Clone)]
pub struct SetDueling {
    roles: Vec<SetRole>,
    psel: u16,
    rng: ChaCha8Rng,
}

impl SetDueling {
    pub fn new(sets: usize) -> Self {
        let constituencies = (sets / 2).clamp(1, LEADER_SETS_PER_POLICY);
        let span = sets / constituencies;
        let mut roles = vec![SetRole::Follower; sets];
        for c in 0..constituencies {
            let offset = (mix(c as u64) % span as u64) as usize;
            roles[c * span + offset] = SetRole::SrripLeader;
            if span >= 2 {
                roles[c * span + (offset + span / 2) % span] = SetRole::BrripLeader;
            }
        }
        SetDueling {
            roles,
            psel: PSEL_INIT,
            rng: ChaCha8Rng::seed_from_u64(DUELING_SEED),
        }
    }

    pub fn role(&self, set: usize) -> SetRole {
        self.roles[set]
    }

    pub fn psel(&self) -> u16 {
        self.psel
    }

    pub fn record_miss(&mut self, set: usize) {
        match self.roles[set] {
            SetRole::SrripLeader => self.psel = (self.psel + 1).min(PSEL_MAX),
            SetRole::BrripLeader => self.psel = self.psel.saturating_sub(1),
            SetRole::Follower => {}
        }
    }

    fn uses_brrip(&self, set: usize) -> bool {
        match self.roles[set] {
            SetRole::SrripLeader => false,
            SetRole::BrripLeader => true,
            SetRole::Follower => self.psel >= PSEL_INIT,
        }
    }

    pub fn insertion_rrpv(&mut self, set: usize) -> u8 {
        if self.uses_brrip(set) && !self.rng.gen_ratio(1, BRRIP_LONG_ODDS) {
            RRPV_MAX
        } else {
            RRPV_LONG
        }
    }
}

fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-cache policy state.
#[derive(Debug, Clone)]
pub struct PolicyState {
    pub(crate) kind: PolicyKind,
    pub(crate) dueling: Option<SetDueling>,
    /// SHiP-MEM signature history counters, keyed by 16KB region.
    pub(crate) shct: HashMap<u64, u8>,
    pub(crate) pin_budget: usize,
    pub(crate) next_use: Option<Vec<u64>>,
    pub(crate) cursor: usize,
}

impl PolicyState {
    pub fn new(kind: PolicyKind, geometry: &Geometry) -> Self {
        let pin_budget = match kind {
            PolicyKind::Pin(pct) => geometry.lines() * pct as usize / 100,
            _ => 0,
        };
        PolicyState {
            kind,
            dueling: kind.uses_dueling().then(|| SetDueling::new(geometry.sets)),
            shct: HashMap::new(),
            pin_budget,
            next_use: None,
            cursor: 0,
        }
    }

    /// Attaches the next-reference table OPT consults, one entry per LLC
    /// access in the order they will be presented.
    pub fn with_next_use(mut self, next_use: Vec<u64>) -> Self {
        self.next_use = Some(next_use);
        self.cursor = 0;
        self
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn pin_budget(&self) -> usize {
        self.pin_budget
    }

    pub fn dueling(&self) -> Option<&SetDueling> {
        self.dueling.as_ref()
    }

    pub fn shct(&self, region: u64) -> u8 {
        self.shct.get(&region).copied().unwrap_or(SHCT_INIT)
    }
}
