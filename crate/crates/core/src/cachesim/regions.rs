//! Address-bound registers and the reuse classification derived from them.
//!
//! Software writes the bounds of each Property array into an ABR pair. The
//! first LLC-sized slice of each array (capacity split evenly across arrays)
//! is the High Reuse region, the slice right after it the Moderate Reuse
//! region; everything else is Low. Without ABRs every access is Default.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::trace::MemoryLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AbrPair {
    pub start: u64,
    pub end: u64,
}

impl AbrPair {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if start >= end {
            return Err(Error::config(format!("empty ABR range [{start:#x}, {end:#x})")));
        }
        Ok(AbrPair { start, end })
    }
}

/// Two-bit reuse hint sent along with every LLC request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReuseHint {
    Default = 0b00,
    Low = 0b01,
    Moderate = 0b10,
    High = 0b11,
}

impl ReuseHint {
    pub const ALL: [ReuseHint; 4] = [
        ReuseHint::High,
        ReuseHint::Moderate,
        ReuseHint::Low,
        ReuseHint::Default,
    ];

    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            0b00 => Some(ReuseHint::Default),
            0b01 => Some(ReuseHint::Low),
            0b10 => Some(ReuseHint::Moderate),
            0b11 => Some(ReuseHint::High),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReuseHint::High => "high",
            ReuseHint::Moderate => "moderate",
            ReuseHint::Low => "low",
            ReuseHint::Default => "default",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyRegions {
    pub abr: AbrPair,
    pub high: Range<u64>,
    /// Empty when the array ends inside the High region.
    pub moderate: Range<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    region_size: u64,
    arrays: Vec<PropertyRegions>,
}

impl RegionMap {
    pub fn new(abrs: &[AbrPair], llc_capacity: u64) -> Result<Self> {
        if abrs.is_empty() {
            return Err(Error::config("region map needs at least one ABR pair"));
        }
        let mut sorted = abrs.to_vec();
        sorted.sort_by_key(|a| a.start);
        if let Some(w) = sorted.windows(2).find(|w| w[0].end > w[1].start) {
            return Err(Error::config(format!(
                "ABR ranges overlap: [{:#x}, {:#x}) and [{:#x}, {:#x})",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
        let region_size = llc_capacity / abrs.len() as u64;
        if region_size == 0 {
            return Err(Error::config("LLC capacity too small to split across ABRs"));
        }
        let arrays = abrs
            .iter()
            .map(|&abr| {
                let high_end = abr.start.saturating_add(region_size).min(abr.end);
                let mod_end = high_end.saturating_add(region_size).min(abr.end);
                PropertyRegions {
                    abr,
                    high: abr.start..high_end,
                    moderate: high_end..mod_end,
                }
            })
            .collect();
        Ok(RegionMap {
            region_size,
            arrays,
        })
    }

    /// ABRs set to the bounds of every Property array in `layout`.
    pub fn from_layout(layout: &MemoryLayout, llc_capacity: u64) -> Result<Self> {
        let abrs = layout
            .property_arrays()
            .map(|(_, a)| AbrPair::new(a.base, a.end()))
            .collect::<Result<Vec<_>>>()?;
        RegionMap::new(&abrs, llc_capacity)
    }

    pub fn region_size(&self) -> u64 {
        self.region_size
    }

    pub fn arrays(&self) -> &[PropertyRegions] {
        &self.arrays
    }

    pub fn classify(&self, address: u64) -> ReuseHint {
        if self.arrays.iter().any(|r| r.high.contains(&address)) {
            ReuseHint::High
        } else if self.arrays.iter().any(|r| r.moderate.contains(&address)) {
            ReuseHint::Moderate
        } else {
            ReuseHint::Low
        }
    }
}

pub fn classify(address: u64, regions: Option<&RegionMap>) -> ReuseHint {
    regions.map_or(ReuseHint::Default, |r| r.classify(address))
}
