use crate::error::{Error, Result};

/// Shape of one set-associative cache level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Geometry {
    pub sets: usize,
    pub ways: usize,
    pub block_size: u64,
}

impl Geometry {
    pub fn new(sets: usize, ways: usize, block_size: u64) -> Result<Self> {
        let g = Geometry {
            sets,
            ways,
            block_size,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.block_size.is_power_of_two() {
            return Err(Error::config(format!("block size {} is not a power of two", self.block_size)));
        }
        if !self.sets.is_power_of_two() {
            return Err(Error::config(format!("set count {} is not a power of two", self.sets)));
        }
        if self.ways == 0 {
            return Err(Error::config("associativity must be at least 1"));
        }
        Ok(())
    }

    pub fn capacity(&self) -> u64 {
        self.block_size * (self.sets * self.ways) as u64
    }

    pub fn lines(&self) -> usize {
        self.sets * self.ways
    }

    pub fn block_bits(&self) -> u32 {
        self.block_size.trailing_zeros()
    }
}

/// L1-D filter in front of a shared last-level cache.
///
/// Defaults: 64B blocks, 1MB 16-way LLC, 32KB 8-way L1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheConfig {
    pub block_size: u64,
    pub llc_sets: usize,
    pub llc_ways: usize,
    pub l1_enabled: bool,
    pub l1_sets: usize,
    pub l1_ways: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            block_size: 64,
            llc_sets: 1024,
            llc_ways: 16,
            l1_enabled: true,
            l1_sets: 64,
            l1_ways: 8,
        }
    }
}

impl CacheConfig {
    /// An LLC-only configuration, mostly for tests.
    pub fn llc_only(sets: usize, ways: usize, block_size: u64) -> Self {
        CacheConfig {
            block_size,
            llc_sets: sets,
            llc_ways: ways,
            l1_enabled: false,
            ..CacheConfig::default()
        }
    }

    pub fn llc(&self) -> Geometry {
        Geometry {
            sets: self.llc_sets,
            ways: self.llc_ways,
            block_size: self.block_size,
        }
    }

    pub fn l1(&self) -> Geometry {
        Geometry {
            sets: self.l1_sets,
            ways: self.l1_ways,
            block_size: self.block_size,
        }
    }

    pub fn llc_capacity(&self) -> u64 {
        self.llc().capacity()
    }

    pub fn validate(&self) -> Result<()> {
        self.llc().validate()?;
        if self.l1_enabled {
            self.l1().validate()?;
            if self.l1().capacity() >= self.llc_capacity() {
                return Err(Error::config(format!(
                    "L1 capacity {} must be below LLC capacity {}",
                    self.l1().capacity(),
                    self.llc_capacity()
                )));
            }
        }
        Ok(())
    }

    /// Same associativity and block size, with the set count chosen to give
    /// `bytes` of LLC.
    pub fn with_llc_capacity(&self, bytes: u64) -> Result<Self> {
        let per_set = self.block_size * self.llc_ways as u64;
        if bytes == 0 || !bytes.is_multiple_of(per_set) || !(bytes / per_set).is_power_of_two() {
            return Err(Error::config(format!(
                "LLC size {bytes} is not a power-of-two multiple of {per_set} (block x ways)"
            )));
        }
        let cfg = CacheConfig {
            llc_sets: (bytes / per_set) as usize,
            ..*self
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_capacities() {
        let c = CacheConfig::default();
        assert_eq!(c.llc_capacity(), 1 << 20);
        assert_eq!(c.l1().capacity(), 32 << 10);
        c.validate().unwrap();
    }

    #[test]
    fn resize_llc() {
        let c = CacheConfig::default().with_llc_capacity(4 << 20).unwrap();
        assert_eq!(c.llc_sets, 4096);
        assert!(CacheConfig::default().with_llc_capacity(3 << 20).is_err());
        // 32KB LLC is not larger than the L1
        assert!(CacheConfig::default().with_llc_capacity(32 << 10).is_err());
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Geometry::new(3, 2, 64).is_err());
        assert!(Geometry::new(4, 0, 64).is_err());
        assert!(Geometry::new(4, 2, 48).is_err());
        assert_eq!(Geometry::new(1, 1, 64).unwrap().capacity(), 64);
    }
}
