//! Cache geometry, addressing, per-block metadata and the prediction table.
//!
//! Way layout within a set is fixed: ways `0..ways_sram` are SRAM and
//! `ways_sram..ways_total` are STT-RAM.

use std::fmt;
use std::ops::Range;

use crate::error::{AddressError, GeometryError};

pub const DEFAULT_ADDRESS_BITS: u32 = 48;
pub const DEFAULT_BLOCK_SIZE: u64 = 64;
pub const DEFAULT_PREDICTION_ENTRIES: usize = 4096;
pub const DEFAULT_THRESHOLD: u8 = 7;

/// Byte address bounded by a configurable address-space width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(u64);

impl Address {
    pub fn new(value: u64) -> Result<Self, AddressError> {
        Self::with_bits(value, DEFAULT_ADDRESS_BITS)
    }

    pub fn with_bits(value: u64, bits: u32) -> Result<Self, AddressError> {
        if bits < 64 && value >> bits != 0 {
            return Err(AddressError::OutOfRange { addr: value, bits });
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::LowerHex for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerHex::fmt(&self.0, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Sram,
    SttRam,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Sram => "sram",
            Region::SttRam => "sttram",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheGeometry {
    capacity_bytes: u64,
    block_size: u64,
    ways_sram: usize,
    ways_sttram: usize,
    sets: u64,
    block_shift: u32,
    set_shift: u32,
}

impl CacheGeometry {
    pub fn new(
        capacity_bytes: u64,
        block_size: u64,
        ways_sram: usize,
        ways_sttram: usize,
    ) -> Result<Self, GeometryError> {
        if block_size == 0 || !block_size.is_power_of_two() {
            return Err(GeometryError::BlockSizeNotPowerOfTwo(block_size));
        }
        let ways = ways_sram + ways_sttram;
        if ways == 0 {
            return Err(GeometryError::NoWays);
        }
        let set_bytes = block_size * ways as u64;
        if capacity_bytes == 0 || capacity_bytes % set_bytes != 0 {
            return Err(GeometryError::UnevenCapacity {
                capacity: capacity_bytes,
                block_size,
                ways,
            });
        }
        let sets = capacity_bytes / set_bytes;
        if !sets.is_power_of_two() {
            return Err(GeometryError::SetsNotPowerOfTwo(sets));
        }
        Ok(Self {
            capacity_bytes,
            block_size,
            ways_sram,
            ways_sttram,
            sets,
            block_shift: block_size.trailing_zeros(),
            set_shift: sets.trailing_zeros(),
        })
    }

    /// The 16KB, 64B-block, 2+2-way data cache of the reference system.
    pub fn default_l1() -> Self {
        Self::new(16 * 1024, DEFAULT_BLOCK_SIZE, 2, 2).expect("valid default geometry")
    }

    pub fn capacity_bytes(&self) -> u64 {
        self.capacity_bytes
    }
    pub fn block_size(&self) -> u64 {
        self.block_size
    }
    pub fn ways_sram(&self) -> usize {
        self.ways_sram
    }
    pub fn ways_sttram(&self) -> usize {
        self.ways_sttram
    }
    pub fn ways_total(&self) -> usize {
        self.ways_sram + self.ways_sttram
    }
    pub fn sets(&self) -> u64 {
        self.sets
    }
    pub fn blocks(&self) -> u64 {
        self.sets * self.ways_total() as u64
    }

    pub fn region_of(&self, way: usize) -> Region {
        if way < self.ways_sram {
            Region::Sram
        } else {
            Region::SttRam
        }
    }

    pub fn ways_of(&self, region: Region) -> Range<usize> {
        match region {
            Region::Sram => 0..self.ways_sram,
            Region::SttRam => self.ways_sram..self.ways_total(),
        }
    }

    pub fn region_bytes(&self, region: Region) -> u64 {
        self.sets * self.block_size * self.ways_of(region).len() as u64
    }

    pub fn is_hybrid(&self) -> bool {
        self.ways_sram > 0 && self.ways_sttram > 0
    }

    /// Same capacity and associativity with every way in one region.
    pub fn single_region(&self, region: Region) -> Self {
        let ways = self.ways_total();
        let (s, t) = match region {
            Region::Sram => (ways, 0),
            Region::SttRam => (0, ways),
        };
        Self {
            ways_sram: s,
            ways_sttram: t,
            ..*self
        }
    }

    /// Rebuilds a byte address from a resident block's tag and set.
    #[inline]
    pub fn block_address(&self, tag: u64, set_index: u64) -> u64 {
        ((tag << self.set_shift) | set_index) << self.block_shift
    }
}

/// Splits an address into `(tag, set_index, block_offset)`.
#[inline]
pub fn decompose_address(addr: Address, geo: &CacheGeometry) -> (u64, u64, u64) {
    let a = addr.value();
    let offset = a & (geo.block_size - 1);
    let block = a >> geo.block_shift;
    let set = block & (geo.sets - 1);
    let tag = block >> geo.set_shift;
    (tag, set, offset)
}

/// Direct-mapped prediction-table slot: `(addr / block_size) % entries`.
#[inline]
pub fn prediction_index(addr: u64, block_size: u64, entries: usize) -> usize {
    debug_assert!(entries > 0);
    ((addr / block_size) % entries as u64) as usize
}

/// Saturation bound for the read/write intensity counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Threshold(u8);

impl Threshold {
    pub fn new(value: u32) -> Result<Self, GeometryError> {
        if value == 0 || value > u8::MAX as u32 {
            return Err(GeometryError::Threshold(value));
        }
        Ok(Self(value as u8))
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    /// Bits needed to hold `0..=value`.
    pub fn counter_width(self) -> u32 {
        u8::BITS - self.0.leading_zeros()
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self(DEFAULT_THRESHOLD)
    }
}

/// 2-bit confidence state, 00 through 11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Conf(u8);

impl Conf {
    pub const MAX: Conf = Conf(3);

    pub fn new(v: u8) -> Option<Self> {
        (v <= 3).then_some(Self(v))
    }

    #[inline]
    pub fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub fn is_max(self) -> bool {
        self.0 == 3
    }

    /// Next state, staying at 11.
    #[inline]
    pub fn advance(self) -> Self {
        Self((self.0 + 1).min(3))
    }
}

impl fmt::Display for Conf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

pub fn conf_advance(conf: Conf) -> Conf {
    conf.advance()
}

/// Id of the last write applied to a block; 0 means never written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ContentTag(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BlockMeta {
    pub valid: bool,
    pub dirty: bool,
    pub tag: u64,
    pub ric: u8,
    pub wic: u8,
    pub conf: Conf,
    pub content: ContentTag,
}

impl BlockMeta {
    pub const INVALID: BlockMeta = BlockMeta {
        valid: false,
        dirty: false,
        tag: 0,
        ric: 0,
        wic: 0,
        conf: Conf(0),
        content: ContentTag(0),
    };

    /// Freshly filled block with zeroed counters.
    pub fn filled(tag: u64, content: ContentTag) -> Self {
        Self {
            valid: true,
            tag,
            content,
            ..Self::INVALID
        }
    }

    #[inline]
    pub fn holds(&self, tag: u64) -> bool {
        self.valid && self.tag == tag
    }

    pub(crate) fn reset_counters(&mut self) {
        self.ric = 0;
        self.wic = 0;
        self.conf = Conf(0);
    }

    /// Metadata invariants for a block under `threshold`.
    pub fn is_consistent(&self, threshold: Threshold) -> bool {
        if !self.valid {
            return *self == Self::INVALID;
        }
        self.ric <= threshold.value() && self.wic <= threshold.value() && self.conf.0 <= 3
    }
}

/// One PR bit per entry; a set bit steers a missing block into SRAM.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredictionTable {
    bits: Vec<bool>,
}

impl PredictionTable {
    pub fn new(entries: usize) -> Self {
        Self {
            bits: vec![true; entries],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    #[inline]
    pub fn set(&mut self, index: usize, pr: bool) {
        self.bits[index] = pr;
    }

    pub fn reset(&mut self) {
        self.bits.fill(true);
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageOverhead {
    pub metadata_bits: u64,
    pub table_bits: u64,
    /// Percentage of `8 * total_cache_bytes`.
    pub percent_of_cache: f64,
}

/// Extra state the proposed design adds: two counters plus CONF per block,
/// and one PR bit per table entry. `total_cache_bytes` is the L1 budget the
/// overhead is reported against.
pub fn storage_overhead(
    geo: &CacheGeometry,
    entries: usize,
    threshold: Threshold,
    total_cache_bytes: u64,
) -> StorageOverhead {
    let per_block = 2 * threshold.counter_width() as u64 + 2;
    let metadata_bits = geo.blocks() * per_block;
    let table_bits = entries as u64;
    let percent_of_cache =
        100.0 * (metadata_bits + table_bits) as f64 / (8 * total_cache_bytes) as f64;
    StorageOverhead {
        metadata_bits,
        table_bits,
        percent_of_cache,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geo16k() -> CacheGeometry {
        CacheGeometry::new(16 * 1024, 64, 2, 2).unwrap()
    }

    // Arithmetic decomposition, independent of the shift/mask path.
    fn oracle(addr: u64, geo: &CacheGeometry) -> (u64, u64, u64) {
        let bs = geo.block_size();
        let sets = geo.sets();
        (addr / bs / sets, (addr / bs) % sets, addr % bs)
    }

    #[test]
    fn geometry_of_reference_cache() {
        let g = geo16k();
        assert_eq!(g.sets(), 64);
        assert_eq!(g.blocks(), 256);
        assert_eq!(g.ways_of(Region::Sram), 0..2);
        assert_eq!(g.ways_of(Region::SttRam), 2..4);
        assert_eq!(g.region_of(1), Region::Sram);
        assert_eq!(g.region_of(2), Region::SttRam);
        assert_eq!(g.region_bytes(Region::Sram), 8 * 1024);
    }

    #[test]
    fn geometry_rejects_bad_shapes() {
        assert!(matches!(
            CacheGeometry::new(16384, 48, 2, 2),
            Err(GeometryError::BlockSizeNotPowerOfTwo(48))
        ));
        assert!(matches!(CacheGeometry::new(16384, 64, 0, 0), Err(GeometryError::NoWays)));
        assert!(matches!(
            CacheGeometry::new(1000, 64, 2, 2),
            Err(GeometryError::UnevenCapacity { .. })
        ));
        assert!(matches!(
            CacheGeometry::new(64 * 3 * 4, 64, 2, 2),
            Err(GeometryError::SetsNotPowerOfTwo(3))
        ));
        // Table-7 style degenerate splits are valid geometries.
        assert_eq!(CacheGeometry::new(16384, 64, 0, 8).unwrap().sets(), 32);
        assert_eq!(CacheGeometry::new(16384, 64, 8, 0).unwrap().sets(), 32);
    }

    #[test]
    fn decompose_examples() {
        let g = geo16k();
        let d = |a| decompose_address(Address::new(a).unwrap(), &g);
        assert_eq!(d(0x0000), (0, 0, 0));
        assert_eq!(d(0x1040), oracle(0x1040, &g));
        assert_eq!(d(0x1040), (1, 1, 0));
        assert_eq!(d(0x103F), oracle(0x103F, &g));
        assert_eq!(d(0x103F), (1, 0, 63));
    }

    #[test]
    fn address_bound() {
        assert!(Address::new((1 << 48) - 1).is_ok());
        assert!(Address::new(1 << 48).is_err());
        assert!(Address::with_bits(u64::MAX, 64).is_ok());
    }

    #[test]
    fn prediction_index_examples() {
        assert_eq!(prediction_index(0x0, 64, 4096), 0);
        assert_eq!(prediction_index(0x40, 64, 4096), 1);
        // 0x40000 / 64 = 4096 blocks, one full lap of the table.
        assert_eq!(prediction_index(0x40000, 64, 4096), 0x40000 / 64 % 4096);
        assert_eq!(prediction_index(0x40000, 64, 4096), 0);
    }

    #[test]
    fn conf_transitions() {
        assert_eq!(conf_advance(Conf::new(0).unwrap()), Conf::new(1).unwrap());
        assert_eq!(conf_advance(Conf::new(2).unwrap()), Conf::new(3).unwrap());
        assert_eq!(conf_advance(Conf::MAX), Conf::MAX);
        assert!(Conf::new(4).is_none());
        assert_eq!(Conf::new(1).unwrap().to_string(), "01");
    }

    #[test]
    fn threshold_widths() {
        assert_eq!(Threshold::new(1).unwrap().counter_width(), 1);
        assert_eq!(Threshold::new(3).unwrap().counter_width(), 2);
        assert_eq!(Threshold::new(7).unwrap().counter_width(), 3);
        assert_eq!(Threshold::new(15).unwrap().counter_width(), 4);
        assert!(Threshold::new(0).is_err());
        assert!(Threshold::new(256).is_err());
    }

    #[test]
    fn storage_overhead_reference_config() {
        let o = storage_overhead(&geo16k(), 4096, Threshold::default(), 32 * 1024);
        assert_eq!(o.metadata_bits, 2048);
        assert_eq!(o.table_bits, 4096);
        assert_eq!(o.metadata_bits + o.table_bits, 6144);
        assert_eq!(format!("{:.2}", o.percent_of_cache), "2.34");
    }

    #[test]
    fn storage_overhead_edges() {
        let o = storage_overhead(&geo16k(), 0, Threshold::new(1).unwrap(), 16 * 1024);
        assert_eq!(o.table_bits, 0);
        assert_eq!(o.metadata_bits, 256 * 4);

        let g32 = CacheGeometry::new(32 * 1024, 64, 2, 2).unwrap();
        let o = storage_overhead(&g32, 4096, Threshold::default(), 32 * 1024);
        // 512 blocks * (2*3 + 2) bits
        assert_eq!(o.metadata_bits, 512 * 8);
        assert_eq!(o.metadata_bits, 4096);
        assert_eq!(o.table_bits, 4096);
        assert_eq!(o.percent_of_cache, 100.0 * 8192.0 / 262144.0);
    }

    #[test]
    fn fresh_table_is_all_ones() {
        let t = PredictionTable::new(4096);
        assert_eq!(t.len(), 4096);
        assert!(t.bits().iter().all(|&b| b));
    }

    fn any_geometry() -> impl Strategy<Value = CacheGeometry> {
        (4u32..8, 0u32..8, 0usize..5, 0usize..5)
            .prop_filter("needs a way", |(_, _, s, t)| s + t > 0)
            .prop_map(|(bs_log, sets_log, s, t)| {
                let bs = 1u64 << bs_log;
                let cap = bs * (s + t) as u64 * (1u64 << sets_log);
                CacheGeometry::new(cap, bs, s, t).unwrap()
            })
    }

    proptest! {
        #[test]
        fn decompose_recomposes(geo in any_geometry(), addr in 0u64..(1 << 48)) {
            let (tag, set, off) = decompose_address(Address::new(addr).unwrap(), &geo);
            prop_assert!(off < geo.block_size());
            prop_assert!(set < geo.sets());
            prop_assert_eq!(((tag * geo.sets() + set) * geo.block_size()) + off, addr);
            prop_assert_eq!(geo.block_address(tag, set) + off, addr);
            prop_assert_eq!((tag, set, off), oracle(addr, &geo));
        }

        #[test]
        fn prediction_index_is_periodic(addr in 0u64..(1 << 40), entries in 1usize..8192) {
            let i = prediction_index(addr, 64, entries);
            prop_assert!(i < entries);
            prop_assert_eq!(i, prediction_index(addr + entries as u64 * 64, 64, entries));
        }

        #[test]
        fn conf_advance_monotone(v in 0u8..4) {
            let c = Conf::new(v).unwrap();
            prop_assert!(c.advance() >= c);
            prop_assert_eq!(c.advance().value(), (v + 1).min(3));
        }
    }
}
