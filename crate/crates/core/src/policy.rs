//! Placement and migration engine for the hybrid set.
//!
//! Reads push blocks toward STT-RAM, writes pull them toward SRAM. Counters
//! are incremented first and the threshold test fires on the access that
//! makes a counter reach the threshold. A block that is already in the
//! region its counter points to advances its CONF state instead. Misses are
//! steered by the prediction table, which remembers the region a block was
//! evicted from.

use thiserror::Error;

use crate::event::{AccessKind, AccessOutcome, Classification, Event, EventLog};
use crate::model::{
    decompose_address, prediction_index, Address, BlockMeta, CacheGeometry, Conf, ContentTag,
    PredictionTable, Region, Threshold,
};

/// Deliberate policy defects, used as mutation fixtures by the golden replay
/// and the data-safety checks. Never enabled by configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Test the counter against the threshold before incrementing it.
    CompareThenIncrement,
    /// Set PR from `wic > ric` at eviction instead of from the region.
    WicRicPrediction,
    /// Backup drops dirty blocks instead of writing them to PCM.
    DropDirtyBackup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VictimMetric {
    LowestRic,
    LowestWic,
    /// Used by the single-region baselines.
    LowestCounterSum,
}

impl VictimMetric {
    #[inline]
    fn key(self, b: &BlockMeta) -> u16 {
        match self {
            VictimMetric::LowestRic => b.ric as u16,
            VictimMetric::LowestWic => b.wic as u16,
            VictimMetric::LowestCounterSum => b.ric as u16 + b.wic as u16,
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum VictimError {
    #[error("way {0} is free; insert there instead of evicting")]
    FreeWay(usize),
    #[error("region has no ways")]
    EmptyRegion,
}

/// Picks the region way with the smallest metric, lowest way index on ties.
/// Every way of the region must be valid.
pub fn select_victim(
    set: &[BlockMeta],
    geo: &CacheGeometry,
    region: Region,
    metric: VictimMetric,
) -> Result<usize, VictimError> {
    let ways = geo.ways_of(region);
    if ways.is_empty() {
        return Err(VictimError::EmptyRegion);
    }
    let mut best: Option<(u16, usize)> = None;
    for way in ways {
        let b = &set[way];
        if !b.valid {
            return Err(VictimError::FreeWay(way));
        }
        let k = metric.key(b);
        if best.map_or(true, |(bk, _)| k < bk) {
            best = Some((k, way));
        }
    }
    Ok(best.expect("non-empty region").1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridCache {
    geometry: CacheGeometry,
    threshold: Threshold,
    prediction: PredictionTable,
    blocks: Vec<BlockMeta>,
    mutation: Mutation,
}

impl HybridCache {
    pub fn new(geometry: CacheGeometry, threshold: Threshold, prediction_entries: usize) -> Self {
        Self {
            geometry,
            threshold,
            prediction: PredictionTable::new(prediction_entries),
            blocks: vec![BlockMeta::INVALID; geometry.blocks() as usize],
            mutation: Mutation::None,
        }
    }

    pub fn with_mutation(mut self, mutation: Mutation) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn mutation(&self) -> Mutation {
        self.mutation
    }

    pub fn geometry(&self) -> &CacheGeometry {
        &self.geometry
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    pub fn prediction(&self) -> &PredictionTable {
        &self.prediction
    }

    pub fn prediction_mut(&mut self) -> &mut PredictionTable {
        &mut self.prediction
    }

    #[inline]
    fn base(&self, set: u64) -> usize {
        set as usize * self.geometry.ways_total()
    }

    pub fn set(&self, set: u64) -> &[BlockMeta] {
        let b = self.base(set);
        &self.blocks[b..b + self.geometry.ways_total()]
    }

    #[inline]
    pub fn block(&self, set: u64, way: usize) -> &BlockMeta {
        &self.blocks[self.base(set) + way]
    }

    #[inline]
    pub(crate) fn block_mut(&mut self, set: u64, way: usize) -> &mut BlockMeta {
        let b = self.base(set);
        &mut self.blocks[b + way]
    }

    /// Places `meta` directly into a way. For scenario setup and tests.
    pub fn install(&mut self, set: u64, way: usize, meta: BlockMeta) {
        *self.block_mut(set, way) = meta;
    }

    pub fn blocks(&self) -> &[BlockMeta] {
        &self.blocks
    }

    /// `(set, way, meta)` for every valid block, in set then way order.
    pub fn resident(&self) -> impl Iterator<Item = (u64, usize, &BlockMeta)> + '_ {
        let ways = self.geometry.ways_total();
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.valid)
            .map(move |(i, b)| ((i / ways) as u64, i % ways, b))
    }

    #[inline]
    pub fn lookup(&self, set: u64, tag: u64) -> Option<usize> {
        self.set(set).iter().position(|b| b.holds(tag))
    }

    /// Where an address currently lives.
    pub fn locate(&self, addr: Address) -> Option<(u64, usize, Region)> {
        let (tag, set, _) = decompose_address(addr, &self.geometry);
        self.lookup(set, tag)
            .map(|w| (set, w, self.geometry.region_of(w)))
    }

    #[inline]
    pub fn free_way(&self, set: u64, region: Region) -> Option<usize> {
        let s = self.set(set);
        self.geometry.ways_of(region).find(|&w| !s[w].valid)
    }

    pub fn invalidate_region(&mut self, region: Region) {
        let ways = self.geometry.ways_total();
        let range = self.geometry.ways_of(region);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            if range.contains(&(i % ways)) {
                *b = BlockMeta::INVALID;
            }
        }
    }

    pub fn clear(&mut self) {
        self.blocks.fill(BlockMeta::INVALID);
    }

    #[inline]
    pub fn block_address(&self, set: u64, way: usize) -> u64 {
        self.geometry.block_address(self.block(set, way).tag, set)
    }

    /// Dispatches one demand access through the proposed policy.
    pub fn access(
        &mut self,
        kind: AccessKind,
        addr: Address,
        write_id: Option<ContentTag>,
    ) -> AccessOutcome {
        debug_assert_eq!(kind == AccessKind::Write, write_id.is_some());
        let (tag, set, _) = decompose_address(addr, &self.geometry);
        let out = match (self.lookup(set, tag), kind) {
            (Some(way), AccessKind::Read) => self.handle_read_hit(set, way),
            (Some(way), AccessKind::Write) => {
                self.handle_write_hit(set, way, write_id.unwrap_or_default())
            }
            (None, _) => self.handle_miss(kind, addr, write_id),
        };
        debug_assert!(self.set_is_consistent(set), "set {set} violates invariants");
        out
    }

    pub fn handle_read_hit(&mut self, set: u64, way: usize) -> AccessOutcome {
        let region = self.geometry.region_of(way);
        let mut out = AccessOutcome::new(Classification::hit_in(region));
        out.events.push(Event::Read(region));
        let t = self.threshold.value();
        let mutation = self.mutation;
        let b = self.block_mut(set, way);
        if bump(&mut b.ric, b.conf, t, mutation) {
            match region {
                Region::Sram => {
                    self.migrate(set, way, Region::SttRam, VictimMetric::LowestRic, true, &mut out.events);
                }
                Region::SttRam => {
                    b.conf = b.conf.advance();
                    b.ric = 0;
                }
            }
        }
        out
    }

    pub fn handle_write_hit(&mut self, set: u64, way: usize, write_id: ContentTag) -> AccessOutcome {
        let region = self.geometry.region_of(way);
        let mut out = AccessOutcome::new(Classification::hit_in(region));
        out.events.push(Event::Write(region));
        let t = self.threshold.value();
        let mutation = self.mutation;
        let b = self.block_mut(set, way);
        b.dirty = true;
        b.content = write_id;
        if bump(&mut b.wic, b.conf, t, mutation) {
            match region {
                Region::SttRam => {
                    self.migrate(set, way, Region::Sram, VictimMetric::LowestWic, true, &mut out.events);
                }
                Region::Sram => {
                    b.conf = b.conf.advance();
                    b.wic = 0;
                }
            }
        }
        out
    }

    /// Miss path: consult PR, make room in the predicted region, fill, then
    /// apply the triggering access's counter increment.
    pub fn handle_miss(
        &mut self,
        kind: AccessKind,
        addr: Address,
        write_id: Option<ContentTag>,
    ) -> AccessOutcome {
        let (tag, set, _) = decompose_address(addr, &self.geometry);
        debug_assert!(self.lookup(set, tag).is_none());
        let idx = prediction_index(addr.value(), self.geometry.block_size(), self.prediction.len());
        let pr = self.prediction.get(idx);
        let target = if pr { Region::Sram } else { Region::SttRam };
        let metric = match target {
            Region::SttRam => VictimMetric::LowestRic,
            Region::Sram => VictimMetric::LowestWic,
        };
        let mut out = AccessOutcome::new(Classification::Miss);
        let way = self.make_room(set, target, metric, true, &mut out.events);
        self.fill(set, way, tag, kind, write_id, &mut out.events);
        debug_assert_eq!(self.geometry.region_of(way) == Region::SttRam, !pr);
        out
    }

    /// Writes back the block if dirty, records its region in the
    /// prediction table and invalidates it.
    pub fn evict_block(&mut self, set: u64, way: usize) -> EventLog {
        let mut ev = EventLog::new();
        self.evict(set, way, true, &mut ev);
        ev
    }

    pub(crate) fn evict(&mut self, set: u64, way: usize, update_pr: bool, ev: &mut EventLog) {
        let b = *self.block(set, way);
        debug_assert!(b.valid);
        let block_addr = self.geometry.block_address(b.tag, set);
        if b.dirty {
            ev.push(Event::Writeback {
                block_addr,
                content: b.content,
            });
        }
        if update_pr && !self.prediction.is_empty() {
            let pr = match self.mutation {
                Mutation::WicRicPrediction => b.wic > b.ric,
                _ => self.geometry.region_of(way) == Region::Sram,
            };
            let idx = prediction_index(block_addr, self.geometry.block_size(), self.prediction.len());
            self.prediction.set(idx, pr);
        }
        *self.block_mut(set, way) = BlockMeta::INVALID;
    }

    /// Free way in `region`, evicting the metric's victim when full.
    pub(crate) fn make_room(
        &mut self,
        set: u64,
        region: Region,
        metric: VictimMetric,
        update_pr: bool,
        ev: &mut EventLog,
    ) -> usize {
        match self.free_way(set, region) {
            Some(w) => w,
            None => {
                let v = select_victim(self.set(set), &self.geometry, region, metric)
                    .expect("full region has a victim");
                self.evict(set, v, update_pr, ev);
                v
            }
        }
    }

    pub(crate) fn fill(
        &mut self,
        set: u64,
        way: usize,
        tag: u64,
        kind: AccessKind,
        write_id: Option<ContentTag>,
        ev: &mut EventLog,
    ) {
        let region = self.geometry.region_of(way);
        let block_addr = self.geometry.block_address(tag, set);
        ev.push(Event::Fetch { block_addr });
        ev.push(Event::Fill(region));
        let t = self.threshold.value();
        let b = self.block_mut(set, way);
        *b = BlockMeta::filled(tag, ContentTag::default());
        match kind {
            AccessKind::Read => b.ric = 1.min(t),
            AccessKind::Write => {
                b.wic = 1.min(t);
                b.dirty = true;
                b.content = write_id.unwrap_or_default();
                ev.push(Event::Write(region));
            }
        }
    }

    /// Moves a block into `to`, clearing its counters and CONF.
    pub(crate) fn migrate(
        &mut self,
        set: u64,
        way: usize,
        to: Region,
        metric: VictimMetric,
        update_pr: bool,
        ev: &mut EventLog,
    ) -> usize {
        let from = self.geometry.region_of(way);
        debug_assert_ne!(from, to);
        let dest = self.make_room(set, to, metric, update_pr, ev);
        ev.push(Event::Migrate { from, to });
        ev.push(Event::Read(from));
        ev.push(Event::Write(to));
        let mut b = *self.block(set, way);
        b.reset_counters();
        *self.block_mut(set, way) = BlockMeta::INVALID;
        *self.block_mut(set, dest) = b;
        dest
    }

    /// Single residency plus counter bounds for one set.
    pub fn set_is_consistent(&self, set: u64) -> bool {
        let s = self.set(set);
        s.iter().all(|b| b.is_consistent(self.threshold))
            && s.iter().enumerate().all(|(i, b)| {
                !b.valid || s[i + 1..].iter().all(|o| !o.holds(b.tag))
            })
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for set in 0..self.geometry.sets() {
            if !self.set_is_consistent(set) {
                return Err(format!("set {set} violates residency or counter bounds"));
            }
        }
        Ok(())
    }
}

/// Increments a saturating counter and reports whether the threshold fired.
/// Blocks in CONF 11 never fire.
#[inline]
fn bump(counter: &mut u8, conf: Conf, threshold: u8, mutation: Mutation) -> bool {
    if conf.is_max() {
        *counter = (*counter + 1).min(threshold);
        return false;
    }
    if mutation == Mutation::CompareThenIncrement {
        if *counter >= threshold {
            return true;
        }
        *counter += 1;
        return false;
    }
    *counter = (*counter + 1).min(threshold);
    *counter == threshold
}
