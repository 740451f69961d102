//! Comparison architectures.
//!
//! The pure caches are plain counter-managed set-associative caches. The
//! random hybrid places missing blocks by coin flip and migrates on counter
//! thresholds without prediction or CONF. The checkpoint architecture is a
//! pure SRAM cache that snapshots dirty state to PCM at fixed safe points;
//! its run loop lives in [`crate::sim`].

use crate::event::{AccessKind, AccessOutcome, Classification, Event};
use crate::model::{decompose_address, Address, ContentTag, Region};
use crate::policy::{HybridCache, VictimMetric};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    PureSram,
    PureSttRam,
    RandomHybrid,
    CheckpointSramPcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CheckpointConfig {
    /// Instructions between safe points.
    pub period_instructions: u64,
    /// Snapshot every valid block instead of only dirty ones.
    pub snapshot_all: bool,
    /// Consecutive failures allowed to rewind to the same safe point.
    pub max_retries: u32,
}

impl Default for CheckpointConfig {
    fn default() -> Self {
        Self {
            period_instructions: 4_000_000,
            snapshot_all: false,
            max_retries: 10_000,
        }
    }
}

/// Region draw for a random-hybrid miss: even draws pick SRAM.
#[inline]
pub fn random_region(rng: &mut SplitMix64) -> Region {
    if rng.next_u64() & 1 == 0 {
        Region::Sram
    } else {
        Region::SttRam
    }
}

pub fn baseline_access(
    kind: BaselineKind,
    state: &mut HybridCache,
    access: AccessKind,
    addr: Address,
    write_id: Option<ContentTag>,
    rng: &mut SplitMix64,
) -> AccessOutcome {
    let geo = *state.geometry();
    let (tag, set, _) = decompose_address(addr, &geo);
    let t = state.threshold().value();
    let hybrid = kind == BaselineKind::RandomHybrid;

    if let Some(way) = state.lookup(set, tag) {
        let region = geo.region_of(way);
        let mut out = AccessOutcome::new(Classification::hit_in(region));
        let b = state.block_mut(set, way);
        let (counter, toward) = match access {
            AccessKind::Read => {
                out.events.push(Event::Read(region));
                (&mut b.ric, Region::SttRam)
            }
            AccessKind::Write => {
                out.events.push(Event::Write(region));
                b.dirty = true;
                b.content = write_id.unwrap_or_default();
                (&mut b.wic, Region::Sram)
            }
        };
        *counter = (*counter + 1).min(t);
        if hybrid && *counter == t {
            if region == toward {
                *counter = 0;
            } else {
                let metric = match toward {
                    Region::SttRam => VictimMetric::LowestRic,
                    Region::Sram => VictimMetric::LowestWic,
                };
                state.migrate(set, way, toward, metric, false, &mut out.events);
            }
        }
        debug_assert!(state.set_is_consistent(set));
        return out;
    }

    let (region, metric) = match kind {
        BaselineKind::PureSram | BaselineKind::CheckpointSramPcm => {
            (Region::Sram, VictimMetric::LowestCounterSum)
        }
        BaselineKind::PureSttRam => (Region::SttRam, VictimMetric::LowestCounterSum),
        BaselineKind::RandomHybrid => match random_region(rng) {
            Region::Sram => (Region::Sram, VictimMetric::LowestWic),
            Region::SttRam => (Region::SttRam, VictimMetric::LowestRic),
        },
    };
    let mut out = AccessOutcome::new(Classification::Miss);
    let way = state.make_room(set, region, metric, false, &mut out.events);
    state.fill(set, way, tag, access, write_id, &mut out.events);
    debug_assert!(state.set_is_consistent(set));
    out
}
