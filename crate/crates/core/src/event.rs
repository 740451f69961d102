//! Per-access event stream consumed by the energy ledger.

use smallvec::SmallVec;

use crate::model::{ContentTag, Region};
use crate::tech::Technology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// Demand read, or the source read of a migration.
    Read(Region),
    /// Demand write, or the destination write of a migration or backup move.
    Write(Region),
    /// Fill of a freshly fetched block.
    Fill(Region),
    /// Block read from PCM.
    Fetch { block_addr: u64 },
    /// Block written to PCM.
    Writeback { block_addr: u64, content: ContentTag },
    /// Marker preceding the `Read(from)`/`Write(to)` pair of a migration.
    Migrate { from: Region, to: Region },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Read,
    Write,
}

impl Event {
    /// Technology and operation charged for this event, if any.
    #[inline]
    pub fn cost_class(&self) -> Option<(Technology, Op)> {
        match *self {
            Event::Read(r) => Some((r.into(), Op::Read)),
            Event::Write(r) | Event::Fill(r) => Some((r.into(), Op::Write)),
            Event::Fetch { .. } => Some((Technology::Pcm, Op::Read)),
            Event::Writeback { .. } => Some((Technology::Pcm, Op::Write)),
            Event::Migrate { .. } => None,
        }
    }
}

pub type EventLog = SmallVec<[Event; 8]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    HitSram,
    HitSttRam,
    Miss,
}

impl Classification {
    pub fn hit_in(region: Region) -> Self {
        match region {
            Region::Sram => Classification::HitSram,
            Region::SttRam => Classification::HitSttRam,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessOutcome {
    pub classification: Classification,
    pub events: EventLog,
}

impl AccessOutcome {
    pub fn new(classification: Classification) -> Self {
        Self {
            classification,
            events: EventLog::new(),
        }
    }

    pub fn migrations(&self) -> impl Iterator<Item = (Region, Region)> + '_ {
        self.events.iter().filter_map(|e| match *e {
            Event::Migrate { from, to } => Some((from, to)),
            _ => None,
        })
    }
}
