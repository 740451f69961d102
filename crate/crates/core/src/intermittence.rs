//! Power-failure schedules and what happens to the cache at a failure.

use std::fmt;
use std::str::FromStr;

use crate::event::Event;
use crate::model::{prediction_index, BlockMeta, Region};
use crate::policy::{HybridCache, Mutation};
use crate::rng::SplitMix64;
use crate::tech::TechnologyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FailureSchedule {
    #[default]
    None,
    /// A failure at every multiple of `period` instructions.
    Periodic { period: u64 },
    /// Gaps between failures drawn uniformly from `lo..=hi`.
    RandomUniform { lo: u64, hi: u64, seed: u64 },
}

impl FailureSchedule {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            FailureSchedule::None => Ok(()),
            FailureSchedule::Periodic { period } if period == 0 => {
                Err("failure period must be >= 1".into())
            }
            FailureSchedule::RandomUniform { lo, hi, .. } if lo == 0 || lo > hi => {
                Err(format!("random failure bounds must satisfy 1 <= lo <= hi, got {lo}..{hi}"))
            }
            _ => Ok(()),
        }
    }

    pub fn clock(&self) -> FailureClock {
        let seed = match *self {
            FailureSchedule::RandomUniform { seed, .. } => seed,
            _ => 0,
        };
        FailureClock {
            schedule: *self,
            rng: SplitMix64::new(seed),
            last: 0,
        }
    }

    /// Replaces the seed of a random schedule.
    pub fn reseeded(self, seed: u64) -> Self {
        match self {
            FailureSchedule::RandomUniform { lo, hi, .. } => FailureSchedule::RandomUniform { lo, hi, seed },
            other => other,
        }
    }
}

/// `none`, `period:N` or `random:LO:HI`. The seed of a random schedule is
/// supplied separately.
impl FromStr for FailureSchedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.trim()
                .replace('_', "")
                .parse::<u64>()
                .map_err(|_| format!("invalid failure count `{t}`"))
        };
        let sched = match parts.as_slice() {
            ["none"] => FailureSchedule::None,
            ["period", p] => FailureSchedule::Periodic { period: num(p)? },
            ["random", lo, hi] => FailureSchedule::RandomUniform {
                lo: num(lo)?,
                hi: num(hi)?,
                seed: 0,
            },
            _ => return Err(format!("invalid failure schedule `{s}`")),
        };
        sched.validate()?;
        Ok(sched)
    }
}

impl fmt::Display for FailureSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FailureSchedule::None => write!(f, "none"),
            FailureSchedule::Periodic { period } => write!(f, "period:{period}"),
            FailureSchedule::RandomUniform { lo, hi, .. } => write!(f, "random:{lo}:{hi}"),
        }
    }
}

/// Stateful cursor over a schedule's failure points. Queries must be
/// non-decreasing.
#[derive(Debug, Clone)]
pub struct FailureClock {
    schedule: FailureSchedule,
    rng: SplitMix64,
    last: u64,
}

impl FailureClock {
    /// First failure point strictly after `after`.
    pub fn next_after(&mut self, after: u64) -> Option<u64> {
        match self.schedule {
            FailureSchedule::None => None,
            FailureSchedule::Periodic { period } => Some((after / period + 1) * period),
            FailureSchedule::RandomUniform { lo, hi, .. } => {
                while self.last <= after {
                    self.last += self.rng.next_inclusive(lo, hi);
                }
                Some(self.last)
            }
        }
    }
}

pub fn next_failure(schedule: &FailureSchedule, after_instruction: u64) -> Option<u64> {
    schedule.clock().next_after(after_instruction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BackupReport {
    /// Block writes into STT-RAM.
    pub n_w_l1: u64,
    /// Block writes into PCM.
    pub n_w_main: u64,
    pub backup_cycles: u64,
    pub backup_time_ns: u64,
}

impl BackupReport {
    fn priced(n_w_l1: u64, n_w_main: u64, tech: &TechnologyParams) -> Self {
        let backup_cycles = n_w_l1 * tech.sttram.write_cycles + n_w_main * tech.pcm.write_cycles;
        Self {
            n_w_l1,
            n_w_main,
            backup_cycles,
            backup_time_ns: backup_cycles * tech.clock_period_ns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BackupOptions {
    /// Write clean blocks leaving the cache to PCM as well.
    pub write_clean: bool,
}

/// Saves SRAM contents at a power failure by CONF priority.
///
/// Per set, SRAM blocks are taken in order of descending CONF, then
/// descending WIC, then way index. Each one moves into a free STT-RAM way,
/// or displaces the lowest-CONF STT-RAM block that was resident before the
/// backup (lowest way on ties) when its own CONF is at least as high.
/// Blocks that leave the cache are written to PCM when dirty. The SRAM region
/// ends empty.
pub fn backup(
    state: &mut HybridCache,
    tech: &TechnologyParams,
    opts: BackupOptions,
    events: &mut Vec<Event>,
) -> BackupReport {
    let geo = *state.geometry();
    let drop_dirty = state.mutation() == Mutation::DropDirtyBackup;
    let sram = geo.ways_of(Region::Sram);
    let stt = geo.ways_of(Region::SttRam);
    let ways = geo.ways_total();
    let mut n_w_l1 = 0u64;
    let mut n_w_main = 0u64;
    let mut order: Vec<usize> = Vec::with_capacity(sram.len());
    let mut moved = vec![false; ways];

    let to_pcm = |b: &BlockMeta, set: u64, events: &mut Vec<Event>, n: &mut u64| {
        if (b.dirty && !drop_dirty) || opts.write_clean {
            events.push(Event::Writeback {
                block_addr: geo.block_address(b.tag, set),
                content: b.content,
            });
            *n += 1;
        }
    };

    for set in 0..geo.sets() {
        order.clear();
        order.extend(sram.clone().filter(|&w| state.block(set, w).valid));
        if order.is_empty() {
            continue;
        }
        order.sort_by_key(|&w| {
            let b = state.block(set, w);
            (std::cmp::Reverse(b.conf), std::cmp::Reverse(b.wic), w)
        });
        moved.fill(false);

        for &w in &order {
            let b = *state.block(set, w);
            let dest = match stt.clone().find(|&s| !state.block(set, s).valid) {
                Some(free) => Some(free),
                None => {
                    let victim = stt
                        .clone()
                        .filter(|&s| !moved[s])
                        .min_by_key(|&s| (state.block(set, s).conf, s));
                    match victim {
                        Some(v) if b.conf >= state.block(set, v).conf => {
                            let vb = *state.block(set, v);
                            to_pcm(&vb, set, events, &mut n_w_main);
                            let pt = state.prediction().len();
                            if pt > 0 {
                                let idx = prediction_index(
                                    geo.block_address(vb.tag, set),
                                    geo.block_size(),
                                    pt,
                                );
                                state.prediction_mut().set(idx, false);
                            }
                            Some(v)
                        }
                        _ => None,
                    }
                }
            };
            match dest {
                Some(d) => {
                    let mut nb = b;
                    nb.ric = 0;
                    nb.wic = 0;
                    state.install(set, d, nb);
                    moved[d] = true;
                    events.push(Event::Write(Region::SttRam));
                    n_w_l1 += 1;
                }
                None => to_pcm(&b, set, events, &mut n_w_main),
            }
            state.install(set, w, BlockMeta::INVALID);
        }
    }
    state.invalidate_region(Region::Sram);
    BackupReport::priced(n_w_l1, n_w_main, tech)
}

/// Failure handling for architectures without CONF: every dirty SRAM block
/// goes to PCM and the SRAM region is lost. STT-RAM contents survive.
pub fn backup_everything(
    state: &mut HybridCache,
    tech: &TechnologyParams,
    opts: BackupOptions,
    events: &mut Vec<Event>,
) -> BackupReport {
    let geo = *state.geometry();
    let drop_dirty = state.mutation() == Mutation::DropDirtyBackup;
    let mut n_w_main = 0;
    for (set, way, b) in state.resident() {
        if geo.region_of(way) == Region::Sram && ((b.dirty && !drop_dirty) || opts.write_clean) {
            events.push(Event::Writeback {
                block_addr: geo.block_address(b.tag, set),
                content: b.content,
            });
            n_w_main += 1;
        }
    }
    state.invalidate_region(Region::Sram);
    BackupReport::priced(0, n_w_main, tech)
}

/// Power comes back: STT-RAM is used in place, SRAM starts empty and the
/// prediction table is re-initialized unless it is persisted.
pub fn power_on(state: &mut HybridCache, persist_prediction: bool) {
    state.invalidate_region(Region::Sram);
    if !persist_prediction {
        state.prediction_mut().reset();
    }
}
