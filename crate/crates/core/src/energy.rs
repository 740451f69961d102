//! Cycle and energy accounting.
//!
//! Every event is charged at its technology's latency and per-block energy.
//! Exec, backup and restore phases are kept apart so the overall energy is
//! `e_exec + e_backup + e_restore`. The end-of-run flush is tracked
//! separately and stays out of the headline metrics.

use crate::event::{Event, Op};
use crate::model::{CacheGeometry, Region};
use crate::tech::{Energy, Technology, TechnologyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Exec,
    Backup,
    Restore,
    Flush,
}

impl Phase {
    pub const METERED: [Phase; 3] = [Phase::Exec, Phase::Backup, Phase::Restore];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Exec => "exec",
            Phase::Backup => "backup",
            Phase::Restore => "restore",
            Phase::Flush => "flush",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounts {
    pub reads: u64,
    pub writes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnergyLedger {
    pub e_exec: Energy,
    pub e_backup: Energy,
    pub e_restore: Energy,
    /// Exec, backup and restore cycles, including gap instructions.
    pub cycles: u64,
    /// Non-memory instructions, one cycle each.
    pub gap_cycles: u64,
    /// Indexed by metered phase, then technology.
    pub counts: [[OpCounts; 3]; 3],
    pub flush_writes: u64,
    pub flush_cycles: u64,
    pub flush_energy: Energy,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn tally(&mut self, tech: &TechnologyParams, phase: Phase, event: &Event) {
        let Some((t, op)) = event.cost_class() else {
            return;
        };
        let p = tech.get(t);
        let (cycles, energy) = match op {
            Op::Read => (p.read_cycles, p.read_energy),
            Op::Write => (p.write_cycles, p.write_energy),
        };
        let slot = match phase {
            Phase::Exec => {
                self.e_exec += energy;
                0
            }
            Phase::Backup => {
                self.e_backup += energy;
                1
            }
            Phase::Restore => {
                self.e_restore += energy;
                2
            }
            Phase::Flush => {
                self.flush_cycles += cycles;
                self.flush_energy += energy;
                if op == Op::Write {
                    self.flush_writes += 1;
                }
                return;
            }
        };
        self.cycles += cycles;
        let c = &mut self.counts[slot][t.index()];
        match op {
            Op::Read => c.reads += 1,
            Op::Write => c.writes += 1,
        }
    }

    pub fn tally_all<'a>(
        &mut self,
        tech: &TechnologyParams,
        phase: Phase,
        events: impl IntoIterator<Item = &'a Event>,
    ) {
        for e in events {
            self.tally(tech, phase, e);
        }
    }

    /// Charges `n` non-memory instructions.
    #[inline]
    pub fn tally_gap(&mut self, n: u64) {
        self.cycles += n;
        self.gap_cycles += n;
    }

    pub fn count(&self, phase: Phase, tech: Technology) -> OpCounts {
        let slot = match phase {
            Phase::Exec => 0,
            Phase::Backup => 1,
            Phase::Restore => 2,
            Phase::Flush => panic!("flush counts are not broken down"),
        };
        self.counts[slot][tech.index()]
    }

    pub fn n_w_l1(&self) -> u64 {
        self.count(Phase::Backup, Technology::SttRam).writes
    }
    pub fn n_w_main(&self) -> u64 {
        self.count(Phase::Backup, Technology::Pcm).writes
    }
    pub fn n_r_l1(&self) -> u64 {
        self.count(Phase::Restore, Technology::SttRam).reads
    }
    pub fn n_r_main(&self) -> u64 {
        self.count(Phase::Restore, Technology::Pcm).reads
    }

    pub fn e_overall(&self) -> Energy {
        self.e_exec + self.e_backup + self.e_restore
    }

    /// Cycles recomputed from the persisted counts.
    pub fn recomputed_cycles(&self, tech: &TechnologyParams) -> u64 {
        let mut total = self.gap_cycles;
        for slot in &self.counts {
            for t in Technology::ALL {
                let c = slot[t.index()];
                let p = tech.get(t);
                total += c.reads * p.read_cycles + c.writes * p.write_cycles;
            }
        }
        total
    }

    /// Energy of one phase recomputed from the persisted counts.
    pub fn recomputed_energy(&self, tech: &TechnologyParams, phase: Phase) -> Energy {
        let mut total = Energy::ZERO;
        for t in Technology::ALL {
            let c = self.count(phase, t);
            let p = tech.get(t);
            total += p.read_energy * c.reads + p.write_energy * c.writes;
        }
        total
    }
}

/// Leakage over `duration_ns`, scaling each region's 16KB figure linearly by
/// its capacity. Rounds down to whole energy units.
pub fn static_energy(geo: &CacheGeometry, tech: &TechnologyParams, duration_ns: u64) -> Energy {
    let mut units: u128 = 0;
    for region in [Region::Sram, Region::SttRam] {
        let leak = tech.get(region.into()).leakage_uw_per_16kb as u128;
        // 1 uW for 1 ns is 1e-15 J, i.e. 1000 units of 1e-18 J.
        units += leak * geo.region_bytes(region) as u128 * duration_ns as u128 * 1000 / (16 * 1024);
    }
    Energy::from_units(u64::try_from(units).expect("static energy fits in u64"))
}

/// Headline metrics derived from a finished ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub e_overall: Energy,
    /// `n_w_l1 / (n_w_l1 + n_w_main)` over backups; absent without backup writes.
    pub eta: Option<f64>,
    /// `e_normal / e_overall`; absent without a companion run.
    pub theta: Option<f64>,
    pub e_normal: Option<Energy>,
    pub static_energy: Energy,
    pub exec_time_ns: u64,
}

pub fn finalize(
    ledger: &EnergyLedger,
    e_normal: Option<Energy>,
    geo: &CacheGeometry,
    tech: &TechnologyParams,
) -> Metrics {
    let e_overall = ledger.e_overall();
    let (l1, main) = (ledger.n_w_l1(), ledger.n_w_main());
    let eta = (l1 + main > 0).then(|| l1 as f64 / (l1 + main) as f64);
    let theta = e_normal.and_then(|n| {
        (e_overall.units() > 0).then(|| n.units() as f64 / e_overall.units() as f64)
    });
    let exec_time_ns = ledger.cycles * tech.clock_period_ns;
    Metrics {
        e_overall,
        eta,
        theta,
        e_normal,
        static_energy: static_energy(geo, tech, exec_time_ns),
        exec_time_ns,
    }
}
