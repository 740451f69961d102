//! Per-technology latency and energy constants.
//!
//! Energies are fixed point in millionths of a picojoule so that ledger
//! sums are exact.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use crate::model::Region;

pub const UNITS_PER_PJ: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Energy(u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub const fn from_units(units: u64) -> Self {
        Self(units)
    }

    pub const fn from_pj(pj: u64) -> Self {
        Self(pj * UNITS_PER_PJ)
    }

    pub const fn units(self) -> u64 {
        self.0
    }

    /// Lossy, for ratios only.
    pub fn as_pj_f64(self) -> f64 {
        self.0 as f64 / UNITS_PER_PJ as f64
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Mul<u64> for Energy {
    type Output = Energy;
    fn mul(self, rhs: u64) -> Energy {
        Energy(self.0 * rhs)
    }
}

/// Renders as an exact picojoule decimal, e.g. `217.000000`.
impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / UNITS_PER_PJ, self.0 % UNITS_PER_PJ)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseEnergyError(pub String);

impl fmt::Display for ParseEnergyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid picojoule value `{}`", self.0)
    }
}

impl std::error::Error for ParseEnergyError {}

/// Parses a non-negative picojoule decimal with at most six fraction digits.
impl FromStr for Energy {
    type Err = ParseEnergyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseEnergyError(s.to_string());
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        let digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
        if !digits(int) || !digits(frac) || frac.len() > 6 {
            return Err(err());
        }
        let whole: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        let mut frac_units: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
        for _ in frac.len()..6 {
            frac_units *= 10;
        }
        whole
            .checked_mul(UNITS_PER_PJ)
            .and_then(|w| w.checked_add(frac_units))
            .map(Energy)
            .ok_or_else(err)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technology {
    Sram,
    SttRam,
    Pcm,
}

impl Technology {
    pub const ALL: [Technology; 3] = [Technology::Sram, Technology::SttRam, Technology::Pcm];

    pub fn name(self) -> &'static str {
        match self {
            Technology::Sram => "sram",
            Technology::SttRam => "sttram",
            Technology::Pcm => "pcm",
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }
}

impl From<Region> for Technology {
    fn from(r: Region) -> Self {
        match r {
            Region::Sram => Technology::Sram,
            Region::SttRam => Technology::SttRam,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TechParams {
    pub read_cycles: u64,
    pub write_cycles: u64,
    pub read_energy: Energy,
    pub write_energy: Energy,
    /// Leakage of a 16KB array in microwatts; zero when not modeled.
    pub leakage_uw_per_16kb: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TechnologyParams {
    pub sram: TechParams,
    pub sttram: TechParams,
    /// Main memory. `write_energy` is the single effective per-block write
    /// cost; the default is the RESET figure.
    pub pcm: TechParams,
    pub clock_period_ns: u64,
}

pub const PCM_SET_WRITE_ENERGY: Energy = Energy::from_units(6_927_000_000);
pub const PCM_RESET_WRITE_ENERGY: Energy = Energy::from_units(6_946_000_000);

impl Default for TechnologyParams {
    fn default() -> Self {
        Self {
            sram: TechParams {
                read_cycles: 1,
                write_cycles: 2,
                read_energy: Energy::from_units(6_000_000),
                write_energy: Energy::from_units(2_000_000),
                leakage_uw_per_16kb: 18_972,
            },
            sttram: TechParams {
                read_cycles: 2,
                write_cycles: 10,
                read_energy: Energy::from_units(81_000_000),
                write_energy: Energy::from_units(217_000_000),
                leakage_uw_per_16kb: 3_014,
            },
            pcm: TechParams {
                read_cycles: 35,
                write_cycles: 100,
                read_energy: Energy::from_units(1_553_000_000),
                write_energy: PCM_RESET_WRITE_ENERGY,
                leakage_uw_per_16kb: 0,
            },
            clock_period_ns: 2,
        }
    }
}

impl TechnologyParams {
    #[inline]
    pub fn get(&self, tech: Technology) -> &TechParams {
        match tech {
            Technology::Sram => &self.sram,
            Technology::SttRam => &self.sttram,
            Technology::Pcm => &self.pcm,
        }
    }

    pub fn get_mut(&mut self, tech: Technology) -> &mut TechParams {
        match tech {
            Technology::Sram => &mut self.sram,
            Technology::SttRam => &mut self.sttram,
            Technology::Pcm => &mut self.pcm,
        }
    }

    /// Latencies, dynamic energies and the clock must be positive. PCM has no
    /// leakage figure, so leakage may be zero.
    pub fn validate(&self) -> Result<(), String> {
        if self.clock_period_ns == 0 {
            return Err("clock.period_ns must be positive".into());
        }
        for tech in Technology::ALL {
            let p = self.get(tech);
            if p.read_cycles == 0 || p.write_cycles == 0 {
                return Err(format!("{} latencies must be positive", tech.name()));
            }
            if p.read_energy == Energy::ZERO || p.write_energy == Energy::ZERO {
                return Err(format!("{} energies must be positive", tech.name()));
            }
        }
        Ok(())
    }
}
