//! Line-oriented memory-access traces.
//!
//! ```text
//! # comment
//! R 0x1040      read
//! W 40          write, hex with or without 0x
//! I 100         100 non-memory instructions
//! ```
//!
//! Each read or write counts as one instruction. Files ending in `.gz` are
//! decompressed transparently.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::TraceError;
use crate::model::{Address, DEFAULT_ADDRESS_BITS, DEFAULT_BLOCK_SIZE};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Read(Address),
    Write(Address),
    InstGap(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AccessRecord {
    pub kind: RecordKind,
    /// Instruction count after this record has executed.
    pub instruction_index: u64,
}

impl AccessRecord {
    pub fn instructions(&self) -> u64 {
        match self.kind {
            RecordKind::InstGap(n) => n,
            _ => 1,
        }
    }
}

/// Assigns instruction indices to a sequence of record kinds.
pub fn index_records(kinds: impl IntoIterator<Item = RecordKind>) -> Vec<AccessRecord> {
    let mut idx = 0u64;
    kinds
        .into_iter()
        .map(|kind| {
            idx += match kind {
                RecordKind::InstGap(n) => n,
                _ => 1,
            };
            AccessRecord {
                kind,
                instruction_index: idx,
            }
        })
        .collect()
}

fn parse_line(line: &str, lineno: usize, bits: u32) -> Result<Option<RecordKind>, TraceError> {
    let line = line.trim_end_matches('\r').trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let perr = |msg: String| TraceError::Parse { line: lineno, msg };
    let mut parts = line.split_whitespace();
    let op = parts.next().unwrap_or_default();
    let arg = parts
        .next()
        .ok_or_else(|| perr(format!("missing operand in `{line}`")))?;
    if parts.next().is_some() {
        return Err(perr(format!("trailing tokens in `{line}`")));
    }
    let addr = |s: &str| -> Result<Address, TraceError> {
        let hex = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
        let v = u64::from_str_radix(hex, 16).map_err(|_| perr(format!("bad hex address `{s}`")))?;
        Address::with_bits(v, bits).map_err(|source| TraceError::Range { line: lineno, source })
    };
    match op {
        "R" => Ok(Some(RecordKind::Read(addr(arg)?))),
        "W" => Ok(Some(RecordKind::Write(addr(arg)?))),
        "I" => {
            let n: u64 = arg.parse().map_err(|_| perr(format!("bad instruction count `{arg}`")))?;
            if n == 0 {
                return Err(perr("instruction gap must be >= 1".into()));
            }
            Ok(Some(RecordKind::InstGap(n)))
        }
        _ => Err(perr(format!("unknown record `{op}`"))),
    }
}

pub fn parse_trace(text: &str) -> Result<Vec<AccessRecord>, TraceError> {
    parse_trace_with_bits(text, DEFAULT_ADDRESS_BITS)
}

pub fn parse_trace_with_bits(text: &str, bits: u32) -> Result<Vec<AccessRecord>, TraceError> {
    let mut kinds = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        if let Some(k) = parse_line(line, i + 1, bits)? {
            kinds.push(k);
        }
    }
    Ok(index_records(kinds))
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<AccessRecord>, TraceError> {
    let mut kinds = Vec::new();
    let mut buf = String::new();
    let mut reader = BufReader::new(reader);
    let mut lineno = 0;
    loop {
        buf.clear();
        let n = reader
            .read_line(&mut buf)
            .map_err(|e| TraceError::Io(e.to_string()))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        if let Some(k) = parse_line(buf.trim_end_matches('\n'), lineno, DEFAULT_ADDRESS_BITS)? {
            kinds.push(k);
        }
    }
    Ok(index_records(kinds))
}

pub fn read_trace_file(path: &Path) -> Result<Vec<AccessRecord>, TraceError> {
    let f = File::open(path).map_err(|e| TraceError::Io(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "gz") {
        read_trace(GzDecoder::new(f))
    } else {
        read_trace(f)
    }
}

pub fn emit_trace(records: &[AccessRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 10);
    for r in records {
        let _ = match r.kind {
            RecordKind::Read(a) => writeln!(out, "R {a:#x}"),
            RecordKind::Write(a) => writeln!(out, "W {a:#x}"),
            RecordKind::InstGap(n) => writeln!(out, "I {n}"),
        };
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTraceSpec {
    pub record_count: u64,
    pub write_fraction: f64,
    pub hot_set_blocks: u64,
    pub hot_fraction: f64,
    pub address_space_blocks: u64,
    pub gap_fraction: f64,
    pub block_size: u64,
    pub seed: u64,
}

impl Default for SyntheticTraceSpec {
    fn default() -> Self {
        Self {
            record_count: 10_000,
            write_fraction: 0.3,
            hot_set_blocks: 128,
            hot_fraction: 0.9,
            address_space_blocks: 1 << 16,
            gap_fraction: 0.25,
            block_size: DEFAULT_BLOCK_SIZE,
            seed: 1,
        }
    }
}

impl SyntheticTraceSpec {
    pub fn validate(&self) -> Result<(), String> {
        for (name, f) in [
            ("write_fraction", self.write_fraction),
            ("hot_fraction", self.hot_fraction),
            ("gap_fraction", self.gap_fraction),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(format!("{name} must be in [0, 1], got {f}"));
            }
        }
        if self.record_count == 0 || self.hot_set_blocks == 0 || self.address_space_blocks == 0 {
            return Err("counts must be >= 1".into());
        }
        if !self.block_size.is_power_of_two() {
            return Err("block_size must be a power of two".into());
        }
        Ok(())
    }
}

/// Draws each record from one SplitMix64 stream: a gap draw (then a
/// `1..=16` length draw), or a pool draw, a block draw and a read/write draw.
/// Hot blocks are block indices `0..hot_set_blocks`; the cold pool is the
/// whole address space.
pub fn generate_synthetic(spec: &SyntheticTraceSpec) -> Vec<AccessRecord> {
    let mut rng = SplitMix64::new(spec.seed);
    let kinds = (0..spec.record_count).map(|_| {
        if rng.next_unit() < spec.gap_fraction {
            return RecordKind::InstGap(rng.next_inclusive(1, 16));
        }
        let pool = if rng.next_unit() < spec.hot_fraction {
            spec.hot_set_blocks
        } else {
            spec.address_space_blocks
        };
        let block = rng.next_u64() % pool;
        let addr = Address::with_bits(block * spec.block_size, 64).expect("64-bit address");
        if rng.next_unit() < spec.write_fraction {
            RecordKind::Write(addr)
        } else {
            RecordKind::Read(addr)
        }
    });
    index_records(kinds)
}
