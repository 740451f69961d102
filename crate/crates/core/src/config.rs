//! `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored.
//! Every key has a default, so an empty file describes the stock system.
//! Unknown or repeated keys are rejected with their line number.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::ConfigError;
use crate::intermittence::FailureSchedule;
use crate::model::{CacheGeometry, Threshold};
use crate::sim::SimConfig;
use crate::tech::{Energy, Technology};

const TECH_FIELDS: [&str; 5] = [
    "read_cycles",
    "write_cycles",
    "read_energy_pj",
    "write_energy_pj",
    "leakage_uw_per_16kb",
];

/// Every accepted key, in rendering order.
pub fn known_keys() -> Vec<String> {
    let mut keys: Vec<String> = [
        "architecture",
        "cache.size_bytes",
        "cache.block_size",
        "cache.ways_sram",
        "cache.ways_sttram",
        "prediction.entries",
        "prediction.persist",
        "policy.threshold",
    ]
    .map(String::from)
    .to_vec();
    for t in Technology::ALL {
        for f in TECH_FIELDS {
            keys.push(format!("tech.{}.{f}", t.name()));
        }
    }
    keys.extend(
        [
            "clock.period_ns",
            "failure.mode",
            "failure.period",
            "failure.lo",
            "failure.hi",
            "seed",
            "checkpoint.period",
            "checkpoint.snapshot_all",
            "checkpoint.max_retries",
            "backup.write_clean",
        ]
        .map(String::from),
    );
    keys
}

/// Failure parameters as written in a file. Only the ones selected by
/// `failure.mode` are used.
#[derive(Debug, Clone, Copy)]
struct FailureKeys {
    mode: FailureMode,
    period: u64,
    lo: u64,
    hi: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FailureMode {
    None,
    Periodic,
    Random,
}

impl Default for FailureKeys {
    fn default() -> Self {
        Self {
            mode: FailureMode::None,
            period: 2_000_000,
            lo: 2_000_000,
            hi: 4_000_000,
        }
    }
}

fn parse_u64(v: &str) -> Result<u64, String> {
    let clean = v.replace('_', "");
    let parsed = match clean.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => clean.parse(),
    };
    parsed.map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn parse_usize(v: &str) -> Result<usize, String> {
    parse_u64(v).and_then(|n| usize::try_from(n).map_err(|_| format!("`{v}` is too large")))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{v}`")),
    }
}

fn parse_energy(v: &str) -> Result<Energy, String> {
    v.parse::<Energy>().map_err(|e| e.to_string())
}

/// Parses configuration text. Geometry and combination checks that need
/// the whole file run after every line has been read.
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    let mut cfg = SimConfig::default();
    let mut checkpoint = cfg.checkpoint.unwrap_or_default();
    let mut failure = FailureKeys::default();
    let (mut capacity, mut block_size) = (cfg.geometry.capacity_bytes(), cfg.geometry.block_size());
    let (mut ways_sram, mut ways_sttram) = (cfg.geometry.ways_sram(), cfg.geometry.ways_sttram());
    let mut seen = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Parse {
                line,
                msg: format!("duplicate key `{key}`"),
            });
        }
        let bad = |msg: String| ConfigError::Parse {
            line,
            msg: format!("{key}: {msg}"),
        };
        match key {
            "architecture" => cfg.architecture = value.parse().map_err(bad)?,
            "cache.size_bytes" => capacity = parse_u64(value).map_err(bad)?,
            "cache.block_size" => block_size = parse_u64(value).map_err(bad)?,
            "cache.ways_sram" => ways_sram = parse_usize(value).map_err(bad)?,
            "cache.ways_sttram" => ways_sttram = parse_usize(value).map_err(bad)?,
            "prediction.entries" => cfg.prediction_entries = parse_usize(value).map_err(bad)?,
            "prediction.persist" => cfg.persist_prediction = parse_bool(value).map_err(bad)?,
            "policy.threshold" => {
                let n = parse_u64(value).map_err(bad)?;
                cfg.threshold = u32::try_from(n)
                    .ok()
                    .and_then(|n| Threshold::new(n).ok())
                    .ok_or_else(|| bad(format!("threshold must be in 1..=255, got {n}")))?;
            }
            "clock.period_ns" => cfg.technology.clock_period_ns = parse_u64(value).map_err(bad)?,
            "failure.mode" => {
                failure.mode = match value {
                    "none" => FailureMode::None,
                    "periodic" => FailureMode::Periodic,
                    "random" => FailureMode::Random,
                    _ => return Err(bad(format!("expected none, periodic or random, got `{value}`"))),
                }
            }
            "failure.period" => failure.period = parse_u64(value).map_err(bad)?,
            "failure.lo" => failure.lo = parse_u64(value).map_err(bad)?,
            "failure.hi" => failure.hi = parse_u64(value).map_err(bad)?,
            "seed" => cfg.seed = parse_u64(value).map_err(bad)?,
            "checkpoint.period" => checkpoint.period_instructions = parse_u64(value).map_err(bad)?,
            "checkpoint.snapshot_all" => checkpoint.snapshot_all = parse_bool(value).map_err(bad)?,
            "checkpoint.max_retries" => {
                let n = parse_u64(value).map_err(bad)?;
                checkpoint.max_retries = u32::try_from(n).map_err(|_| bad(format!("`{value}` is too large")))?;
            }
            "backup.write_clean" => cfg.backup.write_clean = parse_bool(value).map_err(bad)?,
            _ => {
                let tech_key = key
                    .strip_prefix("tech.")
                    .and_then(|rest| rest.split_once('.'))
                    .and_then(|(t, f)| {
                        Technology::ALL.into_iter().find(|x| x.name() == t).map(|t| (t, f))
                    });
                let Some((tech, field)) = tech_key else {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    });
                };
                let p = cfg.technology.get_mut(tech);
                match field {
                    "read_cycles" => p.read_cycles = parse_u64(value).map_err(bad)?,
                    "write_cycles" => p.write_cycles = parse_u64(value).map_err(bad)?,
                    "read_energy_pj" => p.read_energy = parse_energy(value).map_err(bad)?,
                    "write_energy_pj" => p.write_energy = parse_energy(value).map_err(bad)?,
                    "leakage_uw_per_16kb" => p.leakage_uw_per_16kb = parse_u64(value).map_err(bad)?,
                    _ => {
                        return Err(ConfigError::UnknownKey {
                            line,
                            key: key.to_string(),
                        })
                    }
                }
            }
        }
    }

    cfg.geometry = CacheGeometry::new(capacity, block_size, ways_sram, ways_sttram)?;
    cfg.checkpoint = Some(checkpoint);
    cfg.failure = match failure.mode {
        FailureMode::None => FailureSchedule::None,
        FailureMode::Periodic => FailureSchedule::Periodic { period: failure.period },
        FailureMode::Random => FailureSchedule::RandomUniform {
            lo: failure.lo,
            hi: failure.hi,
            seed: cfg.seed,
        },
    };
    cfg.technology.validate().map_err(ConfigError::InvalidCombination)?;
    cfg.failure.validate().map_err(ConfigError::InvalidCombination)?;
    Ok(cfg)
}

/// Loads a configuration file; the literal path `default` yields the
/// built-in defaults.
pub fn load_config(path: &Path) -> Result<SimConfig, ConfigError> {
    if path.as_os_str() == "default" {
        return Ok(SimConfig::default());
    }
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse {
        line: 0,
        msg: format!("{}: {e}", path.display()),
    })?;
    parse_config(&text)
}

/// Renders every key in a fixed order. `parse_config(render_config(c))`
/// reproduces `c` apart from run flags that are not part of the file format.
pub fn render_config(cfg: &SimConfig) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(s, "{k} = {v}");
    };
    let g = &cfg.geometry;
    kv("architecture", &cfg.architecture);
    kv("cache.size_bytes", &g.capacity_bytes());
    kv("cache.block_size", &g.block_size());
    kv("cache.ways_sram", &g.ways_sram());
    kv("cache.ways_sttram", &g.ways_sttram());
    kv("prediction.entries", &cfg.prediction_entries);
    kv("prediction.persist", &cfg.persist_prediction);
    kv("policy.threshold", &cfg.threshold.value());
    for t in Technology::ALL {
        let p = cfg.technology.get(t);
        let n = t.name();
        kv(&format!("tech.{n}.read_cycles"), &p.read_cycles);
        kv(&format!("tech.{n}.write_cycles"), &p.write_cycles);
        kv(&format!("tech.{n}.read_energy_pj"), &p.read_energy);
        kv(&format!("tech.{n}.write_energy_pj"), &p.write_energy);
        kv(&format!("tech.{n}.leakage_uw_per_16kb"), &p.leakage_uw_per_16kb);
    }
    kv("clock.period_ns", &cfg.technology.clock_period_ns);
    let d = FailureKeys::default();
    let (mode, period, lo, hi) = match cfg.failure {
        FailureSchedule::None => ("none", d.period, d.lo, d.hi),
        FailureSchedule::Periodic { period } => ("periodic", period, d.lo, d.hi),
        FailureSchedule::RandomUniform { lo, hi, .. } => ("random", d.period, lo, hi),
    };
    kv("failure.mode", &mode);
    kv("failure.period", &period);
    kv("failure.lo", &lo);
    kv("failure.hi", &hi);
    kv("seed", &cfg.seed);
    let ck = cfg.checkpoint.unwrap_or_default();
    kv("checkpoint.period", &ck.period_instructions);
    kv("checkpoint.snapshot_all", &ck.snapshot_all);
    kv("checkpoint.max_retries", &ck.max_retries);
    kv("backup.write_clean", &cfg.backup.write_clean);
    s
}
