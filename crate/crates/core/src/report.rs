//! Report serialization.
//!
//! A report flattens to an ordered list of dotted field names. The nested
//! format writes one `field = value` line per field; the tabular format is
//! CSV with one row per run, led by a status column and closed by a
//! diagnostic column for sweep rows that could not run. Energies are exact
//! picojoule decimals and floats use shortest round-trip formatting, so
//! parsing a rendered report gives back the same values.

use std::collections::HashMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::energy::{EnergyLedger, Metrics, Phase};
use crate::error::ReportError;
use crate::sim::{RunCounters, RunReport, SweepRow};
use crate::tech::{Energy, Technology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Nested,
    Tabular,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nested" => Ok(Format::Nested),
            "tabular" => Ok(Format::Tabular),
            _ => Err(format!("unknown format `{s}`")),
        }
    }
}

macro_rules! counter_fields {
    ($m:ident) => {
        $m!(
            records,
            instructions,
            reads,
            writes,
            hits_sram,
            hits_sttram,
            misses,
            migrations_to_sram,
            migrations_to_sttram,
            writebacks,
            failures,
            dirty_failures,
            backups,
            snapshots,
            restores,
            reexecuted_records,
            reexecuted_instructions
        )
    };
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Field names in rendering order.
pub fn field_names() -> Vec<String> {
    report_fields(&empty_report()).into_iter().map(|(k, _)| k).collect()
}

fn empty_report() -> RunReport {
    RunReport {
        tool_version: String::new(),
        config_fingerprint: String::new(),
        trace: String::new(),
        architecture: crate::sim::Architecture::Proposed,
        failure: String::new(),
        capacity_bytes: 0,
        ways_sram: 0,
        ways_sttram: 0,
        threshold: 0,
        counters: RunCounters::default(),
        ledger: EnergyLedger::new(),
        metrics: Metrics {
            e_overall: Energy::ZERO,
            eta: None,
            theta: None,
            e_normal: None,
            static_energy: Energy::ZERO,
            exec_time_ns: 0,
        },
        backup_time_total_ns: 0,
        avg_backup_time_ns: 0.0,
    }
}

pub fn report_fields(r: &RunReport) -> Vec<(String, String)> {
    let mut f: Vec<(String, String)> = Vec::with_capacity(64);
    let mut put = |k: &str, v: String| f.push((k.to_string(), v));
    put("tool_version", r.tool_version.clone());
    put("config_fingerprint", r.config_fingerprint.clone());
    put("trace", r.trace.clone());
    put("architecture", r.architecture.to_string());
    put("failure", r.failure.clone());
    put("cache.capacity_bytes", r.capacity_bytes.to_string());
    put("cache.ways_sram", r.ways_sram.to_string());
    put("cache.ways_sttram", r.ways_sttram.to_string());
    put("cache.threshold", r.threshold.to_string());
    let c = &r.counters;
    macro_rules! emit {
        ($($name:ident),*) => { $( put(concat!("counters.", stringify!($name)), c.$name.to_string()); )* };
    }
    counter_fields!(emit);
    let l = &r.ledger;
    let m = &r.metrics;
    put("energy.e_overall_pj", m.e_overall.to_string());
    put("energy.e_exec_pj", l.e_exec.to_string());
    put("energy.e_backup_pj", l.e_backup.to_string());
    put("energy.e_restore_pj", l.e_restore.to_string());
    put("energy.e_normal_pj", opt(m.e_normal));
    put("energy.static_pj", m.static_energy.to_string());
    put("energy.eta", opt(m.eta));
    put("energy.theta", opt(m.theta));
    put("time.cycles", l.cycles.to_string());
    put("time.gap_cycles", l.gap_cycles.to_string());
    put("time.exec_ns", m.exec_time_ns.to_string());
    put("time.backup_total_ns", r.backup_time_total_ns.to_string());
    put("time.avg_backup_ns", r.avg_backup_time_ns.to_string());
    for phase in Phase::METERED {
        for t in Technology::ALL {
            let oc = l.count(phase, t);
            put(&format!("ops.{}.{}.reads", phase.name(), t.name()), oc.reads.to_string());
            put(&format!("ops.{}.{}.writes", phase.name(), t.name()), oc.writes.to_string());
        }
    }
    put("flush.writes", l.flush_writes.to_string());
    put("flush.cycles", l.flush_cycles.to_string());
    put("flush.energy_pj", l.flush_energy.to_string());
    f
}

struct Fields<'a> {
    map: HashMap<&'a str, &'a str>,
    line: usize,
}

impl<'a> Fields<'a> {
    fn raw(&self, k: &str) -> Result<&'a str, ReportError> {
        self.map.get(k).copied().ok_or_else(|| ReportError::Missing(k.to_string()))
    }

    fn get<T: FromStr>(&self, k: &str) -> Result<T, ReportError> {
        let v = self.raw(k)?;
        v.parse().map_err(|_| ReportError::Parse {
            line: self.line,
            msg: format!("{k}: cannot parse `{v}`"),
        })
    }

    fn get_opt<T: FromStr>(&self, k: &str) -> Result<Option<T>, ReportError> {
        if self.raw(k)?.is_empty() {
            Ok(None)
        } else {
            self.get(k).map(Some)
        }
    }
}

/// Rebuilds a report from field/value pairs. `line` is used in diagnostics.
pub fn report_from_fields<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    line: usize,
) -> Result<RunReport, ReportError> {
    let f = Fields {
        map: pairs.into_iter().collect(),
        line,
    };
    let mut counters = RunCounters::default();
    macro_rules! read {
        ($($name:ident),*) => { $( counters.$name = f.get(concat!("counters.", stringify!($name)))?; )* };
    }
    counter_fields!(read);

    let mut ledger = EnergyLedger::new();
    ledger.e_exec = f.get("energy.e_exec_pj")?;
    ledger.e_backup = f.get("energy.e_backup_pj")?;
    ledger.e_restore = f.get("energy.e_restore_pj")?;
    ledger.cycles = f.get("time.cycles")?;
    ledger.gap_cycles = f.get("time.gap_cycles")?;
    for (slot, phase) in Phase::METERED.into_iter().enumerate() {
        for t in Technology::ALL {
            let oc = &mut ledger.counts[slot][t.index()];
            oc.reads = f.get(&format!("ops.{}.{}.reads", phase.name(), t.name()))?;
            oc.writes = f.get(&format!("ops.{}.{}.writes", phase.name(), t.name()))?;
        }
    }
    ledger.flush_writes = f.get("flush.writes")?;
    ledger.flush_cycles = f.get("flush.cycles")?;
    ledger.flush_energy = f.get("flush.energy_pj")?;

    let metrics = Metrics {
        e_overall: f.get("energy.e_overall_pj")?,
        eta: f.get_opt("energy.eta")?,
        theta: f.get_opt("energy.theta")?,
        e_normal: f.get_opt("energy.e_normal_pj")?,
        static_energy: f.get("energy.static_pj")?,
        exec_time_ns: f.get("time.exec_ns")?,
    };
    Ok(RunReport {
        tool_version: f.raw("tool_version")?.to_string(),
        config_fingerprint: f.raw("config_fingerprint")?.to_string(),
        trace: f.raw("trace")?.to_string(),
        architecture: f.get("architecture")?,
        failure: f.raw("failure")?.to_string(),
        capacity_bytes: f.get("cache.capacity_bytes")?,
        ways_sram: f.get("cache.ways_sram")?,
        ways_sttram: f.get("cache.ways_sttram")?,
        threshold: f.get("cache.threshold")?,
        counters,
        ledger,
        metrics,
        backup_time_total_ns: f.get("time.backup_total_ns")?,
        avg_backup_time_ns: f.get("time.avg_backup_ns")?,
    })
}

pub fn render_nested(r: &RunReport) -> String {
    let mut s = String::new();
    for (k, v) in report_fields(r) {
        s.push_str(&k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    }
    s
}

pub fn parse_nested(text: &str) -> Result<RunReport, ReportError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once(" = ").or_else(|| line.strip_suffix(" =").map(|k| (k, ""))).ok_or_else(|| {
            ReportError::Parse {
                line: i + 1,
                msg: format!("expected `field = value`, got `{line}`"),
            }
        })?;
        pairs.push((k, v));
    }
    report_from_fields(pairs, 0)
}

/// CSV with a header row. Skipped sweep rows carry the trace, the
/// configuration label in `config_fingerprint` and the diagnostic.
pub fn render_tabular(rows: &[SweepRow]) -> String {
    let names = field_names();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header = vec!["status".to_string()];
    header.extend(names.iter().cloned());
    header.push("diagnostic".into());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        let record: Vec<String> = match row {
            SweepRow::Done(r) => {
                let mut rec = vec!["ok".to_string()];
                rec.extend(report_fields(r).into_iter().map(|(_, v)| v));
                rec.push(String::new());
                rec
            }
            SweepRow::Skipped { trace, config, diagnostic } => {
                let mut rec = vec!["skipped".to_string()];
                for n in &names {
                    rec.push(match n.as_str() {
                        "trace" => trace.clone(),
                        "config_fingerprint" => config.clone(),
                        _ => String::new(),
                    });
                }
                rec.push(diagnostic.clone());
                rec
            }
        };
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn parse_tabular(text: &str) -> Result<Vec<SweepRow>, ReportError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| ReportError::Parse { line: 1, msg: e.to_string() })?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| ReportError::Parse { line, msg: e.to_string() })?;
        let pairs: Vec<(&str, &str)> = header.iter().map(String::as_str).zip(rec.iter()).collect();
        let get = |k: &str| pairs.iter().find(|(n, _)| *n == k).map(|(_, v)| v.to_string()).unwrap_or_default();
        match get("status").as_str() {
            "ok" => rows.push(SweepRow::Done(report_from_fields(pairs.iter().copied(), line)?)),
            "skipped" => rows.push(SweepRow::Skipped {
                trace: get("trace"),
                config: get("config_fingerprint"),
                diagnostic: get("diagnostic"),
            }),
            other => {
                return Err(ReportError::Parse {
                    line,
                    msg: format!("unknown status `{other}`"),
                })
            }
        }
    }
    Ok(rows)
}

pub fn render(rows: &[SweepRow], format: Format) -> String {
    match format {
        Format::Tabular => render_tabular(rows),
        Format::Nested => rows
            .iter()
            .map(|row| match row {
                SweepRow::Done(r) => render_nested(r),
                SweepRow::Skipped { trace, config, diagnostic } => {
                    format!("status = skipped\ntrace = {trace}\nconfig = {config}\ndiagnostic = {diagnostic}\n")
                }
            })
            .collect::<Vec<_>>()
            .join("\n"),
    }
}
