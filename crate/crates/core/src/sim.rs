//! Trace replay, failure injection and sweeps.
//!
//! Failure points and safe points are positions in the program's
//! instruction stream. A failure fires between records, once the record
//! that reaches its instruction index has completed. The checkpoint
//! architecture rewinds to its last safe point and re-executes. Failure
//! points already passed do not fire again.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baseline::{baseline_access, BaselineKind, CheckpointConfig};
use crate::energy::{finalize, EnergyLedger, Metrics, Phase};
use crate::error::{ConfigError, SimError};
use crate::event::{AccessKind, AccessOutcome, Classification, Event};
use crate::intermittence::{backup, backup_everything, power_on, BackupOptions, BackupReport, FailureSchedule};
use crate::model::{BlockMeta, CacheGeometry, ContentTag, Region, Threshold, DEFAULT_PREDICTION_ENTRIES};
use crate::policy::{HybridCache, Mutation};
use crate::rng::SplitMix64;
use crate::tech::{Energy, TechnologyParams};
use crate::trace::{AccessRecord, RecordKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Architecture {
    Proposed,
    PureSram,
    PureSttRam,
    RandomHybrid,
    CheckpointSramPcm,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::Proposed,
        Architecture::PureSram,
        Architecture::PureSttRam,
        Architecture::RandomHybrid,
        Architecture::CheckpointSramPcm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Proposed => "proposed",
            Architecture::PureSram => "pure-sram",
            Architecture::PureSttRam => "pure-sttram",
            Architecture::RandomHybrid => "random-hybrid",
            Architecture::CheckpointSramPcm => "checkpoint",
        }
    }

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Architecture::Proposed => None,
            Architecture::PureSram => Some(BaselineKind::PureSram),
            Architecture::PureSttRam => Some(BaselineKind::PureSttRam),
            Architecture::RandomHybrid => Some(BaselineKind::RandomHybrid),
            Architecture::CheckpointSramPcm => Some(BaselineKind::CheckpointSramPcm),
        }
    }

    fn is_hybrid(self) -> bool {
        matches!(self, Architecture::Proposed | Architecture::RandomHybrid)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown architecture `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub architecture: Architecture,
    pub geometry: CacheGeometry,
    pub threshold: Threshold,
    pub prediction_entries: usize,
    pub technology: TechnologyParams,
    pub failure: FailureSchedule,
    pub checkpoint: Option<CheckpointConfig>,
    /// Seeds random placement.
    pub seed: u64,
    /// Keep the prediction table across power failures.
    pub persist_prediction: bool,
    pub backup: BackupOptions,
    /// Run a failure-free companion first to obtain theta.
    pub with_theta: bool,
    pub mutation: Mutation,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Proposed,
            geometry: CacheGeometry::default_l1(),
            threshold: Threshold::default(),
            prediction_entries: DEFAULT_PREDICTION_ENTRIES,
            technology: TechnologyParams::default(),
            failure: FailureSchedule::None,
            checkpoint: Some(CheckpointConfig::default()),
            seed: 0,
            persist_prediction: false,
            backup: BackupOptions::default(),
            with_theta: false,
            mutation: Mutation::None,
        }
    }
}

impl SimConfig {
    /// Checks the architecture against the geometry and returns the geometry
    /// the run actually uses. Single-region architectures keep capacity and
    /// associativity and put every way in their region.
    pub fn effective_geometry(&self) -> Result<CacheGeometry, ConfigError> {
        self.technology.validate().map_err(ConfigError::InvalidCombination)?;
        self.failure.validate().map_err(ConfigError::InvalidCombination)?;
        let geo = match self.architecture {
            a if a.is_hybrid() => {
                if !self.geometry.is_hybrid() {
                    return Err(ConfigError::InvalidCombination(format!(
                        "{a} needs SRAM and STT-RAM ways, got {}:{}",
                        self.geometry.ways_sram(),
                        self.geometry.ways_sttram()
                    )));
                }
                self.geometry
            }
            Architecture::PureSttRam => self.geometry.single_region(Region::SttRam),
            _ => self.geometry.single_region(Region::Sram),
        };
        if self.architecture == Architecture::Proposed && self.prediction_entries == 0 {
            return Err(ConfigError::InvalidCombination(
                "proposed architecture needs prediction.entries >= 1".into(),
            ));
        }
        if self.architecture == Architecture::CheckpointSramPcm {
            match self.checkpoint {
                Some(c) if c.period_instructions >= 1 => {}
                Some(_) => {
                    return Err(ConfigError::InvalidCombination("checkpoint period must be >= 1".into()))
                }
                None => {
                    return Err(ConfigError::InvalidCombination(
                        "checkpoint architecture needs a checkpoint configuration".into(),
                    ))
                }
            }
        }
        Ok(geo)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.effective_geometry().map(|_| ())
    }

    /// Stable identifier of everything that influences a run's results.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut text = crate::config::render_config(self);
        if self.mutation != Mutation::None {
            text.push_str(&format!("mutation = {:?}\n", self.mutation));
        }
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Block address to the id of the last write that reached PCM.
pub type MemoryImage = HashMap<u64, ContentTag>;

/// Applies every write straight to memory, in trace order.
pub fn oracle_image(trace: &[AccessRecord], block_size: u64) -> MemoryImage {
    let mut image = MemoryImage::new();
    let mut id = 0;
    for r in trace {
        if let RecordKind::Write(a) = r.kind {
            id += 1;
            image.insert(a.value() & !(block_size - 1), ContentTag(id));
        }
    }
    image
}

pub fn verify_image(run_image: &MemoryImage, oracle_image: &MemoryImage) -> bool {
    run_image == oracle_image
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunCounters {
    pub records: u64,
    pub instructions: u64,
    pub reads: u64,
    pub writes: u64,
    pub hits_sram: u64,
    pub hits_sttram: u64,
    pub misses: u64,
    pub migrations_to_sram: u64,
    pub migrations_to_sttram: u64,
    /// PCM writebacks caused by evictions during execution.
    pub writebacks: u64,
    pub failures: u64,
    /// Failures at which at least one SRAM block was dirty.
    pub dirty_failures: u64,
    pub backups: u64,
    pub snapshots: u64,
    pub restores: u64,
    pub reexecuted_records: u64,
    pub reexecuted_instructions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub tool_version: String,
    pub config_fingerprint: String,
    pub trace: String,
    pub architecture: Architecture,
    pub failure: String,
    pub capacity_bytes: u64,
    pub ways_sram: usize,
    pub ways_sttram: usize,
    pub threshold: u8,
    pub counters: RunCounters,
    pub ledger: EnergyLedger,
    pub metrics: Metrics,
    pub backup_time_total_ns: u64,
    /// Mean over backup operations (failures, or snapshots for the
    /// checkpoint architecture); 0 when there were none.
    pub avg_backup_time_ns: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub image: MemoryImage,
}

struct Snapshot {
    pos: usize,
    instruction: u64,
    write_id: u64,
    blocks: Vec<(u64, usize, BlockMeta)>,
}

struct Machine<'c> {
    cfg: &'c SimConfig,
    cache: HybridCache,
    rng: SplitMix64,
    ledger: EnergyLedger,
    counters: RunCounters,
    image: MemoryImage,
    scratch: Vec<Event>,
    backup_ns: u64,
    backup_ops: u64,
}

impl<'c> Machine<'c> {
    fn new(cfg: &'c SimConfig, geo: CacheGeometry) -> Self {
        Self {
            cfg,
            cache: HybridCache::new(geo, cfg.threshold, cfg.prediction_entries)
                .with_mutation(cfg.mutation),
            rng: SplitMix64::new(cfg.seed),
            ledger: EnergyLedger::new(),
            counters: RunCounters::default(),
            image: MemoryImage::new(),
            scratch: Vec::new(),
            backup_ns: 0,
            backup_ops: 0,
        }
    }

    #[inline]
    fn charge(&mut self, phase: Phase, events: &[Event]) {
        let tech = &self.cfg.technology;
        for e in events {
            self.ledger.tally(tech, phase, e);
            if let Event::Writeback { block_addr, content } = *e {
                self.image.insert(block_addr, content);
            }
        }
    }

    /// Executes one record; `write_id` is advanced for writes.
    #[inline]
    fn step(&mut self, rec: &AccessRecord, write_id: &mut u64) {
        let (kind, addr) = match rec.kind {
            RecordKind::InstGap(n) => {
                self.ledger.tally_gap(n);
                return;
            }
            RecordKind::Read(a) => (AccessKind::Read, a),
            RecordKind::Write(a) => (AccessKind::Write, a),
        };
        let id = match kind {
            AccessKind::Write => {
                *write_id += 1;
                self.counters.writes += 1;
                Some(ContentTag(*write_id))
            }
            AccessKind::Read => {
                self.counters.reads += 1;
                None
            }
        };
        let out: AccessOutcome = match self.cfg.architecture.baseline() {
            None => self.cache.access(kind, addr, id),
            Some(b) => baseline_access(b, &mut self.cache, kind, addr, id, &mut self.rng),
        };
        match out.classification {
            Classification::HitSram => self.counters.hits_sram += 1,
            Classification::HitSttRam => self.counters.hits_sttram += 1,
            Classification::Miss => self.counters.misses += 1,
        }
        for e in &out.events {
            match e {
                Event::Migrate { to: Region::Sram, .. } => self.counters.migrations_to_sram += 1,
                Event::Migrate { to: Region::SttRam, .. } => self.counters.migrations_to_sttram += 1,
                Event::Writeback { .. } => self.counters.writebacks += 1,
                _ => {}
            }
        }
        self.charge(Phase::Exec, &out.events);
    }

    fn any_dirty_sram(&self) -> bool {
        let geo = self.cache.geometry();
        self.cache
            .resident()
            .any(|(_, w, b)| b.dirty && geo.region_of(w) == Region::Sram)
    }

    fn fail(&mut self) {
        self.counters.failures += 1;
        if self.any_dirty_sram() {
            self.counters.dirty_failures += 1;
        }
        let mut events = std::mem::take(&mut self.scratch);
        events.clear();
        let tech = &self.cfg.technology;
        let report: BackupReport = match self.cfg.architecture {
            Architecture::Proposed => {
                let r = backup(&mut self.cache, tech, self.cfg.backup, &mut events);
                power_on(&mut self.cache, self.cfg.persist_prediction);
                r
            }
            _ => backup_everything(&mut self.cache, tech, self.cfg.backup, &mut events),
        };
        self.charge(Phase::Backup, &events);
        self.scratch = events;
        self.counters.backups += 1;
        self.backup_ops += 1;
        self.backup_ns += report.backup_time_ns;
    }

    fn flush(&mut self) {
        let geo = *self.cache.geometry();
        let events: Vec<Event> = self
            .cache
            .resident()
            .filter(|(_, _, b)| b.dirty)
            .map(|(set, _, b)| Event::Writeback {
                block_addr: geo.block_address(b.tag, set),
                content: b.content,
            })
            .collect();
        self.charge(Phase::Flush, &events);
    }

    fn run_plain(&mut self, trace: &[AccessRecord]) {
        let mut clock = self.cfg.failure.clock();
        let mut next = clock.next_after(0);
        let mut write_id = 0;
        for rec in trace {
            self.step(rec, &mut write_id);
            while let Some(f) = next.filter(|&f| f <= rec.instruction_index) {
                self.fail();
                next = clock.next_after(f);
            }
        }
    }

    fn take_snapshot(&mut self, pos: usize, instruction: u64, write_id: u64, ck: &CheckpointConfig) -> Snapshot {
        let geo = *self.cache.geometry();
        let mut blocks = Vec::new();
        let mut events = Vec::new();
        let mut to_clean = Vec::new();
        for (set, way, b) in self.cache.resident() {
            if b.dirty || ck.snapshot_all {
                events.push(Event::Writeback {
                    block_addr: geo.block_address(b.tag, set),
                    content: b.content,
                });
                to_clean.push((set, way));
            }
        }
        for (set, way) in to_clean {
            let b = self.cache.block_mut(set, way);
            b.dirty = false;
            blocks.push((set, way, *b));
        }
        let before = self.ledger.cycles;
        self.charge(Phase::Backup, &events);
        self.backup_ns += (self.ledger.cycles - before) * self.cfg.technology.clock_period_ns;
        self.backup_ops += 1;
        self.counters.snapshots += 1;
        Snapshot {
            pos,
            instruction,
            write_id,
            blocks,
        }
    }

    fn restore(&mut self, snap: &Snapshot) {
        self.cache.clear();
        let mut events = Vec::with_capacity(snap.blocks.len());
        for &(set, way, b) in &snap.blocks {
            self.cache.install(set, way, b);
            events.push(Event::Fetch {
                block_addr: self.cache.geometry().block_address(b.tag, set),
            });
        }
        self.charge(Phase::Restore, &events);
        self.counters.restores += 1;
    }

    fn run_checkpoint(&mut self, trace: &[AccessRecord], ck: CheckpointConfig) -> Result<(), SimError> {
        let period = ck.period_instructions;
        let mut clock = self.cfg.failure.clock();
        let mut next_fail = clock.next_after(0);
        let mut snap = Snapshot {
            pos: 0,
            instruction: 0,
            write_id: 0,
            blocks: Vec::new(),
        };
        let mut next_safe = period;
        let mut write_id = 0;
        let mut high_water = 0u64;
        let mut retries = 0u32;
        let mut pos = 0usize;
        while pos < trace.len() {
            let rec = &trace[pos];
            self.step(rec, &mut write_id);
            pos += 1;
            let done = rec.instruction_index;
            if done <= high_water {
                self.counters.reexecuted_records += 1;
                self.counters.reexecuted_instructions += rec.instructions();
            } else {
                high_water = done;
            }
            if done >= next_safe {
                snap = self.take_snapshot(pos, done, write_id, &ck);
                next_safe = (done / period + 1) * period;
                retries = 0;
            }
            if let Some(f) = next_fail.filter(|&f| f <= done) {
                self.counters.failures += 1;
                if self.any_dirty_sram() {
                    self.counters.dirty_failures += 1;
                }
                next_fail = clock.next_after(f);
                retries += 1;
                if retries > ck.max_retries {
                    return Err(SimError::NonTermination {
                        safe_point: snap.instruction,
                        retries,
                    });
                }
                self.restore(&snap);
                pos = snap.pos;
                write_id = snap.write_id;
                next_safe = (snap.instruction / period + 1) * period;
            }
        }
        Ok(())
    }

    fn finish(mut self, trace_name: &str, e_normal: Option<Energy>) -> RunOutput {
        self.flush();
        let geo = *self.cache.geometry();
        let cfg = self.cfg;
        let metrics = finalize(&self.ledger, e_normal, &geo, &cfg.technology);
        let avg = if self.backup_ops == 0 {
            0.0
        } else {
            self.backup_ns as f64 / self.backup_ops as f64
        };
        let report = RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_fingerprint: cfg.fingerprint(),
            trace: trace_name.to_string(),
            architecture: cfg.architecture,
            failure: cfg.failure.to_string(),
            capacity_bytes: geo.capacity_bytes(),
            ways_sram: geo.ways_sram(),
            ways_sttram: geo.ways_sttram(),
            threshold: cfg.threshold.value(),
            counters: self.counters,
            ledger: self.ledger,
            metrics,
            backup_time_total_ns: self.backup_ns,
            avg_backup_time_ns: avg,
        };
        RunOutput {
            report,
            image: self.image,
        }
    }
}

fn run_once(
    config: &SimConfig,
    trace: &[AccessRecord],
    trace_name: &str,
    e_normal: Option<Energy>,
) -> Result<RunOutput, SimError> {
    let geo = config.effective_geometry()?;
    let mut m = Machine::new(config, geo);
    m.counters.records = trace.len() as u64;
    m.counters.instructions = trace.last().map_or(0, |r| r.instruction_index);
    match config.architecture {
        Architecture::CheckpointSramPcm => {
            let ck = config.checkpoint.expect("validated");
            m.run_checkpoint(trace, ck)?;
        }
        _ => m.run_plain(trace),
    }
    Ok(m.finish(trace_name, e_normal))
}

/// Runs one configuration over a trace and returns the report together
/// with the final PCM image.
pub fn run_detailed(config: &SimConfig, trace: &[AccessRecord], trace_name: &str) -> Result<RunOutput, SimError> {
    let e_normal = if config.with_theta {
        let companion = SimConfig {
            failure: FailureSchedule::None,
            with_theta: false,
            ..config.clone()
        };
        Some(run_once(&companion, trace, trace_name, None)?.report.metrics.e_overall)
    } else {
        None
    };
    run_once(config, trace, trace_name, e_normal)
}

pub fn run(config: &SimConfig, trace: &[AccessRecord]) -> Result<RunReport, SimError> {
    run_detailed(config, trace, "").map(|o| o.report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SweepAxes {
    pub thresholds: Vec<u32>,
    pub way_splits: Vec<(usize, usize)>,
    pub failures: Vec<FailureSchedule>,
    pub architectures: Vec<Architecture>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRow {
    Done(RunReport),
    Skipped { trace: String, config: String, diagnostic: String },
}

impl SweepRow {
    pub fn report(&self) -> Option<&RunReport> {
        match self {
            SweepRow::Done(r) => Some(r),
            SweepRow::Skipped { .. } => None,
        }
    }
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Every configuration in the Cartesian product of the axes; empty axes
/// keep the base value. A hybrid architecture paired with a split that has
/// no SRAM or no STT-RAM ways runs as the matching pure cache.
pub fn sweep_configs(base: &SimConfig, axes: &SweepAxes) -> Vec<Result<SimConfig, (String, String)>> {
    let mut out = Vec::new();
    let base_split = (base.geometry.ways_sram(), base.geometry.ways_sttram());
    for arch in axis(&axes.architectures, base.architecture) {
        for &split in &axis(&axes.way_splits, base_split) {
            for &t in &axis(&axes.thresholds, base.threshold.value() as u32) {
                for failure in axis(&axes.failures, base.failure) {
                    let label = format!("arch={arch} split={}:{} threshold={t} failure={failure}", split.0, split.1);
                    let built = (|| -> Result<SimConfig, ConfigError> {
                        let geometry = CacheGeometry::new(
                            base.geometry.capacity_bytes(),
                            base.geometry.block_size(),
                            split.0,
                            split.1,
                        )?;
                        let architecture = match (arch.is_hybrid(), split) {
                            (true, (0, _)) => Architecture::PureSttRam,
                            (true, (_, 0)) => Architecture::PureSram,
                            _ => arch,
                        };
                        let cfg = SimConfig {
                            architecture,
                            geometry,
                            threshold: Threshold::new(t)?,
                            failure: failure.reseeded(base.seed),
                            ..base.clone()
                        };
                        cfg.validate()?;
                        Ok(cfg)
                    })();
                    out.push(built.map_err(|e| (label, e.to_string())));
                }
            }
        }
    }
    out
}

/// Runs every (trace, configuration) pair, `jobs` at a time. Rows come back
/// in trace-major order regardless of scheduling.
pub fn sweep(
    base: &SimConfig,
    axes: &SweepAxes,
    traces: &[(String, Vec<AccessRecord>)],
    jobs: usize,
) -> Vec<SweepRow> {
    let configs = sweep_configs(base, axes);
    let work: Vec<(&str, &[AccessRecord], &Result<SimConfig, (String, String)>)> = traces
        .iter()
        .flat_map(|(name, recs)| configs.iter().map(move |c| (name.as_str(), recs.as_slice(), c)))
        .collect();
    let exec = |(name, recs, cfg): &(&str, &[AccessRecord], &Result<SimConfig, (String, String)>)| match cfg {
        Ok(cfg) => match run_detailed(cfg, recs, name) {
            Ok(o) => SweepRow::Done(o.report),
            Err(e) => SweepRow::Skipped {
                trace: name.to_string(),
                config: cfg.fingerprint(),
                diagnostic: e.to_string(),
            },
        },
        Err((label, diag)) => SweepRow::Skipped {
            trace: name.to_string(),
            config: label.clone(),
            diagnostic: diag.clone(),
        },
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build();
    match pool {
        Ok(pool) => pool.install(|| work.par_iter().map(exec).collect()),
        Err(_) => work.iter().map(exec).collect(),
    }
}
