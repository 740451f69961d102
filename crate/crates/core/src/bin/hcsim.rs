//! `hcsim`: run, sweep and check the hybrid cache simulator.
//!
//! Exit status: 0 success, 1 failed check or run, 2 unreadable input,
//! 3 invalid architecture or geometry.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hybrid_cache::config::load_config;
use hybrid_cache::golden::run_golden;
use hybrid_cache::intermittence::FailureSchedule;
use hybrid_cache::model::{storage_overhead, CacheGeometry, Threshold};
use hybrid_cache::policy::Mutation;
use hybrid_cache::report::{render, Format};
use hybrid_cache::sim::{run_detailed, sweep, Architecture, SimConfig, SweepAxes, SweepRow};
use hybrid_cache::tech::{Energy, TechnologyParams};
use hybrid_cache::trace::{emit_trace, generate_synthetic, read_trace_file, AccessRecord, SyntheticTraceSpec};
use hybrid_cache::{ConfigError, SimError, TraceError};

#[derive(Parser)]
#[command(name = "hcsim", version, about = "Hybrid SRAM/STT-RAM cache simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration over one trace.
    Run(RunArgs),
    /// Simulate the Cartesian product of parameter axes over a set of traces.
    Sweep(SweepArgs),
    /// Replay the built-in five-block walkthrough and check every labelled point.
    Golden {
        #[arg(long, default_value = "none", value_parser = parse_mutation)]
        mutation: Mutation,
    },
    /// Check the built-in technology constants and storage arithmetic.
    Selftest,
    /// Write a seeded synthetic trace.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1_000_000)]
    records: u64,
    #[arg(long, default_value_t = 0.3)]
    write_fraction: f64,
    #[arg(long, default_value_t = 128)]
    hot_blocks: u64,
    #[arg(long, default_value_t = 0.9)]
    hot_fraction: f64,
    #[arg(long, default_value_t = 1 << 16)]
    space_blocks: u64,
    #[arg(long, default_value_t = 0.25)]
    gap_fraction: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    /// Configuration file, or `default` for the built-in system.
    #[arg(long, default_value = "default")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run a failure-free companion to report theta.
    #[arg(long)]
    with_theta: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_parser = parse_arch)]
    arch: Option<Architecture>,
    /// `none`, `period:N` or `random:LO:HI`.
    #[arg(long, value_parser = parse_failure)]
    failure: Option<FailureSchedule>,
    #[arg(long, default_value = "nested", value_parser = parse_format)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Glob matching the trace files.
    #[arg(long)]
    traces: String,
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<u32>,
    /// SRAM:STT-RAM way counts, e.g. `2:6`.
    #[arg(long, value_delimiter = ',', value_parser = parse_split)]
    splits: Vec<(usize, usize)>,
    #[arg(long, value_delimiter = ',', value_parser = parse_failure)]
    failures: Vec<FailureSchedule>,
    #[arg(long, value_delimiter = ',', value_parser = parse_arch)]
    archs: Vec<Architecture>,
    /// Concurrent runs; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "tabular", value_parser = parse_format)]
    format: Format,
}

fn parse_arch(s: &str) -> Result<Architecture, String> {
    s.parse()
}

fn parse_failure(s: &str) -> Result<FailureSchedule, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

fn parse_split(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected SRAM:STTRAM, got `{s}`"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid way count `{t}`"));
    Ok((n(a)?, n(b)?))
}

fn parse_mutation(s: &str) -> Result<Mutation, String> {
    match s {
        "none" => Ok(Mutation::None),
        "compare-then-increment" => Ok(Mutation::CompareThenIncrement),
        "wic-ric-prediction" => Ok(Mutation::WicRicPrediction),
        "drop-dirty-backup" => Ok(Mutation::DropDirtyBackup),
        _ => Err(format!("unknown mutation `{s}`")),
    }
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Parse { .. } | ConfigError::UnknownKey { .. } => 2,
            ConfigError::Geometry(_) | ConfigError::InvalidCombination(_) => 3,
        };
        Failure::new(code, format!("config: {e}"))
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => c.into(),
            SimError::Trace(t) => Failure::new(2, format!("trace: {t}")),
            other => Failure::new(1, other.to_string()),
        }
    }
}

fn load_trace(path: &Path) -> Result<Vec<AccessRecord>, TraceError> {
    read_trace_file(path)
}

fn trace_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn base_config(common: &Common) -> Result<SimConfig, Failure> {
    let mut cfg = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.with_theta = common.with_theta;
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::new(1, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = base_config(&args.common)?;
    if let Some(a) = args.arch {
        cfg.architecture = a;
    }
    if let Some(f) = args.failure {
        cfg.failure = f;
    }
    cfg.failure = cfg.failure.reseeded(cfg.seed);
    cfg.validate()?;
    let trace = load_trace(&args.trace).map_err(|e| Failure::new(2, format!("{}: {e}", args.trace.display())))?;
    let out = run_detailed(&cfg, &trace, &trace_name(&args.trace))?;
    emit(&args.common.out, &render(&[SweepRow::Done(out.report)], args.format))
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let base = base_config(&args.common)?;
    let paths: Vec<PathBuf> = glob::glob(&args.traces)
        .map_err(|e| Failure::new(2, format!("bad glob `{}`: {e}", args.traces)))?
        .filter_map(Result::ok)
        .collect();
    if paths.is_empty() {
        return Err(Failure::new(2, format!("no trace files match `{}`", args.traces)));
    }
    let mut traces = Vec::new();
    let mut unreadable = Vec::new();
    for p in &paths {
        match load_trace(p) {
            Ok(t) => traces.push((trace_name(p), t)),
            Err(e) => unreadable.push(SweepRow::Skipped {
                trace: trace_name(p),
                config: "*".into(),
                diagnostic: e.to_string(),
            }),
        }
    }
    let axes = SweepAxes {
        thresholds: args.thresholds,
        way_splits: args.splits,
        failures: args.failures,
        architectures: args.archs,
    };
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let mut rows = sweep(&base, &axes, &traces, jobs);
    rows.extend(unreadable);
    for row in &rows {
        if let SweepRow::Skipped { trace, config, diagnostic } = row {
            eprintln!("skipped {trace} [{config}]: {diagnostic}");
        }
    }
    emit(&args.common.out, &render(&rows, args.format))
}

fn cmd_golden(mutation: Mutation) -> Result<(), Failure> {
    match run_golden(mutation) {
        Ok(points) => {
            for p in points {
                println!("point {p}: ok");
            }
            Ok(())
        }
        Err(f) => Err(Failure::new(1, f.to_string())),
    }
}

fn cmd_selftest() -> Result<(), Failure> {
    let t = TechnologyParams::default();
    let pj = |s: &str| s.parse::<Energy>().expect("literal");
    let mut checks: Vec<(&str, bool)> = vec![
        ("SRAM read 1 cycle, write 2 cycles", (t.sram.read_cycles, t.sram.write_cycles) == (1, 2)),
        ("STT-RAM read 2 cycles, write 10 cycles", (t.sttram.read_cycles, t.sttram.write_cycles) == (2, 10)),
        ("PCM read 35 cycles, write 100 cycles", (t.pcm.read_cycles, t.pcm.write_cycles) == (35, 100)),
        ("SRAM energy 0.006/0.002 nJ", (t.sram.read_energy, t.sram.write_energy) == (pj("6"), pj("2"))),
        ("STT-RAM energy 0.081/0.217 nJ", (t.sttram.read_energy, t.sttram.write_energy) == (pj("81"), pj("217"))),
        ("PCM energy 1.553/6.946 nJ", (t.pcm.read_energy, t.pcm.write_energy) == (pj("1553"), pj("6946"))),
        ("SRAM leakage 18972 uW", t.sram.leakage_uw_per_16kb == 18_972),
        ("STT-RAM leakage 3014 uW", t.sttram.leakage_uw_per_16kb == 3_014),
    ];
    let geo = CacheGeometry::new(16 * 1024, 64, 2, 2).map_err(|e| Failure::new(1, e.to_string()))?;
    let o = storage_overhead(&geo, 4096, Threshold::default(), 32 * 1024);
    checks.push(("metadata 2048 bits", o.metadata_bits == 2048));
    checks.push(("prediction table 4096 bits", o.table_bits == 4096));
    checks.push(("overhead 6144 bits", o.metadata_bits + o.table_bits == 6144));
    checks.push(("overhead 2.34%", format!("{:.2}", o.percent_of_cache) == "2.34"));
    let mut ok = true;
    for (name, pass) in checks {
        println!("{} {name}", if pass { "ok  " } else { "FAIL" });
        ok &= pass;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::new(1, "self-test failed"))
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Failure> {
    let spec = SyntheticTraceSpec {
        record_count: a.records,
        write_fraction: a.write_fraction,
        hot_set_blocks: a.hot_blocks,
        hot_fraction: a.hot_fraction,
        address_space_blocks: a.space_blocks,
        gap_fraction: a.gap_fraction,
        seed: a.seed,
        ..Default::default()
    };
    spec.validate().map_err(|e| Failure::new(2, e))?;
    emit(&a.out, &emit_trace(&generate_synthetic(&spec)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Golden { mutation } => cmd_golden(mutation),
        Command::Selftest => cmd_selftest(),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hcsim: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
