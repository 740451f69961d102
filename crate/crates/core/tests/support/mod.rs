#![allow(dead_code)]

pub mod reference;

use hybrid_cache::event::{AccessKind, Event};
use hybrid_cache::intermittence::{backup, power_on, BackupOptions};
use hybrid_cache::model::{Address, CacheGeometry, ContentTag, Threshold};
use hybrid_cache::policy::HybridCache;
use hybrid_cache::rng::SplitMix64;
use hybrid_cache::tech::TechnologyParams;

use reference::{Line, Reference};

/// One step of a short random scenario: an access, or a power failure.
#[derive(Debug, Clone, Copy)]
pub enum Op {
    Read(u64),
    Write(u64),
    Fail,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub block_size: u64,
    pub sets: u64,
    pub sram_ways: usize,
    pub stt_ways: usize,
    pub threshold: u8,
    pub entries: usize,
    pub ops: Vec<Op>,
}

/// Small geometries and address pools so that conflicts, migrations and
/// saturation all happen within a couple of thousand accesses.
pub fn random_scenario(seed: u64, max_ops: u64) -> Scenario {
    let mut r = SplitMix64::new(seed);
    let block_size = [16, 64][r.next_inclusive(0, 1) as usize];
    let sets = 1 << r.next_inclusive(0, 3);
    let sram_ways = r.next_inclusive(1, 4) as usize;
    let stt_ways = r.next_inclusive(1, 4) as usize;
    let threshold = [1, 2, 3, 7, 15][r.next_inclusive(0, 4) as usize];
    let entries = [1, 3, 16, 64][r.next_inclusive(0, 3) as usize];
    let pool = sets * (sram_ways + stt_ways) as u64 * r.next_inclusive(1, 4);
    let write_bias = r.next_unit();
    let fail_rate = [0.0, 0.002, 0.02][r.next_inclusive(0, 2) as usize];
    let n = r.next_inclusive(1, max_ops);
    let ops = (0..n)
        .map(|_| {
            if r.next_unit() < fail_rate {
                return Op::Fail;
            }
            let addr = r.next_inclusive(0, pool - 1) * block_size + r.next_inclusive(0, block_size - 1);
            if r.next_unit() < write_bias {
                Op::Write(addr)
            } else {
                Op::Read(addr)
            }
        })
        .collect();
    Scenario {
        block_size,
        sets,
        sram_ways,
        stt_ways,
        threshold,
        entries,
        ops,
    }
}

fn as_line(b: &hybrid_cache::BlockMeta) -> Line {
    Line {
        valid: b.valid,
        dirty: b.dirty,
        tag: b.tag,
        ric: b.ric,
        wic: b.wic,
        conf: b.conf.value(),
        content: b.content.0,
    }
}

/// Replays a scenario through both engines; `Err` describes the first
/// divergence in final state, PR bits or PCM writes.
pub fn compare_with_reference(s: &Scenario) -> Result<(), String> {
    let geo = CacheGeometry::new(
        s.block_size * s.sets * (s.sram_ways + s.stt_ways) as u64,
        s.block_size,
        s.sram_ways,
        s.stt_ways,
    )
    .map_err(|e| e.to_string())?;
    let mut engine = HybridCache::new(geo, Threshold::new(s.threshold as u32).unwrap(), s.entries);
    let mut naive = Reference::new(s.block_size, s.sets, s.sram_ways, s.stt_ways, s.threshold, s.entries);
    let tech = TechnologyParams::default();
    let mut engine_wb = Vec::new();
    let mut backup_events = Vec::new();
    let mut id = 0;
    let collect = |events: &[Event], out: &mut Vec<(u64, u64)>| {
        for e in events {
            if let Event::Writeback { block_addr, content } = *e {
                out.push((block_addr, content.0));
            }
        }
    };
    for op in &s.ops {
        match *op {
            Op::Read(a) => {
                let out = engine.access(AccessKind::Read, Address::new(a).unwrap(), None);
                collect(&out.events, &mut engine_wb);
                naive.access(false, a, 0);
            }
            Op::Write(a) => {
                id += 1;
                let out = engine.access(AccessKind::Write, Address::new(a).unwrap(), Some(ContentTag(id)));
                collect(&out.events, &mut engine_wb);
                naive.access(true, a, id);
            }
            Op::Fail => {
                backup_events.clear();
                backup(&mut engine, &tech, BackupOptions::default(), &mut backup_events);
                power_on(&mut engine, false);
                collect(&backup_events, &mut engine_wb);
                naive.fail();
            }
        }
    }
    let ways = s.sram_ways + s.stt_ways;
    for set in 0..s.sets as usize {
        for w in 0..ways {
            let got = as_line(engine.block(set as u64, w));
            let want = naive.lines[set][w];
            if got != want {
                return Err(format!("set {set} way {w}: engine {got:?}, reference {want:?}"));
            }
        }
    }
    if engine.prediction().bits() != naive.pr.as_slice() {
        return Err("prediction bits differ".into());
    }
    if engine_wb != naive.writebacks {
        return Err(format!(
            "PCM writes differ: engine {} entries, reference {}",
            engine_wb.len(),
            naive.writebacks.len()
        ));
    }
    Ok(())
}
