//! Replay of the five-block walkthrough of the proposed policy.
//!
//! One set with two SRAM ways and two STT-RAM ways, threshold 7. Blocks
//! `a`..`e` live at block numbers a=0, b=1, c=2, e=3, d=4, so block `c` maps to
//! prediction entry 2 and `e` to entry 3. Initially SRAM holds (a, c) and
//! STT-RAM holds (b, d), every counter is zero and entry 3 is the only PR bit
//! that says STT-RAM. Each labelled point checks only what the walkthrough
//! states outright.

use std::fmt::Write as _;

use crate::event::AccessKind;
use crate::intermittence::{backup, power_on, BackupOptions};
use crate::model::{Address, BlockMeta, CacheGeometry, Conf, ContentTag, Region, Threshold};
use crate::policy::{HybridCache, Mutation};
use crate::tech::TechnologyParams;

const NAMES: [(char, u64); 5] = [('a', 0), ('b', 1), ('c', 2), ('e', 3), ('d', 4)];
const PREDICTION_ENTRIES: usize = 16;

fn block_of(name: char) -> u64 {
    NAMES.iter().find(|(n, _)| *n == name).expect("known block").1
}

fn name_of(block: u64) -> char {
    NAMES.iter().find(|(_, b)| *b == block).map_or('?', |(n, _)| *n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expect {
    In(char, Region),
    Absent(char),
    /// `[ric, wic, conf]`.
    Tuple(char, u8, u8, u8),
    Ric(char, u8),
    Wic(char, u8),
    Conf(char, u8),
    /// Exact contents of a region.
    Holds(Region, &'static [char]),
    Prediction(char, bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Read(char, usize),
    Write(char, usize),
    PowerFailure,
    PowerOn,
    Check(&'static str, Vec<Expect>),
}

pub fn scenario() -> Vec<Step> {
    use Expect::*;
    use Region::{Sram, SttRam};
    use Step::*;
    vec![
        Read('a', 2),
        Check("A", vec![Ric('a', 2)]),
        Write('b', 2),
        Check("B", vec![Wic('b', 2)]),
        // The walkthrough shows a=[3, 1] here without narrating the write.
        Read('a', 1),
        Write('a', 1),
        Check("C", vec![Ric('a', 3), Wic('a', 1)]),
        Write('b', 5),
        Check(
            "D",
            vec![In('b', Sram), Tuple('b', 0, 0, 0), Absent('c'), Holds(Sram, &['a', 'b'])],
        ),
        Read('a', 4),
        Write('b', 2),
        Check("E", vec![In('a', SttRam), Tuple('a', 0, 0, 0), Wic('b', 2), Holds(SttRam, &['a', 'd'])]),
        Read('a', 4),
        Check("F", vec![Ric('a', 4)]),
        Read('c', 1),
        Check("c re-inserted", vec![Prediction('c', true), In('c', Sram), Holds(Sram, &['b', 'c'])]),
        Write('c', 7),
        Check("G", vec![In('c', Sram), Conf('c', 1), Wic('c', 0), Ric('a', 4)]),
        Write('c', 3),
        Check("H", vec![Wic('c', 3)]),
        Read('e', 1),
        Check(
            "I",
            vec![Prediction('e', false), In('e', SttRam), Tuple('e', 1, 0, 0), Absent('d'), Holds(SttRam, &['a', 'e'])],
        ),
        PowerFailure,
        Check("J", vec![Holds(SttRam, &['b', 'c']), Holds(Sram, &[])]),
        PowerOn,
        Read('c', 1),
        Read('b', 1),
        Check("K", vec![Ric('c', 1), Ric('b', 1), In('c', SttRam), In('b', SttRam)]),
    ]
}

pub fn initial_state(mutation: Mutation) -> HybridCache {
    let geo = CacheGeometry::new(256, 64, 2, 2).expect("one-set geometry");
    let mut cache = HybridCache::new(geo, Threshold::default(), PREDICTION_ENTRIES).with_mutation(mutation);
    for (way, name) in ['a', 'c', 'b', 'd'].into_iter().enumerate() {
        cache.install(0, way, BlockMeta::filled(block_of(name), ContentTag(0)));
    }
    cache.prediction_mut().set(block_of('e') as usize, false);
    cache
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenFailure {
    pub point: &'static str,
    pub mismatches: Vec<String>,
    pub state: String,
}

impl std::fmt::Display for GoldenFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "diverged at point {}", self.point)?;
        for m in &self.mismatches {
            writeln!(f, "  {m}")?;
        }
        write!(f, "state:\n{}", self.state)
    }
}

pub fn render_state(cache: &HybridCache) -> String {
    let geo = cache.geometry();
    let mut s = String::new();
    for (way, b) in cache.set(0).iter().enumerate() {
        let region = geo.region_of(way).name();
        if b.valid {
            let _ = writeln!(
                s,
                "  way {way} {region:<7} {} [{}, {}, {}]{}",
                name_of(b.tag),
                b.ric,
                b.wic,
                b.conf,
                if b.dirty { " dirty" } else { "" }
            );
        } else {
            let _ = writeln!(s, "  way {way} {region:<7} -");
        }
    }
    let pr: String = cache.prediction().bits().iter().map(|&b| if b { '1' } else { '0' }).collect();
    let _ = writeln!(s, "  PR {pr}");
    s
}

fn find(cache: &HybridCache, name: char) -> Option<(usize, BlockMeta)> {
    let tag = block_of(name);
    cache.lookup(0, tag).map(|w| (w, *cache.block(0, w)))
}

fn check(cache: &HybridCache, e: &Expect) -> Option<String> {
    let geo = cache.geometry();
    let need = |name: char| find(cache, name).ok_or_else(|| format!("{name}: expected resident, not cached"));
    let res: Result<(), String> = (|| {
        match *e {
            Expect::In(n, region) => {
                let (w, _) = need(n)?;
                if geo.region_of(w) != region {
                    return Err(format!("{n}: expected in {}, found in {}", region.name(), geo.region_of(w).name()));
                }
            }
            Expect::Absent(n) => {
                if let Some((w, _)) = find(cache, n) {
                    return Err(format!("{n}: expected evicted, found in way {w}"));
                }
            }
            Expect::Tuple(n, r, w, c) => {
                let (_, b) = need(n)?;
                if (b.ric, b.wic, b.conf.value()) != (r, w, c) {
                    return Err(format!(
                        "{n}: expected [{r}, {w}, {}], found [{}, {}, {}]",
                        Conf::new(c).unwrap_or_default(),
                        b.ric,
                        b.wic,
                        b.conf
                    ));
                }
            }
            Expect::Ric(n, r) => {
                let (_, b) = need(n)?;
                if b.ric != r {
                    return Err(format!("{n}: expected ric {r}, found {}", b.ric));
                }
            }
            Expect::Wic(n, w) => {
                let (_, b) = need(n)?;
                if b.wic != w {
                    return Err(format!("{n}: expected wic {w}, found {}", b.wic));
                }
            }
            Expect::Conf(n, c) => {
                let (_, b) = need(n)?;
                if b.conf.value() != c {
                    return Err(format!("{n}: expected conf {c:02b}, found {}", b.conf));
                }
            }
            Expect::Holds(region, names) => {
                let set = cache.set(0);
                let mut found: Vec<char> = geo.ways_of(region).filter(|&w| set[w].valid).map(|w| name_of(set[w].tag)).collect();
                let mut want = names.to_vec();
                found.sort_unstable();
                want.sort_unstable();
                if found != want {
                    return Err(format!("{} holds {found:?}, expected {want:?}", region.name()));
                }
            }
            Expect::Prediction(n, pr) => {
                let got = cache.prediction().get(block_of(n) as usize % PREDICTION_ENTRIES);
                if got != pr {
                    return Err(format!("PR for {n}: expected {}, found {}", pr as u8, got as u8));
                }
            }
        }
        Ok(())
    })();
    res.err()
}

/// Replays the walkthrough. Returns the labels of every point passed, or
/// the first point whose expectations do not hold.
pub fn run_golden(mutation: Mutation) -> Result<Vec<&'static str>, GoldenFailure> {
    let mut cache = initial_state(mutation);
    let tech = TechnologyParams::default();
    let mut write_id = 0;
    let mut passed = Vec::new();
    for step in scenario() {
        match step {
            Step::Read(n, times) | Step::Write(n, times) => {
                let addr = Address::new(block_of(n) * 64).expect("small address");
                for _ in 0..times {
                    if matches!(step, Step::Read(..)) {
                        cache.access(AccessKind::Read, addr, None);
                    } else {
                        write_id += 1;
                        cache.access(AccessKind::Write, addr, Some(ContentTag(write_id)));
                    }
                }
            }
            Step::PowerFailure => {
                backup(&mut cache, &tech, BackupOptions::default(), &mut Vec::new());
            }
            Step::PowerOn => power_on(&mut cache, false),
            Step::Check(label, expects) => {
                let mismatches: Vec<String> = expects.iter().filter_map(|e| check(&cache, e)).collect();
                if !mismatches.is_empty() {
                    return Err(GoldenFailure {
                        point: label,
                        mismatches,
                        state: render_state(&cache),
                    });
                }
                passed.push(label);
            }
        }
    }
    Ok(passed)
}
