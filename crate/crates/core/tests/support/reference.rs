//! Straight-line model of the proposed policy, written from the rules
//! rather than from the engine. Every lookup is a linear scan and every
//! decision is spelled out, so it is slow but easy to audit.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Line {
    pub valid: bool,
    pub dirty: bool,
    pub tag: u64,
    pub ric: u8,
    pub wic: u8,
    pub conf: u8,
    pub content: u64,
}

pub struct Reference {
    pub block_size: u64,
    pub sets: u64,
    pub sram_ways: usize,
    pub stt_ways: usize,
    pub threshold: u8,
    pub lines: Vec<Vec<Line>>,
    pub pr: Vec<bool>,
    /// Every PCM write, in order.
    pub writebacks: Vec<(u64, u64)>,
}

impl Reference {
    pub fn new(block_size: u64, sets: u64, sram_ways: usize, stt_ways: usize, threshold: u8, entries: usize) -> Self {
        Reference {
            block_size,
            sets,
            sram_ways,
            stt_ways,
            threshold,
            lines: vec![vec![Line::default(); sram_ways + stt_ways]; sets as usize],
            pr: vec![true; entries],
            writebacks: Vec::new(),
        }
    }

    fn is_sram(&self, way: usize) -> bool {
        way < self.sram_ways
    }

    fn region_ways(&self, sram: bool) -> Vec<usize> {
        if sram {
            (0..self.sram_ways).collect()
        } else {
            (self.sram_ways..self.sram_ways + self.stt_ways).collect()
        }
    }

    fn block_number(&self, set: u64, tag: u64) -> u64 {
        tag * self.sets + set
    }

    fn drop_line(&mut self, set: usize, way: usize) {
        let l = self.lines[set][way];
        let block = self.block_number(set as u64, l.tag);
        if l.dirty {
            self.writebacks.push((block * self.block_size, l.content));
        }
        let n = self.pr.len();
        self.pr[(block % n as u64) as usize] = self.is_sram(way);
        self.lines[set][way] = Line::default();
    }

    /// A free way of the region, or the way freed by evicting the lowest
    /// counter (ric for STT-RAM, wic for SRAM), first way on ties.
    fn room(&mut self, set: usize, sram: bool) -> usize {
        let ways = self.region_ways(sram);
        for &w in &ways {
            if !self.lines[set][w].valid {
                return w;
            }
        }
        let mut best = ways[0];
        for &w in &ways {
            let key = |l: &Line| if sram { l.wic } else { l.ric };
            if key(&self.lines[set][w]) < key(&self.lines[set][best]) {
                best = w;
            }
        }
        self.drop_line(set, best);
        best
    }

    fn relocate(&mut self, set: usize, way: usize, to_sram: bool) {
        let dest = self.room(set, to_sram);
        let mut l = self.lines[set][way];
        l.ric = 0;
        l.wic = 0;
        l.conf = 0;
        self.lines[set][way] = Line::default();
        self.lines[set][dest] = l;
    }

    pub fn access(&mut self, write: bool, addr: u64, id: u64) {
        let block = addr / self.block_size;
        let set = (block % self.sets) as usize;
        let tag = block / self.sets;
        let t = self.threshold;
        let mut hit = None;
        for w in 0..self.lines[set].len() {
            if self.lines[set][w].valid && self.lines[set][w].tag == tag {
                hit = Some(w);
            }
        }
        match hit {
            Some(w) => {
                let in_sram = self.is_sram(w);
                let l = &mut self.lines[set][w];
                let counter = if write {
                    l.dirty = true;
                    l.content = id;
                    &mut l.wic
                } else {
                    &mut l.ric
                };
                if *counter < t {
                    *counter += 1;
                }
                let fired = *counter == t && l.conf < 3;
                if !fired {
                    return;
                }
                // Reads pull toward STT-RAM, writes toward SRAM.
                let belongs = if write { in_sram } else { !in_sram };
                if belongs {
                    l.conf += 1;
                    *counter = 0;
                } else {
                    self.relocate(set, w, write);
                }
            }
            None => {
                let n = self.pr.len();
                let to_sram = self.pr[(block % n as u64) as usize];
                let w = self.room(set, to_sram);
                let mut l = Line {
                    valid: true,
                    tag,
                    ..Line::default()
                };
                if write {
                    l.wic = 1;
                    l.dirty = true;
                    l.content = id;
                } else {
                    l.ric = 1;
                }
                self.lines[set][w] = l;
            }
        }
    }

    /// Failure: move SRAM blocks into STT-RAM by priority, then power back on.
    pub fn fail(&mut self) {
        for set in 0..self.sets as usize {
            let mut cands: Vec<usize> = (0..self.sram_ways).filter(|&w| self.lines[set][w].valid).collect();
            cands.sort_by(|&x, &y| {
                let (a, b) = (self.lines[set][x], self.lines[set][y]);
                b.conf.cmp(&a.conf).then(b.wic.cmp(&a.wic)).then(x.cmp(&y))
            });
            let mut placed: Vec<usize> = Vec::new();
            for w in cands {
                let l = self.lines[set][w];
                let stt = self.region_ways(false);
                let mut dest = stt.iter().copied().find(|&s| !self.lines[set][s].valid);
                if dest.is_none() {
                    let mut victim: Option<usize> = None;
                    for &s in &stt {
                        if placed.contains(&s) {
                            continue;
                        }
                        match victim {
                            Some(v) if self.lines[set][v].conf <= self.lines[set][s].conf => {}
                            _ => victim = Some(s),
                        }
                    }
                    if let Some(v) = victim {
                        if l.conf >= self.lines[set][v].conf {
                            let vl = self.lines[set][v];
                            let vb = self.block_number(set as u64, vl.tag);
                            if vl.dirty {
                                self.writebacks.push((vb * self.block_size, vl.content));
                            }
                            let n = self.pr.len();
                            self.pr[(vb % n as u64) as usize] = false;
                            dest = Some(v);
                        }
                    }
                }
                match dest {
                    Some(d) => {
                        self.lines[set][d] = Line { ric: 0, wic: 0, ..l };
                        placed.push(d);
                    }
                    None => {
                        if l.dirty {
                            let b = self.block_number(set as u64, l.tag);
                            self.writebacks.push((b * self.block_size, l.content));
                        }
                    }
                }
                self.lines[set][w] = Line::default();
            }
        }
        for p in self.pr.iter_mut() {
            *p = true;
        }
    }
}
