//! Reference implementations shared by the property tests and the acceptance runner.
#![allow(dead_code)]

use blinkscan::blinksense::BlinkEvent;
use blinkscan::linkframe::encode;
use blinkscan::{Point, Region, SensorSample, SignalThresholds};

/// Reference scanner: collect maximal runs of at-or-below-threshold samples,
/// measure each to the first sample after it (or its own last sample at the
/// end of the stream), then keep runs that are long enough and start outside
/// the refractory window of the last kept run.
pub fn brute_force(stream: &[SensorSample], th: &SignalThresholds) -> Vec<BlinkEvent> {
    let mut runs: Vec<(u64, u64)> = Vec::new();
    let mut i = 0;
    while i < stream.len() {
        if stream[i].v > th.blink_threshold {
            i += 1;
            continue;
        }
        let start = stream[i].t;
        let mut j = i;
        while j + 1 < stream.len() && stream[j + 1].v <= th.blink_threshold {
            j += 1;
        }
        let end = if j + 1 < stream.len() {
            stream[j + 1].t
        } else {
            stream[j].t
        };
        runs.push((start, end));
        i = j + 1;
    }
    let mut kept: Vec<BlinkEvent> = Vec::new();
    let mut last_end: Option<u64> = None;
    for (s, e) in runs {
        if e - s < th.min_blink_ms {
            continue;
        }
        if last_end.is_some_and(|le| s < le + th.refractory_ms) {
            continue;
        }
        last_end = Some(e);
        kept.push(BlinkEvent {
            onset_t: s,
            duration_ms: e - s,
        });
    }
    kept
}

/// Pixel-level tiling check: every pixel of `parent` is covered by exactly
/// one child and no child pixel falls outside.
pub fn tiles_exactly(parent: &Region) -> bool {
    let children: Vec<Region> = parent.quadrants().into_iter().flatten().collect();
    let mut cover = vec![0u8; (parent.w * parent.h) as usize];
    for c in &children {
        if c.is_empty() {
            return false;
        }
        for y in c.y..c.y + c.h {
            for x in c.x..c.x + c.w {
                if !parent.contains(Point::new(x, y)) {
                    return false;
                }
                cover[((y - parent.y) * parent.w + (x - parent.x)) as usize] += 1;
            }
        }
    }
    cover.iter().all(|&n| n == 1)
}

/// Offsets in scan order, y pointing down.
pub const DIRS: [(i64, i64); 8] = [
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
];

/// A way to finish: which quadrant at each level, then direction and steps.
#[derive(Debug, Clone)]
pub struct Path {
    pub chain: Vec<usize>,
    pub dir: usize,
    pub steps: u32,
    pub point: (u32, u32),
}

/// Halves a rectangle without going through the library.
pub fn child(r: (u32, u32, u32, u32), q: usize) -> Option<(u32, u32, u32, u32)> {
    let (x, y, w, h) = r;
    let (w0, h0) = (w / 2, h / 2);
    let c = match q {
        0 => (x, y, w0, h0),
        1 => (x + w0, y, w - w0, h0),
        2 => (x, y + h0, w0, h - h0),
        _ => (x + w0, y + h0, w - w0, h - h0),
    };
    (c.2 > 0 && c.3 > 0).then_some(c)
}

/// Every cursor position an ideal user can click: all quadrant chains, all
/// directions, every step count until the clamped cursor stops moving.
pub fn reachable(screen: (u32, u32), depth: u32, step: u32) -> Vec<Path> {
    let mut blocks = vec![(vec![], (0, 0, screen.0, screen.1))];
    for _ in 0..depth {
        blocks = blocks
            .into_iter()
            .flat_map(|(chain, r)| {
                (0..4).filter_map(move |q| {
                    child(r, q).map(|c| {
                        let mut ch: Vec<usize> = chain.clone();
                        ch.push(q);
                        (ch, c)
                    })
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for (chain, (x, y, w, h)) in blocks {
        let start = (x + w / 2, y + h / 2);
        for (d, &(dx, dy)) in DIRS.iter().enumerate() {
            let mut p = start;
            let mut k = 0;
            loop {
                out.push(Path {
                    chain: chain.clone(),
                    dir: d,
                    steps: k,
                    point: p,
                });
                let nx = (i64::from(p.0) + dx * i64::from(step))
                    .clamp(i64::from(x), i64::from(x + w) - 1) as u32;
                let ny = (i64::from(p.1) + dy * i64::from(step))
                    .clamp(i64::from(y), i64::from(y + h) - 1) as u32;
                if (nx, ny) == p {
                    break;
                }
                p = (nx, ny);
                k += 1;
            }
        }
    }
    out
}

/// 2-D prefix sums over a reachable-point bitmap, so "does this target hold a
/// clickable point" is O(1).
pub struct Hits {
    w: usize,
    sums: Vec<u32>,
}

impl Hits {
    pub fn new(w: u32, h: u32, pts: &[Path]) -> Self {
        let (w, h) = (w as usize, h as usize);
        let mut grid = vec![0u32; w * h];
        for p in pts {
            grid[p.point.1 as usize * w + p.point.0 as usize] = 1;
        }
        let mut sums = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            for x in 0..w {
                sums[(y + 1) * (w + 1) + x + 1] =
                    grid[y * w + x] + sums[y * (w + 1) + x + 1] + sums[(y + 1) * (w + 1) + x]
                        - sums[y * (w + 1) + x];
            }
        }
        Self { w, sums }
    }

    pub fn any_in(&self, r: &Region) -> bool {
        let s = |x: u32, y: u32| self.sums[y as usize * (self.w + 1) + x as usize];
        s(r.right(), r.bottom()) + s(r.x, r.y) - s(r.x, r.bottom()) - s(r.right(), r.y) > 0
    }
}

pub fn raw_stream(frames: &[(u16, u8)]) -> Vec<u8> {
    frames
        .iter()
        .enumerate()
        .flat_map(|(i, &(v, dt))| encode(i as u8, v, dt).unwrap())
        .collect()
}

/// True when `needle` appears in order inside `hay`.
pub fn is_subsequence<T: PartialEq>(needle: &[T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}
