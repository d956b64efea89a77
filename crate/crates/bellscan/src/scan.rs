//! Herald-window scans: re-select, re-tabulate and re-test the sample over
//! grids of window-start offsets and clean-attempt thresholds.
//!
//! Grid evaluation may run on multiple threads, but results always assemble
//! in row-major order (offset outer, threshold inner) and each point is a
//! pure function of the inputs, so output is identical at any parallelism.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::herald::select_sample;
use crate::model::{CandidateEvent, HeraldFilter};
use crate::stats::{analyze, tabulate, SampleStats};

/// One grid point: the filter coordinates, the surviving sample size and,
/// when every setting pair is populated, the full statistics battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub start_offset_ps: i64,
    pub invalid_threshold: u32,
    pub n_selected: u64,
    /// None when some setting pair has no trials; the point stays in the
    /// grid with its observed N.
    pub stats: Option<SampleStats>,
}

/// Row-major scan output with its axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub offsets: Vec<i64>,
    pub thresholds: Vec<u32>,
    /// `offsets.len() * thresholds.len()` points, offset-major.
    pub results: Vec<ScanResult>,
}

impl ScanGrid {
    pub fn get(&self, offset_idx: usize, threshold_idx: usize) -> &ScanResult {
        &self.results[offset_idx * self.thresholds.len() + threshold_idx]
    }

    /// Rebuilds a grid from row-major rows, recovering the axes. Errors when
    /// the rows do not form a complete offset x threshold cross product.
    pub fn from_rows(results: Vec<ScanResult>) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::Config("scan holds no rows".into()));
        }
        let first_offset = results[0].start_offset_ps;
        let thresholds: Vec<u32> = results
            .iter()
            .take_while(|r| r.start_offset_ps == first_offset)
            .map(|r| r.invalid_threshold)
            .collect();
        let mut offsets = Vec::new();
        for block in results.chunks(thresholds.len()) {
            let offset = block[0].start_offset_ps;
            let ok = block.len() == thresholds.len()
                && block
                    .iter()
                    .zip(&thresholds)
                    .all(|(r, &k)| r.start_offset_ps == offset && r.invalid_threshold == k);
            if !ok || offsets.contains(&offset) {
                return Err(Error::Config(
                    "scan rows do not form a row-major grid".into(),
                ));
            }
            offsets.push(offset);
        }
        Ok(ScanGrid {
            offsets,
            thresholds,
            results,
        })
    }
}

/// Selects, tabulates and tests one (offset, threshold) point.
pub fn evaluate_point(
    events: &[CandidateEvent],
    base: &HeraldFilter,
    start_offset_ps: i64,
    invalid_threshold: u32,
) -> ScanResult {
    let filter = base
        .with_offset(start_offset_ps)
        .with_threshold(invalid_threshold);
    let sample = select_sample(events, &filter);
    let table = tabulate(&sample);
    ScanResult {
        start_offset_ps,
        invalid_threshold,
        n_selected: sample.len() as u64,
        // the only analyze failure mode is an empty setting pair
        stats: analyze(&table).ok(),
    }
}

fn offset_axis(min: i64, max: i64, step: i64) -> Vec<i64> {
    assert!(step > 0, "offset step must be positive");
    let mut v = Vec::new();
    let mut x = min;
    while x <= max {
        v.push(x);
        x = match x.checked_add(step) {
            Some(next) => next,
            None => break,
        };
    }
    v
}

fn threshold_axis(min: u32, max: u32, step: u32) -> Vec<u32> {
    assert!(step > 0, "threshold step must be positive");
    let mut v = Vec::new();
    let mut x = min;
    while x <= max {
        v.push(x);
        x = match x.checked_add(step) {
            Some(next) => next,
            None => break,
        };
    }
    v
}

fn run_grid(events: &[CandidateEvent], base: &HeraldFilter, offsets: Vec<i64>, thresholds: Vec<u32>) -> ScanGrid {
    let points: Vec<(i64, u32)> = offsets
        .iter()
        .flat_map(|&o| thresholds.iter().map(move |&k| (o, k)))
        .collect();
    let results: Vec<ScanResult> = points
        .par_iter()
        .map(|&(o, k)| evaluate_point(events, base, o, k))
        .collect();
    ScanGrid {
        offsets,
        thresholds,
        results,
    }
}

/// Offset sweep at the base filter's threshold, inclusive on both ends.
pub fn scan_1d(
    events: &[CandidateEvent],
    base: &HeraldFilter,
    offset_min: i64,
    offset_max: i64,
    offset_step: i64,
) -> ScanGrid {
    run_grid(
        events,
        base,
        offset_axis(offset_min, offset_max, offset_step),
        vec![base.invalid_threshold],
    )
}

/// Full offset x threshold sweep, inclusive on both ends of both axes.
#[allow(clippy::too_many_arguments)]
pub fn scan_2d(
    events: &[CandidateEvent],
    base: &HeraldFilter,
    offset_min: i64,
    offset_max: i64,
    offset_step: i64,
    threshold_min: u32,
    threshold_max: u32,
    threshold_step: u32,
) -> ScanGrid {
    run_grid(
        events,
        base,
        offset_axis(offset_min, offset_max, offset_step),
        threshold_axis(threshold_min, threshold_max, threshold_step),
    )
}

/// Which tail probability a histogram collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueKind {
    NoSignalChi2,
    Chsh,
}

/// Fixed 20-bin histogram on [0, 1]. Undefined grid points are excluded;
/// `total` counts only what landed in a bin.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueHistogram {
    pub bin_edges: [f64; 21],
    pub counts: [u64; 20],
    pub total: u64,
}

impl PValueHistogram {
    pub fn new() -> Self {
        let mut bin_edges = [0.0; 21];
        for (i, e) in bin_edges.iter_mut().enumerate() {
            *e = i as f64 / 20.0;
        }
        PValueHistogram {
            bin_edges,
            counts: [0; 20],
            total: 0,
        }
    }

    pub fn add(&mut self, p: f64) {
        let idx = ((p * 20.0).floor() as usize).min(19);
        self.counts[idx] += 1;
        self.total += 1;
    }
}

impl Default for PValueHistogram {
    fn default() -> Self {
        Self::new()
    }
}

/// Collects the chosen p-value over every defined grid point. For the
/// chi-square kind, points whose chi-square degenerated are skipped too.
pub fn pvalue_histogram(grid: &ScanGrid, which: PValueKind) -> PValueHistogram {
    let mut h = PValueHistogram::new();
    for r in &grid.results {
        let p = match which {
            PValueKind::NoSignalChi2 => r.stats.as_ref().and_then(|s| s.chi2.map(|c| c.p)),
            PValueKind::Chsh => r.stats.as_ref().and_then(|s| s.chsh.p),
        };
        if let Some(p) = p {
            h.add(p);
        }
    }
    h
}
