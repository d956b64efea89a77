//! Domain types shared by every stage: candidate events, herald filters,
//! per-setting count tables and statistic records.

use crate::error::{Error, Result};

/// Ceiling on the consecutive-clean-attempts counter. Raw values above it
/// saturate rather than error, so a threshold of 250 means "maximal streak".
pub const CLEAN_ATTEMPTS_CAP: u32 = 250;

/// One heralded coincidence candidate: two click times against the sync
/// edge, the preceding clean-attempt streak, and the settings and outcomes
/// recorded on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateEvent {
    pub run_id: u32,
    pub sync_index: u64,
    /// Herald click times in integer picoseconds relative to the sync edge.
    /// May be negative: early clicks are exactly what window scans probe.
    pub click1_ps: i64,
    pub click2_ps: i64,
    /// Consecutive clean attempts immediately before this one, saturated at
    /// [`CLEAN_ATTEMPTS_CAP`].
    pub clean_attempts: u32,
    /// Measurement settings, 0 or 1 on each side.
    pub setting_a: u8,
    pub setting_b: u8,
    /// Measurement outcomes, +1 or -1 on each side.
    pub outcome_x: i8,
    pub outcome_y: i8,
}

impl CandidateEvent {
    /// Validates raw fields into an event. `clean_attempts` saturates at the
    /// cap; settings must be 0/1 and outcomes +1/-1. Field order matches the
    /// event-file columns.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        run_id: u32,
        sync_index: u64,
        click1_ps: i64,
        click2_ps: i64,
        clean_attempts: u32,
        setting_a: u8,
        setting_b: u8,
        outcome_x: i8,
        outcome_y: i8,
    ) -> Result<Self> {
        if setting_a > 1 {
            return Err(Error::FieldOutOfRange {
                field: "setting_a",
                value: setting_a as i64,
            });
        }
        if setting_b > 1 {
            return Err(Error::FieldOutOfRange {
                field: "setting_b",
                value: setting_b as i64,
            });
        }
        if outcome_x != 1 && outcome_x != -1 {
            return Err(Error::FieldOutOfRange {
                field: "outcome_x",
                value: outcome_x as i64,
            });
        }
        if outcome_y != 1 && outcome_y != -1 {
            return Err(Error::FieldOutOfRange {
                field: "outcome_y",
                value: outcome_y as i64,
            });
        }
        Ok(CandidateEvent {
            run_id,
            sync_index,
            click1_ps,
            click2_ps,
            clean_attempts: clean_attempts.min(CLEAN_ATTEMPTS_CAP),
            setting_a,
            setting_b,
            outcome_x,
            outcome_y,
        })
    }
}

/// Event-ready selection window. An event passes when both clicks land in
/// `[window_start + start_offset, window_stop]` (inclusive) and its
/// clean-attempt streak is at least `invalid_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeraldFilter {
    /// Nominal window start; scans move `start_offset_ps` against it.
    pub window_start_ps: i64,
    pub start_offset_ps: i64,
    pub window_stop_ps: i64,
    /// Minimum clean-attempt streak, 0..=250. 0 disables the cut.
    pub invalid_threshold: u32,
}

impl HeraldFilter {
    pub fn new(
        window_start_ps: i64,
        start_offset_ps: i64,
        window_stop_ps: i64,
        invalid_threshold: u32,
    ) -> Self {
        HeraldFilter {
            window_start_ps,
            start_offset_ps,
            window_stop_ps,
            invalid_threshold,
        }
    }

    pub fn effective_start_ps(&self) -> i64 {
        self.window_start_ps.saturating_add(self.start_offset_ps)
    }

    /// An empty window. Degenerate filters select nothing, including events
    /// sitting exactly on a start == stop boundary.
    pub fn is_degenerate(&self) -> bool {
        self.effective_start_ps() >= self.window_stop_ps
    }

    pub fn with_offset(self, start_offset_ps: i64) -> Self {
        HeraldFilter {
            start_offset_ps,
            ..self
        }
    }

    pub fn with_threshold(self, invalid_threshold: u32) -> Self {
        HeraldFilter {
            invalid_threshold,
            ..self
        }
    }

    pub fn accepts(&self, ev: &CandidateEvent) -> bool {
        if self.is_degenerate() {
            return false;
        }
        let start = self.effective_start_ps();
        ev.click1_ps >= start
            && ev.click2_ps >= start
            && ev.click1_ps <= self.window_stop_ps
            && ev.click2_ps <= self.window_stop_ps
            && ev.clean_attempts >= self.invalid_threshold
    }
}

/// Outcome index: +1 maps to 0, -1 maps to 1.
#[inline]
fn oi(v: i8) -> usize {
    if v > 0 {
        0
    } else {
        1
    }
}

/// Outcome counts per joint setting, indexed by (a, b, x, y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountsTable {
    counts: [[[[u64; 2]; 2]; 2]; 2],
}

impl CountsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, a: u8, b: u8, x: i8, y: i8) -> u64 {
        assert!(a < 2 && b < 2, "settings are 0 or 1");
        self.counts[a as usize][b as usize][oi(x)][oi(y)]
    }

    pub fn set(&mut self, a: u8, b: u8, x: i8, y: i8, n: u64) {
        assert!(a < 2 && b < 2, "settings are 0 or 1");
        self.counts[a as usize][b as usize][oi(x)][oi(y)] = n;
    }

    pub fn record(&mut self, ev: &CandidateEvent) {
        self.counts[ev.setting_a as usize][ev.setting_b as usize][oi(ev.outcome_x)]
            [oi(ev.outcome_y)] += 1;
    }

    /// The four cells of one setting pair as `[n++, n+-, n-+, n--]`.
    pub fn pair_cells(&self, a: u8, b: u8) -> [u64; 4] {
        assert!(a < 2 && b < 2, "settings are 0 or 1");
        let c = &self.counts[a as usize][b as usize];
        [c[0][0], c[0][1], c[1][0], c[1][1]]
    }

    pub fn pair_total(&self, a: u8, b: u8) -> u64 {
        self.pair_cells(a, b).iter().sum()
    }

    pub fn total(&self) -> u64 {
        let mut t = 0;
        for a in 0..2u8 {
            for b in 0..2u8 {
                t += self.pair_total(a, b);
            }
        }
        t
    }
}

/// A point statistic with its propagated standard deviation and, when a
/// null hypothesis applies, the standardized distance and tail probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatWithSigma {
    pub value: f64,
    pub sigma: f64,
    /// Standardized distance from the null; `None` when no null applies.
    pub z: Option<f64>,
    /// Tail probability under the generating operation's tail convention.
    pub p: Option<f64>,
    /// Set when sigma is zero but the value sits off the null, so z has no
    /// finite representation.
    pub degenerate: bool,
}

impl StatWithSigma {
    /// A bare value + spread with no hypothesis attached.
    pub fn plain(value: f64, sigma: f64) -> Self {
        StatWithSigma {
            value,
            sigma,
            z: None,
            p: None,
            degenerate: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(click1: i64, click2: i64, clean: u32) -> CandidateEvent {
        CandidateEvent::new(0, 0, click1, click2, clean, 0, 0, 1, -1).unwrap()
    }

    #[test]
    fn clean_attempts_saturates_at_cap() {
        let e = CandidateEvent::new(0, 0, 0, 0, 300, 0, 0, 1, 1).unwrap();
        assert_eq!(e.clean_attempts, 250);
        let e = CandidateEvent::new(0, 0, 0, 0, 250, 0, 0, 1, 1).unwrap();
        assert_eq!(e.clean_attempts, 250);
    }

    #[test]
    fn out_of_range_fields_name_the_field() {
        let err = CandidateEvent::new(0, 0, 0, 0, 0, 2, 0, 1, 1).unwrap_err();
        assert!(err.to_string().contains("setting_a"), "got: {err}");
        let err = CandidateEvent::new(0, 0, 0, 0, 0, 0, 0, 0, 1).unwrap_err();
        assert!(err.to_string().contains("outcome_x"), "got: {err}");
        let err = CandidateEvent::new(0, 0, 0, 0, 0, 0, 0, 1, 3).unwrap_err();
        assert!(err.to_string().contains("outcome_y"), "got: {err}");
    }

    #[test]
    fn validation_is_identity_on_valid_events() {
        let e = CandidateEvent::new(7, 42, -5000, 3000, 128, 1, 0, -1, 1).unwrap();
        let again = CandidateEvent::new(
            e.run_id,
            e.sync_index,
            e.click1_ps,
            e.click2_ps,
            e.clean_attempts,
            e.setting_a,
            e.setting_b,
            e.outcome_x,
            e.outcome_y,
        )
        .unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn negative_click_times_are_valid() {
        let e = ev(-8000, -100, 0);
        assert_eq!(e.click1_ps, -8000);
    }

    #[test]
    fn filter_accepts_inclusive_bounds() {
        let f = HeraldFilter::new(0, 0, 1000, 50);
        assert!(f.accepts(&ev(0, 1000, 50)));
        assert!(!f.accepts(&ev(-1, 1000, 50)));
        assert!(!f.accepts(&ev(0, 1001, 50)));
        assert!(!f.accepts(&ev(0, 1000, 49)));
    }

    #[test]
    fn degenerate_window_selects_nothing() {
        // start == stop is already empty, not a one-point window
        let f = HeraldFilter::new(0, 1000, 1000, 0);
        assert!(f.is_degenerate());
        assert!(!f.accepts(&ev(1000, 1000, 250)));
    }

    #[test]
    fn counts_totals_grow_monotonically() {
        let mut t = CountsTable::new();
        assert_eq!(t.total(), 0);
        let mut last = 0;
        for i in 0..20u64 {
            let e = CandidateEvent::new(
                0,
                i,
                0,
                0,
                0,
                (i % 2) as u8,
                ((i / 2) % 2) as u8,
                if i % 3 == 0 { 1 } else { -1 },
                if i % 5 == 0 { 1 } else { -1 },
            )
            .unwrap();
            t.record(&e);
            assert!(t.total() > last);
            last = t.total();
        }
        assert_eq!(t.total(), 20);
    }

    #[test]
    fn pair_cells_order_is_pp_pm_mp_mm() {
        let mut t = CountsTable::new();
        t.set(1, 0, 1, 1, 10);
        t.set(1, 0, 1, -1, 20);
        t.set(1, 0, -1, 1, 30);
        t.set(1, 0, -1, -1, 40);
        assert_eq!(t.pair_cells(1, 0), [10, 20, 30, 40]);
        assert_eq!(t.pair_total(1, 0), 100);
        assert_eq!(t.pair_total(0, 1), 0);
    }
}
