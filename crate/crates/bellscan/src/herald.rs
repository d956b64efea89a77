//! Event-ready sample selection.

use crate::model::{CandidateEvent, HeraldFilter};

/// Returns the events accepted by `filter`, preserving input order. Loosening
/// the filter (earlier start, lower threshold) can only grow the result, and
/// re-selecting a selection is a no-op; the scan layer leans on both.
pub fn select_sample(events: &[CandidateEvent], filter: &HeraldFilter) -> Vec<CandidateEvent> {
    events
        .iter()
        .filter(|ev| filter.accepts(ev))
        .copied()
        .collect()
}
