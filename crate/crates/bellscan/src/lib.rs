//! Statistics for event-ready Bell experiments.
//!
//! The pipeline runs in four stages, each usable on its own:
//!
//! 1. [`ingest`] reads candidate-event files (or [`synth`] fabricates them
//!    from a seeded model with known ground truth),
//! 2. [`herald`] selects the event-ready sample for a detection window and
//!    an attempt-quality threshold,
//! 3. [`stats`] turns the selected counts into CHSH and no-signaling
//!    estimates with counting-noise sigmas and tail probabilities,
//! 4. [`scan`] sweeps the selection parameters and tabulates how every
//!    statistic responds, which is where selection artifacts show up.
//!
//! Everything downstream of ingestion is deterministic: same events, same
//! filter, same bytes out, regardless of thread count.

pub mod error;
pub mod herald;
pub mod ingest;
pub mod model;
pub mod scan;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use herald::select_sample;
pub use model::{CandidateEvent, CountsTable, HeraldFilter, StatWithSigma, CLEAN_ATTEMPTS_CAP};
pub use stats::{analyze, tabulate, SampleStats};
