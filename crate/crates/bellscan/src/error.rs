//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A raw event field is outside its domain.
    #[error("{field} out of range: {value}")]
    FieldOutOfRange { field: &'static str, value: i64 },

    /// An input file does not start with the expected column list.
    #[error("bad header: expected {expected:?}, got {found:?}")]
    HeaderMismatch {
        expected: &'static str,
        found: String,
    },

    /// A record could not be parsed. Lines are 1-based; line 1 is the header.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A statistic was requested for a setting pair with no trials.
    #[error("no trials for setting pair (a={a}, b={b})")]
    EmptySettingPair { a: u8, b: u8 },

    /// A statistic was requested on an empty sample.
    #[error("empty sample")]
    EmptySample,

    /// A ratio statistic has a zero denominator or zero spread.
    #[error("degenerate statistic: {0}")]
    Degenerate(&'static str),

    /// A generator configuration failed validation.
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
