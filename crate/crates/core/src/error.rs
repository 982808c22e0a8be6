use thiserror::Error;

/// Errors raised by construction, coding and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("protomatrix entry {value} at ({row}, {col}) exceeds 255")]
    EntryTooLarge { row: usize, col: usize, value: u64 },

    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("split violates B = sum(B_i) first at ({row}, {col}): base {base}, parts sum {sum}")]
    SplitSum {
        row: usize,
        col: usize,
        base: u32,
        sum: u32,
    },

    #[error("row {row} has weight {weight}, Hadamard order {order} needs {expected}")]
    RowWeight {
        row: usize,
        weight: u32,
        order: u32,
        expected: u32,
    },

    #[error("code rate is not positive ({numerator}/{denominator})")]
    NonPositiveRate { numerator: i128, denominator: i128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Hadamard order {0} is not supported (need even order between 2 and 14)")]
    UnsupportedOrder(u32),

    #[error("information bits violate the single-parity-check constraint")]
    SpcViolation,

    #[error("LLR input contains a non-finite value at position {0}")]
    NonFiniteLlr(usize),

    #[error("lifting factor z1 = {z1} is smaller than the largest entry {max_entry}")]
    LiftTooSmall { z1: usize, max_entry: u32 },

    #[error("no invertible parity sub-matrix found after {attempts} lifts")]
    SingularParity { attempts: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("threshold search start {start_db} dB does not converge")]
    StartTooLow { start_db: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
