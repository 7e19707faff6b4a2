//! Oracle hash chains (`Line` / `SimLine`), a round-based MPC simulator with
//! memory and query budgets, reference strategies for the upper bounds, and
//! runnable compression codecs whose bit-level length accounting is checked
//! against the counting bound.
//!
//! The crate is organized as a library with one thin CLI binary (`lmpc`).
//! Each major capability has a runnable demo under `examples/`.

pub mod bits;
pub mod chain;
pub mod compression;
pub mod config;
pub mod experiments;
pub mod formats;
pub mod mpc;
pub mod oracle;
pub mod ram_eval;
pub mod strategies;

pub use bits::{BitReader, BitString};
pub use chain::{Func, InputVector, NodeState, Params};
pub use oracle::{Mode, Oracle, OracleSeed, QueryTag};

use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A value does not fit in its declared bit width.
    WidthMismatch(&'static str),
    /// Chain index does not fit in the counter field.
    CounterOverflow { index: u32, c_bits: u32 },
    /// Operation requires a different oracle mode.
    ModeUnsupported(&'static str),
    /// Parameter set rejected by validation.
    InvalidParams(String),
    /// Serialized payload has the wrong length.
    LengthMismatch { expected: usize, got: usize },
    /// An initial input share exceeds a machine's memory.
    ShareOverflow { machine: u32, bits: usize },
    /// Local memory cannot hold even one input block plus bookkeeping.
    InsufficientMemory,
    /// A machine would receive more message bits than its memory holds.
    ReceiverOverflow { dst: u32, bits: usize },
    /// An enumeration or tape read exceeds the configured cap.
    CapExceeded { cap: u64, needed: u64 },
    /// The no-jump precondition of an encoding scheme does not hold.
    PrecondFailed(String),
    /// Too few target entries were found among the round's queries.
    NoIntersection { found: u32, alpha: u32 },
    /// Two distinct messages produced the same encoding (a codec bug).
    InjectivityFailure { a: usize, b: usize },
    /// Malformed configuration file or flag.
    Config(String),
    /// Malformed serialized file.
    Format(String),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::WidthMismatch(what) => write!(f, "value too wide for field: {what}"),
            Error::CounterOverflow { index, c_bits } => {
                write!(f, "chain index {index} does not fit in {c_bits} counter bits")
            }
            Error::ModeUnsupported(what) => write!(f, "oracle mode unsupported: {what}"),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {expected}, got {got}")
            }
            Error::ShareOverflow { machine, bits } => {
                write!(f, "input share for machine {machine} needs {bits} bits")
            }
            Error::InsufficientMemory => write!(f, "local memory too small for one block"),
            Error::ReceiverOverflow { dst, bits } => {
                write!(f, "machine {dst} would receive {bits} bits")
            }
            Error::CapExceeded { cap, needed } => {
                write!(f, "cap exceeded: need {needed}, cap {cap}")
            }
            Error::PrecondFailed(msg) => write!(f, "precondition failed: {msg}"),
            Error::NoIntersection { found, alpha } => {
                write!(f, "only {found} target entries queried, need {alpha}")
            }
            Error::InjectivityFailure { a, b } => {
                write!(f, "messages {a} and {b} share an encoding")
            }
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
