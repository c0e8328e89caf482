//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A KISS2 or instance-config line that could not be understood.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A machine with no transition rows has no behavior to compile.
    #[error("empty machine: no transition rows")]
    EmptyMachine,

    /// Input, output and state-code widths are limited to 64 bits each.
    #[error("machine too wide: {what} = {n} exceeds the supported maximum of {max}")]
    TooWide {
        what: &'static str,
        n: usize,
        max: usize,
    },

    /// Two cubes of the same state overlap with different targets or outputs.
    #[error("ambiguous machine: state {state} has overlapping cubes with conflicting targets (rows {a} and {b})")]
    Ambiguous { state: String, a: usize, b: usize },

    /// An instance description violates its own structural rules.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// The machine does not fit on the given overlay instance.
    #[error("machine does not fit this instance: {0}")]
    NotHostable(String),

    /// Mapping or loading would materialize more RAM bits than allowed.
    #[error("instance needs {needed} RAM bits, over the {cap}-bit cap")]
    CapExceeded { needed: u128, cap: u128 },

    /// A sizing formula overflowed the representable range.
    #[error("instance size overflows the supported range")]
    SizeOverflow,

    /// A bitstream file that does not follow the text format.
    #[error("bitstream format error at line {line}: {msg}")]
    BitstreamFormat { line: usize, msg: String },

    /// The bitstream magic line names a different format version.
    #[error("bitstream version mismatch: expected {expected:?}, found {found:?}")]
    VersionMismatch { expected: String, found: String },

    /// Section list does not match the shapes implied by the header.
    #[error("section shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A stimulus line with the wrong number of bits.
    #[error("stimulus width mismatch at line {line}: expected {expected} bits, got {got}")]
    StimulusWidth {
        line: usize,
        expected: usize,
        got: usize,
    },

    /// Bitstream and machine disagree on input/output counts.
    #[error("arity mismatch between bitstream and machine: {0}")]
    ArityMismatch(String),

    /// Exhaustive verification is only allowed for narrow machines.
    #[error("exhaustive verification needs at most {cap} inputs, machine has {i_total}")]
    ExhaustiveTooWide { i_total: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
