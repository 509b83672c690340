//! Plaintext packets, match-action policies and network functions.
//!
//! This is the reference every encrypted scheme is checked against.

mod bitwise;
mod layout;
mod parse;
mod policy;

pub use bitwise::{bitwise_and_eq, bitwise_geq, bitwise_leq};
pub use layout::{conn_state, ipv4, tag, FieldIndex, FieldKind, FieldSpec, Layout, Packet, MAX_FIELD_WIDTH};
pub use parse::{parse_line, parse_policy_file};
pub use policy::{eval, match_equality, match_range, Action, Match, NetworkFunction, Policy};

#[derive(Debug, thiserror::Error)]
pub enum NetfnError {
    #[error("field index {index} out of range for a {len}-field packet")]
    FieldOutOfRange { index: u16, len: usize },
    #[error("value {value} does not fit field {index} ({width} bits)")]
    ValueTooWide { index: u16, value: u64, width: u8 },
    #[error("packet has {got} values, layout has {expected} fields")]
    LengthMismatch { expected: usize, got: usize },
    #[error("range [{low}, {high}] is empty")]
    InvalidRange { low: u64, high: u64 },
    #[error("network function has no policies")]
    EmptyFunction,
    #[error("expected a {0} policy")]
    PolicyKindMismatch(&'static str),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<NetfnError>,
    },
}
