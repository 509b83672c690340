//! Entry, cloud and client middleboxes over an in-memory fabric.
//!
//! Only inbound traffic is simulated: frames enter at the entry middlebox,
//! are processed by the cloud, and reach the client middlebox encapsulated
//! together with the PNFV payload. The client decides the verdict.

mod fabric;
pub mod frame;
mod roles;
mod scenario;
pub mod wire;

use std::fmt;

use crate::crypto::CryptoError;
use crate::netfn::NetfnError;
use crate::schemes::SchemeError;

pub use fabric::{EntryBody, Fabric, Message, Role};
pub use frame::{fields_from_frame, RawFrame};
pub use roles::{client_verdict, ClientMb, CloudMb, Deployment, EntryMb, SimConfig};
pub use scenario::{run_scenario, run_scenario_file, Simulator, Trace, TraceEvent, VerdictRecord};
pub use wire::{decapsulate, encapsulate, EncapsulatedPacket, PnfvPayload};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("truncated frame: {len} bytes")]
    TruncatedFrame { len: usize },
    #[error("not an IPv4 frame (version {version})")]
    NotIpv4 { version: u8 },
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("length mismatch: expected {expected} bytes, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("payload id {id} does not fit in 20 bits")]
    IdTooWide { id: u32 },
    #[error("unknown scheme id {0}")]
    UnknownScheme(u8),
    #[error("unsupported configuration: {0}")]
    Unsupported(&'static str),
    #[error("{0}")]
    Layout(String),
    #[error("unknown policy file `{path}`")]
    UnknownPolicyFile { path: String },
    #[error("script line {line}: {msg}")]
    Script { line: usize, msg: String },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<NetfnError> for SimError {
    fn from(e: NetfnError) -> Self {
        SimError::Scheme(e.into())
    }
}

impl From<CryptoError> for SimError {
    fn from(e: CryptoError) -> Self {
        SimError::Scheme(e.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Forward,
    Drop,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Forward => "forward",
            Verdict::Drop => "drop",
        })
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forward" => Ok(Verdict::Forward),
            "drop" => Ok(Verdict::Drop),
            _ => Err(format!("unknown verdict `{s}`")),
        }
    }
}
