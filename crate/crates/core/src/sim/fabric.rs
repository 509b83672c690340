use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::crypto::PeksCiphertext;
use crate::schemes::fhe::FhePacket;
use crate::schemes::peks::PeksEntryOutput;

use super::frame::RawFrame;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    /// The outside network: source of injected frames, sink of forwarded ones.
    Net,
    Entry,
    Cloud,
    Client,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Net => "net",
            Role::Entry => "entry",
            Role::Cloud => "cloud",
            Role::Client => "client",
        })
    }
}

/// What the entry middlebox attaches to a frame for the cloud.
#[derive(Clone, Debug)]
pub enum EntryBody {
    /// The frame itself is all the cloud gets.
    Plain,
    /// `σ(E(x || I))`, `σ(Ɛ(x || I))`, `σ(Ɛ(I))`; the frame's 5-tuple is zeroed.
    Peks(PeksEntryOutput),
    /// `σ(Ɛ(x || I))` next to a plaintext frame, for state lookups.
    Searchable(Vec<PeksCiphertext>),
    Fhe(FhePacket),
}

#[derive(Clone, Debug)]
pub enum Message {
    /// Net to entry.
    Ingress(RawFrame),
    /// Entry to cloud.
    Forward { frame: RawFrame, body: EntryBody },
    /// Cloud to client: the encapsulated packets produced for one frame.
    Encapsulated(Vec<Vec<u8>>),
    /// Client to cloud: a serialized state entry request.
    StateRequest(Vec<u8>),
    /// Cloud to client: id assigned to the last request.
    StateRegistered(u32),
    /// Client to cloud: a serialized update or delete.
    StateMaintenance(Vec<u8>),
    /// Client to net.
    Egress(RawFrame),
}

/// One ordered, lossless queue per directed role pair.
#[derive(Debug, Default)]
pub struct Fabric {
    queues: BTreeMap<(Role, Role), VecDeque<Message>>,
}

impl Fabric {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send(&mut self, from: Role, to: Role, msg: Message) {
        self.queues.entry((from, to)).or_default().push_back(msg);
    }

    /// Next message from the first non-empty queue, in role order.
    pub fn deliver(&mut self) -> Option<(Role, Role, Message)> {
        self.queues
            .iter_mut()
            .find_map(|(&(from, to), q)| q.pop_front().map(|m| (from, to, m)))
    }

    pub fn is_idle(&self) -> bool {
        self.queues.values().all(VecDeque::is_empty)
    }
}
