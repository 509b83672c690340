use std::fmt;
use std::sync::Arc;

use super::NetfnError;

/// 1-based position of a field inside the packet vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldIndex(u16);

impl FieldIndex {
    pub const fn new(index: u16) -> Option<Self> {
        if index == 0 {
            None
        } else {
            Some(Self(index))
        }
    }

    /// Builds an index from a 0-based slot.
    pub fn from_slot(slot: usize) -> Self {
        Self(u16::try_from(slot + 1).expect("slot fits in u16"))
    }

    pub const fn get(self) -> u16 {
        self.0
    }

    /// 0-based offset into the packet vector.
    pub const fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for FieldIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    /// Copied from the IP/transport header.
    Header,
    /// Carried in the PNFV payload (tag, state, entry id).
    Virtual,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    pub index: FieldIndex,
    pub bit_width: u8,
    pub name: String,
    pub kind: FieldKind,
}

impl FieldSpec {
    pub fn header(index: u16, bit_width: u8, name: &str) -> Self {
        Self {
            index: FieldIndex::new(index).expect("field indices are 1-based"),
            bit_width,
            name: name.to_owned(),
            kind: FieldKind::Header,
        }
    }

    pub fn virtual_field(index: u16, bit_width: u8, name: &str) -> Self {
        Self {
            kind: FieldKind::Virtual,
            ..Self::header(index, bit_width, name)
        }
    }

    /// Largest value the field can hold.
    pub fn max_value(&self) -> u64 {
        (1u64 << self.bit_width) - 1
    }
}

pub const MAX_FIELD_WIDTH: u8 = 32;

/// Ordered description of the fields making up a packet vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    fields: Vec<FieldSpec>,
}

/// Field positions of [`Layout::ipv4`].
pub mod ipv4 {
    use super::FieldIndex;

    pub const S_IP: FieldIndex = idx(1);
    pub const D_IP: FieldIndex = idx(2);
    pub const S_PORT: FieldIndex = idx(3);
    pub const D_PORT: FieldIndex = idx(4);
    pub const PROT: FieldIndex = idx(5);
    pub const TAG: FieldIndex = idx(6);
    pub const STATE: FieldIndex = idx(7);
    pub const ID: FieldIndex = idx(8);

    /// The 5-tuple used for firewall policies and state table entries.
    pub const FIVE_TUPLE: [FieldIndex; 5] = [S_IP, D_IP, S_PORT, D_PORT, PROT];

    const fn idx(i: u16) -> FieldIndex {
        match FieldIndex::new(i) {
            Some(f) => f,
            None => panic!("zero index"),
        }
    }
}

/// Values of the virtual `tag` field.
pub mod tag {
    pub const ALLOW: u64 = 1;
    pub const DROP: u64 = 2;
}

/// Values of the virtual `state` field.
pub mod conn_state {
    pub const NEW: u64 = 1;
    pub const EST: u64 = 2;
}

impl Layout {
    pub fn new(fields: Vec<FieldSpec>) -> Result<Self, NetfnError> {
        if fields.is_empty() {
            return Err(NetfnError::InvalidLayout("layout has no fields".into()));
        }
        let mut last_header = 0u16;
        let mut first_virtual = u16::MAX;
        for (slot, f) in fields.iter().enumerate() {
            if f.index.slot() != slot {
                return Err(NetfnError::InvalidLayout(format!(
                    "field `{}` has index {} but sits at position {}",
                    f.name,
                    f.index,
                    slot + 1
                )));
            }
            if f.bit_width == 0 || f.bit_width > MAX_FIELD_WIDTH {
                return Err(NetfnError::InvalidLayout(format!(
                    "field `{}` has width {} (allowed 1..=32)",
                    f.name, f.bit_width
                )));
            }
            match f.kind {
                FieldKind::Header => last_header = last_header.max(f.index.get()),
                FieldKind::Virtual => first_virtual = first_virtual.min(f.index.get()),
            }
        }
        if first_virtual <= last_header {
            return Err(NetfnError::InvalidLayout(
                "virtual fields must follow all header fields".into(),
            ));
        }
        Ok(Self { fields })
    }

    /// The 5-tuple followed by the virtual `tag`, `state` and `id` fields.
    pub fn ipv4() -> Self {
        Self::new(vec![
            FieldSpec::header(1, 32, "s_ip"),
            FieldSpec::header(2, 32, "d_ip"),
            FieldSpec::header(3, 16, "s_port"),
            FieldSpec::header(4, 16, "d_port"),
            FieldSpec::header(5, 8, "prot"),
            FieldSpec::virtual_field(6, 16, "tag"),
            FieldSpec::virtual_field(7, 16, "state"),
            FieldSpec::virtual_field(8, 16, "id"),
        ])
        .expect("static layout is valid")
    }

    /// `n` header fields of identical width named `f1..fn`.
    pub fn uniform(n: usize, bit_width: u8) -> Result<Self, NetfnError> {
        let n = u16::try_from(n).map_err(|_| NetfnError::InvalidLayout("too many fields".into()))?;
        Self::new(
            (1..=n)
                .map(|i| FieldSpec::header(i, bit_width, &format!("f{i}")))
                .collect(),
        )
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    pub fn field(&self, index: FieldIndex) -> Result<&FieldSpec, NetfnError> {
        self.fields.get(index.slot()).ok_or(NetfnError::FieldOutOfRange {
            index: index.get(),
            len: self.fields.len(),
        })
    }

    pub fn width(&self, index: FieldIndex) -> Result<u8, NetfnError> {
        self.field(index).map(|f| f.bit_width)
    }

    pub fn max_width(&self) -> u8 {
        self.fields.iter().map(|f| f.bit_width).max().unwrap_or(0)
    }

    pub fn index_of(&self, name: &str) -> Option<FieldIndex> {
        self.fields.iter().find(|f| f.name == name).map(|f| f.index)
    }

    pub fn check_value(&self, index: FieldIndex, value: u64) -> Result<(), NetfnError> {
        let spec = self.field(index)?;
        if value > spec.max_value() {
            return Err(NetfnError::ValueTooWide {
                index: index.get(),
                value,
                width: spec.bit_width,
            });
        }
        Ok(())
    }
}

/// A packet as a vector of bounded non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    layout: Arc<Layout>,
    values: Vec<u64>,
}

impl Packet {
    pub fn new(layout: Arc<Layout>, values: Vec<u64>) -> Result<Self, NetfnError> {
        if values.len() != layout.len() {
            return Err(NetfnError::LengthMismatch {
                expected: layout.len(),
                got: values.len(),
            });
        }
        for (slot, &v) in values.iter().enumerate() {
            layout.check_value(FieldIndex::from_slot(slot), v)?;
        }
        Ok(Self { layout, values })
    }

    pub fn zeroed(layout: Arc<Layout>) -> Self {
        let values = vec![0; layout.len()];
        Self { layout, values }
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: FieldIndex) -> Result<u64, NetfnError> {
        self.layout.field(index)?;
        Ok(self.values[index.slot()])
    }

    pub fn set(&mut self, index: FieldIndex, value: u64) -> Result<(), NetfnError> {
        self.layout.check_value(index, value)?;
        self.values[index.slot()] = value;
        Ok(())
    }
}
