use super::{FieldIndex, Layout, NetfnError, Packet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Match {
    /// `x_i == y`
    Equality { field: FieldIndex, value: u64 },
    /// `a <= x_i <= b`
    Range { field: FieldIndex, low: u64, high: u64 },
}

impl Match {
    pub fn field(&self) -> FieldIndex {
        match *self {
            Match::Equality { field, .. } | Match::Range { field, .. } => field,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    /// `x_j <- z`
    Replace { field: FieldIndex, value: u64 },
    /// `x_j <- x_j + delta (mod 2^width)`
    Add { field: FieldIndex, delta: i64 },
}

impl Action {
    pub fn field(&self) -> FieldIndex {
        match *self {
            Action::Replace { field, .. } | Action::Add { field, .. } => field,
        }
    }
}

/// A match-action pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Policy {
    pub matcher: Match,
    pub action: Action,
}

impl Policy {
    pub fn equality(i: FieldIndex, y: u64, j: FieldIndex, z: u64) -> Self {
        Self {
            matcher: Match::Equality { field: i, value: y },
            action: Action::Replace { field: j, value: z },
        }
    }

    pub fn range(i: FieldIndex, a: u64, b: u64, j: FieldIndex, z: u64) -> Self {
        Self {
            matcher: Match::Range {
                field: i,
                low: a,
                high: b,
            },
            action: Action::Replace { field: j, value: z },
        }
    }

    pub fn validate(&self, layout: &Layout) -> Result<(), NetfnError> {
        match self.matcher {
            Match::Equality { field, value } => layout.check_value(field, value)?,
            Match::Range { field, low, high } => {
                layout.check_value(field, low)?;
                layout.check_value(field, high)?;
                if low > high {
                    return Err(NetfnError::InvalidRange { low, high });
                }
            }
        }
        match self.action {
            Action::Replace { field, value } => layout.check_value(field, value),
            Action::Add { field, .. } => layout.field(field).map(|_| ()),
        }
    }

    /// `m(x)`.
    pub fn matches(&self, x: &Packet) -> Result<bool, NetfnError> {
        Ok(match self.matcher {
            Match::Equality { field, value } => x.get(field)? == value,
            Match::Range { field, low, high } => {
                let v = x.get(field)?;
                low <= v && v <= high
            }
        })
    }

    /// `a(x)`, regardless of the match outcome.
    pub fn act(&self, x: &Packet) -> Result<Packet, NetfnError> {
        let mut out = x.clone();
        match self.action {
            Action::Replace { field, value } => out.set(field, value)?,
            Action::Add { field, delta } => {
                let width = x.layout().width(field)?;
                let modulus = 1i128 << width;
                let v = (x.get(field)? as i128 + delta as i128).rem_euclid(modulus);
                out.set(field, v as u64)?;
            }
        }
        Ok(out)
    }

    /// `psi(x) = m(x) a(x) + (1 - m(x)) x`.
    pub fn apply(&self, x: &Packet) -> Result<Packet, NetfnError> {
        self.validate(x.layout())?;
        if self.matches(x)? {
            self.act(x)
        } else {
            Ok(x.clone())
        }
    }
}

/// An ordered, non-empty list of policies applied one after another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkFunction {
    policies: Vec<Policy>,
}

impl NetworkFunction {
    pub fn new(policies: Vec<Policy>) -> Result<Self, NetfnError> {
        if policies.is_empty() {
            return Err(NetfnError::EmptyFunction);
        }
        Ok(Self { policies })
    }

    pub fn single(policy: Policy) -> Self {
        Self {
            policies: vec![policy],
        }
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn validate(&self, layout: &Layout) -> Result<(), NetfnError> {
        self.policies.iter().try_for_each(|p| p.validate(layout))
    }
}

/// Evaluates `psi_N(...psi_1(x)...)`: each policy sees the output of the
/// previous one.
pub fn eval(nf: &NetworkFunction, x: &Packet) -> Result<Packet, NetfnError> {
    nf.policies.iter().try_fold(x.clone(), |acc, p| p.apply(&acc))
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

/// 1 iff `x_i == y`.
pub fn match_equality(p: &Policy, x: &Packet) -> Result<u8, NetfnError> {
    match p.matcher {
        Match::Equality { .. } => p.matches(x).map(bit),
        Match::Range { .. } => Err(NetfnError::PolicyKindMismatch("equality")),
    }
}

/// 1 iff `a <= x_i <= b`.
pub fn match_range(p: &Policy, x: &Packet) -> Result<u8, NetfnError> {
    match p.matcher {
        Match::Range { .. } => p.matches(x).map(bit),
        Match::Equality { .. } => Err(NetfnError::PolicyKindMismatch("range")),
    }
}
