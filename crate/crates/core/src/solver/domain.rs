use std::collections::BTreeSet;
use std::fmt;

use crate::value::Value;

/// Finite set of candidate values plus the completeness mark.
///
/// A complete domain is guaranteed to hold every value the variable can take
/// in any solution. Open domains are partial descriptions that the model
/// description may still extend; propagation never touches them.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Domain {
    values: BTreeSet<Value>,
    complete: bool,
}

impl Domain {
    pub fn new<I, V>(values: I, complete: bool) -> Domain
    where
        I: IntoIterator<Item = V>,
        V: Into<Value>,
    {
        Domain {
            values: values.into_iter().map(Into::into).collect(),
            complete,
        }
    }

    pub fn values(&self) -> &BTreeSet<Value> {
        &self.values
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.values.contains(v)
    }

    /// The assigned value, if the domain is a singleton.
    pub fn single(&self) -> Option<&Value> {
        if self.values.len() == 1 {
            self.values.iter().next()
        } else {
            None
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut BTreeSet<Value> {
        &mut self.values
    }

    pub(crate) fn mark_complete(&mut self) {
        self.complete = true;
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

/// Kleene truth value; `Unknown` is the unspecified interpretation `U`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum BoolStatus {
    False,
    Unknown,
    True,
}

impl BoolStatus {
    pub fn from_bool(b: bool) -> BoolStatus {
        if b {
            BoolStatus::True
        } else {
            BoolStatus::False
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            BoolStatus::True => Some(true),
            BoolStatus::False => Some(false),
            BoolStatus::Unknown => None,
        }
    }

    pub fn and(self, other: BoolStatus) -> BoolStatus {
        self.min(other)
    }

    pub fn or(self, other: BoolStatus) -> BoolStatus {
        self.max(other)
    }

    pub fn implies(self, other: BoolStatus) -> BoolStatus {
        (!self).or(other)
    }

    pub fn equiv(self, other: BoolStatus) -> BoolStatus {
        match (self.as_bool(), other.as_bool()) {
            (Some(a), Some(b)) => BoolStatus::from_bool(a == b),
            _ => BoolStatus::Unknown,
        }
    }

    /// The letter used in dumps: `T`, `F` or `U`.
    pub fn letter(self) -> char {
        match self {
            BoolStatus::True => 'T',
            BoolStatus::False => 'F',
            BoolStatus::Unknown => 'U',
        }
    }

    pub fn from_letter(c: char) -> Option<BoolStatus> {
        match c {
            'T' | 't' => Some(BoolStatus::True),
            'F' | 'f' => Some(BoolStatus::False),
            'U' | 'u' => Some(BoolStatus::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for BoolStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl std::ops::Not for BoolStatus {
    type Output = BoolStatus;

    fn not(self) -> BoolStatus {
        match self {
            BoolStatus::True => BoolStatus::False,
            BoolStatus::False => BoolStatus::True,
            BoolStatus::Unknown => BoolStatus::Unknown,
        }
    }
}
