use std::fmt;
use std::sync::Arc;

use super::value::Value;

/// Largest supported natural width. Values are stored in a `u64`.
pub const MAX_NAT_WIDTH: u32 = 63;

/// A finite sort. Composite sorts (records, tuples) hold scalar or composite
/// components; every sort has a finite, enumerable domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Bool,
    /// Unsigned natural in `[0, 2^width)`.
    Nat(u32),
    Enum(Arc<EnumSort>),
    Record(Arc<RecordSort>),
    Tuple(Arc<TupleSort>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnumSort {
    pub name: String,
    pub symbols: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RecordSort {
    pub name: String,
    pub fields: Vec<(String, Sort)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TupleSort {
    pub fields: Vec<(String, Sort)>,
}

impl EnumSort {
    pub fn code_of(&self, symbol: &str) -> Option<u32> {
        self.symbols
            .iter()
            .position(|s| s.eq_ignore_ascii_case(symbol))
            .map(|i| i as u32)
    }

    /// Number of bits of the binary code; at least one.
    pub fn code_width(&self) -> u32 {
        bits_for(self.symbols.len().saturating_sub(1) as u64)
    }
}

impl RecordSort {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|(f, _)| f == name)
    }
}

impl TupleSort {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|(f, _)| f.eq_ignore_ascii_case(name))
    }
}

/// Number of bits needed to represent `n` (at least one).
pub fn bits_for(n: u64) -> u32 {
    (64 - n.leading_zeros()).max(1)
}

impl Sort {
    pub fn nat(width: u32) -> Sort {
        Sort::Nat(width)
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, Sort::Bool | Sort::Nat(_) | Sort::Enum(_))
    }

    /// Components of a record or tuple sort, empty for scalars.
    pub fn components(&self) -> &[(String, Sort)] {
        match self {
            Sort::Record(r) => &r.fields,
            Sort::Tuple(t) => &t.fields,
            _ => &[],
        }
    }

    /// Width of the bit encoding used by the bit-blaster.
    pub fn bit_width(&self) -> u32 {
        match self {
            Sort::Bool => 1,
            Sort::Nat(w) => *w,
            Sort::Enum(e) => e.code_width(),
            Sort::Record(_) | Sort::Tuple(_) => {
                self.components().iter().map(|(_, s)| s.bit_width()).sum()
            }
        }
    }

    /// Number of values of a scalar sort.
    pub fn scalar_size(&self) -> Option<u64> {
        match self {
            Sort::Bool => Some(2),
            Sort::Nat(w) => 1u64.checked_shl(*w),
            Sort::Enum(e) => Some(e.symbols.len() as u64),
            _ => None,
        }
    }

    /// The `i`-th value of a scalar sort in canonical order.
    pub fn scalar_value(&self, i: u64) -> Value {
        match self {
            Sort::Bool => Value::Bool(i != 0),
            Sort::Nat(_) => Value::Nat(i),
            Sort::Enum(e) => Value::Enum {
                code: i as u32,
                symbol: Arc::from(e.symbols[i as usize].as_str()),
            },
            _ => panic!("scalar_value on composite sort {self}"),
        }
    }

    /// Whether `v` is a member of this sort.
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Sort::Bool, Value::Bool(_)) => true,
            (Sort::Nat(w), Value::Nat(n)) => *w >= 64 || *n < (1u64 << w),
            (Sort::Enum(e), Value::Enum { code, symbol }) => e
                .symbols
                .get(*code as usize)
                .is_some_and(|s| s.as_str() == &**symbol),
            (Sort::Record(r), Value::Record(vs)) => {
                vs.len() == r.fields.len()
                    && r.fields.iter().zip(vs).all(|((_, s), v)| s.contains(v))
            }
            (Sort::Tuple(t), Value::Tuple(vs)) => {
                vs.len() == t.fields.len()
                    && t.fields
                        .iter()
                        .zip(vs)
                        .all(|((k, s), (k2, v))| k.eq_ignore_ascii_case(k2) && s.contains(v))
            }
            _ => false,
        }
    }

    /// The all-zero value of this sort.
    pub fn zero(&self) -> Value {
        match self {
            Sort::Record(r) => Value::Record(r.fields.iter().map(|(_, s)| s.zero()).collect()),
            Sort::Tuple(t) => Value::Tuple(
                t.fields
                    .iter()
                    .map(|(k, s)| (Arc::from(k.as_str()), s.zero()))
                    .collect(),
            ),
            s => s.scalar_value(0),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Bool => write!(f, "bool"),
            Sort::Nat(w) => write!(f, "(nat {w})"),
            Sort::Enum(e) => write!(f, "{}", e.name),
            Sort::Record(r) => write!(f, "{}", r.name),
            Sort::Tuple(t) => {
                write!(f, "(tuple")?;
                for (k, s) in &t.fields {
                    write!(f, " (:{k} {s})")?;
                }
                write!(f, ")")
            }
        }
    }
}
