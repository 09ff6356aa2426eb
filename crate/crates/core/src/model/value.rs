use std::fmt;
use std::sync::Arc;

use super::sexpr::{read_all, SExpr, SExprKind};
use super::sort::Sort;
use crate::error::{Error, Result};

/// A concrete value. The derived order is the canonical order used wherever a
/// set of values is listed: by kind first, then by content.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    /// Natural number; the width lives in the sort.
    Nat(u64),
    Enum { code: u32, symbol: Arc<str> },
    /// Record fields in declaration order.
    Record(Vec<Value>),
    /// Keyword-tagged tuple, the shape of abstract nodes.
    Tuple(Vec<(Arc<str>, Value)>),
}

impl Value {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_nat(&self) -> Option<u64> {
        match self {
            Value::Nat(n) => Some(*n),
            _ => None,
        }
    }

    /// Looks up a tuple component by keyword (case-insensitive).
    pub fn tuple_get(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Tuple(kv) => kv
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(key))
                .map(|(_, v)| v),
            _ => None,
        }
    }

    /// Components of a record or tuple.
    pub fn components(&self) -> Vec<&Value> {
        match self {
            Value::Record(vs) => vs.iter().collect(),
            Value::Tuple(kv) => kv.iter().map(|(_, v)| v).collect(),
            _ => Vec::new(),
        }
    }

    pub fn tuple(items: impl IntoIterator<Item = (impl AsRef<str>, Value)>) -> Value {
        Value::Tuple(
            items
                .into_iter()
                .map(|(k, v)| (Arc::from(k.as_ref()), v))
                .collect(),
        )
    }

    /// Renders a value, using `sort` for record field names.
    pub fn display_with<'a>(&'a self, sort: &'a Sort) -> impl fmt::Display + 'a {
        WithSort(self, Some(sort))
    }
}

struct WithSort<'a>(&'a Value, Option<&'a Sort>);

impl fmt::Display for WithSort<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let WithSort(v, sort) = self;
        match v {
            Value::Bool(true) => write!(f, "T"),
            Value::Bool(false) => write!(f, "NIL"),
            Value::Nat(n) => write!(f, "{n}"),
            Value::Enum { symbol, .. } => write!(f, "{}", symbol.to_ascii_uppercase()),
            Value::Record(vs) => {
                let rec = match sort {
                    Some(Sort::Record(r)) if r.fields.len() == vs.len() => Some(r),
                    _ => None,
                };
                match rec {
                    Some(r) => {
                        write!(f, "({}", r.name.to_ascii_uppercase())?;
                        for ((name, s), v) in r.fields.iter().zip(vs) {
                            write!(
                                f,
                                " :{} {}",
                                name.to_ascii_uppercase(),
                                WithSort(v, Some(s))
                            )?;
                        }
                        write!(f, ")")
                    }
                    None => {
                        write!(f, "(RECORD")?;
                        for v in vs {
                            write!(f, " {}", WithSort(v, None))?;
                        }
                        write!(f, ")")
                    }
                }
            }
            Value::Tuple(kv) => {
                write!(f, "(")?;
                for (i, (k, v)) in kv.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    let s = match sort {
                        Some(Sort::Tuple(t)) => t.fields.get(i).map(|(_, s)| s),
                        _ => None,
                    };
                    write!(f, "(:{} {})", k.to_ascii_uppercase(), WithSort(v, s))?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        WithSort(self, None).fmt(f)
    }
}

/// Parses the canonical rendering of a value of `sort` (the inverse of
/// `Display` for scalars and tuples, and of `display_with` for records).
pub fn parse_value(text: &str, sort: &Sort) -> Result<Value> {
    let es = read_all(text).map_err(|e| Error::parse(e.span, e.message))?;
    match es.as_slice() {
        [e] => value_from_sexpr(e, sort),
        _ => Err(Error::Value(format!("expected one value, got `{text}`"))),
    }
}

fn value_from_sexpr(e: &SExpr, sort: &Sort) -> Result<Value> {
    let bad = || Error::Value(format!("cannot read a value of sort {sort} at {}", e.span));
    match (sort, &e.kind) {
        (Sort::Bool, SExprKind::Atom(a)) => match a.to_ascii_lowercase().as_str() {
            "t" | "true" => Ok(Value::Bool(true)),
            "nil" | "false" => Ok(Value::Bool(false)),
            _ => Err(bad()),
        },
        (Sort::Nat(_), SExprKind::Atom(a)) => {
            let v = Value::Nat(a.parse().map_err(|_| bad())?);
            if sort.contains(&v) {
                Ok(v)
            } else {
                Err(bad())
            }
        }
        (Sort::Enum(es), SExprKind::Atom(a)) => {
            let code = es.code_of(a).ok_or_else(bad)?;
            Ok(sort.scalar_value(code as u64))
        }
        (Sort::Tuple(t), SExprKind::List(items)) => {
            if items.len() != t.fields.len() {
                return Err(bad());
            }
            let mut out = Vec::with_capacity(items.len());
            for ((k, s), item) in t.fields.iter().zip(items) {
                let pair = item.list().ok_or_else(bad)?;
                match pair {
                    [key, v] if key.atom().is_some_and(|a| {
                        a.strip_prefix(':').is_some_and(|a| a.eq_ignore_ascii_case(k))
                    }) =>
                    {
                        out.push((Arc::from(k.as_str()), value_from_sexpr(v, s)?));
                    }
                    _ => return Err(bad()),
                }
            }
            Ok(Value::Tuple(out))
        }
        (Sort::Record(r), SExprKind::List(items)) => {
            let (head, rest) = items.split_first().ok_or_else(bad)?;
            if !head.atom().is_some_and(|h| h.eq_ignore_ascii_case(&r.name))
                || rest.len() != 2 * r.fields.len()
            {
                return Err(bad());
            }
            let mut out = Vec::with_capacity(r.fields.len());
            for ((name, s), kv) in r.fields.iter().zip(rest.chunks(2)) {
                let key_ok = kv[0]
                    .atom()
                    .and_then(|a| a.strip_prefix(':'))
                    .is_some_and(|a| a.eq_ignore_ascii_case(name));
                if !key_ok {
                    return Err(bad());
                }
                out.push(value_from_sexpr(&kv[1], s)?);
            }
            Ok(Value::Record(out))
        }
        _ => Err(bad()),
    }
}
