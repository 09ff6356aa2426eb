//! Bounded natural lists, lists of them, and ordinals below `w^w` in Cantor
//! normal form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::synth::{Descriptor, Entry, Omap};

/// A natural list whose length is its bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bnl(pub Vec<u64>);

impl Bnl {
    pub fn zero(bound: usize) -> Bnl {
        Bnl(vec![0; bound])
    }

    pub fn bound(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Bnl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(" "))
    }
}

fn bnl_cmp(a: &Bnl, b: &Bnl) -> Result<Ordering> {
    if a.bound() != b.bound() {
        return Err(Error::BoundMismatch(a.bound(), b.bound()));
    }
    Ok(a.0.cmp(&b.0))
}

pub fn bnl_lt(a: &Bnl, b: &Bnl) -> Result<bool> {
    Ok(bnl_cmp(a, b)? == Ordering::Less)
}

pub fn bnl_le(a: &Bnl, b: &Bnl) -> Result<bool> {
    Ok(bnl_cmp(a, b)? != Ordering::Greater)
}

/// A list of bnls sharing one bound.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bnll {
    pub bound: usize,
    pub items: Vec<Bnl>,
}

impl Bnll {
    pub fn new(bound: usize, items: Vec<Bnl>) -> Result<Bnll> {
        if let Some(b) = items.iter().find(|b| b.bound() != bound) {
            return Err(Error::BoundMismatch(bound, b.bound()));
        }
        Ok(Bnll { bound, items })
    }
}

impl fmt::Display for Bnll {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.items.iter().map(Bnl::to_string).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Shorter lists are smaller; equal lengths compare position-wise.
pub fn bnll_lt(a: &Bnll, b: &Bnll) -> Result<bool> {
    if a.bound != b.bound {
        return Err(Error::BoundMismatch(a.bound, b.bound));
    }
    if a.items.len() != b.items.len() {
        return Ok(a.items.len() < b.items.len());
    }
    for (x, y) in a.items.iter().zip(&b.items) {
        match bnl_cmp(x, y)? {
            Ordering::Equal => continue,
            o => return Ok(o == Ordering::Less),
        }
    }
    Ok(false)
}

/// An ordinal below `w^w`: `(exponent, coefficient)` terms, exponents
/// strictly decreasing, coefficients positive. Empty is zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Ordinal(pub Vec<(u64, u64)>);

impl Ordinal {
    pub fn zero() -> Ordinal {
        Ordinal(Vec::new())
    }

    pub fn nat(n: u64) -> Ordinal {
        if n == 0 {
            Ordinal::zero()
        } else {
            Ordinal(vec![(0, n)])
        }
    }

    /// `w^e * c`
    pub fn term(e: u64, c: u64) -> Ordinal {
        if c == 0 {
            Ordinal::zero()
        } else {
            Ordinal(vec![(e, c)])
        }
    }
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        for (i, &(e, c)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            match e {
                0 => write!(f, "{c}")?,
                1 => write!(f, "w*{c}")?,
                _ => write!(f, "w^{e}*{c}")?,
            }
        }
        Ok(())
    }
}

/// Well-formed Cantor normal form.
pub fn o_p(a: &Ordinal) -> bool {
    a.0.iter().all(|&(_, c)| c > 0) && a.0.windows(2).all(|w| w[0].0 > w[1].0)
}

pub fn o_cmp(a: &Ordinal, b: &Ordinal) -> Ordering {
    for (x, y) in a.0.iter().zip(&b.0) {
        let o = x.0.cmp(&y.0).then(x.1.cmp(&y.1));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.0.len().cmp(&b.0.len())
}

pub fn o_lt(a: &Ordinal, b: &Ordinal) -> bool {
    o_cmp(a, b) == Ordering::Less
}

fn digits_to_o(digits: &[u64]) -> Ordinal {
    let k = digits.len() as u64;
    Ordinal(
        digits
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, &n)| (k - 1 - i as u64, n))
            .collect(),
    )
}

/// `(n1 .. nk)` to `w^(k-1)*n1 + .. + nk`.
pub fn bnl_to_o(a: &Bnl) -> Ordinal {
    digits_to_o(&a.0)
}

/// The ordinal of the concatenated members; `len` must equal the list length.
pub fn bnll_to_o(len: usize, a: &Bnll) -> Result<Ordinal> {
    if a.items.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            got: a.items.len(),
        });
    }
    let digits: Vec<u64> = a.items.iter().flat_map(|b| b.0.iter().copied()).collect();
    Ok(digits_to_o(&digits))
}

fn entry_len(e: &Entry, widths: &BTreeMap<String, usize>) -> Result<usize> {
    match e {
        Entry::Rank(_) => Ok(1),
        Entry::Measure(m) => widths
            .get(&m.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| Error::UnknownMeasure(m.clone())),
    }
}

/// Expanded length of one descriptor.
pub fn descriptor_len(d: &Descriptor, widths: &BTreeMap<String, usize>) -> Result<usize> {
    d.0.iter().map(|e| entry_len(e, widths)).sum()
}

/// Longest expanded descriptor of `m`. Measure names are matched
/// case-insensitively against lowercase keys of `widths`.
pub fn bnl_bnd(m: &Omap, widths: &BTreeMap<String, usize>) -> Result<usize> {
    m.entries
        .iter()
        .map(|(_, d)| descriptor_len(d, widths))
        .try_fold(0, |acc, l| Ok(acc.max(l?)))
}

/// Expands `d`: ranks stay, measure symbols become their tuple under `ord`,
/// then zeros pad to `bound`.
pub fn mk_bnl(d: &Descriptor, bound: usize, mut ord: impl FnMut(&str) -> Result<Vec<u64>>) -> Result<Bnl> {
    let mut out = Vec::with_capacity(bound);
    for e in &d.0 {
        match e {
            Entry::Rank(n) => out.push(*n),
            Entry::Measure(m) => out.extend(ord(m)?),
        }
    }
    if out.len() > bound {
        return Err(Error::BoundMismatch(bound, out.len()));
    }
    out.resize(bound, 0);
    Ok(Bnl(out))
}

pub fn msr(d: &Descriptor, bound: usize, ord: impl FnMut(&str) -> Result<Vec<u64>>) -> Result<Ordinal> {
    Ok(bnl_to_o(&mk_bnl(d, bound, ord)?))
}
