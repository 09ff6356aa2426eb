//! Tseitin translation of scalar DAGs to CNF.
//!
//! Variables are numbered inputs first (leaf order, least significant bit
//! first), then one constant-true variable, then gate outputs in node order.
//! Bit vectors are zero-extended wherever widths differ.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::sort::Sort;
use crate::model::typed::TExpr;
use crate::model::value::Value;
use crate::scalar::{compile, unflatten, Compiled, Id, Node};

pub type Lit = i32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    /// Literals of every input leaf, least significant bit first.
    pub inputs: Vec<InputBits>,
    /// Bits of each scalar component of the term.
    pub outputs: Vec<Vec<Lit>>,
    /// Validity bit of the hypothesis.
    pub hyp: Lit,
    pub trm_sort: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputBits {
    pub name: String,
    pub sort: Sort,
    pub bits: Vec<Lit>,
}

/// Variables above this count are rejected.
pub const MAX_VARS: u64 = i32::MAX as u64 - 1;

struct Blaster<'a> {
    c: &'a Compiled,
    next_var: u64,
    clauses: Vec<Vec<Lit>>,
    t: Lit,
    bits: Vec<Vec<Lit>>,
}

impl Blaster<'_> {
    fn fresh(&mut self) -> Result<Lit> {
        self.next_var += 1;
        if self.next_var > MAX_VARS {
            return Err(Error::VarOverflow(self.next_var));
        }
        Ok(self.next_var as Lit)
    }

    fn f(&self) -> Lit {
        -self.t
    }

    fn konst(&self, l: Lit) -> Option<bool> {
        if l == self.t {
            Some(true)
        } else if l == -self.t {
            Some(false)
        } else {
            None
        }
    }

    fn and2(&mut self, a: Lit, b: Lit) -> Result<Lit> {
        self.and_n(&[a, b])
    }

    fn or2(&mut self, a: Lit, b: Lit) -> Result<Lit> {
        Ok(-self.and_n(&[-a, -b])?)
    }

    fn and_n(&mut self, xs: &[Lit]) -> Result<Lit> {
        let mut ys: Vec<Lit> = Vec::new();
        for &x in xs {
            match self.konst(x) {
                Some(true) => {}
                Some(false) => return Ok(self.f()),
                None => {
                    if ys.contains(&-x) {
                        return Ok(self.f());
                    }
                    if !ys.contains(&x) {
                        ys.push(x)
                    }
                }
            }
        }
        match ys.len() {
            0 => Ok(self.t),
            1 => Ok(ys[0]),
            _ => {
                let o = self.fresh()?;
                for &y in &ys {
                    self.clauses.push(vec![-o, y]);
                }
                let mut big: Vec<Lit> = ys.iter().map(|y| -y).collect();
                big.push(o);
                self.clauses.push(big);
                Ok(o)
            }
        }
    }

    fn xnor(&mut self, a: Lit, b: Lit) -> Result<Lit> {
        match (self.konst(a), self.konst(b)) {
            (Some(x), _) => return Ok(if x { b } else { -b }),
            (_, Some(y)) => return Ok(if y { a } else { -a }),
            _ if a == b => return Ok(self.t),
            _ if a == -b => return Ok(self.f()),
            _ => {}
        }
        let o = self.fresh()?;
        self.clauses.push(vec![-o, -a, b]);
        self.clauses.push(vec![-o, a, -b]);
        self.clauses.push(vec![o, a, b]);
        self.clauses.push(vec![o, -a, -b]);
        Ok(o)
    }

    fn mux(&mut self, c: Lit, t: Lit, e: Lit) -> Result<Lit> {
        match self.konst(c) {
            Some(true) => return Ok(t),
            Some(false) => return Ok(e),
            None => {}
        }
        if t == e {
            return Ok(t);
        }
        let o = self.fresh()?;
        self.clauses.push(vec![-c, -t, o]);
        self.clauses.push(vec![-c, t, -o]);
        self.clauses.push(vec![c, -e, o]);
        self.clauses.push(vec![c, e, -o]);
        Ok(o)
    }

    fn bit(&self, v: &[Lit], i: usize) -> Lit {
        v.get(i).copied().unwrap_or(-self.t)
    }

    fn lt(&mut self, a: &[Lit], b: &[Lit]) -> Result<Lit> {
        let w = a.len().max(b.len());
        let mut acc = self.f();
        for i in 0..w {
            let (x, y) = (self.bit(a, i), self.bit(b, i));
            let here = self.and2(-x, y)?;
            let same = self.xnor(x, y)?;
            let keep = self.and2(same, acc)?;
            acc = self.or2(here, keep)?;
        }
        Ok(acc)
    }

    fn eq_bits(&mut self, a: &[Lit], b: &[Lit]) -> Result<Lit> {
        let w = a.len().max(b.len());
        let mut xs = Vec::new();
        for i in 0..w {
            let (x, y) = (self.bit(a, i), self.bit(b, i));
            xs.push(self.xnor(x, y)?);
        }
        self.and_n(&xs)
    }

    fn add(&mut self, a: &[Lit], b: &[Lit], w: usize, carry_in: Lit) -> Result<Vec<Lit>> {
        let mut carry = carry_in;
        let mut out = Vec::with_capacity(w);
        for i in 0..w {
            let (x, y) = (self.bit(a, i), self.bit(b, i));
            let xy = self.xnor(x, y)?;
            let s = self.xnor(-xy, carry)?;
            out.push(-s);
            let g = self.and2(x, y)?;
            let p = self.and2(-xy, carry)?;
            carry = self.or2(g, p)?;
        }
        Ok(out)
    }

    fn node(&mut self, id: Id) -> Result<Vec<Lit>> {
        let dag = &self.c.dag;
        let b = |s: &Self, x: &Id| s.bits[*x as usize].clone();
        Ok(match dag.node(id).clone() {
            Node::Leaf(_) => unreachable!("leaves are seeded"),
            Node::Const(k) => (0..dag.width(id))
                .map(|i| if k >> i & 1 == 1 { self.t } else { self.f() })
                .collect(),
            Node::Not(a) => vec![-self.bits[a as usize][0]],
            Node::And(xs) => {
                let ls: Vec<Lit> = xs.iter().map(|x| self.bit(&b(self, x), 0)).collect();
                vec![self.and_n(&ls)?]
            }
            Node::Or(xs) => {
                let ls: Vec<Lit> = xs.iter().map(|x| -self.bit(&b(self, x), 0)).collect();
                vec![-self.and_n(&ls)?]
            }
            Node::Ite(c, t, e) => {
                let c = self.bit(&b(self, &c), 0);
                let (tv, ev) = (b(self, &t), b(self, &e));
                let w = tv.len().max(ev.len());
                let mut out = Vec::with_capacity(w);
                for i in 0..w {
                    let (x, y) = (self.bit(&tv, i), self.bit(&ev, i));
                    out.push(self.mux(c, x, y)?);
                }
                out
            }
            Node::Eq(x, y) => {
                let (xv, yv) = (b(self, &x), b(self, &y));
                vec![self.eq_bits(&xv, &yv)?]
            }
            Node::Lt(x, y) => {
                let (xv, yv) = (b(self, &x), b(self, &y));
                vec![self.lt(&xv, &yv)?]
            }
            Node::Le(x, y) => {
                let (xv, yv) = (b(self, &x), b(self, &y));
                vec![-self.lt(&yv, &xv)?]
            }
            Node::AddMod(x, y, w) => {
                let (xv, yv) = (b(self, &x), b(self, &y));
                let f = self.f();
                self.add(&xv, &yv, w as usize, f)?
            }
            Node::SubGuarded(x, y) => {
                let (xv, yv) = (b(self, &x), b(self, &y));
                let w = xv.len().max(yv.len());
                let ny: Vec<Lit> = (0..w).map(|i| -self.bit(&yv, i)).collect();
                let t = self.t;
                let diff = self.add(&xv, &ny, w, t)?;
                let ge = -self.lt(&xv, &yv)?;
                let mut out = Vec::with_capacity(w);
                for d in diff {
                    out.push(self.and2(ge, d)?);
                }
                out
            }
            Node::Case(s, arms, d) => {
                let sv = b(self, &s);
                let mut acc = b(self, &d);
                for (keys, body) in arms.iter().rev() {
                    let mut hits = Vec::new();
                    for &k in keys {
                        if sv.len() < 64 && k >> sv.len() != 0 {
                            continue;
                        }
                        let ls: Vec<Lit> = (0..sv.len())
                            .map(|i| if k >> i & 1 == 1 { sv[i] } else { -sv[i] })
                            .collect();
                        hits.push(-self.and_n(&ls)?);
                    }
                    let cond = -self.and_n(&hits)?;
                    let bv = b(self, body);
                    let w = bv.len().max(acc.len());
                    let mut out = Vec::with_capacity(w);
                    for i in 0..w {
                        let (x, y) = (self.bit(&bv, i), self.bit(&acc, i));
                        out.push(self.mux(cond, x, y)?);
                    }
                    acc = out;
                }
                acc
            }
        })
    }
}

/// Translates an already lowered query.
pub fn blast(c: &Compiled) -> Result<Circuit> {
    let mut bl = Blaster {
        c,
        next_var: 0,
        clauses: Vec::new(),
        t: 0,
        bits: vec![Vec::new(); c.dag.len()],
    };
    let mut inputs = Vec::new();
    let mut leaf_bits = Vec::new();
    for leaf in &c.leaves {
        let w = leaf.sort.bit_width();
        let bits = (0..w).map(|_| bl.fresh()).collect::<Result<Vec<_>>>()?;
        leaf_bits.push(bits.clone());
        inputs.push(InputBits {
            name: leaf.name.clone(),
            sort: leaf.sort.clone(),
            bits,
        });
    }
    bl.t = bl.fresh()?;
    bl.clauses.push(vec![bl.t]);
    // Out-of-range enum codes are excluded.
    for inp in &inputs {
        if let Sort::Enum(e) = &inp.sort {
            let w = inp.bits.len();
            for k in e.symbols.len() as u64..(1u64 << w) {
                bl.clauses.push(
                    (0..w)
                        .map(|i| if k >> i & 1 == 1 { -inp.bits[i] } else { inp.bits[i] })
                        .collect(),
                );
            }
        }
    }
    let mut roots = c.trm.clone();
    roots.push(c.hyp);
    for id in c.dag.cone(&roots) {
        let v = match c.dag.node(id) {
            Node::Leaf(l) => leaf_bits[*l as usize].clone(),
            _ => bl.node(id)?,
        };
        bl.bits[id as usize] = v;
    }
    let mut comp_sorts = Vec::new();
    crate::scalar::flatten_sort(&c.trm_sort, "", &mut comp_sorts);
    let outputs = c
        .trm
        .iter()
        .zip(&comp_sorts)
        .map(|(id, (_, s))| {
            let v = &bl.bits[*id as usize];
            (0..s.bit_width() as usize).map(|i| bl.bit(v, i)).collect()
        })
        .collect();
    let hyp = bl.bit(&bl.bits[c.hyp as usize], 0);
    Ok(Circuit {
        num_vars: bl.next_var as u32,
        clauses: bl.clauses,
        inputs,
        outputs,
        hyp,
        trm_sort: c.trm_sort.clone(),
    })
}

/// Bit-blasts `trm` under `hyp` for the variables `vars`.
pub fn bitblast(vars: &[(String, Sort)], hyp: &TExpr, trm: &TExpr) -> Result<Circuit> {
    blast(&compile(vars, &vec![None; vars.len()], hyp, trm))
}

fn lit_value(assignment: &[bool], l: Lit) -> bool {
    let v = assignment[l.unsigned_abs() as usize - 1];
    if l > 0 {
        v
    } else {
        !v
    }
}

fn decode_bits(assignment: &[bool], bits: &[Lit]) -> u64 {
    bits.iter()
        .enumerate()
        .map(|(i, &l)| (lit_value(assignment, l) as u64) << i)
        .sum()
}

fn check_codes(sort: &Sort, codes: &[u64]) -> Result<()> {
    let mut sorts = Vec::new();
    crate::scalar::flatten_sort(sort, "", &mut sorts);
    for ((name, s), c) in sorts.iter().zip(codes) {
        if let Some(n) = s.scalar_size() {
            if *c >= n {
                return Err(Error::Encoding(format!("code {c} out of range for {s} at `{name}`")));
            }
        }
    }
    Ok(())
}

impl Circuit {
    /// Decodes the term from a total assignment (`assignment[v - 1]` is the
    /// value of variable `v`).
    pub fn decode(&self, assignment: &[bool]) -> Result<Value> {
        if assignment.len() < self.num_vars as usize {
            return Err(Error::Encoding("assignment is not total".into()));
        }
        let codes: Vec<u64> = self.outputs.iter().map(|b| decode_bits(assignment, b)).collect();
        check_codes(&self.trm_sort, &codes)?;
        Ok(unflatten(&self.trm_sort, &mut codes.into_iter()))
    }

    /// Decodes the input leaves.
    pub fn decode_inputs(&self, assignment: &[bool]) -> Result<Vec<u64>> {
        self.inputs
            .iter()
            .map(|inp| {
                let c = decode_bits(assignment, &inp.bits);
                check_codes(&inp.sort, &[c])?;
                Ok(c)
            })
            .collect()
    }

    /// DIMACS CNF text. The hypothesis literal is included as a unit clause
    /// when `assert_hyp` is set.
    pub fn dimacs(&self, assert_hyp: bool) -> String {
        let mut s = String::new();
        let n = self.clauses.len() + assert_hyp as usize;
        let _ = writeln!(s, "c inputs: {}", self.inputs.iter().map(|i| format!("{}={:?}", i.name, i.bits)).collect::<Vec<_>>().join(" "));
        let _ = writeln!(s, "c outputs: {:?}", self.outputs);
        let _ = writeln!(s, "c hyp: {}", self.hyp);
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, n);
        for c in &self.clauses {
            for l in c {
                let _ = write!(s, "{l} ");
            }
            s.push_str("0\n");
        }
        if assert_hyp {
            let _ = writeln!(s, "{} 0", self.hyp);
        }
        s
    }
}
