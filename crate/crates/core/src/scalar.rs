//! Scalarized expression graphs.
//!
//! A checked expression over record-sorted variables is flattened into a
//! hash-consed DAG over scalar leaves (one per scalar component of every
//! variable). Records become vectors of node ids, calls are inlined with
//! sharing, and constant folding happens in the constructors. Node ids are
//! topologically ordered: children always precede parents.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use crate::model::sort::Sort;
use crate::model::typed::{TDef, TExpr, TKind};
use crate::model::value::Value;

pub type Id = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(u32),
    Const(u64),
    Ite(Id, Id, Id),
    Eq(Id, Id),
    Lt(Id, Id),
    Le(Id, Id),
    /// Addition modulo `2^width`.
    AddMod(Id, Id, u32),
    SubGuarded(Id, Id),
    Not(Id),
    And(Vec<Id>),
    Or(Vec<Id>),
    Case(Id, Vec<(Vec<u64>, Id)>, Id),
}

#[derive(Clone, Debug, Default)]
pub struct Dag {
    nodes: Vec<Node>,
    widths: Vec<u32>,
    memo: HashMap<Node, Id>,
    /// Indexed by node id; true for leaves of boolean sort.
    bool_leaves: Vec<bool>,
}

/// Scalar code of a value: booleans are 0/1, enums their symbol index.
fn code(v: &Value) -> u64 {
    match v {
        Value::Bool(b) => *b as u64,
        Value::Nat(n) => *n,
        Value::Enum { code, .. } => *code as u64,
        _ => panic!("code of composite value"),
    }
}

/// Appends the scalar codes of `v` in flattening order.
pub fn flatten_value(v: &Value, out: &mut Vec<u64>) {
    match v {
        Value::Record(vs) => vs.iter().for_each(|x| flatten_value(x, out)),
        Value::Tuple(kv) => kv.iter().for_each(|(_, x)| flatten_value(x, out)),
        v => out.push(code(v)),
    }
}

/// Rebuilds a value of `sort` from scalar codes.
pub fn unflatten(sort: &Sort, codes: &mut impl Iterator<Item = u64>) -> Value {
    match sort {
        Sort::Record(r) => Value::Record(r.fields.iter().map(|(_, s)| unflatten(s, codes)).collect()),
        Sort::Tuple(t) => Value::Tuple(
            t.fields
                .iter()
                .map(|(k, s)| (Arc::from(k.as_str()), unflatten(s, codes)))
                .collect(),
        ),
        s => s.scalar_value(codes.next().expect("enough codes")),
    }
}

/// Scalar sorts of `sort` in flattening order, with dotted paths.
pub fn flatten_sort(sort: &Sort, path: &str, out: &mut Vec<(String, Sort)>) {
    if sort.is_scalar() {
        out.push((path.to_string(), sort.clone()));
    } else {
        for (k, s) in sort.components() {
            flatten_sort(s, &format!("{path}.{k}"), out);
        }
    }
}

pub fn flat_len(sort: &Sort) -> usize {
    if sort.is_scalar() {
        1
    } else {
        sort.components().iter().map(|(_, s)| flat_len(s)).sum()
    }
}

fn width_of(sort: &Sort) -> u32 {
    sort.bit_width()
}

impl Dag {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: Id) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn width(&self, id: Id) -> u32 {
        self.widths[id as usize]
    }

    /// Whether a node is known to be boolean-valued (0 or 1).
    fn is_bool(&self, id: Id) -> bool {
        match &self.nodes[id as usize] {
            Node::Const(c) => *c <= 1,
            Node::Eq(..) | Node::Lt(..) | Node::Le(..) | Node::Not(_) | Node::And(_) | Node::Or(_) => true,
            Node::Leaf(_) => self.bool_leaves.get(id as usize).copied().unwrap_or(false),
            Node::Ite(_, t, f) => self.is_bool(*t) && self.is_bool(*f),
            Node::Case(_, arms, d) => self.is_bool(*d) && arms.iter().all(|(_, b)| self.is_bool(*b)),
            Node::AddMod(..) | Node::SubGuarded(..) => false,
        }
    }

    fn konst(&self, id: Id) -> Option<u64> {
        match self.nodes[id as usize] {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    fn intern(&mut self, n: Node, width: u32) -> Id {
        if let Some(&id) = self.memo.get(&n) {
            return id;
        }
        let id = self.nodes.len() as Id;
        self.nodes.push(n.clone());
        self.widths.push(width);
        self.memo.insert(n, id);
        id
    }

    pub fn leaf(&mut self, i: u32, sort: &Sort) -> Id {
        let id = self.intern(Node::Leaf(i), width_of(sort));
        if self.bool_leaves.len() <= id as usize {
            self.bool_leaves.resize(id as usize + 1, false);
        }
        self.bool_leaves[id as usize] = *sort == Sort::Bool;
        id
    }

    /// A constant. Its recorded width is the bit length of the value; bit
    /// vectors are zero-extended wherever widths differ.
    pub fn constant(&mut self, c: u64, _width: u32) -> Id {
        self.intern(Node::Const(c), crate::model::sort::bits_for(c))
    }

    pub fn tru(&mut self) -> Id {
        self.constant(1, 1)
    }

    pub fn fals(&mut self) -> Id {
        self.constant(0, 1)
    }

    pub fn not(&mut self, a: Id) -> Id {
        if let Some(c) = self.konst(a) {
            return self.constant((c == 0) as u64, 1);
        }
        if let Node::Not(x) = self.nodes[a as usize] {
            return x;
        }
        self.intern(Node::Not(a), 1)
    }

    fn junction(&mut self, xs: Vec<Id>, is_and: bool) -> Id {
        let (unit, zero) = if is_and { (1, 0) } else { (0, 1) };
        let mut out: Vec<Id> = Vec::new();
        for x in xs {
            let parts = match &self.nodes[x as usize] {
                Node::And(ys) if is_and => ys.clone(),
                Node::Or(ys) if !is_and => ys.clone(),
                _ => vec![x],
            };
            for y in parts {
                match self.konst(y) {
                    Some(c) if c == unit => {}
                    Some(_) => return self.constant(zero, 1),
                    None => {
                        if !out.contains(&y) {
                            out.push(y)
                        }
                    }
                }
            }
        }
        // x and (not x) collapses.
        for &y in &out {
            if let Node::Not(z) = self.nodes[y as usize] {
                if out.contains(&z) {
                    return self.constant(zero, 1);
                }
            }
        }
        match out.len() {
            0 => self.constant(unit, 1),
            1 => out[0],
            _ => self.intern(if is_and { Node::And(out) } else { Node::Or(out) }, 1),
        }
    }

    pub fn and(&mut self, xs: Vec<Id>) -> Id {
        self.junction(xs, true)
    }

    pub fn or(&mut self, xs: Vec<Id>) -> Id {
        self.junction(xs, false)
    }

    pub fn ite(&mut self, c: Id, t: Id, f: Id) -> Id {
        if let Some(k) = self.konst(c) {
            return if k != 0 { t } else { f };
        }
        if t == f {
            return t;
        }
        let w = self.width(t).max(self.width(f));
        if w == 1 && self.width(c) == 1 && self.is_bool(t) && self.is_bool(f) {
            match (self.konst(t), self.konst(f)) {
                (Some(1), Some(0)) => return c,
                (Some(0), Some(1)) => return self.not(c),
                _ => {}
            }
        }
        self.intern(Node::Ite(c, t, f), w)
    }

    pub fn eq(&mut self, a: Id, b: Id) -> Id {
        if a == b {
            return self.tru();
        }
        match (self.konst(a), self.konst(b)) {
            (Some(x), Some(y)) => return self.constant((x == y) as u64, 1),
            (Some(k), None) | (None, Some(k)) if self.is_bool(a) && self.is_bool(b) => {
                let x = if self.konst(a).is_some() { b } else { a };
                return if k == 1 { x } else { self.not(x) };
            }
            _ => {}
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.intern(Node::Eq(a, b), 1)
    }

    pub fn lt(&mut self, a: Id, b: Id) -> Id {
        match (self.konst(a), self.konst(b)) {
            (Some(x), Some(y)) => self.constant((x < y) as u64, 1),
            (_, Some(0)) => self.fals(),
            _ if a == b => self.fals(),
            _ => self.intern(Node::Lt(a, b), 1),
        }
    }

    pub fn le(&mut self, a: Id, b: Id) -> Id {
        match (self.konst(a), self.konst(b)) {
            (Some(x), Some(y)) => self.constant((x <= y) as u64, 1),
            (Some(0), _) => self.tru(),
            _ if a == b => self.tru(),
            _ => self.intern(Node::Le(a, b), 1),
        }
    }

    pub fn add_mod(&mut self, a: Id, b: Id, width: u32) -> Id {
        let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
        match (self.konst(a), self.konst(b)) {
            (Some(x), Some(y)) => self.constant(x.wrapping_add(y) & mask, width),
            (_, Some(0)) => a,
            (Some(0), _) => b,
            _ => self.intern(Node::AddMod(a, b, width), width),
        }
    }

    pub fn sub_guarded(&mut self, a: Id, b: Id) -> Id {
        let w = self.width(a);
        match (self.konst(a), self.konst(b)) {
            (Some(x), Some(y)) => self.constant(x.saturating_sub(y), w),
            (_, Some(0)) => a,
            (Some(0), _) => a,
            _ => self.intern(Node::SubGuarded(a, b), w),
        }
    }

    pub fn case(&mut self, s: Id, arms: Vec<(Vec<u64>, Id)>, d: Id) -> Id {
        if let Some(k) = self.konst(s) {
            return arms
                .iter()
                .find(|(keys, _)| keys.contains(&k))
                .map_or(d, |(_, b)| *b);
        }
        // Merge arms by body; drop arms equal to the default.
        let mut merged: Vec<(Vec<u64>, Id)> = Vec::new();
        for (keys, b) in arms {
            if b == d {
                continue;
            }
            match merged.iter_mut().find(|(_, x)| *x == b) {
                Some((ks, _)) => ks.extend(keys),
                None => merged.push((keys, b)),
            }
        }
        if merged.is_empty() {
            return d;
        }
        for (ks, _) in &mut merged {
            ks.sort_unstable();
        }
        let w = merged.iter().map(|(_, b)| self.width(*b)).fold(self.width(d), u32::max);
        self.intern(Node::Case(s, merged, d), w)
    }

    /// Children of a node.
    pub fn children(&self, id: Id) -> Vec<Id> {
        match &self.nodes[id as usize] {
            Node::Leaf(_) | Node::Const(_) => vec![],
            Node::Ite(a, b, c) => vec![*a, *b, *c],
            Node::Eq(a, b)
            | Node::Lt(a, b)
            | Node::Le(a, b)
            | Node::AddMod(a, b, _)
            | Node::SubGuarded(a, b) => vec![*a, *b],
            Node::Not(a) => vec![*a],
            Node::And(xs) | Node::Or(xs) => xs.clone(),
            Node::Case(s, arms, d) => {
                let mut v = vec![*s];
                v.extend(arms.iter().map(|(_, b)| *b));
                v.push(*d);
                v
            }
        }
    }

    /// Ids reachable from `roots`, in increasing (topological) order.
    pub fn cone(&self, roots: &[Id]) -> Vec<Id> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<Id> = roots.to_vec();
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x as usize], true) {
                continue;
            }
            stack.extend(self.children(x));
        }
        (0..self.nodes.len() as Id).filter(|&i| seen[i as usize]).collect()
    }

    /// Leaf indices read by `roots`.
    pub fn support(&self, roots: &[Id]) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .cone(roots)
            .into_iter()
            .filter_map(|i| match self.nodes[i as usize] {
                Node::Leaf(l) => Some(l),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }

    fn eval_node(&self, id: Id, get: impl Fn(Id) -> u64) -> u64 {
        let v = |x: &Id| get(*x);
        match &self.nodes[id as usize] {
            Node::Leaf(_) => unreachable!("leaves are seeded"),
            Node::Const(c) => *c,
            Node::Ite(c, t, f) => {
                if v(c) != 0 {
                    v(t)
                } else {
                    v(f)
                }
            }
            Node::Eq(a, b) => (v(a) == v(b)) as u64,
            Node::Lt(a, b) => (v(a) < v(b)) as u64,
            Node::Le(a, b) => (v(a) <= v(b)) as u64,
            Node::AddMod(a, b, w) => {
                let mask = if *w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
                v(a).wrapping_add(v(b)) & mask
            }
            Node::SubGuarded(a, b) => v(a).saturating_sub(v(b)),
            Node::Not(a) => (v(a) == 0) as u64,
            Node::And(xs) => xs.iter().all(|x| v(x) != 0) as u64,
            Node::Or(xs) => xs.iter().any(|x| v(x) != 0) as u64,
            Node::Case(s, arms, d) => {
                let k = v(s);
                arms.iter()
                    .find(|(keys, _)| keys.binary_search(&k).is_ok())
                    .map_or(v(d), |(_, b)| v(b))
            }
        }
    }

    /// Evaluates the nodes of `cone` (as returned by [`Dag::cone`]) under a
    /// total leaf assignment. The result is indexed by node id.
    pub fn eval_cone(&self, cone: &[Id], leaves: &[u64], val: &mut Vec<u64>) {
        val.resize(self.nodes.len(), 0);
        for &i in cone {
            val[i as usize] = match self.nodes[i as usize] {
                Node::Leaf(l) => leaves[l as usize],
                _ => self.eval_node(i, |x| val[x as usize]),
            };
        }
    }

    /// Three-valued evaluation: `None` where the value depends on an
    /// unassigned leaf.
    pub fn partial_cone(&self, cone: &[Id], leaves: &[Option<u64>], val: &mut Vec<Option<u64>>) {
        val.resize(self.nodes.len(), None);
        for &i in cone {
            let v = |x: &Id| val[*x as usize];
            let r = match &self.nodes[i as usize] {
                Node::Leaf(l) => leaves[*l as usize],
                Node::Const(c) => Some(*c),
                Node::Ite(c, t, f) => match v(c) {
                    Some(0) => v(f),
                    Some(_) => v(t),
                    None if v(t).is_some() && v(t) == v(f) => v(t),
                    None => None,
                },
                Node::And(xs) => {
                    if xs.iter().any(|x| v(x) == Some(0)) {
                        Some(0)
                    } else if xs.iter().all(|x| v(x).is_some()) {
                        Some(1)
                    } else {
                        None
                    }
                }
                Node::Or(xs) => {
                    if xs.iter().any(|x| matches!(v(x), Some(c) if c != 0)) {
                        Some(1)
                    } else if xs.iter().all(|x| v(x).is_some()) {
                        Some(0)
                    } else {
                        None
                    }
                }
                Node::Case(s, arms, d) => match v(s) {
                    Some(k) => arms
                        .iter()
                        .find(|(keys, _)| keys.binary_search(&k).is_ok())
                        .map_or(v(d), |(_, b)| v(b)),
                    None => {
                        let first = v(d);
                        if first.is_some() && arms.iter().all(|(_, b)| v(b) == first) {
                            first
                        } else {
                            None
                        }
                    }
                },
                _ => {
                    if self.children(i).iter().all(|x| v(x).is_some()) {
                        Some(self.eval_node(i, |x| val[x as usize].unwrap_or(0)))
                    } else {
                        None
                    }
                }
            };
            val[i as usize] = r;
        }
    }

    /// Rebuilds `roots` with leaf `l` replaced by node `by`.
    pub fn substitute(&mut self, roots: &[Id], l: u32, by: Id) -> Vec<Id> {
        let cone = self.cone(roots);
        let mut map: HashMap<Id, Id> = HashMap::new();
        for &i in &cone {
            let m = |x: &Id| map[x];
            let n = self.nodes[i as usize].clone();
            let new = match &n {
                Node::Leaf(k) if *k == l => by,
                Node::Leaf(_) | Node::Const(_) => i,
                Node::Ite(a, b, c) => self.ite(m(a), m(b), m(c)),
                Node::Eq(a, b) => self.eq(m(a), m(b)),
                Node::Lt(a, b) => self.lt(m(a), m(b)),
                Node::Le(a, b) => self.le(m(a), m(b)),
                Node::AddMod(a, b, w) => self.add_mod(m(a), m(b), *w),
                Node::SubGuarded(a, b) => self.sub_guarded(m(a), m(b)),
                Node::Not(a) => self.not(m(a)),
                Node::And(xs) => self.and(xs.iter().map(m).collect()),
                Node::Or(xs) => self.or(xs.iter().map(m).collect()),
                Node::Case(s, arms, d) => {
                    let arms = arms.iter().map(|(k, b)| (k.clone(), m(b))).collect();
                    self.case(m(s), arms, m(d))
                }
            };
            map.insert(i, new);
        }
        roots.iter().map(|r| map[r]).collect()
    }

    /// Top-level conjuncts of a boolean node.
    pub fn conjuncts(&self, id: Id) -> Vec<Id> {
        match &self.nodes[id as usize] {
            Node::And(xs) => xs.clone(),
            Node::Const(1) => vec![],
            _ => vec![id],
        }
    }
}

/// One scalar component of a query variable.
#[derive(Clone, Debug)]
pub struct LeafInfo {
    pub var: usize,
    pub name: String,
    pub sort: Sort,
}

/// A query lowered to a scalar DAG.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub dag: Dag,
    pub leaves: Vec<LeafInfo>,
    /// Leaf index range of each variable; empty for bound variables.
    pub var_leaves: Vec<Range<usize>>,
    pub hyp: Id,
    pub trm: Vec<Id>,
    pub trm_sort: Sort,
}

type CallKey = (usize, Vec<Vec<Id>>);

struct Lowering<'a> {
    dag: &'a mut Dag,
    calls: HashMap<CallKey, Vec<Id>>,
}

impl Lowering<'_> {
    fn consts(&mut self, v: &Value, sort: &Sort) -> Vec<Id> {
        let mut codes = Vec::new();
        flatten_value(v, &mut codes);
        let mut sorts = Vec::new();
        flatten_sort(sort, "", &mut sorts);
        codes
            .into_iter()
            .zip(sorts)
            .map(|(c, (_, s))| self.dag.constant(c, width_of(&s)))
            .collect()
    }

    fn one(&mut self, e: &TExpr, frame: &[Vec<Id>]) -> Id {
        let v = self.lower(e, frame);
        debug_assert_eq!(v.len(), 1);
        v[0]
    }

    fn lower(&mut self, e: &TExpr, frame: &[Vec<Id>]) -> Vec<Id> {
        match &e.kind {
            TKind::Var(i) => frame[*i].clone(),
            TKind::Const(v) => self.consts(v, &e.sort),
            TKind::Field(b, i) => {
                let bv = self.lower(b, frame);
                let comps = b.sort.components();
                let off: usize = comps[..*i].iter().map(|(_, s)| flat_len(s)).sum();
                bv[off..off + flat_len(&comps[*i].1)].to_vec()
            }
            TKind::Update(b, ups) => {
                let mut bv = self.lower(b, frame);
                let comps = b.sort.components();
                for (i, x) in ups {
                    let off: usize = comps[..*i].iter().map(|(_, s)| flat_len(s)).sum();
                    let xv = self.lower(x, frame);
                    bv[off..off + xv.len()].copy_from_slice(&xv);
                }
                bv
            }
            TKind::Make(es) | TKind::Tuple(_, es) => {
                es.iter().flat_map(|x| self.lower(x, frame)).collect()
            }
            TKind::Ite(c, t, f) => {
                let c = self.one(c, frame);
                let tv = self.lower(t, frame);
                let fv = self.lower(f, frame);
                tv.into_iter().zip(fv).map(|(a, b)| self.dag.ite(c, a, b)).collect()
            }
            TKind::Eq(a, b) => {
                let av = self.lower(a, frame);
                let bv = self.lower(b, frame);
                let eqs = av.into_iter().zip(bv).map(|(x, y)| self.dag.eq(x, y)).collect();
                vec![self.dag.and(eqs)]
            }
            TKind::Lt(a, b) => {
                let (x, y) = (self.one(a, frame), self.one(b, frame));
                vec![self.dag.lt(x, y)]
            }
            TKind::Le(a, b) => {
                let (x, y) = (self.one(a, frame), self.one(b, frame));
                vec![self.dag.le(x, y)]
            }
            TKind::AddMod(a, b) => {
                let (x, y) = (self.one(a, frame), self.one(b, frame));
                vec![self.dag.add_mod(x, y, width_of(&e.sort))]
            }
            TKind::SubGuarded(a, b) => {
                let (x, y) = (self.one(a, frame), self.one(b, frame));
                vec![self.dag.sub_guarded(x, y)]
            }
            TKind::Not(a) => {
                let x = self.one(a, frame);
                vec![self.dag.not(x)]
            }
            TKind::And(es) => {
                let xs = es.iter().map(|x| self.one(x, frame)).collect();
                vec![self.dag.and(xs)]
            }
            TKind::Or(es) => {
                let xs = es.iter().map(|x| self.one(x, frame)).collect();
                vec![self.dag.or(xs)]
            }
            TKind::Case(s, arms, d) => {
                let sv = self.one(s, frame);
                let armv: Vec<(Vec<u64>, Vec<Id>)> = arms
                    .iter()
                    .map(|(k, b)| (k.clone(), self.lower(b, frame)))
                    .collect();
                let dv = self.lower(d, frame);
                (0..dv.len())
                    .map(|j| {
                        let arms = armv.iter().map(|(k, b)| (k.clone(), b[j])).collect();
                        self.dag.case(sv, arms, dv[j])
                    })
                    .collect()
            }
            TKind::Apply(def, args) => {
                let argv: Vec<Vec<Id>> = args.iter().map(|x| self.lower(x, frame)).collect();
                let key = (Arc::as_ptr(def) as *const TDef as usize, argv);
                if let Some(r) = self.calls.get(&key) {
                    return r.clone();
                }
                let r = self.lower(&def.body, &key.1);
                self.calls.insert(key, r.clone());
                r
            }
        }
    }
}

/// Lowers `hyp` and `trm` over `vars`. Variables with a `fixed` value become
/// constants and get no leaves.
pub fn compile(vars: &[(String, Sort)], fixed: &[Option<Value>], hyp: &TExpr, trm: &TExpr) -> Compiled {
    let mut dag = Dag::default();
    let mut leaves = Vec::new();
    let mut var_leaves = Vec::new();
    let mut frame = Vec::new();
    for (i, (name, sort)) in vars.iter().enumerate() {
        if fixed.get(i).is_some_and(Option::is_some) {
            var_leaves.push(leaves.len()..leaves.len());
            continue;
        }
        let mut flat = Vec::new();
        flatten_sort(sort, name, &mut flat);
        let start = leaves.len();
        let mut ids = Vec::new();
        for (path, s) in flat {
            ids.push(dag.leaf(leaves.len() as u32, &s));
            leaves.push(LeafInfo {
                var: i,
                name: path,
                sort: s,
            });
        }
        var_leaves.push(start..leaves.len());
        frame.push((i, ids));
    }
    let mut low = Lowering {
        dag: &mut dag,
        calls: HashMap::new(),
    };
    let frame: Vec<Vec<Id>> = vars
        .iter()
        .enumerate()
        .map(|(i, (_, s))| match fixed.get(i).and_then(Option::as_ref) {
            Some(v) => low.consts(v, s),
            None => frame.iter().find(|(j, _)| *j == i).unwrap().1.clone(),
        })
        .collect();
    let hyp = low.one(hyp, &frame);
    let trm_v = low.lower(trm, &frame);
    Compiled {
        dag,
        leaves,
        var_leaves,
        hyp,
        trm: trm_v,
        trm_sort: trm.sort.clone(),
    }
}

impl Compiled {
    /// Decodes the term value from node values.
    pub fn term_value(&self, val: &[u64]) -> Value {
        unflatten(&self.trm_sort, &mut self.trm.iter().map(|&i| val[i as usize]))
    }

    /// Rebuilds variable values from a leaf assignment; bound variables are
    /// taken from `fixed`.
    pub fn env(&self, vars: &[(String, Sort)], fixed: &[Option<Value>], leaves: &[u64]) -> Vec<Value> {
        vars.iter()
            .enumerate()
            .map(|(i, (_, s))| match fixed.get(i).and_then(Option::as_ref) {
                Some(v) => v.clone(),
                None => unflatten(s, &mut leaves[self.var_leaves[i].clone()].iter().copied()),
            })
            .collect()
    }
}
