//! Sort-checked expressions. Variables are resolved to frame slots and calls
//! to shared definition bodies evaluated in a fresh frame.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::expr::Expr;
use super::sort::{bits_for, RecordSort, Sort, TupleSort};
use super::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TKind,
    pub sort: Sort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TKind {
    Var(usize),
    Const(Value),
    Field(Box<TExpr>, usize),
    Update(Box<TExpr>, Vec<(usize, TExpr)>),
    Make(Vec<TExpr>),
    Tuple(Vec<Arc<str>>, Vec<TExpr>),
    Ite(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Eq(Box<TExpr>, Box<TExpr>),
    Lt(Box<TExpr>, Box<TExpr>),
    Le(Box<TExpr>, Box<TExpr>),
    AddMod(Box<TExpr>, Box<TExpr>),
    SubGuarded(Box<TExpr>, Box<TExpr>),
    Not(Box<TExpr>),
    And(Vec<TExpr>),
    Or(Vec<TExpr>),
    Case(Box<TExpr>, Vec<(Vec<u64>, TExpr)>, Box<TExpr>),
    Apply(Arc<TDef>, Vec<TExpr>),
}

/// A checked definition: a closed body over its parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TDef {
    pub name: String,
    pub params: Vec<(String, Sort)>,
    pub result: Sort,
    pub body: TExpr,
}

/// Typing context shared by every check in one model instance.
pub struct Checker<'a> {
    pub defs: &'a BTreeMap<String, Arc<TDef>>,
    pub params: &'a BTreeMap<String, u64>,
    pub sorts: &'a BTreeMap<String, Sort>,
}

type CheckResult = Result<TExpr, String>;

fn texpr(kind: TKind, sort: Sort) -> TExpr {
    TExpr { kind, sort }
}

impl Checker<'_> {
    /// Checks `e` in `scope`, optionally against an expected sort.
    pub fn check(&self, scope: &[(String, Sort)], e: &Expr, expected: Option<&Sort>) -> CheckResult {
        let t = self.infer(scope, e, expected)?;
        if let Some(x) = expected {
            if &t.sort != x {
                return Err(format!("expected sort {x}, found {} in `{e}`", t.sort));
            }
        }
        Ok(t)
    }

    fn is_literal(&self, scope: &[(String, Sort)], e: &Expr) -> bool {
        match e {
            Expr::Var(v) => {
                !scope.iter().any(|(n, _)| n == v) && self.params.contains_key(v)
            }
            e => e.is_context_literal(),
        }
    }

    /// Checks two operands that must share a sort; the non-literal side
    /// decides the sort of a literal side.
    fn pair(
        &self,
        scope: &[(String, Sort)],
        a: &Expr,
        b: &Expr,
        expected: Option<&Sort>,
    ) -> Result<(TExpr, TExpr), String> {
        let (la, lb) = (self.is_literal(scope, a), self.is_literal(scope, b));
        if la && lb && expected.is_none() {
            // Two bare literals: the wider one decides.
            let sa = self.check(scope, a, None)?.sort;
            let sb = self.check(scope, b, None)?.sort;
            let s = if sb.bit_width() > sa.bit_width() { sb } else { sa };
            return Ok((self.check(scope, a, Some(&s))?, self.check(scope, b, Some(&s))?));
        }
        if la && !lb {
            let tb = self.check(scope, b, expected)?;
            let ta = self.check(scope, a, Some(&tb.sort))?;
            Ok((ta, tb))
        } else {
            let ta = self.check(scope, a, expected)?;
            let tb = self.check(scope, b, Some(&ta.sort))?;
            Ok((ta, tb))
        }
    }

    fn nat_literal(&self, n: u64, expected: Option<&Sort>, e: &Expr) -> CheckResult {
        match expected {
            Some(s @ Sort::Nat(_)) => {
                if s.contains(&Value::Nat(n)) {
                    Ok(texpr(TKind::Const(Value::Nat(n)), s.clone()))
                } else {
                    Err(format!("literal {n} does not fit sort {s}"))
                }
            }
            Some(s) => Err(format!("expected sort {s}, found natural literal `{e}`")),
            None => Ok(texpr(TKind::Const(Value::Nat(n)), Sort::Nat(bits_for(n)))),
        }
    }

    fn infer(&self, scope: &[(String, Sort)], e: &Expr, expected: Option<&Sort>) -> CheckResult {
        let boxed = Box::new;
        match e {
            Expr::Var(name) => {
                if let Some(i) = scope.iter().rposition(|(n, _)| n == name) {
                    return Ok(texpr(TKind::Var(i), scope[i].1.clone()));
                }
                if let Some(&v) = self.params.get(name) {
                    return self.nat_literal(v, expected, e);
                }
                Err(format!("unbound variable `{name}`"))
            }
            Expr::Nat(n) => self.nat_literal(*n, expected, e),
            Expr::Bool(b) => Ok(texpr(TKind::Const(Value::Bool(*b)), Sort::Bool)),
            Expr::Sym(s) => {
                let sort = match expected {
                    Some(x @ Sort::Enum(_)) => x.clone(),
                    Some(x) => return Err(format!("expected sort {x}, found symbol '{s}")),
                    None => {
                        let mut hits = self.sorts.values().filter(
                            |srt| matches!(srt, Sort::Enum(es) if es.code_of(s).is_some()),
                        );
                        match (hits.next(), hits.next()) {
                            (Some(x), None) => x.clone(),
                            (None, _) => return Err(format!("unknown enum symbol '{s}")),
                            _ => return Err(format!("ambiguous enum symbol '{s}")),
                        }
                    }
                };
                let Sort::Enum(es) = &sort else { unreachable!() };
                let code = es
                    .code_of(s)
                    .ok_or_else(|| format!("symbol '{s} is not in enum {}", es.name))?;
                Ok(texpr(TKind::Const(sort.scalar_value(code as u64)), sort))
            }
            Expr::Const(v, s) => {
                if !s.contains(v) {
                    return Err(format!("constant {v} is not a member of sort {s}"));
                }
                Ok(texpr(TKind::Const(v.clone()), s.clone()))
            }
            Expr::Field(base, f) => {
                let tb = self.check(scope, base, None)?;
                let (idx, fs) = match &tb.sort {
                    Sort::Record(r) => (
                        r.field_index(f)
                            .ok_or_else(|| format!("record `{}` has no field `{f}`", r.name))?,
                        r.fields[r.field_index(f).unwrap()].1.clone(),
                    ),
                    Sort::Tuple(t) => {
                        let i = t
                            .field_index(f)
                            .ok_or_else(|| format!("tuple has no component `:{f}`"))?;
                        (i, t.fields[i].1.clone())
                    }
                    s => return Err(format!("field `{f}` accessed on non-record sort {s}")),
                };
                Ok(texpr(TKind::Field(boxed(tb), idx), fs))
            }
            Expr::Update(base, kvs) => {
                let tb = self.check(scope, base, expected)?;
                let Sort::Record(r) = &tb.sort else {
                    return Err(format!("`set` on non-record sort {}", tb.sort));
                };
                let r = r.clone();
                let mut ups = Vec::new();
                for (k, v) in kvs {
                    let i = r
                        .field_index(k)
                        .ok_or_else(|| format!("record `{}` has no field `{k}`", r.name))?;
                    if ups.iter().any(|(j, _)| *j == i) {
                        return Err(format!("field `{k}` set twice"));
                    }
                    ups.push((i, self.check(scope, v, Some(&r.fields[i].1))?));
                }
                let sort = tb.sort.clone();
                Ok(texpr(TKind::Update(boxed(tb), ups), sort))
            }
            Expr::Make(name, kvs) => {
                let sort = self
                    .sorts
                    .get(name)
                    .cloned()
                    .ok_or_else(|| format!("unknown sort `{name}`"))?;
                let Sort::Record(r) = &sort else {
                    return Err(format!("`make` of non-record sort `{name}`"));
                };
                let mut slots: Vec<Option<TExpr>> = vec![None; r.fields.len()];
                for (k, v) in kvs {
                    let i = r
                        .field_index(k)
                        .ok_or_else(|| format!("record `{}` has no field `{k}`", r.name))?;
                    if slots[i].is_some() {
                        return Err(format!("field `{k}` given twice"));
                    }
                    slots[i] = Some(self.check(scope, v, Some(&r.fields[i].1))?);
                }
                let fields = slots
                    .into_iter()
                    .zip(&r.fields)
                    .map(|(s, (k, _))| s.ok_or_else(|| format!("field `{k}` missing in `make`")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(texpr(TKind::Make(fields), sort))
            }
            Expr::Ite(c, t, f) => {
                let tc = self.check(scope, c, Some(&Sort::Bool))?;
                let (tt, tf) = self.pair(scope, t, f, expected)?;
                let sort = tt.sort.clone();
                Ok(texpr(TKind::Ite(boxed(tc), boxed(tt), boxed(tf)), sort))
            }
            Expr::Eq(a, b) => {
                let (ta, tb) = self.pair(scope, a, b, None)?;
                Ok(texpr(TKind::Eq(boxed(ta), boxed(tb)), Sort::Bool))
            }
            Expr::Lt(a, b) | Expr::Le(a, b) => {
                let (ta, tb) = self.pair(scope, a, b, None)?;
                if !matches!(ta.sort, Sort::Nat(_)) {
                    return Err(format!("ordering on non-natural sort {} in `{e}`", ta.sort));
                }
                let k = if matches!(e, Expr::Lt(..)) {
                    TKind::Lt(boxed(ta), boxed(tb))
                } else {
                    TKind::Le(boxed(ta), boxed(tb))
                };
                Ok(texpr(k, Sort::Bool))
            }
            Expr::AddMod(a, b) | Expr::SubGuarded(a, b) => {
                let exp = expected.filter(|s| matches!(s, Sort::Nat(_)));
                let (ta, tb) = self.pair(scope, a, b, exp)?;
                if !matches!(ta.sort, Sort::Nat(_)) {
                    return Err(format!("arithmetic on non-natural sort {} in `{e}`", ta.sort));
                }
                let sort = ta.sort.clone();
                let k = if matches!(e, Expr::AddMod(..)) {
                    TKind::AddMod(boxed(ta), boxed(tb))
                } else {
                    TKind::SubGuarded(boxed(ta), boxed(tb))
                };
                Ok(texpr(k, sort))
            }
            Expr::Not(a) => Ok(texpr(
                TKind::Not(boxed(self.check(scope, a, Some(&Sort::Bool))?)),
                Sort::Bool,
            )),
            Expr::And(es) | Expr::Or(es) => {
                let ts = es
                    .iter()
                    .map(|x| self.check(scope, x, Some(&Sort::Bool)))
                    .collect::<Result<Vec<_>, _>>()?;
                let k = if matches!(e, Expr::And(_)) {
                    TKind::And(ts)
                } else {
                    TKind::Or(ts)
                };
                Ok(texpr(k, Sort::Bool))
            }
            Expr::Tuple(kvs) => {
                let exp = match expected {
                    Some(Sort::Tuple(t)) if t.fields.len() == kvs.len() => Some(t.clone()),
                    _ => None,
                };
                let mut keys = Vec::new();
                let mut ts = Vec::new();
                let mut fields = Vec::new();
                for (i, (k, v)) in kvs.iter().enumerate() {
                    if keys.iter().any(|x: &Arc<str>| x.eq_ignore_ascii_case(k)) {
                        return Err(format!("duplicate tuple key `:{k}`"));
                    }
                    let es = exp.as_ref().map(|t| &t.fields[i].1);
                    let t = self.check(scope, v, es)?;
                    keys.push(Arc::from(k.as_str()));
                    fields.push((k.clone(), t.sort.clone()));
                    ts.push(t);
                }
                Ok(texpr(
                    TKind::Tuple(keys, ts),
                    Sort::Tuple(Arc::new(TupleSort { fields })),
                ))
            }
            Expr::Case(s, arms, d) => {
                let ts = self.check(scope, s, None)?;
                if !matches!(ts.sort, Sort::Nat(_)) {
                    return Err(format!("case on non-natural sort {}", ts.sort));
                }
                let mut seen = std::collections::BTreeSet::new();
                for (keys, _) in arms {
                    for k in keys {
                        if !ts.sort.contains(&Value::Nat(*k)) {
                            return Err(format!("case key {k} does not fit sort {}", ts.sort));
                        }
                        if !seen.insert(*k) {
                            return Err(format!("duplicate case key {k}"));
                        }
                    }
                }
                // Result sort: expected, else the first arm that is not a bare literal.
                let result = match expected {
                    Some(x) => x.clone(),
                    None => {
                        let bodies = arms.iter().map(|(_, b)| b).chain(std::iter::once(&**d));
                        let pick = bodies
                            .clone()
                            .find(|b| !self.is_literal(scope, b))
                            .or_else(|| bodies.clone().next())
                            .expect("default arm");
                        self.check(scope, pick, None)?.sort
                    }
                };
                let tarms = arms
                    .iter()
                    .map(|(k, b)| Ok((k.clone(), self.check(scope, b, Some(&result))?)))
                    .collect::<Result<Vec<_>, String>>()?;
                let td = self.check(scope, d, Some(&result))?;
                Ok(texpr(TKind::Case(boxed(ts), tarms, boxed(td)), result))
            }
            Expr::Call(name, args) => {
                let def = self
                    .defs
                    .get(name)
                    .cloned()
                    .ok_or_else(|| format!("unknown function `{name}`"))?;
                if def.params.len() != args.len() {
                    return Err(format!(
                        "`{name}` expects {} arguments, got {}",
                        def.params.len(),
                        args.len()
                    ));
                }
                let targs = def
                    .params
                    .iter()
                    .zip(args)
                    .map(|((_, s), a)| self.check(scope, a, Some(s)))
                    .collect::<Result<Vec<_>, _>>()?;
                let sort = def.result.clone();
                Ok(texpr(TKind::Apply(def, targs), sort))
            }
        }
    }
}

impl TExpr {
    /// Number of syntax nodes, counting shared call bodies once per call site.
    pub fn size(&self) -> usize {
        1 + self.children().map(TExpr::size).sum::<usize>()
    }

    /// Direct subexpressions in the caller's frame (call bodies excluded).
    pub fn children(&self) -> Box<dyn Iterator<Item = &TExpr> + '_> {
        use std::iter::once;
        match &self.kind {
            TKind::Var(_) | TKind::Const(_) => Box::new(std::iter::empty()),
            TKind::Field(e, _) | TKind::Not(e) => Box::new(once(&**e)),
            TKind::Update(b, ups) => Box::new(once(&**b).chain(ups.iter().map(|(_, e)| e))),
            TKind::Make(es) | TKind::Tuple(_, es) | TKind::And(es) | TKind::Or(es) => {
                Box::new(es.iter())
            }
            TKind::Apply(_, es) => Box::new(es.iter()),
            TKind::Ite(a, b, c) => Box::new(once(&**a).chain(once(&**b)).chain(once(&**c))),
            TKind::Eq(a, b)
            | TKind::Lt(a, b)
            | TKind::Le(a, b)
            | TKind::AddMod(a, b)
            | TKind::SubGuarded(a, b) => Box::new(once(&**a).chain(once(&**b))),
            TKind::Case(s, arms, d) => Box::new(
                once(&**s)
                    .chain(arms.iter().map(|(_, e)| e))
                    .chain(once(&**d)),
            ),
        }
    }

    /// Whether the expression reads frame slot `i`.
    pub fn mentions(&self, i: usize) -> bool {
        matches!(self.kind, TKind::Var(j) if j == i) || self.children().any(|c| c.mentions(i))
    }
}

/// Record sort helper for tests and builders.
pub fn record_sort(name: &str, fields: &[(&str, Sort)]) -> Sort {
    Sort::Record(Arc::new(RecordSort {
        name: name.to_string(),
        fields: fields.iter().map(|(k, s)| (k.to_string(), s.clone())).collect(),
    }))
}

/// Builders for checked expressions assembled by the analyses.
impl TExpr {
    pub fn var(i: usize, sort: Sort) -> TExpr {
        texpr(TKind::Var(i), sort)
    }

    pub fn constant(v: Value, sort: Sort) -> TExpr {
        texpr(TKind::Const(v), sort)
    }

    pub fn tru() -> TExpr {
        TExpr::constant(Value::Bool(true), Sort::Bool)
    }

    pub fn and(es: Vec<TExpr>) -> TExpr {
        texpr(TKind::And(es), Sort::Bool)
    }

    pub fn or(es: Vec<TExpr>) -> TExpr {
        texpr(TKind::Or(es), Sort::Bool)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: TExpr) -> TExpr {
        texpr(TKind::Not(Box::new(e)), Sort::Bool)
    }

    pub fn eq(a: TExpr, b: TExpr) -> TExpr {
        assert_eq!(a.sort, b.sort, "equality of different sorts");
        texpr(TKind::Eq(Box::new(a), Box::new(b)), Sort::Bool)
    }

    pub fn lt(a: TExpr, b: TExpr) -> TExpr {
        texpr(TKind::Lt(Box::new(a), Box::new(b)), Sort::Bool)
    }

    /// Strict lexicographic `xs < ys`, leftmost most significant.
    pub fn lex_lt(xs: &[TExpr], ys: &[TExpr]) -> TExpr {
        assert_eq!(xs.len(), ys.len());
        match (xs.split_first(), ys.split_first()) {
            (Some((x, xr)), Some((y, _))) if xr.is_empty() => TExpr::lt(x.clone(), y.clone()),
            (Some((x, xr)), Some((y, yr))) => TExpr::or(vec![
                TExpr::lt(x.clone(), y.clone()),
                TExpr::and(vec![TExpr::eq(x.clone(), y.clone()), TExpr::lex_lt(xr, yr)]),
            ]),
            _ => TExpr::constant(Value::Bool(false), Sort::Bool),
        }
    }

    /// Non-strict lexicographic `xs <= ys`.
    pub fn lex_le(xs: &[TExpr], ys: &[TExpr]) -> TExpr {
        TExpr::not(TExpr::lex_lt(ys, xs))
    }

    /// Field `name` of a record-valued expression.
    pub fn field(e: TExpr, name: &str) -> Option<TExpr> {
        let Sort::Record(r) = &e.sort else { return None };
        let i = r.fields.iter().position(|(f, _)| f == name)?;
        let sort = r.fields[i].1.clone();
        Some(texpr(TKind::Field(Box::new(e), i), sort))
    }

    /// Keyword tuple of the given components.
    pub fn tuple(items: Vec<(String, TExpr)>) -> TExpr {
        let sort = Sort::Tuple(Arc::new(TupleSort {
            fields: items.iter().map(|(k, e)| (k.clone(), e.sort.clone())).collect(),
        }));
        let (keys, es): (Vec<Arc<str>>, Vec<TExpr>) = items.into_iter().map(|(k, e)| (Arc::from(k.as_str()), e)).unzip();
        texpr(TKind::Tuple(keys, es), sort)
    }

    pub fn apply(def: &Arc<TDef>, args: Vec<TExpr>) -> TExpr {
        texpr(TKind::Apply(def.clone(), args), def.result.clone())
    }
}
