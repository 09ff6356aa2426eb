//! The finite-domain model language: sorts, values, expressions and models.

pub mod decl;
pub mod eval;
pub mod expr;
pub mod sexpr;
pub mod sort;
pub mod typed;
pub mod value;

use std::collections::BTreeMap;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use decl::{DeclKind, FunDecl, ModelSource, SortRef, WidthRef};
use expr::Expr;
use sexpr::Span;
use sort::{bits_for, EnumSort, RecordSort, Sort, TupleSort, MAX_NAT_WIDTH};
use typed::{Checker, TDef, TExpr};

use crate::error::{Error, Result};

pub use decl::parse_source;
pub use eval::eval;
pub use value::{parse_value, Value};

/// Which concrete relation a map abstracts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelationKind {
    /// `y = next(x, sh)` for a live, valid `x`.
    Step,
    /// `blok(x, y)` between valid states satisfying the map's assumption.
    Blok,
}

#[derive(Clone, Debug)]
pub struct System {
    pub state: Sort,
    pub shared: Option<Sort>,
    pub init: Option<Arc<TDef>>,
    pub init_ok: Option<Arc<TDef>>,
    pub next: Option<Arc<TDef>>,
    pub shared_next: Option<Arc<TDef>>,
    pub blok: Option<Arc<TDef>>,
    pub done: Option<Arc<TDef>>,
    pub valid: Option<Arc<TDef>>,
}

#[derive(Clone, Debug)]
pub struct Measure {
    pub name: String,
    /// One natural-valued function of the state per tuple position.
    pub components: Vec<Arc<TDef>>,
}

#[derive(Clone, Debug)]
pub struct MeasureFamily {
    pub name: String,
    pub measures: Vec<Measure>,
}

impl MeasureFamily {
    pub fn get(&self, name: &str) -> Result<&Measure> {
        self.measures
            .iter()
            .find(|m| m.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownMeasure(name.to_string()))
    }

    pub fn names(&self) -> Vec<String> {
        self.measures.iter().map(|m| m.name.clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Invariant {
    pub def: Arc<TDef>,
    pub key: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct MapDecl {
    pub name: String,
    pub relation: RelationKind,
    pub map: Arc<TDef>,
    pub ord: MeasureFamily,
    pub assume: Option<Arc<TDef>>,
}

/// A model instantiated at concrete parameter values and fully checked.
#[derive(Clone, Debug)]
pub struct Model {
    pub source: Arc<ModelSource>,
    pub name: String,
    pub params: BTreeMap<String, u64>,
    pub sorts: BTreeMap<String, Sort>,
    pub defs: BTreeMap<String, Arc<TDef>>,
    pub system: System,
    pub invariants: Vec<Invariant>,
    pub maps: Vec<MapDecl>,
}

/// Parses and instantiates a model at its default parameters.
pub fn parse_model(text: &str) -> Result<Model> {
    Model::instantiate(Arc::new(parse_source(text)?), &BTreeMap::new())
}

fn sort_err<T>(span: Span, message: impl Into<String>) -> Result<T> {
    Err(Error::Sort {
        span,
        message: message.into(),
    })
}

struct Builder {
    params: BTreeMap<String, u64>,
    sorts: BTreeMap<String, Sort>,
    defs: BTreeMap<String, Arc<TDef>>,
}

impl Builder {
    fn width(&self, span: Span, w: &WidthRef) -> Result<u64> {
        match w {
            WidthRef::Lit(n) => Ok(*n),
            WidthRef::Param(p) => self
                .params
                .get(p)
                .copied()
                .map_or_else(|| sort_err(span, format!("unknown parameter `{p}`")), Ok),
            WidthRef::Bits(x) => Ok(bits_for(self.width(span, x)?) as u64),
        }
    }

    fn sort(&self, span: Span, s: &SortRef) -> Result<Sort> {
        match s {
            SortRef::Bool => Ok(Sort::Bool),
            SortRef::Nat(w) => {
                let w = self.width(span, w)?;
                if w == 0 || w > MAX_NAT_WIDTH as u64 {
                    return sort_err(span, format!("natural width {w} outside 1..={MAX_NAT_WIDTH}"));
                }
                Ok(Sort::Nat(w as u32))
            }
            SortRef::Named(n) => self
                .sorts
                .get(n)
                .cloned()
                .map_or_else(|| sort_err(span, format!("unknown sort `{n}`")), Ok),
            SortRef::Tuple(fs) => Ok(Sort::Tuple(Arc::new(TupleSort {
                fields: fs
                    .iter()
                    .map(|(k, s)| Ok((k.clone(), self.sort(span, s)?)))
                    .collect::<Result<_>>()?,
            }))),
        }
    }

    fn checker(&self) -> Checker<'_> {
        Checker {
            defs: &self.defs,
            params: &self.params,
            sorts: &self.sorts,
        }
    }

    fn scope(&self, span: Span, ps: &[(String, SortRef)]) -> Result<Vec<(String, Sort)>> {
        let mut seen = Vec::new();
        ps.iter()
            .map(|(n, s)| {
                if seen.contains(&n) {
                    return Err(Error::Duplicate {
                        span,
                        name: n.clone(),
                    });
                }
                seen.push(n);
                Ok((n.clone(), self.sort(span, s)?))
            })
            .collect()
    }

    fn fresh(&self, span: Span, name: &str) -> Result<()> {
        if self.defs.contains_key(name) {
            return Err(Error::Duplicate {
                span,
                name: name.to_string(),
            });
        }
        Ok(())
    }

    fn defun(&mut self, span: Span, d: &FunDecl) -> Result<Arc<TDef>> {
        self.fresh(span, &d.name)?;
        let scope = self.scope(span, &d.params)?;
        let expected = d.returns.as_ref().map(|r| self.sort(span, r)).transpose()?;
        let body = self
            .checker()
            .check(&scope, &d.body, expected.as_ref())
            .or_else(|m| sort_err(span, format!("in `{}`: {m}", d.name)))?;
        let def = Arc::new(TDef {
            name: d.name.clone(),
            params: scope,
            result: body.sort.clone(),
            body,
        });
        self.defs.insert(d.name.clone(), def.clone());
        Ok(def)
    }
}

impl Model {
    /// Instantiates `source` with parameter overrides applied over the
    /// declared defaults.
    pub fn instantiate(source: Arc<ModelSource>, overrides: &BTreeMap<String, u64>) -> Result<Model> {
        let mut b = Builder {
            params: BTreeMap::new(),
            sorts: BTreeMap::new(),
            defs: BTreeMap::new(),
        };
        let mut families: BTreeMap<String, MeasureFamily> = BTreeMap::new();
        let mut invariants = Vec::new();
        let mut system_opts = None;
        let mut map_decls = Vec::new();
        for d in &source.decls {
            let span = d.span;
            match &d.kind {
                DeclKind::Param { name, default } => {
                    if b.params.contains_key(name) {
                        return Err(Error::Duplicate {
                            span,
                            name: name.clone(),
                        });
                    }
                    b.params
                        .insert(name.clone(), overrides.get(name).copied().unwrap_or(*default));
                }
                DeclKind::Enum { name, symbols } => {
                    if b.sorts.contains_key(name) {
                        return Err(Error::Duplicate {
                            span,
                            name: name.clone(),
                        });
                    }
                    if symbols.is_empty() {
                        return sort_err(span, format!("enum `{name}` has no symbols"));
                    }
                    for (i, s) in symbols.iter().enumerate() {
                        if symbols[..i].iter().any(|t| t.eq_ignore_ascii_case(s)) {
                            return Err(Error::Duplicate {
                                span,
                                name: s.clone(),
                            });
                        }
                    }
                    b.sorts.insert(
                        name.clone(),
                        Sort::Enum(Arc::new(EnumSort {
                            name: name.clone(),
                            symbols: symbols.clone(),
                        })),
                    );
                }
                DeclKind::Record { name, fields } => {
                    if b.sorts.contains_key(name) {
                        return Err(Error::Duplicate {
                            span,
                            name: name.clone(),
                        });
                    }
                    let mut fs: Vec<(String, Sort)> = Vec::new();
                    for (k, s) in fields {
                        if fs.iter().any(|(j, _)| j.eq_ignore_ascii_case(k)) {
                            return Err(Error::Duplicate {
                                span,
                                name: k.clone(),
                            });
                        }
                        fs.push((k.clone(), b.sort(span, s)?));
                    }
                    b.sorts.insert(
                        name.clone(),
                        Sort::Record(Arc::new(RecordSort {
                            name: name.clone(),
                            fields: fs,
                        })),
                    );
                }
                DeclKind::Defun(f) => {
                    b.defun(span, f)?;
                }
                DeclKind::Invariant { fun, key } => {
                    let def = b.defun(span, fun)?;
                    if def.params.len() != 1 || def.result != Sort::Bool {
                        return sort_err(span, format!("invariant `{}` must be a predicate of one state", fun.name));
                    }
                    for k in key {
                        if !def.params[0].1.components().iter().any(|(f, _)| f.eq_ignore_ascii_case(k)) {
                            return sort_err(span, format!("invariant key names unknown field `{k}`"));
                        }
                    }
                    invariants.push(Invariant {
                        def,
                        key: key.clone(),
                    });
                }
                DeclKind::Measures {
                    name,
                    params,
                    measures,
                } => {
                    if families.contains_key(name) {
                        return Err(Error::Duplicate {
                            span,
                            name: name.clone(),
                        });
                    }
                    let scope = b.scope(span, params)?;
                    if scope.len() != 1 {
                        return sort_err(span, "a measure family takes exactly one state parameter");
                    }
                    let mut fam = MeasureFamily {
                        name: name.clone(),
                        measures: Vec::new(),
                    };
                    for (m, es) in measures {
                        if fam.measures.iter().any(|x| x.name.eq_ignore_ascii_case(m)) {
                            return Err(Error::Duplicate {
                                span,
                                name: m.clone(),
                            });
                        }
                        let mut comps = Vec::new();
                        for (i, e) in es.iter().enumerate() {
                            let body = b
                                .checker()
                                .check(&scope, e, None)
                                .or_else(|msg| sort_err(span, format!("in measure `{m}`: {msg}")))?;
                            if !matches!(body.sort, Sort::Nat(_)) {
                                return sort_err(span, format!("measure `{m}` component {i} is not a natural"));
                            }
                            let def_name = format!("{name}.{m}.{i}");
                            b.fresh(span, &def_name)?;
                            let def = Arc::new(TDef {
                                name: def_name.clone(),
                                params: scope.clone(),
                                result: body.sort.clone(),
                                body,
                            });
                            b.defs.insert(def_name, def.clone());
                            comps.push(def);
                        }
                        fam.measures.push(Measure {
                            name: m.clone(),
                            components: comps,
                        });
                    }
                    families.insert(name.clone(), fam);
                }
                DeclKind::System(opts) => {
                    if system_opts.is_some() {
                        return Err(Error::Duplicate {
                            span,
                            name: "system".into(),
                        });
                    }
                    system_opts = Some((span, opts.clone()));
                }
                DeclKind::Map { name, options } => map_decls.push((span, name.clone(), options.clone())),
            }
        }
        for name in overrides.keys() {
            if !b.params.contains_key(name) {
                return Err(Error::Precondition(format!("model has no parameter `{name}`")));
            }
        }
        let Some((sys_span, opts)) = system_opts else {
            return sort_err(Span::default(), "model has no (system ...) form");
        };
        let system = build_system(&b, sys_span, &opts)?;
        let mut maps: Vec<MapDecl> = Vec::new();
        for (span, name, options) in map_decls {
            if maps.iter().any(|m| m.name == name) {
                return Err(Error::Duplicate { span, name });
            }
            maps.push(build_map(&b, &families, &system, span, name, &options)?);
        }
        Ok(Model {
            name: source.name.clone(),
            source,
            params: b.params,
            sorts: b.sorts,
            defs: b.defs,
            system,
            invariants,
            maps,
        })
    }

    /// Re-instantiates the same source with different parameters.
    pub fn with_params(&self, overrides: &BTreeMap<String, u64>) -> Result<Model> {
        let mut all = self.params.clone();
        all.extend(overrides.iter().map(|(k, v)| (k.clone(), *v)));
        Model::instantiate(self.source.clone(), &all)
    }

    pub fn map(&self, name: &str) -> Result<&MapDecl> {
        self.maps
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| Error::UnknownMap(name.to_string()))
    }

    pub fn def(&self, name: &str) -> Result<&Arc<TDef>> {
        self.defs.get(name).ok_or_else(|| Error::Unbound(name.to_string()))
    }

    pub fn param(&self, name: &str) -> Option<u64> {
        self.params.get(name).copied()
    }

    /// Checks a surface expression against this model's definitions.
    pub fn check(&self, scope: &[(String, Sort)], e: &Expr, expected: Option<&Sort>) -> Result<TExpr> {
        Checker {
            defs: &self.defs,
            params: &self.params,
            sorts: &self.sorts,
        }
        .check(scope, e, expected)
        .or_else(|m| sort_err(Span::default(), m))
    }

    /// Canonical source text.
    pub fn canonical_text(&self) -> String {
        self.source.to_string()
    }

    /// Hash of the canonical source together with the parameter values.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_text().as_bytes());
        for (k, v) in &self.params {
            h.update(format!("\n{k}={v}").as_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn lookup(b: &Builder, span: Span, name: &str) -> Result<Arc<TDef>> {
    b.defs
        .get(name)
        .cloned()
        .map_or_else(|| sort_err(span, format!("unknown function `{name}`")), Ok)
}

fn expect_sig(span: Span, def: &TDef, params: &[&Sort], result: Option<&Sort>) -> Result<()> {
    let got: Vec<&Sort> = def.params.iter().map(|(_, s)| s).collect();
    if got != params || result.is_some_and(|r| r != &def.result) {
        let ps: Vec<String> = params.iter().map(|s| s.to_string()).collect();
        return sort_err(
            span,
            format!(
                "`{}` must take ({}){}",
                def.name,
                ps.join(" "),
                result.map(|r| format!(" and return {r}")).unwrap_or_default()
            ),
        );
    }
    Ok(())
}

fn build_system(b: &Builder, span: Span, opts: &[(String, String)]) -> Result<System> {
    let get = |k: &str| opts.iter().find(|(o, _)| o == k).map(|(_, v)| v.as_str());
    for (k, _) in opts {
        if ![
            "state", "shared", "init", "init-ok", "next", "shared-next", "blok", "done", "valid",
        ]
        .contains(&k.as_str())
        {
            return sort_err(span, format!("unknown system option :{k}"));
        }
    }
    let state = b.sort(
        span,
        &SortRef::Named(
            get("state")
                .ok_or_else(|| Error::parse(span, "system needs :state"))?
                .to_string(),
        ),
    )?;
    let shared = get("shared")
        .map(|s| b.sort(span, &SortRef::Named(s.to_string())))
        .transpose()?;
    let def = |k: &str| get(k).map(|n| lookup(b, span, n)).transpose();
    let (init, init_ok) = (def("init")?, def("init-ok")?);
    if let Some(i) = &init {
        if i.result != state {
            return sort_err(span, format!("`{}` must return {state}", i.name));
        }
        if let Some(ok) = &init_ok {
            if ok.params != i.params || ok.result != Sort::Bool {
                return sort_err(span, format!("`{}` must be a predicate over the init parameters", ok.name));
            }
        }
    }
    let mut pre = vec![&state];
    if let Some(s) = &shared {
        pre.push(s);
    }
    let next = def("next")?;
    if let Some(n) = &next {
        expect_sig(span, n, &pre, Some(&state))?;
    }
    let shared_next = def("shared-next")?;
    if let (Some(f), Some(s)) = (&shared_next, &shared) {
        expect_sig(span, f, &[s, &state], Some(s))?;
    }
    let blok = def("blok")?;
    if let Some(f) = &blok {
        expect_sig(span, f, &[&state, &state], Some(&Sort::Bool))?;
    }
    let done = def("done")?;
    if let Some(f) = &done {
        expect_sig(span, f, &[&state], Some(&Sort::Bool))?;
    }
    let valid = def("valid")?;
    if let Some(f) = &valid {
        expect_sig(span, f, &[&state], Some(&Sort::Bool))?;
    }
    Ok(System {
        state,
        shared,
        init,
        init_ok,
        next,
        shared_next,
        blok,
        done,
        valid,
    })
}

fn build_map(
    b: &Builder,
    families: &BTreeMap<String, MeasureFamily>,
    system: &System,
    span: Span,
    name: String,
    opts: &[(String, String)],
) -> Result<MapDecl> {
    let get = |k: &str| opts.iter().find(|(o, _)| o == k).map(|(_, v)| v.as_str());
    for (k, _) in opts {
        if !["relation", "map", "ord", "assume"].contains(&k.as_str()) {
            return sort_err(span, format!("unknown map option :{k}"));
        }
    }
    let relation = match get("relation") {
        Some("step") | None => RelationKind::Step,
        Some("blok") => RelationKind::Blok,
        Some(r) => return sort_err(span, format!("unknown relation `{r}`")),
    };
    match relation {
        RelationKind::Step if system.next.is_none() => {
            return sort_err(span, "a step map needs a :next function")
        }
        RelationKind::Blok if system.blok.is_none() => {
            return sort_err(span, "a blok map needs a :blok function")
        }
        _ => {}
    }
    let map = lookup(b, span, get("map").ok_or_else(|| Error::parse(span, "map needs :map"))?)?;
    expect_sig(span, &map, &[&system.state], None)?;
    if !matches!(map.result, Sort::Tuple(_)) {
        return sort_err(span, format!("map function `{}` must return a tuple", map.name));
    }
    let ord_name = get("ord").ok_or_else(|| Error::parse(span, "map needs :ord"))?;
    let ord = families
        .get(ord_name)
        .cloned()
        .map_or_else(|| sort_err(span, format!("unknown measure family `{ord_name}`")), Ok)?;
    for m in &ord.measures {
        for c in &m.components {
            expect_sig(span, c, &[&system.state], None)?;
        }
    }
    let assume = get("assume").map(|n| lookup(b, span, n)).transpose()?;
    if let Some(a) = &assume {
        expect_sig(span, a, &[&system.state], Some(&Sort::Bool))?;
    }
    Ok(MapDecl {
        name,
        relation,
        map,
        ord,
        assume,
    })
}
