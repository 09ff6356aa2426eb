//! Independent checks of a synthesized measure against the concrete model.
//!
//! Nothing here trusts the builder: graphs and omaps are taken as data and
//! every claim is re-derived from the model by fresh queries.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::absgraph::{OrderTag, TaggedGraph};
use crate::enumerate::{compute_finite_values, find_witness, Backend, Query};
use crate::error::{Error, Result};
use crate::model::eval::{all_values, eval};
use crate::model::sort::Sort;
use crate::model::typed::{TDef, TExpr};
use crate::model::value::Value;
use crate::model::{Invariant, MapDecl, MeasureFamily, Model, RelationKind};
use crate::ordinals::{bnl_bnd, bnl_lt, bnl_to_o, mk_bnl, o_lt, Bnl, Ordinal};
use crate::pipeline::{build_graph, relation, RelationSpec};
use crate::synth::{Entry, Omap};

/// Observation budget for one sweep query.
pub const SWEEP_CAP: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exhaustive,
    SatEmptiness,
    EntryScan,
}

impl Method {
    fn of(backend: &Backend) -> Method {
        match backend {
            Backend::Exhaustive => Method::Exhaustive,
            _ => Method::SatEmptiness,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub method: Method,
    pub verdict: Verdict,
    /// Queries issued, arcs scanned or observations swept.
    pub cases: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    fn pass(name: &str, method: Method, cases: usize) -> Check {
        Check {
            name: name.to_string(),
            method,
            verdict: Verdict::Pass,
            cases,
            witness: None,
        }
    }

    fn fail(name: &str, method: Method, cases: usize, witness: String) -> Check {
        Check {
            name: name.to_string(),
            method,
            verdict: Verdict::Fail,
            cases,
            witness: Some(witness),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Concrete evaluation of a map and its measures.
pub struct Abstraction<'a> {
    pub map: &'a MapDecl,
}

impl Abstraction<'_> {
    pub fn map_e(&self, x: &Value) -> Value {
        eval(&self.map.map.body, std::slice::from_ref(x))
    }

    pub fn map_o(&self, x: &Value, name: &str) -> Result<Vec<u64>> {
        Ok(self
            .map
            .ord
            .get(name)?
            .components
            .iter()
            .map(|c| eval(&c.body, std::slice::from_ref(x)).as_nat().expect("natural measure"))
            .collect())
    }

    pub fn widths(&self) -> BTreeMap<String, usize> {
        family_widths(&self.map.ord)
    }

    pub fn mk_bnl(&self, x: &Value, m: &Omap, bound: usize) -> Result<Bnl> {
        let node = self.map_e(x);
        let d = m
            .get(&node)
            .ok_or_else(|| Error::NodeNotInOmap(node.display_with(&m.node_sort).to_string()))?;
        mk_bnl(d, bound, |o| self.map_o(x, o))
    }

    pub fn msr(&self, x: &Value, m: &Omap, bound: usize) -> Result<Ordinal> {
        Ok(bnl_to_o(&self.mk_bnl(x, m, bound)?))
    }
}

pub fn family_widths(f: &MeasureFamily) -> BTreeMap<String, usize> {
    f.measures
        .iter()
        .map(|m| (m.name.to_ascii_lowercase(), m.components.len()))
        .collect()
}

fn call(def: &Arc<TDef>, args: Vec<TExpr>) -> TExpr {
    TExpr::apply(def, args)
}

fn konst(v: &Value, s: &Sort) -> TExpr {
    TExpr::constant(v.clone(), s.clone())
}

fn describe(rel: &RelationSpec, vals: &[Value]) -> String {
    rel.vars
        .iter()
        .zip(vals)
        .map(|((n, s), v)| format!("{n} = {}", v.display_with(s)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn ord_terms(map: &MapDecl, name: &str, s: &TExpr) -> Result<Vec<TExpr>> {
    Ok(map.ord.get(name)?.components.iter().map(|c| call(c, vec![s.clone()])).collect())
}

/// The three graph assumptions: every concrete step from a graph node lands
/// on one of its successors, and the stored tags hold on every instance.
pub fn check_assumptions(model: &Model, map: &MapDecl, g: &TaggedGraph, backend: &Backend) -> Result<Vec<Check>> {
    let rel = relation(model, map, &[])?;
    let ns = &g.graph.node_sort;
    if map.map.result != *ns {
        return Err(Error::Artifact(format!("graph node sort does not match map `{}`", map.name)));
    }
    let mx = call(&map.map, vec![rel.xv()]);
    let my = call(&map.map, vec![rel.yv()]);
    let method = Method::of(backend);

    let n = g.graph.nodes.len();
    let first = |qs: Vec<(usize, Query)>| -> Result<Option<String>> {
        let found = qs
            .par_iter()
            .map(|(_, q)| find_witness(q, backend))
            .collect::<Result<Vec<_>>>()?;
        Ok(found
            .into_iter()
            .zip(&qs)
            .find_map(|(w, (u, _))| w.map(|w| format!("node {}: {}", g.graph.node_text(*u), describe(&rel, &w)))))
    };

    let mut out = Vec::new();
    let qs: Vec<(usize, Query)> = (0..n)
        .map(|u| {
            let mut conj = vec![rel.hyp.clone(), TExpr::eq(mx.clone(), konst(&g.graph.nodes[u], ns))];
            conj.extend(
                g.graph.succs[u]
                    .iter()
                    .map(|&v| TExpr::not(TExpr::eq(my.clone(), konst(&g.graph.nodes[v], ns)))),
            );
            (u, Query::new(rel.vars.clone(), TExpr::and(conj), TExpr::tru()))
        })
        .collect();
    out.push(match first(qs)? {
        None => Check::pass("assumption-1", method, n),
        Some(w) => Check::fail("assumption-1", method, n, w),
    });

    for (name, want) in [("assumption-2", OrderTag::StrictDec), ("assumption-3", OrderTag::NonInc)] {
        let mut qs = Vec::new();
        for (&(u, v), tags) in &g.tags {
            for (i, m) in g.measures.iter().enumerate() {
                if tags[i] != want {
                    continue;
                }
                let ox = ord_terms(map, m, &rel.xv())?;
                let oy = ord_terms(map, m, &rel.yv())?;
                let bad = match want {
                    OrderTag::StrictDec => TExpr::not(TExpr::lex_lt(&oy, &ox)),
                    _ => TExpr::not(TExpr::lex_le(&oy, &ox)),
                };
                let hyp = TExpr::and(vec![
                    rel.hyp.clone(),
                    TExpr::eq(mx.clone(), konst(&g.graph.nodes[u], ns)),
                    TExpr::eq(my.clone(), konst(&g.graph.nodes[v], ns)),
                    bad,
                ]);
                qs.push((u, Query::new(rel.vars.clone(), hyp, TExpr::tru())));
            }
        }
        let k = qs.len();
        out.push(match first(qs)? {
            None => Check::pass(name, method, k),
            Some(w) => Check::fail(name, method, k, w),
        });
    }
    Ok(out)
}

/// Why an arc fails the descriptor scan.
fn arc_decreases(g: &TaggedGraph, u: usize, v: usize, du: &[Entry], dv: &[Entry]) -> std::result::Result<(), String> {
    for i in 0.. {
        let (Some(a), Some(b)) = (du.get(i), dv.get(i)) else {
            return Err(format!("descriptors exhausted at entry {i} without a strict decrease"));
        };
        match (a, b) {
            (Entry::Rank(x), Entry::Rank(y)) if x > y => return Ok(()),
            (Entry::Rank(x), Entry::Rank(y)) if x == y => continue,
            (Entry::Rank(x), Entry::Rank(y)) => return Err(format!("entry {i}: rank {x} < {y}")),
            (Entry::Measure(x), Entry::Measure(y)) if x.eq_ignore_ascii_case(y) => {
                match g.chk_ord_arc(u, v, x).map_err(|e| e.to_string())? {
                    OrderTag::StrictDec => return Ok(()),
                    OrderTag::NonInc => continue,
                    OrderTag::MayInc => return Err(format!("entry {i}: {} may increase", x.to_ascii_uppercase())),
                }
            }
            _ => return Err(format!("entry {i}: {a} does not line up with {b}")),
        }
    }
    unreachable!()
}

/// Arc-wise lexicographic decrease of descriptors.
pub fn check_omap_valid(g: &TaggedGraph, m: &Omap) -> Check {
    let name = "valid-omap";
    let mut cases = 0;
    for (i, node) in g.graph.nodes.iter().enumerate() {
        if m.get(node).is_none() {
            return Check::fail(name, Method::EntryScan, cases, format!("node {} not in omap", g.graph.node_text(i)));
        }
    }
    for (u, v) in g.graph.arcs() {
        cases += 1;
        let du = &m.get(&g.graph.nodes[u]).unwrap().0;
        let dv = &m.get(&g.graph.nodes[v]).unwrap().0;
        if let Err(why) = arc_decreases(g, u, v, du, dv) {
            return Check::fail(
                name,
                Method::EntryScan,
                cases,
                format!("{} -> {}: {why}", g.graph.node_text(u), g.graph.node_text(v)),
            );
        }
    }
    Check::pass(name, Method::EntryScan, cases)
}

/// Sweeps every distinct observation `(map x, map y, ords x, ords y)` of a
/// related pair with `map x` in the omap, checking that both the bnl and its
/// ordinal strictly decrease. Observations determine the measure, so the
/// sweep covers all concrete pairs.
pub fn check_measure_decrease(model: &Model, map: &MapDecl, m: &Omap, backend: &Backend) -> Result<Check> {
    let name = "measure-decrease";
    let rel = relation(model, map, &[])?;
    let abs = Abstraction { map };
    let widths = abs.widths();
    let bound = bnl_bnd(m, &widths)?;
    let ns = m.node_sort.clone();
    let mx = call(&map.map, vec![rel.xv()]);
    let my = call(&map.map, vec![rel.yv()]);
    let names = map.ord.names();
    let mut items = vec![("my".to_string(), my)];
    for (side, s) in [("x", rel.xv()), ("y", rel.yv())] {
        for o in &names {
            for (i, t) in ord_terms(map, o, &s)?.into_iter().enumerate() {
                items.push((format!("{side}-{o}-{i}"), t));
            }
        }
    }
    let trm = TExpr::tuple(items);
    let results = m
        .entries
        .par_iter()
        .map(|(u, _)| {
            let hyp = TExpr::and(vec![rel.hyp.clone(), TExpr::eq(mx.clone(), konst(u, &ns))]);
            let q = Query::new(rel.vars.clone(), hyp.clone(), trm.clone());
            let r = compute_finite_values(&q, SWEEP_CAP, backend)?;
            if !r.is_total {
                return Err(Error::ScopeTooLarge(format!(
                    "more than {SWEEP_CAP} observations from node {}",
                    u.display_with(&ns)
                )));
            }
            let mut bad = None;
            for obs in &r.values {
                if let Some(why) = observation_fails(u, obs, &names, &widths, m, bound)? {
                    let wq = Query::new(
                        rel.vars.clone(),
                        TExpr::and(vec![hyp.clone(), TExpr::eq(trm.clone(), konst(obs, &trm.sort))]),
                        TExpr::tru(),
                    );
                    let pair = find_witness(&wq, backend)?.map(|w| describe(&rel, &w)).unwrap_or_default();
                    bad = Some(format!("{why}; {pair}"));
                    break;
                }
            }
            Ok((r.values.len(), bad))
        })
        .collect::<Result<Vec<_>>>()?;
    let cases = results.iter().map(|r| r.0).sum();
    Ok(match results.into_iter().find_map(|r| r.1) {
        None => Check::pass(name, Method::Exhaustive, cases),
        Some(w) => Check::fail(name, Method::Exhaustive, cases, w),
    })
}

fn observation_fails(
    u: &Value,
    obs: &Value,
    names: &[String],
    widths: &BTreeMap<String, usize>,
    m: &Omap,
    bound: usize,
) -> Result<Option<String>> {
    let Value::Tuple(kv) = obs else { unreachable!("observation is a tuple") };
    let v = &kv[0].1;
    let mut pos = 1;
    let mut ords: [BTreeMap<String, Vec<u64>>; 2] = Default::default();
    for side in &mut ords {
        for o in names {
            let w = widths[&o.to_ascii_lowercase()];
            side.insert(
                o.to_ascii_lowercase(),
                kv[pos..pos + w].iter().map(|(_, x)| x.as_nat().expect("natural")).collect(),
            );
            pos += w;
        }
    }
    let Some(dv) = m.get(v) else {
        return Ok(Some(format!("successor node {} not in omap", v.display_with(&m.node_sort))));
    };
    let du = m.get(u).expect("swept nodes come from the omap");
    let bx = mk_bnl(du, bound, |o| Ok(ords[0][&o.to_ascii_lowercase()].clone()))?;
    let by = mk_bnl(dv, bound, |o| Ok(ords[1][&o.to_ascii_lowercase()].clone()))?;
    if !bnl_lt(&by, &bx)? {
        return Ok(Some(format!("bnl {by} is not below {bx}")));
    }
    let (ox, oy) = (bnl_to_o(&bx), bnl_to_o(&by));
    if !o_lt(&oy, &ox) {
        return Ok(Some(format!("ordinal {oy} is not below {ox}")));
    }
    Ok(None)
}

/// Reach graph of `(key fields.., :inv inv)`; passes when no reached node
/// has a false `:inv`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub verdict: Verdict,
    pub nodes: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failing: Vec<String>,
}

pub fn invariant_map(model: &Model, inv: &Invariant) -> Result<MapDecl> {
    let st = model.system.state.clone();
    let a = TExpr::var(0, st.clone());
    let mut items = Vec::new();
    for k in &inv.key {
        let f = TExpr::field(a.clone(), k)
            .ok_or_else(|| Error::Precondition(format!("state has no field `{k}` for invariant key")))?;
        items.push((k.clone(), f));
    }
    items.push(("inv".to_string(), call(&inv.def, vec![a])));
    let body = TExpr::tuple(items);
    Ok(MapDecl {
        name: inv.def.name.clone(),
        relation: RelationKind::Step,
        map: Arc::new(TDef {
            name: format!("{}-map", inv.def.name),
            params: vec![("a".to_string(), st)],
            result: body.sort.clone(),
            body,
        }),
        ord: MeasureFamily {
            name: String::new(),
            measures: Vec::new(),
        },
        assume: None,
    })
}

pub fn certify_state_invariant(model: &Model, inv: &Invariant, num: usize, backend: &Backend) -> Result<InvariantCheck> {
    let map = invariant_map(model, inv)?;
    let g = build_graph(model, &map, num, backend)?;
    let failing: Vec<String> = g.inv_violations().into_iter().map(|i| g.node_text(i)).collect();
    Ok(InvariantCheck {
        name: inv.def.name.clone(),
        verdict: if failing.is_empty() { Verdict::Pass } else { Verdict::Fail },
        nodes: g.nodes.len(),
        failing,
    })
}

/// Concrete successors of `x` under a map's relation, deduplicated and in
/// canonical order. The blocking relation enumerates the whole state space.
pub fn successors(model: &Model, map: &MapDecl, x: &Value) -> Result<Vec<Value>> {
    let sys = &model.system;
    let holds = |d: &Option<Arc<TDef>>, args: &[Value]| d.as_ref().map_or(true, |d| eval(&d.body, args) == Value::Bool(true));
    let one = std::slice::from_ref(x);
    let mut out = BTreeSet::new();
    match map.relation {
        RelationKind::Step => {
            if !holds(&sys.valid, one) || !holds(&map.assume, one) {
                return Ok(Vec::new());
            }
            if let Some(d) = &sys.done {
                if eval(&d.body, one) == Value::Bool(true) {
                    return Ok(Vec::new());
                }
            }
            let next = sys.next.as_ref().ok_or_else(|| Error::Precondition("model has no :next".into()))?;
            match &sys.shared {
                Some(sh) => {
                    for s in all_values(sh) {
                        out.insert(eval(&next.body, &[x.clone(), s]));
                    }
                }
                None => {
                    out.insert(eval(&next.body, one));
                }
            }
        }
        RelationKind::Blok => {
            let blok = sys.blok.as_ref().ok_or_else(|| Error::Precondition("model has no :blok".into()))?;
            if !holds(&sys.valid, one) || !holds(&map.assume, one) {
                return Ok(Vec::new());
            }
            for y in all_values(&sys.state) {
                let yy = std::slice::from_ref(&y);
                if holds(&sys.valid, yy) && holds(&map.assume, yy) && eval(&blok.body, &[x.clone(), y.clone()]) == Value::Bool(true) {
                    out.insert(y);
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Follows chosen successors from `x0` until none remain, asserting a strict
/// ordinal decrease on every step. The returned trace starts at `x0`.
pub fn iterate_descent(
    model: &Model,
    map: &MapDecl,
    m: &Omap,
    x0: &Value,
    mut choose: impl FnMut(&[Value]) -> usize,
    max_steps: usize,
) -> Result<Vec<(Value, Ordinal)>> {
    let abs = Abstraction { map };
    let bound = bnl_bnd(m, &abs.widths())?;
    let mut trace = vec![(x0.clone(), abs.msr(x0, m, bound)?)];
    loop {
        let (x, ox) = trace.last().unwrap().clone();
        let ys = successors(model, map, &x)?;
        if ys.is_empty() {
            return Ok(trace);
        }
        if trace.len() > max_steps {
            return Err(Error::Monitor(format!("no normal form within {max_steps} steps")));
        }
        let y = ys[choose(&ys) % ys.len()].clone();
        let oy = abs.msr(&y, m, bound)?;
        if !o_lt(&oy, &ox) {
            return Err(Error::Monitor(format!(
                "measure did not decrease: {ox} then {oy} at {}",
                y.display_with(&model.system.state)
            )));
        }
        trace.push((y, oy));
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapCertificate {
    pub map: String,
    pub relation: String,
    pub graph_hash: String,
    pub omap_hash: String,
    pub nodes: usize,
    pub arcs: usize,
    pub bnl_bound: usize,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_invariant: Option<InvariantCheck>,
}

impl MapCertificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
            && self.assumed_invariant.as_ref().map_or(true, |i| i.verdict == Verdict::Pass)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub model: String,
    pub model_hash: String,
    pub params: BTreeMap<String, u64>,
    pub backend: String,
    pub maps: Vec<MapCertificate>,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// All checks for one map against a given graph and omap.
pub fn certify_map(model: &Model, map_name: &str, g: &TaggedGraph, m: &Omap, num: usize, backend: &Backend) -> Result<MapCertificate> {
    let map = model.map(map_name)?;
    let abs = Abstraction { map };
    let mut checks = check_assumptions(model, map, g, backend)?;
    checks.push(check_omap_valid(g, m));
    checks.push(check_measure_decrease(model, map, m, backend)?);
    let assumed_invariant = match &map.assume {
        Some(def) => {
            let inv = model
                .invariants
                .iter()
                .find(|i| i.def.name == def.name)
                .cloned()
                .unwrap_or_else(|| Invariant {
                    def: def.clone(),
                    key: Vec::new(),
                });
            Some(certify_state_invariant(model, &inv, num, backend)?)
        }
        None => None,
    };
    Ok(MapCertificate {
        map: map.name.clone(),
        relation: match map.relation {
            RelationKind::Step => "step".into(),
            RelationKind::Blok => "blok".into(),
        },
        graph_hash: sha256_hex(&g.to_json()),
        omap_hash: sha256_hex(&m.to_json()),
        nodes: g.graph.nodes.len(),
        arcs: g.graph.num_arcs(),
        bnl_bound: bnl_bnd(m, &abs.widths())?,
        checks,
        assumed_invariant,
    })
}

pub fn certificate(model: &Model, maps: Vec<MapCertificate>, backend: &Backend) -> Certificate {
    let verdict = if maps.iter().all(MapCertificate::passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Certificate {
        model: model.name.clone(),
        model_hash: model.hash(),
        params: model.params.clone(),
        backend: backend.name().to_string(),
        maps,
        verdict,
    }
}
