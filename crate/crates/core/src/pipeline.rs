//! Queries derived from a model's system and maps.

use std::sync::Arc;

use crate::absgraph::{
    comp_map_order, comp_map_reach, comp_map_rel, Graph, MeasureTerms, OrderSpec, TaggedGraph, DST_VAR, SRC_VAR,
};
use crate::enumerate::{Backend, Query};
use crate::error::{Error, Result};
use crate::model::sort::Sort;
use crate::model::typed::{TDef, TExpr};
use crate::model::{MapDecl, Model, RelationKind};

fn call(def: &Arc<TDef>, args: Vec<TExpr>) -> TExpr {
    TExpr::apply(def, args)
}

/// A concrete relation `rel(x, y)` over named variables; `x` and `y` are
/// state variables.
#[derive(Clone, Debug)]
pub struct RelationSpec {
    pub vars: Vec<(String, Sort)>,
    pub x: usize,
    pub y: usize,
    pub hyp: TExpr,
}

fn opt(def: &Option<Arc<TDef>>, args: Vec<TExpr>) -> Option<TExpr> {
    def.as_ref().map(|d| call(d, args))
}

/// The relation a map abstracts, with extra variables appended after the
/// relation's own.
pub fn relation(model: &Model, map: &MapDecl, extra: &[(String, Sort)]) -> Result<RelationSpec> {
    let sys = &model.system;
    let st = sys.state.clone();
    let mut vars = vec![("x".to_string(), st.clone())];
    let mut conj = Vec::new();
    let x = TExpr::var(0, st.clone());
    match map.relation {
        RelationKind::Step => {
            let next = sys.next.as_ref().ok_or_else(|| Error::Precondition("model has no :next".into()))?;
            let mut args = vec![x.clone()];
            if let Some(sh) = &sys.shared {
                vars.push(("sh".to_string(), sh.clone()));
                args.push(TExpr::var(1, sh.clone()));
            }
            vars.push(("y".to_string(), st.clone()));
            let y = TExpr::var(vars.len() - 1, st.clone());
            conj.push(TExpr::eq(y, call(next, args)));
            conj.extend(opt(&sys.valid, vec![x.clone()]));
            conj.extend(opt(&sys.done, vec![x.clone()]).map(TExpr::not));
            conj.extend(opt(&map.assume, vec![x.clone()]));
        }
        RelationKind::Blok => {
            let blok = sys.blok.as_ref().ok_or_else(|| Error::Precondition("model has no :blok".into()))?;
            vars.push(("y".to_string(), st.clone()));
            let y = TExpr::var(1, st.clone());
            for s in [&x, &y] {
                conj.extend(opt(&sys.valid, vec![s.clone()]));
                conj.extend(opt(&map.assume, vec![s.clone()]));
            }
            conj.push(call(blok, vec![x.clone(), y]));
        }
    }
    let yi = vars.len() - 1;
    vars.extend(extra.iter().cloned());
    Ok(RelationSpec {
        vars,
        x: 0,
        y: yi,
        hyp: TExpr::and(conj),
    })
}

impl RelationSpec {
    pub fn xv(&self) -> TExpr {
        TExpr::var(self.x, self.vars[self.x].1.clone())
    }

    pub fn yv(&self) -> TExpr {
        TExpr::var(self.y, self.vars[self.y].1.clone())
    }

    pub fn slot(&self, name: &str) -> usize {
        self.vars.iter().position(|(n, _)| n == name).expect("declared variable")
    }

    pub fn var(&self, name: &str) -> TExpr {
        let i = self.slot(name);
        TExpr::var(i, self.vars[i].1.clone())
    }
}

pub fn node_sort(map: &MapDecl) -> Sort {
    map.map.result.clone()
}

/// Builds the untagged graph of a map.
pub fn build_graph(model: &Model, map: &MapDecl, num: usize, backend: &Backend) -> Result<Graph> {
    let sys = &model.system;
    let st = sys.state.clone();
    let ns = node_sort(map);
    let src = [(SRC_VAR.to_string(), ns.clone())];
    match map.relation {
        RelationKind::Step => {
            let init = sys.init.as_ref().ok_or_else(|| Error::Precondition("model has no :init".into()))?;
            let ivars = init.params.clone();
            let iargs: Vec<TExpr> = ivars.iter().enumerate().map(|(i, (_, s))| TExpr::var(i, s.clone())).collect();
            let ihyp = opt(&sys.init_ok, iargs.clone()).unwrap_or_else(TExpr::tru);
            let itrm = call(&map.map, vec![call(init, iargs)]);
            let init_q = Query::new(ivars, ihyp, itrm);

            let next = sys.next.as_ref().ok_or_else(|| Error::Precondition("model has no :next".into()))?;
            let mut vars = vec![("a".to_string(), st.clone())];
            let a = TExpr::var(0, st.clone());
            let mut args = vec![a.clone()];
            if let Some(sh) = &sys.shared {
                vars.push(("sh".to_string(), sh.clone()));
                args.push(TExpr::var(1, sh.clone()));
            }
            vars.extend(src.iter().cloned());
            let srcv = TExpr::var(vars.len() - 1, ns.clone());
            let mut conj = vec![TExpr::eq(call(&map.map, vec![a.clone()]), srcv)];
            conj.extend(opt(&sys.valid, vec![a.clone()]));
            conj.extend(opt(&sys.done, vec![a.clone()]).map(TExpr::not));
            conj.extend(opt(&map.assume, vec![a.clone()]));
            let step_q = Query::new(vars, TExpr::and(conj), call(&map.map, vec![call(next, args)]));
            comp_map_reach(&init_q, &step_q, num, backend)
        }
        RelationKind::Blok => {
            let a = TExpr::var(0, st.clone());
            let mut dconj = Vec::new();
            dconj.extend(opt(&sys.valid, vec![a.clone()]));
            dconj.extend(opt(&map.assume, vec![a.clone()]));
            let dom_q = Query::new(vec![("a".into(), st.clone())], TExpr::and(dconj), call(&map.map, vec![a]));
            let rel = relation(model, map, &src)?;
            let srcv = rel.var(SRC_VAR);
            let hyp = TExpr::and(vec![rel.hyp.clone(), TExpr::eq(call(&map.map, vec![rel.xv()]), srcv)]);
            let rel_q = Query::new(rel.vars.clone(), hyp, call(&map.map, vec![rel.yv()]));
            comp_map_rel(&dom_q, &rel_q, num, backend)
        }
    }
}

/// Measure terms of a map's family at the given state expressions.
pub fn measure_terms(map: &MapDecl, x: &TExpr, y: &TExpr) -> Vec<MeasureTerms> {
    map.ord
        .measures
        .iter()
        .map(|m| MeasureTerms {
            name: m.name.clone(),
            x: m.components.iter().map(|c| call(c, vec![x.clone()])).collect(),
            y: m.components.iter().map(|c| call(c, vec![y.clone()])).collect(),
        })
        .collect()
}

/// Tags the arcs of `g` using the map's relation and measures.
pub fn tag_graph(model: &Model, map: &MapDecl, g: &Graph, backend: &Backend) -> Result<TaggedGraph> {
    let ns = node_sort(map);
    let rel = relation(
        model,
        map,
        &[(SRC_VAR.to_string(), ns.clone()), (DST_VAR.to_string(), ns)],
    )?;
    let hyp = TExpr::and(vec![
        rel.hyp.clone(),
        TExpr::eq(call(&map.map, vec![rel.xv()]), rel.var(SRC_VAR)),
        TExpr::eq(call(&map.map, vec![rel.yv()]), rel.var(DST_VAR)),
    ]);
    let spec = OrderSpec {
        measures: measure_terms(map, &rel.xv(), &rel.yv()),
        vars: rel.vars,
        hyp,
    };
    comp_map_order(&map.name, g, &spec, backend)
}

/// Graph construction and tagging for a named map.
pub fn tagged_graph(model: &Model, map_name: &str, num: usize, backend: &Backend) -> Result<TaggedGraph> {
    let map = model.map(map_name)?;
    let g = build_graph(model, map, num, backend)?;
    tag_graph(model, map, &g, backend)
}

/// `map(y)` over related pairs with `map(x)` bound to [`SRC_VAR`]: the
/// per-node successor query of a map's relation.
pub fn relation_query(model: &Model, map: &MapDecl) -> Result<Query> {
    let rel = relation(model, map, &[(SRC_VAR.to_string(), node_sort(map))])?;
    let hyp = TExpr::and(vec![
        rel.hyp.clone(),
        TExpr::eq(call(&map.map, vec![rel.xv()]), rel.var(SRC_VAR)),
    ]);
    Ok(Query::new(rel.vars.clone(), hyp, call(&map.map, vec![rel.yv()])))
}
