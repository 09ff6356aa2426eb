//! Abstract graphs: reachable nodes of an abstraction map, relation graphs
//! over an abstract domain, and per-arc ordering tags.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::enumerate::{compute_finite_values, find_witness, Backend, Query};
use crate::error::{Error, Result};
use crate::model::sort::Sort;
use crate::model::typed::TExpr;
use crate::model::value::{parse_value, Value};

/// Reserved variable bound to the node being expanded.
pub const SRC_VAR: &str = "*src-var*";
/// Reserved variable bound to the destination of the arc being tagged.
pub const DST_VAR: &str = "*dst-var*";

/// Default enumeration budget per query.
pub const DEFAULT_NUM: usize = 4096;

/// How a component measure behaves along an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderTag {
    /// Strictly decreases on every instance of the arc.
    StrictDec,
    /// Never increases.
    NonInc,
    /// May increase.
    MayInc,
}

impl OrderTag {
    /// ACL2-style symbol: `:<<`, `t` or `nil`.
    pub fn symbol(self) -> &'static str {
        match self {
            OrderTag::StrictDec => ":<<",
            OrderTag::NonInc => "t",
            OrderTag::MayInc => "nil",
        }
    }
}

/// An untagged abstract graph. Nodes are canonically ordered; arcs are
/// successor index lists, sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub node_sort: Sort,
    pub nodes: Vec<Value>,
    pub succs: Vec<Vec<usize>>,
}

impl Graph {
    fn from_parts(node_sort: Sort, arcs: BTreeMap<Value, BTreeSet<Value>>) -> Graph {
        let nodes: Vec<Value> = arcs.keys().cloned().collect();
        let succs = arcs
            .values()
            .map(|ds| ds.iter().map(|d| nodes.binary_search(d).unwrap()).collect())
            .collect();
        Graph {
            node_sort,
            nodes,
            succs,
        }
    }

    pub fn index(&self, v: &Value) -> Option<usize> {
        self.nodes.binary_search(v).ok()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succs
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn num_arcs(&self) -> usize {
        self.succs.iter().map(Vec::len).sum()
    }

    /// Nodes whose `:inv` component is false.
    pub fn inv_violations(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].tuple_get("inv") == Some(&Value::Bool(false)))
            .collect()
    }

    pub fn node_text(&self, i: usize) -> String {
        self.nodes[i].display_with(&self.node_sort).to_string()
    }
}

fn not_total(node: String, num: usize) -> Error {
    Error::NotTotal { node, num }
}

fn slot(vars: &[(String, Sort)], name: &str) -> Result<usize> {
    vars.iter()
        .position(|(n, _)| n == name)
        .ok_or_else(|| Error::Precondition(format!("query has no reserved variable `{name}`")))
}

/// Worklist closure from the initial values under the step term.
///
/// `step` must declare [`SRC_VAR`]; it is bound to each node in turn.
pub fn comp_map_reach(init: &Query, step: &Query, num: usize, backend: &Backend) -> Result<Graph> {
    slot(&step.vars, SRC_VAR)?;
    let start = compute_finite_values(init, num, backend)?;
    if !start.is_total {
        return Err(not_total("<init>".into(), num));
    }
    let mut arcs: BTreeMap<Value, BTreeSet<Value>> = BTreeMap::new();
    let mut frontier: Vec<Value> = start.values;
    for v in &frontier {
        arcs.insert(v.clone(), BTreeSet::new());
    }
    while !frontier.is_empty() {
        let results: Vec<(Value, Result<crate::enumerate::EnumResult>)> = frontier
            .par_iter()
            .map(|u| {
                let q = step.clone().bind(SRC_VAR, u.clone());
                (u.clone(), compute_finite_values(&q, num, backend))
            })
            .collect();
        let mut next = BTreeSet::new();
        for (u, r) in results {
            let r = r?;
            if !r.is_total {
                return Err(not_total(u.display_with(&init.trm.sort).to_string(), num));
            }
            for v in &r.values {
                if !arcs.contains_key(v) {
                    next.insert(v.clone());
                }
            }
            arcs.get_mut(&u).unwrap().extend(r.values);
        }
        for v in &next {
            arcs.insert(v.clone(), BTreeSet::new());
        }
        frontier = next.into_iter().collect();
    }
    Ok(Graph::from_parts(init.trm.sort.clone(), arcs))
}

/// Graph of a relation over an abstract domain: nodes are the values of
/// `dom.trm` under `dom.hyp`; `(u, v)` is an arc iff some assignment of
/// `rel` with [`SRC_VAR`] bound to `u` (its hypothesis is expected to tie the
/// source term to it) gives `rel.trm = v`.
pub fn comp_map_rel(dom: &Query, rel: &Query, num: usize, backend: &Backend) -> Result<Graph> {
    slot(&rel.vars, SRC_VAR)?;
    let nodes = compute_finite_values(dom, num, backend)?;
    if !nodes.is_total {
        return Err(not_total("<domain>".into(), num));
    }
    let results: Vec<Result<(Value, BTreeSet<Value>)>> = nodes
        .values
        .par_iter()
        .map(|u| {
            let q = rel.clone().bind(SRC_VAR, u.clone());
            let r = compute_finite_values(&q, num, backend)?;
            if !r.is_total {
                return Err(not_total(u.display_with(&dom.trm.sort).to_string(), num));
            }
            Ok((u.clone(), r.values.into_iter().collect()))
        })
        .collect();
    let mut arcs = BTreeMap::new();
    for r in results {
        let (u, vs) = r?;
        arcs.insert(u, vs);
    }
    // Destinations outside the domain are kept as nodes so arcs stay closed.
    let extra: Vec<Value> = arcs
        .values()
        .flatten()
        .filter(|v| !arcs.contains_key(*v))
        .cloned()
        .collect();
    for v in extra {
        arcs.insert(v, BTreeSet::new());
    }
    Ok(Graph::from_parts(dom.trm.sort.clone(), arcs))
}

/// The terms of one component measure at the source (`x`) and destination
/// (`y`) of a concrete arc.
#[derive(Clone, Debug)]
pub struct MeasureTerms {
    pub name: String,
    pub x: Vec<TExpr>,
    pub y: Vec<TExpr>,
}

/// Input of [`comp_map_order`]: a hypothesis over the arc instance, which
/// must mention [`SRC_VAR`] and [`DST_VAR`], and the measures.
#[derive(Clone, Debug)]
pub struct OrderSpec {
    pub vars: Vec<(String, Sort)>,
    pub hyp: TExpr,
    pub measures: Vec<MeasureTerms>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedGraph {
    pub map: String,
    pub graph: Graph,
    pub measures: Vec<String>,
    /// Tuple length of each measure, in `measures` order.
    pub widths: Vec<usize>,
    /// Tags per arc, one per measure in `measures` order.
    pub tags: BTreeMap<(usize, usize), Vec<OrderTag>>,
}

fn tag_arc(spec: &OrderSpec, u: &Value, v: &Value, backend: &Backend) -> Result<Vec<OrderTag>> {
    spec.measures
        .iter()
        .map(|m| {
            let query = |cond: TExpr| {
                Query::new(spec.vars.clone(), TExpr::and(vec![spec.hyp.clone(), cond]), TExpr::tru())
                    .bind(SRC_VAR, u.clone())
                    .bind(DST_VAR, v.clone())
            };
            // Q1: can the measure fail to decrease?
            if find_witness(&query(TExpr::lex_le(&m.x, &m.y)), backend)?.is_none() {
                return Ok(OrderTag::StrictDec);
            }
            // Q2: can it increase?
            if find_witness(&query(TExpr::lex_lt(&m.x, &m.y)), backend)?.is_none() {
                return Ok(OrderTag::NonInc);
            }
            Ok(OrderTag::MayInc)
        })
        .collect()
}

/// Tags every arc of `g` for every measure of `spec`.
pub fn comp_map_order(map: &str, g: &Graph, spec: &OrderSpec, backend: &Backend) -> Result<TaggedGraph> {
    slot(&spec.vars, SRC_VAR)?;
    slot(&spec.vars, DST_VAR)?;
    let arcs: Vec<(usize, usize)> = g.arcs().collect();
    let tags = arcs
        .par_iter()
        .map(|&(u, v)| Ok(((u, v), tag_arc(spec, &g.nodes[u], &g.nodes[v], backend)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(TaggedGraph {
        map: map.to_string(),
        graph: g.clone(),
        measures: spec.measures.iter().map(|m| m.name.clone()).collect(),
        widths: spec.measures.iter().map(|m| m.x.len()).collect(),
        tags,
    })
}

impl TaggedGraph {
    pub fn measure_index(&self, name: &str) -> Result<usize> {
        self.measures
            .iter()
            .position(|m| m.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownMeasure(name.to_string()))
    }

    pub fn width(&self, name: &str) -> Result<usize> {
        Ok(self.widths[self.measure_index(name)?])
    }

    /// The stored tag of arc `(u, v)` for measure `o`.
    pub fn chk_ord_arc(&self, u: usize, v: usize, o: &str) -> Result<OrderTag> {
        let i = self.measure_index(o)?;
        self.tags.get(&(u, v)).map(|t| t[i]).ok_or_else(|| Error::MissingArc {
            src: self.graph.node_text(u),
            dst: self.graph.node_text(v),
        })
    }

    /// Canonical JSON text.
    pub fn to_json(&self) -> String {
        let j = GraphJson {
            map: self.map.clone(),
            measures: self
                .measures
                .iter()
                .zip(&self.widths)
                .map(|(name, &width)| MeasureJson {
                    name: name.clone(),
                    width,
                })
                .collect(),
            nodes: (0..self.graph.nodes.len()).map(|i| self.graph.node_text(i)).collect(),
            arcs: self
                .tags
                .iter()
                .map(|(&(src, dst), tags)| ArcJson {
                    src,
                    dst,
                    tags: self.measures.iter().cloned().zip(tags.iter().copied()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&j).expect("serializable") + "\n"
    }

    /// Reads a graph written by [`TaggedGraph::to_json`]; node texts are
    /// parsed at `node_sort`.
    pub fn from_json(text: &str, node_sort: &Sort) -> Result<TaggedGraph> {
        let j: GraphJson = serde_json::from_str(text)?;
        let nodes = j
            .nodes
            .iter()
            .map(|t| parse_value(t, node_sort))
            .collect::<Result<Vec<_>>>()?;
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Artifact("graph nodes are not in canonical order".into()));
        }
        let measures: Vec<String> = j.measures.iter().map(|m| m.name.clone()).collect();
        let mut succs = vec![Vec::new(); nodes.len()];
        let mut tags = BTreeMap::new();
        for a in &j.arcs {
            if a.src >= nodes.len() || a.dst >= nodes.len() {
                return Err(Error::Artifact(format!("arc {} -> {} out of range", a.src, a.dst)));
            }
            succs[a.src].push(a.dst);
            let t = measures
                .iter()
                .map(|m| {
                    a.tags
                        .get(m)
                        .copied()
                        .ok_or_else(|| Error::Artifact(format!("arc {} -> {} has no tag for `{m}`", a.src, a.dst)))
                })
                .collect::<Result<Vec<_>>>()?;
            tags.insert((a.src, a.dst), t);
        }
        succs.iter_mut().for_each(|s| s.sort_unstable());
        Ok(TaggedGraph {
            map: j.map,
            graph: Graph {
                node_sort: node_sort.clone(),
                nodes,
                succs,
            },
            measures,
            widths: j.measures.iter().map(|m| m.width).collect(),
            tags,
        })
    }

    /// Graphviz rendering; arc labels list each measure's tag.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{}\" {{", self.map);
        let _ = writeln!(s, "  node [shape=box, fontname=monospace];");
        for i in 0..self.graph.nodes.len() {
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", self.graph.node_text(i).replace('"', "\\\""));
        }
        for (&(u, v), tags) in &self.tags {
            let label: Vec<String> = self
                .measures
                .iter()
                .zip(tags)
                .map(|(m, t)| format!("{m} {}", t.symbol()))
                .collect();
            let _ = writeln!(s, "  n{u} -> n{v} [label=\"{}\"];", label.join("\\n"));
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    name: String,
    width: usize,
}

#[derive(Serialize, Deserialize)]
struct ArcJson {
    src: usize,
    dst: usize,
    tags: BTreeMap<String, OrderTag>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    map: String,
    measures: Vec<MeasureJson>,
    nodes: Vec<String>,
    arcs: Vec<ArcJson>,
}
