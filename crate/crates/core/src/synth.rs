//! Measure synthesis by alternating SCC and partition phases over a tagged
//! graph.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::absgraph::{OrderTag, TaggedGraph};
use crate::error::{Error, Result};
use crate::model::sort::Sort;
use crate::model::value::{parse_value, Value};

/// One descriptor entry: an SCC rank or a component measure name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Rank(u64),
    Measure(String),
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Rank(n) => write!(f, "{n}"),
            Entry::Measure(m) => write!(f, "{}", m.to_ascii_uppercase()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Descriptor(pub Vec<Entry>);

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

impl Descriptor {
    /// Parses `(4 RUNS 11 0)`.
    pub fn parse(text: &str) -> Result<Descriptor> {
        let t = text.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::Artifact(format!("bad descriptor `{text}`")))?;
        Ok(Descriptor(
            inner
                .split_whitespace()
                .map(|w| match w.parse::<u64>() {
                    Ok(n) => Entry::Rank(n),
                    Err(_) => Entry::Measure(w.to_ascii_lowercase()),
                })
                .collect(),
        ))
    }
}

/// Abstract node to descriptor, in the graph's canonical node order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Omap {
    pub node_sort: Sort,
    pub entries: Vec<(Value, Descriptor)>,
}

impl Omap {
    pub fn get(&self, node: &Value) -> Option<&Descriptor> {
        self.entries
            .binary_search_by(|(n, _)| n.cmp(node))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Alist-style listing, one node per line.
    pub fn table(&self) -> String {
        let mut s = String::new();
        for (n, d) in &self.entries {
            let _ = writeln!(s, "{} . {}", n.display_with(&self.node_sort), d);
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut obj = serde_json::Map::new();
        for (n, d) in &self.entries {
            obj.insert(
                n.display_with(&self.node_sort).to_string(),
                serde_json::to_value(d).expect("serializable"),
            );
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(obj)).expect("serializable") + "\n"
    }

    pub fn from_json(text: &str, node_sort: &Sort) -> Result<Omap> {
        let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        let mut entries = obj
            .into_iter()
            .map(|(k, v)| {
                let node = parse_value(&k, node_sort)?;
                let d: Descriptor = serde_json::from_value(v)?;
                Ok((node, d))
            })
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Artifact("omap lists a node twice".into()));
        }
        Ok(Omap {
            node_sort: node_sort.clone(),
            entries,
        })
    }
}

/// A closed walk on which no measure qualifies as decreasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub measures: Vec<String>,
    /// Node indices; first equals last.
    pub nodes: Vec<usize>,
    /// Per arc, per measure.
    pub tags: Vec<Vec<OrderTag>>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn report(&self, g: &TaggedGraph) -> String {
        let mut s = format!("non-decreasing cycle of length {}:\n", self.len());
        for (i, w) in self.nodes.windows(2).enumerate() {
            let _ = writeln!(s, "  {}", g.graph.node_text(w[0]));
            let tags: Vec<String> = self
                .measures
                .iter()
                .zip(&self.tags[i])
                .map(|(m, t)| format!("{} {}", m.to_ascii_uppercase(), t.symbol()))
                .collect();
            let _ = writeln!(s, "    -> [{}]", tags.join(", "));
        }
        let _ = writeln!(s, "  {}", g.graph.node_text(*self.nodes.last().unwrap()));
        s
    }

    pub fn to_json(&self, g: &TaggedGraph) -> String {
        let arcs: Vec<serde_json::Value> = self
            .nodes
            .windows(2)
            .zip(&self.tags)
            .map(|(w, t)| {
                let tags: serde_json::Map<String, serde_json::Value> = self
                    .measures
                    .iter()
                    .zip(t)
                    .map(|(m, t)| (m.clone(), serde_json::to_value(t).expect("serializable")))
                    .collect();
                serde_json::json!({
                    "src": g.graph.node_text(w[0]),
                    "dst": g.graph.node_text(w[1]),
                    "tags": tags,
                })
            })
            .collect();
        let j = serde_json::json!({
            "map": g.map,
            "length": self.len(),
            "nodes": self.nodes.iter().map(|&i| g.graph.node_text(i)).collect::<Vec<_>>(),
            "arcs": arcs,
        });
        serde_json::to_string_pretty(&j).expect("serializable") + "\n"
    }
}

type Arcs = BTreeSet<(usize, usize)>;

fn succ_lists(nodes: &[usize], arcs: &Arcs) -> HashMap<usize, Vec<usize>> {
    let mut m: HashMap<usize, Vec<usize>> = nodes.iter().map(|&n| (n, Vec::new())).collect();
    for &(u, v) in arcs {
        m.get_mut(&u).expect("arc source in subgraph").push(v);
    }
    m
}

/// Strongly connected components, sinks first. `nodes` fixes the visiting
/// order; successors are visited in ascending index order.
pub fn scc_partition(nodes: &[usize], arcs: &Arcs) -> Vec<Vec<usize>> {
    let succs = succ_lists(nodes, arcs);
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut low: HashMap<usize, usize> = HashMap::new();
    let mut on_stack: BTreeSet<usize> = BTreeSet::new();
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    for &root in nodes {
        if index.contains_key(&root) {
            continue;
        }
        // (node, next successor position)
        let mut call = vec![(root, 0usize)];
        index.insert(root, next);
        low.insert(root, next);
        next += 1;
        stack.push(root);
        on_stack.insert(root);
        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            let ss = &succs[&u];
            if *pos < ss.len() {
                let v = ss[*pos];
                *pos += 1;
                if !index.contains_key(&v) {
                    index.insert(v, next);
                    low.insert(v, next);
                    next += 1;
                    stack.push(v);
                    on_stack.insert(v);
                    call.push((v, 0));
                } else if on_stack.contains(&v) {
                    let l = low[&u].min(index[&v]);
                    low.insert(u, l);
                }
                continue;
            }
            call.pop();
            if let Some(&(p, _)) = call.last() {
                let l = low[&p].min(low[&u]);
                low.insert(p, l);
            }
            if low[&u] == index[&u] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().unwrap();
                    on_stack.remove(&w);
                    comp.push(w);
                    if w == u {
                        break;
                    }
                }
                comp.sort_unstable();
                out.push(comp);
            }
        }
    }
    out
}

fn is_scc(nodes: &[usize], arcs: &Arcs) -> bool {
    !arcs.is_empty() && scc_partition(nodes, arcs).len() == 1
}

fn tag(g: &TaggedGraph, arc: &(usize, usize), m: usize) -> OrderTag {
    g.tags[arc][m]
}

/// Shortest closed walk in the subgraph along which every measure either
/// may increase or never strictly decreases. Ties go to the smallest start
/// node. Returns `None` only when no such walk exists.
pub fn find_min_nondec_cycle(g: &TaggedGraph, nodes: &[usize], arcs: &Arcs) -> Option<Cycle> {
    let k = g.measures.len();
    assert!(k <= 32, "too many measures for cycle search");
    let succs = succ_lists(nodes, arcs);
    let ok = |inc: u64, dec: u64| dec & !inc == 0;
    let mut best: Option<Vec<usize>> = None;
    let mut sorted: Vec<usize> = nodes.to_vec();
    sorted.sort_unstable();
    for &s in &sorted {
        // state: (node, may-inc mask, strict-dec mask)
        let start = (s, 0u64, 0u64);
        let mut parent: HashMap<(usize, u64, u64), (usize, u64, u64)> = HashMap::new();
        let mut q = VecDeque::from([(start, 0usize)]);
        let mut found = None;
        let limit = best.as_ref().map_or(usize::MAX, |b| b.len() - 1);
        'bfs: while let Some((st, d)) = q.pop_front() {
            if d + 1 >= limit {
                break;
            }
            let (u, inc, dec) = st;
            for &v in &succs[&u] {
                let (mut ni, mut nd) = (inc, dec);
                for m in 0..k {
                    match tag(g, &(u, v), m) {
                        OrderTag::MayInc => ni |= 1 << m,
                        OrderTag::StrictDec => nd |= 1 << m,
                        OrderTag::NonInc => {}
                    }
                }
                let nst = (v, ni, nd);
                if v == s && ok(ni, nd) {
                    parent.insert(nst, st);
                    found = Some(nst);
                    break 'bfs;
                }
                if nst != start && !parent.contains_key(&nst) {
                    parent.insert(nst, st);
                    q.push_back((nst, d + 1));
                }
            }
        }
        if let Some(end) = found {
            let mut path = vec![end.0];
            let mut cur = parent[&end];
            while cur != start {
                path.push(cur.0);
                cur = parent[&cur];
            }
            path.push(s);
            path.reverse();
            if best.as_ref().map_or(true, |b| path.len() < b.len()) {
                best = Some(path);
            }
        }
    }
    best.map(|nodes| {
        let tags = nodes.windows(2).map(|w| g.tags[&(w[0], w[1])].clone()).collect();
        Cycle {
            measures: g.measures.clone(),
            nodes,
            tags,
        }
    })
}

struct Synth<'a> {
    g: &'a TaggedGraph,
    out: HashMap<usize, Vec<Entry>>,
}

impl Synth<'_> {
    fn sub(&mut self, nodes: &[usize], arcs: &Arcs) -> std::result::Result<(), Cycle> {
        if nodes.len() == 1 && arcs.is_empty() {
            self.out.insert(nodes[0], vec![Entry::Rank(0)]);
            return Ok(());
        }
        self.phase(nodes, arcs)
    }

    fn phase(&mut self, nodes: &[usize], arcs: &Arcs) -> std::result::Result<(), Cycle> {
        if is_scc(nodes, arcs) {
            self.scc(nodes, arcs)
        } else {
            self.partition(nodes, arcs)
        }
    }

    fn scc(&mut self, nodes: &[usize], arcs: &Arcs) -> std::result::Result<(), Cycle> {
        for (m, name) in self.g.measures.iter().enumerate() {
            let inc = arcs.iter().any(|a| tag(self.g, a, m) == OrderTag::MayInc);
            let dec = arcs.iter().any(|a| tag(self.g, a, m) == OrderTag::StrictDec);
            if inc || !dec {
                continue;
            }
            let rest: Arcs = arcs
                .iter()
                .filter(|a| tag(self.g, a, m) != OrderTag::StrictDec)
                .copied()
                .collect();
            debug_assert!(rest.len() < arcs.len());
            self.sub(nodes, &rest)?;
            for n in nodes {
                self.out.get_mut(n).unwrap().insert(0, Entry::Measure(name.clone()));
            }
            return Ok(());
        }
        Err(find_min_nondec_cycle(self.g, nodes, arcs).expect("a failing SCC has a non-decreasing walk"))
    }

    fn partition(&mut self, nodes: &[usize], arcs: &Arcs) -> std::result::Result<(), Cycle> {
        for (i, comp) in scc_partition(nodes, arcs).into_iter().enumerate() {
            debug_assert!(comp.len() < nodes.len() || arcs.is_empty());
            let set: BTreeSet<usize> = comp.iter().copied().collect();
            let inner: Arcs = arcs
                .iter()
                .filter(|(u, v)| set.contains(u) && set.contains(v))
                .copied()
                .collect();
            self.sub(&comp, &inner)?;
            for n in &comp {
                self.out.get_mut(n).unwrap().insert(0, Entry::Rank(i as u64 + 1));
            }
        }
        Ok(())
    }
}

/// Maps every node of `g` to a measure descriptor, or returns the minimal
/// non-decreasing cycle that blocks synthesis.
pub fn synthesize_omap(g: &TaggedGraph) -> std::result::Result<Omap, Cycle> {
    let nodes: Vec<usize> = (0..g.graph.nodes.len()).collect();
    let arcs: Arcs = g.graph.arcs().collect();
    let mut s = Synth {
        g,
        out: HashMap::new(),
    };
    if !nodes.is_empty() {
        s.phase(&nodes, &arcs)?;
    }
    let mut out = s.out;
    Ok(Omap {
        node_sort: g.graph.node_sort.clone(),
        entries: nodes
            .iter()
            .map(|&i| (g.graph.nodes[i].clone(), Descriptor(out.remove(&i).unwrap())))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arcs(v: &[(usize, usize)]) -> Arcs {
        v.iter().copied().collect()
    }

    #[test]
    fn chain_sinks_first() {
        assert_eq!(scc_partition(&[0, 1], &arcs(&[(0, 1)])), vec![vec![1], vec![0]]);
    }

    #[test]
    fn self_loop_is_one_component() {
        assert_eq!(scc_partition(&[0], &arcs(&[(0, 0)])), vec![vec![0]]);
        assert!(is_scc(&[0], &arcs(&[(0, 0)])));
        assert!(!is_scc(&[0], &arcs(&[])));
    }

    #[test]
    fn descriptor_text_round_trip() {
        let d = Descriptor::parse("(4 RUNS 11 0)").unwrap();
        assert_eq!(
            d.0,
            vec![Entry::Rank(4), Entry::Measure("runs".into()), Entry::Rank(11), Entry::Rank(0)]
        );
        assert_eq!(d.to_string(), "(4 RUNS 11 0)");
        assert_eq!(serde_json::to_string(&d).unwrap(), r#"[4,"runs",11,0]"#);
    }
}
