#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use wfgraph::absgraph::{TaggedGraph, DEFAULT_NUM};
use wfgraph::enumerate::{Backend, Query};
use wfgraph::model::eval::all_values;
use wfgraph::model::expr::{self, Expr};
use wfgraph::model::sort::Sort;
use wfgraph::model::{eval, parse_model, Model, Value};
use wfgraph::pipeline::{build_graph, tag_graph};

/// Reachable rank-map nodes of the shipped model at its defaults.
pub const RANK_NODES: [&str; 21] = [
    "((:LOC 0)  (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 1)  (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 2)  (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 3)  (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 4)  (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 5)  (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 5)  (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 6)  (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 7)  (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 8)  (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 9)  (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 10) (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 11) (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 12) (:DONE NIL) (:LOOP=0 NIL) (:RUNS=0 NIL) (:INV T))",
    "((:LOC 12) (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 13) (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 14) (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 15) (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 NIL) (:INV T))",
    "((:LOC 15) (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 T)   (:INV T))",
    "((:LOC 16) (:DONE NIL) (:LOOP=0 T)   (:RUNS=0 T)   (:INV T))",
    "((:LOC 17) (:DONE T)   (:LOOP=0 T)   (:RUNS=0 T)   (:INV T))",
];

/// Expected rank-map descriptors, in node order.
pub const RANK_OMAP: [&str; 21] = [
    "(4 RUNS 11 0)",
    "(4 RUNS 10 0)",
    "(4 RUNS 9  0)",
    "(4 RUNS 8  LOOP 2 0)",
    "(4 RUNS 8  LOOP 1 0)",
    "(4 RUNS 8  LOOP 3 0)",
    "(4 RUNS 7  0)",
    "(4 RUNS 6  0)",
    "(4 RUNS 5  0)",
    "(4 RUNS 4  LOOP 4 0)",
    "(4 RUNS 4  LOOP 3 0)",
    "(4 RUNS 4  LOOP 2 0)",
    "(4 RUNS 4  LOOP 1 0)",
    "(4 RUNS 4  LOOP 5 0)",
    "(4 RUNS 3  0)",
    "(4 RUNS 2  0)",
    "(4 RUNS 1  0)",
    "(4 RUNS 12 0)",
    "(3 0)",
    "(2 0)",
    "(1 0)",
];

/// Collapses runs of whitespace.
pub fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn bakery() -> Model {
    parse_model(wfgraph::BAKERY_SOURCE).unwrap()
}

pub fn bakery_at(n: u64, r: u64, w: u64) -> Model {
    let over: BTreeMap<String, u64> = [("N", n), ("R", r), ("W", w)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    bakery().with_params(&over).unwrap()
}

pub fn tagged(model: &Model, map: &str) -> TaggedGraph {
    let be = Backend::Exhaustive;
    let m = model.map(map).unwrap();
    let g = build_graph(model, m, DEFAULT_NUM, &be).unwrap();
    tag_graph(model, m, &g, &be).unwrap()
}

/// Index of the node whose text matches `text` up to whitespace.
pub fn node(g: &TaggedGraph, text: &str) -> usize {
    let want = norm(text);
    (0..g.graph.nodes.len())
        .find(|&i| g.graph.node_text(i) == want)
        .unwrap_or_else(|| panic!("no node {want}"))
}

/// Indices of nodes at location `loc`.
pub fn at_loc(g: &TaggedGraph, loc: u64) -> Vec<usize> {
    (0..g.graph.nodes.len())
        .filter(|&i| g.graph.nodes[i].tuple_get("loc") == Some(&Value::Nat(loc)))
        .collect()
}

pub fn loc_of(g: &TaggedGraph, i: usize) -> u64 {
    g.graph.nodes[i].tuple_get("loc").and_then(Value::as_nat).unwrap()
}

// Random queries over a small model with every kind of sort.

pub const GEN_SOURCE: &str = "
(model gen)
(enum color red green blue)
(record pt (x (nat 2)) (c color) (f bool))
(system :state pt)
";

pub fn gen_model() -> Model {
    parse_model(GEN_SOURCE).unwrap()
}

pub fn gen_sorts(m: &Model) -> Vec<Sort> {
    vec![
        Sort::Bool,
        Sort::Nat(1),
        Sort::Nat(2),
        Sort::Nat(3),
        m.sorts["color"].clone(),
        m.sorts["pt"].clone(),
    ]
}

pub struct Gen<'a, R: Rng> {
    pub rng: &'a mut R,
    pub model: &'a Model,
    pub scope: Vec<(String, Sort)>,
}

impl<R: Rng> Gen<'_, R> {
    fn sorts(&self) -> Vec<Sort> {
        gen_sorts(self.model)
    }

    fn nat_sort(&mut self) -> Sort {
        Sort::Nat(self.rng.gen_range(1..=3))
    }

    fn leaf(&mut self, sort: &Sort) -> Expr {
        let vars: Vec<String> = self.scope.iter().filter(|(_, s)| s == sort).map(|(n, _)| n.clone()).collect();
        let pts: Vec<String> = self
            .scope
            .iter()
            .filter(|(_, s)| matches!(s, Sort::Record(_)))
            .map(|(n, _)| n.clone())
            .collect();
        let field = match sort {
            Sort::Nat(2) => Some("x"),
            Sort::Enum(_) => Some("c"),
            Sort::Bool => Some("f"),
            _ => None,
        };
        match self.rng.gen_range(0..3) {
            0 if !vars.is_empty() => expr::var(vars.choose(self.rng).unwrap().clone()),
            1 if field.is_some() && !pts.is_empty() => {
                expr::field(expr::var(pts.choose(self.rng).unwrap().clone()), field.unwrap())
            }
            _ => {
                let vs = all_values(sort);
                expr::constant(vs.choose(self.rng).unwrap().clone(), sort.clone())
            }
        }
    }

    fn case(&mut self, sort: &Sort, depth: u32) -> Expr {
        let ks = self.nat_sort();
        let Sort::Nat(w) = ks else { unreachable!() };
        let scrut = self.expr(&ks, depth - 1);
        let mut keys: Vec<u64> = (0..1u64 << w).collect();
        keys.shuffle(self.rng);
        let n = self.rng.gen_range(1..=keys.len().min(3));
        let arms = keys[..n].iter().map(|&k| (vec![k], self.expr(sort, depth - 1))).collect();
        Expr::Case(Box::new(scrut), arms, Box::new(self.expr(sort, depth - 1)))
    }

    /// A random well-sorted expression of `sort` of depth at most `depth`.
    pub fn expr(&mut self, sort: &Sort, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf(sort);
        }
        let d = depth - 1;
        let pick = self.rng.gen_range(0..6);
        if pick == 0 {
            let c = self.expr(&Sort::Bool, d);
            return expr::ite(c, self.expr(sort, d), self.expr(sort, d));
        }
        if pick == 1 && !matches!(sort, Sort::Bool) {
            return self.case(sort, depth);
        }
        match sort {
            Sort::Bool => match self.rng.gen_range(0..6) {
                0 => expr::not(self.expr(sort, d)),
                1 => expr::and((0..self.rng.gen_range(0..=3)).map(|_| self.expr(sort, d)).collect::<Vec<_>>()),
                2 => expr::or((0..self.rng.gen_range(0..=3)).map(|_| self.expr(sort, d)).collect::<Vec<_>>()),
                3 => {
                    let s = self.sorts().choose(self.rng).unwrap().clone();
                    expr::eq(self.expr(&s, d), self.expr(&s, d))
                }
                4 => {
                    let s = self.nat_sort();
                    expr::lt(self.expr(&s, d), self.expr(&s, d))
                }
                _ => {
                    let s = self.nat_sort();
                    expr::le(self.expr(&s, d), self.expr(&s, d))
                }
            },
            Sort::Nat(_) => {
                if self.rng.gen_bool(0.5) {
                    expr::add_mod(self.expr(sort, d), self.expr(sort, d))
                } else {
                    expr::sub_guarded(self.expr(sort, d), self.expr(sort, d))
                }
            }
            Sort::Record(_) => {
                if self.rng.gen_bool(0.5) {
                    let base = self.expr(sort, d);
                    Expr::Update(Box::new(base), vec![("x".into(), self.expr(&Sort::Nat(2), d))])
                } else {
                    let color = self.model.sorts["color"].clone();
                    Expr::Make(
                        "pt".into(),
                        vec![
                            ("x".into(), self.expr(&Sort::Nat(2), d)),
                            ("c".into(), self.expr(&color, d)),
                            ("f".into(), self.expr(&Sort::Bool, d)),
                        ],
                    )
                }
            }
            _ => self.leaf(sort),
        }
    }

    /// A random query: up to three variables, a boolean hypothesis and a
    /// term that is a scalar, a record or a two-component tuple.
    pub fn query(&mut self, depth: u32) -> Query {
        let sorts = self.sorts();
        let n = self.rng.gen_range(1..=3);
        self.scope = (0..n).map(|i| (format!("v{i}"), sorts.choose(self.rng).unwrap().clone())).collect();
        let hyp = self.expr(&Sort::Bool, depth);
        let trm = if self.rng.gen_bool(0.2) {
            let a = sorts.choose(self.rng).unwrap().clone();
            let b = sorts.choose(self.rng).unwrap().clone();
            expr::tuple([("a", self.expr(&a, depth)), ("b", self.expr(&b, depth))])
        } else {
            let s = sorts.choose(self.rng).unwrap().clone();
            self.expr(&s, depth)
        };
        let th = self.model.check(&self.scope, &hyp, Some(&Sort::Bool)).unwrap();
        let tt = self.model.check(&self.scope, &trm, None).unwrap();
        Query::new(self.scope.clone(), th, tt)
    }
}

/// Every environment over `vars`, in canonical order.
pub fn envs(vars: &[(String, Sort)]) -> Vec<Vec<Value>> {
    let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
    for (_, s) in vars {
        let vs = all_values(s);
        acc = acc
            .into_iter()
            .flat_map(|p| {
                vs.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    acc
}

/// The value set of a query by brute-force evaluation.
pub fn brute_values(q: &Query) -> BTreeSet<Value> {
    envs(&q.vars)
        .into_iter()
        .filter(|env| q.fixed.iter().zip(env).all(|(f, v)| f.as_ref().map_or(true, |f| f == v)))
        .filter(|env| eval(&q.hyp, env) == Value::Bool(true))
        .map(|env| eval(&q.trm, &env))
        .collect()
}

/// The shipped model with the loc 14 decrement of `runs` removed.
pub fn runs_mutant_source() -> String {
    let from = "(14 (set a :loc 15 :runs (1- a.runs)))";
    assert!(wfgraph::BAKERY_SOURCE.contains(from));
    wfgraph::BAKERY_SOURCE.replace(from, "(14 (set a :loc 15))")
}

/// The shipped model with no blocking measures.
pub fn nlock_mutant_source() -> String {
    let from = "(measures bake-nlock-ord ((a bake-tr))\n  (pos a.pos)\n  (ndx a.ndx))";
    assert!(wfgraph::BAKERY_SOURCE.contains(from));
    wfgraph::BAKERY_SOURCE.replace(from, "(measures bake-nlock-ord ((a bake-tr)))")
}

/// Checks that `c` is a closed walk of `g` with the graph's tags along which
/// no measure both never increases and decreases somewhere.
pub fn assert_cycle_invariant(g: &TaggedGraph, c: &wfgraph::synth::Cycle) {
    assert!(c.len() >= 1);
    assert_eq!(c.nodes.len(), c.len() + 1);
    assert_eq!(c.nodes.first(), c.nodes.last());
    assert_eq!(c.measures, g.measures);
    for (w, t) in c.nodes.windows(2).zip(&c.tags) {
        assert_eq!(g.tags.get(&(w[0], w[1])), Some(t), "walk leaves the graph at {} -> {}", w[0], w[1]);
    }
    for m in 0..g.measures.len() {
        let inc = c.tags.iter().any(|t| t[m] == wfgraph::absgraph::OrderTag::MayInc);
        let dec = c.tags.iter().any(|t| t[m] == wfgraph::absgraph::OrderTag::StrictDec);
        assert!(inc || !dec, "{} decreases along the cycle", g.measures[m]);
    }
}
