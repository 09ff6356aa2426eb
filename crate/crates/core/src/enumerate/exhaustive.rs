//! Reference backend: depth-first search over scalar leaves with
//! three-valued pruning.
//!
//! Before searching, conjuncts of the form `leaf = e` define the leaf and are
//! substituted away, and conjuncts over a single leaf shrink its domain. The
//! leaves read by the term are enumerated in full; the remaining leaves are
//! only searched for one witness per new term value.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::value::Value;
use crate::scalar::{Compiled, Id, Node};

/// Largest scalar domain the search will enumerate.
pub const MAX_DOMAIN: u64 = 1 << 16;

pub(crate) struct Search<'a> {
    c: &'a Compiled,
    dag: crate::scalar::Dag,
    hyp: Id,
    trm: Vec<Id>,
    /// Substitutions in the order they were made.
    defined: Vec<(u32, Id)>,
    domains: Vec<Vec<u64>>,
    phase1: Vec<u32>,
    phase2: Vec<u32>,
    cone: Vec<Id>,
    trm_cone: Vec<Id>,
}

fn defining(dag: &crate::scalar::Dag, conj: Id) -> Option<(u32, Id)> {
    let leaf_of = |x: Id| match dag.node(x) {
        Node::Leaf(l) => Some(*l),
        _ => None,
    };
    match dag.node(conj) {
        Node::Leaf(l) => Some((*l, Id::MAX)),
        Node::Not(x) => leaf_of(*x).map(|l| (l, Id::MAX - 1)),
        Node::Eq(a, b) => {
            for (x, e) in [(*a, *b), (*b, *a)] {
                if let Some(l) = leaf_of(x) {
                    if !dag.support(&[e]).contains(&l) {
                        return Some((l, e));
                    }
                }
            }
            None
        }
        _ => None,
    }
}

impl<'a> Search<'a> {
    pub(crate) fn new(c: &'a Compiled) -> Result<Search<'a>> {
        let mut dag = c.dag.clone();
        let mut hyp = c.hyp;
        let mut trm = c.trm.clone();
        let mut defined = Vec::new();
        loop {
            let found = dag.conjuncts(hyp).into_iter().find_map(|x| defining(&dag, x));
            let Some((l, mut e)) = found else { break };
            if e == Id::MAX {
                e = dag.tru();
            } else if e == Id::MAX - 1 {
                e = dag.fals();
            }
            let mut roots = trm.clone();
            roots.push(hyp);
            let new = dag.substitute(&roots, l, e);
            hyp = *new.last().unwrap();
            trm = new[..new.len() - 1].to_vec();
            defined.push((l, e));
        }
        let mut domains: Vec<Vec<u64>> = vec![Vec::new(); c.leaves.len()];
        let mut roots = trm.clone();
        roots.push(hyp);
        let support = dag.support(&roots);
        let conj = dag.conjuncts(hyp);
        let mut val = Vec::new();
        for &l in &support {
            let info = &c.leaves[l as usize];
            let size = info
                .sort
                .scalar_size()
                .filter(|n| *n <= MAX_DOMAIN)
                .ok_or_else(|| Error::ScopeTooLarge(format!("leaf `{}` of sort {}", info.name, info.sort)))?;
            let unary: Vec<Id> = conj
                .iter()
                .copied()
                .filter(|x| dag.support(&[*x]) == [l])
                .collect();
            let cone = dag.cone(&unary);
            let mut leaves = vec![0u64; c.leaves.len()];
            domains[l as usize] = (0..size)
                .filter(|&v| {
                    leaves[l as usize] = v;
                    dag.eval_cone(&cone, &leaves, &mut val);
                    unary.iter().all(|u| val[*u as usize] != 0)
                })
                .collect();
        }
        let trm_support = dag.support(&trm);
        let phase1 = trm_support.clone();
        let phase2 = support.into_iter().filter(|l| !trm_support.contains(l)).collect();
        let cone = dag.cone(&roots);
        let trm_cone = dag.cone(&trm);
        Ok(Search {
            c,
            dag,
            hyp,
            trm,
            defined,
            domains,
            phase1,
            phase2,
            cone,
            trm_cone,
        })
    }

    fn hyp_state(&self, asg: &[Option<u64>], val: &mut Vec<Option<u64>>) -> Option<u64> {
        self.dag.partial_cone(&self.cone, asg, val);
        val[self.hyp as usize]
    }

    /// Searches the phase-2 leaves from position `k` for a completion that
    /// makes the hypothesis true.
    fn exists(&self, k: usize, asg: &mut Vec<Option<u64>>, val: &mut Vec<Option<u64>>) -> bool {
        match self.hyp_state(asg, val) {
            Some(0) => return false,
            Some(_) => return true,
            None => {}
        }
        let Some(&l) = self.phase2.get(k) else {
            return false;
        };
        for &v in &self.domains[l as usize] {
            asg[l as usize] = Some(v);
            if self.exists(k + 1, asg, val) {
                return true;
            }
        }
        asg[l as usize] = None;
        false
    }

    /// Visits every value of the term, calling `found` with the value and a
    /// witnessing assignment; stops when `found` returns false.
    fn walk(
        &self,
        k: usize,
        asg: &mut Vec<Option<u64>>,
        val: &mut Vec<Option<u64>>,
        seen: &mut BTreeSet<Value>,
        found: &mut dyn FnMut(&Value, &[Option<u64>]) -> bool,
    ) -> bool {
        if self.hyp_state(asg, val) == Some(0) {
            return true;
        }
        if let Some(&l) = self.phase1.get(k) {
            for &v in &self.domains[l as usize] {
                asg[l as usize] = Some(v);
                if !self.walk(k + 1, asg, val, seen, found) {
                    return false;
                }
            }
            asg[l as usize] = None;
            return true;
        }
        let mut tval = Vec::new();
        let full: Vec<u64> = asg.iter().map(|x| x.unwrap_or(0)).collect();
        let mut nv = Vec::new();
        self.dag.eval_cone(&self.trm_cone, &full, &mut nv);
        tval.extend(self.trm.iter().map(|&i| nv[i as usize]));
        let value = crate::scalar::unflatten(&self.c.trm_sort, &mut tval.into_iter());
        if seen.contains(&value) {
            return true;
        }
        let saved = asg.clone();
        let ok = self.exists(0, asg, val);
        let keep_going = if ok {
            seen.insert(value.clone());
            found(&value, asg)
        } else {
            true
        };
        *asg = saved;
        keep_going
    }

    /// Completes a satisfying partial assignment into full leaf values.
    fn complete(&self, asg: &[Option<u64>]) -> Vec<u64> {
        let mut leaves: Vec<u64> = asg
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.unwrap_or_else(|| self.domains[i].first().copied().unwrap_or(0))
            })
            .collect();
        // Undefined enum leaves default to code 0, which is always in range.
        let mut val = Vec::new();
        for &(l, e) in self.defined.iter().rev() {
            let cone = self.dag.cone(&[e]);
            self.dag.eval_cone(&cone, &leaves, &mut val);
            leaves[l as usize] = val[e as usize];
        }
        leaves
    }

    pub(crate) fn values(&self) -> BTreeSet<Value> {
        let mut seen = BTreeSet::new();
        let mut asg = vec![None; self.c.leaves.len()];
        let mut val = Vec::new();
        self.walk(0, &mut asg, &mut val, &mut seen, &mut |_, _| true);
        seen
    }

    /// The first witness found, as full leaf values.
    pub(crate) fn witness(&self) -> Option<Vec<u64>> {
        let mut seen = BTreeSet::new();
        let mut asg = vec![None; self.c.leaves.len()];
        let mut val = Vec::new();
        let mut out = None;
        self.walk(0, &mut asg, &mut val, &mut seen, &mut |_, a| {
            out = Some(self.complete(a));
            false
        });
        out
    }
}
