//! Native Bakery processes, the scheduler functions and the `bake-run`
//! harness with its measure monitor.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::certify::{family_widths, Abstraction};
use crate::enumerate::Backend;
use crate::error::{Error, Result};
use crate::model::value::Value;
use crate::model::{parse_model, MapDecl, Model};
use crate::ordinals::{bnl_bnd, bnl_lt, bnll_lt, bnll_to_o, o_lt, Bnl, Bnll, Ordinal};
use crate::pipeline::tagged_graph;
use crate::synth::{synthesize_omap, Omap};

/// Last program location; a process there is done.
pub const DONE_LOC: u64 = 17;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BakeTr {
    pub loc: u64,
    pub choosing: bool,
    pub temp: u64,
    pub pos: u64,
    pub pos_valid: bool,
    pub loop_: u64,
    pub runs: u64,
    pub done: bool,
    pub ndx: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BakeSh {
    pub max: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BakeSt {
    pub trs: Vec<BakeTr>,
    pub sh: BakeSh,
}

/// Parameters of one instance: process count, runs, counter width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Params {
    pub n: u64,
    pub r: u64,
    pub w: u32,
}

impl Params {
    fn mask(&self) -> u64 {
        (1u64 << self.w) - 1
    }

    pub fn overrides(&self) -> BTreeMap<String, u64> {
        BTreeMap::from([
            ("N".to_string(), self.n),
            ("R".to_string(), self.r),
            ("W".to_string(), self.w as u64),
        ])
    }
}

impl BakeTr {
    pub fn init(ndx: u64, runs: u64) -> BakeTr {
        BakeTr {
            ndx,
            runs,
            ..BakeTr::default()
        }
    }

    pub fn to_value(&self) -> Value {
        Value::Record(vec![
            Value::Nat(self.loc),
            Value::Bool(self.choosing),
            Value::Nat(self.temp),
            Value::Nat(self.pos),
            Value::Bool(self.pos_valid),
            Value::Nat(self.loop_),
            Value::Nat(self.runs),
            Value::Bool(self.done),
            Value::Nat(self.ndx),
        ])
    }

    pub fn from_value(v: &Value) -> Option<BakeTr> {
        let Value::Record(f) = v else { return None };
        if f.len() != 9 {
            return None;
        }
        Some(BakeTr {
            loc: f[0].as_nat()?,
            choosing: f[1].as_bool()?,
            temp: f[2].as_nat()?,
            pos: f[3].as_nat()?,
            pos_valid: f[4].as_bool()?,
            loop_: f[5].as_nat()?,
            runs: f[6].as_nat()?,
            done: f[7].as_bool()?,
            ndx: f[8].as_nat()?,
        })
    }
}

impl BakeSh {
    pub fn to_value(&self) -> Value {
        Value::Record(vec![Value::Nat(self.max)])
    }
}

pub fn bake_tr_next(p: &Params, a: &BakeTr, sh: &BakeSh) -> BakeTr {
    let mut b = *a;
    match a.loc {
        0 => {
            b.loc = 1;
            b.choosing = true;
        }
        1 => {
            b.loc = 2;
            b.temp = sh.max;
        }
        2 => {
            b.loc = 3;
            b.pos = (a.temp + 1) & p.mask();
            b.loop_ = p.n;
        }
        3 => b.loc = 4,
        4 => {
            b.loc = 5;
            b.loop_ = a.loop_.saturating_sub(1);
        }
        5 => {
            b.loc = if a.loop_ == 0 { 6 } else { 3 };
            b.pos_valid = a.loop_ == 0;
        }
        6 => b.loc = 7,
        7 => {
            b.loc = 8;
            b.choosing = false;
            b.loop_ = p.n;
        }
        8 => b.loc = 9,
        9 => b.loc = 10,
        10 => b.loc = 11,
        11 => {
            b.loc = 12;
            b.loop_ = a.loop_.saturating_sub(1);
        }
        12 => b.loc = if a.loop_ == 0 { 13 } else { 8 },
        13 => {
            b.loc = 14;
            b.pos_valid = false;
        }
        14 => {
            b.loc = 15;
            b.runs = a.runs.saturating_sub(1);
        }
        15 => b.loc = if a.runs == 0 { 16 } else { 0 },
        _ => {
            b.loc = DONE_LOC;
            b.done = true;
        }
    }
    b
}

pub fn bake_sh_next(sh: &BakeSh, a: &BakeTr) -> BakeSh {
    if a.loc == 6 && sh.max <= a.temp {
        BakeSh { max: a.pos }
    } else {
        *sh
    }
}

/// Does `b` block `a`?
pub fn bake_tr_blok(a: &BakeTr, b: &BakeTr) -> bool {
    a.loop_ == b.ndx
        && match a.loc {
            3 => a.pos == 0 && b.pos_valid,
            8 => b.pos != 0 && b.choosing,
            9 => b.pos_valid && b.pos < a.pos,
            10 => b.pos_valid && b.pos == a.pos && b.ndx < a.ndx,
            _ => false,
        }
}

pub fn bake_blok(a: &BakeTr, l: &[BakeTr]) -> bool {
    l.iter().any(|b| bake_tr_blok(a, b))
}

/// Smallest index of a state blocking `a`.
pub fn pick_blok(a: &BakeTr, l: &[BakeTr]) -> Result<usize> {
    l.iter()
        .position(|b| bake_tr_blok(a, b))
        .ok_or_else(|| Error::Precondition("pick-blok on an unblocked state".into()))
}

/// Smallest index of a state that is not done.
pub fn find_undone(l: &[BakeTr]) -> Option<usize> {
    l.iter().position(|a| !a.done)
}

pub fn bake_all_done(l: &[BakeTr]) -> bool {
    l.iter().all(|a| a.done)
}

/// Chooses the next process to step among the valid (live, unblocked)
/// indices; `reference` is always among them.
pub trait Oracle {
    fn pick(&mut self, valid: &[usize], reference: usize) -> usize;
}

/// Always takes the reference witness.
pub struct ReferenceOracle;

impl Oracle for ReferenceOracle {
    fn pick(&mut self, _valid: &[usize], reference: usize) -> usize {
        reference
    }
}

/// Uniform choice among the valid indices.
pub struct RandomOracle(pub StdRng);

impl RandomOracle {
    pub fn seeded(seed: u64) -> RandomOracle {
        RandomOracle(StdRng::seed_from_u64(seed))
    }
}

impl Oracle for RandomOracle {
    fn pick(&mut self, valid: &[usize], _reference: usize) -> usize {
        *valid.choose(&mut self.0).expect("non-empty choice")
    }
}

/// A map, its synthesized omap and the bnl bound.
#[derive(Clone, Debug)]
pub struct Measured {
    pub map: MapDecl,
    pub omap: Omap,
    pub bound: usize,
}

impl Measured {
    pub fn new(model: &Model, map: &str, backend: &Backend) -> Result<Measured> {
        let g = tagged_graph(model, map, crate::absgraph::DEFAULT_NUM, backend)?;
        let omap = synthesize_omap(&g).map_err(|c| Error::Monitor(c.report(&g)))?;
        let map = model.map(map)?.clone();
        let bound = bnl_bnd(&omap, &family_widths(&map.ord))?;
        Ok(Measured { map, omap, bound })
    }

    pub fn mk_bnl(&self, a: &BakeTr) -> Result<Bnl> {
        Abstraction { map: &self.map }.mk_bnl(&a.to_value(), &self.omap, self.bound)
    }

    pub fn msr(&self, a: &BakeTr) -> Result<Ordinal> {
        Abstraction { map: &self.map }.msr(&a.to_value(), &self.omap, self.bound)
    }
}

/// A Bakery instance with the measures its scheduler and run loop rely on.
pub struct Bakery {
    pub params: Params,
    pub model: Model,
    pub rank: Measured,
    pub nlock: Measured,
}

/// One loop iteration of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub ndx: u64,
    pub loc_before: u64,
    pub loc_after: u64,
    pub measure: Ordinal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub final_state: BakeSt,
    pub initial_measure: Ordinal,
    pub steps: Vec<Step>,
    /// Calls made to `find-unblok`, all of which met the postcondition.
    pub unblok_calls: usize,
}

impl RunReport {
    /// One line per step: step number, chosen ndx, locs and measure.
    pub fn trace(&self) -> String {
        let mut s = format!("init {}\n", self.initial_measure);
        for (i, st) in self.steps.iter().enumerate() {
            let _ = writeln!(
                s,
                "{} ndx {} loc {} -> {} msr {}",
                i + 1,
                st.ndx,
                st.loc_before,
                st.loc_after,
                st.measure
            );
        }
        s
    }
}

impl Bakery {
    pub fn new(params: Params, backend: &Backend) -> Result<Bakery> {
        if params.n < 1 || params.r < 1 || params.w < 1 {
            return Err(Error::Precondition("N, R and W must be at least 1".into()));
        }
        let model = parse_model(crate::BAKERY_SOURCE)?.with_params(&params.overrides())?;
        Ok(Bakery {
            rank: Measured::new(&model, "rank", backend)?,
            nlock: Measured::new(&model, "nlock", backend)?,
            params,
            model,
        })
    }

    pub fn init_state(&self) -> BakeSt {
        BakeSt {
            trs: (1..=self.params.n).map(|i| BakeTr::init(i, self.params.r)).collect(),
            sh: BakeSh::default(),
        }
    }

    /// Follows blockers from `n`, checking that the blocking measure drops on
    /// every hop. The result is neither done nor blocked.
    pub fn find_unblok(&self, n: usize, l: &[BakeTr]) -> Result<usize> {
        if l[n].done {
            return Err(Error::Precondition(format!("find-unblok from done index {n}")));
        }
        let mut cur = n;
        let mut m = self.nlock.msr(&l[cur])?;
        while bake_blok(&l[cur], l) {
            let next = pick_blok(&l[cur], l)?;
            let mn = self.nlock.msr(&l[next])?;
            if !o_lt(&mn, &m) {
                return Err(Error::Monitor(format!("blocking measure did not drop: {m} then {mn}")));
            }
            cur = next;
            m = mn;
        }
        if l[cur].done {
            return Err(Error::Monitor(format!("find-unblok returned done index {cur}")));
        }
        Ok(cur)
    }

    pub fn choose_ready(&self, l: &[BakeTr], oracle: &mut dyn Oracle) -> Result<usize> {
        let start = find_undone(l).ok_or_else(|| Error::Precondition("choose-ready with every process done".into()))?;
        let reference = self.find_unblok(start, l)?;
        let valid: Vec<usize> = (0..l.len()).filter(|&i| !l[i].done && !bake_blok(&l[i], l)).collect();
        debug_assert!(valid.contains(&reference));
        let i = oracle.pick(&valid, reference);
        if !valid.contains(&i) {
            return Err(Error::Precondition(format!("oracle chose index {i}, not ready")));
        }
        Ok(i)
    }

    pub fn rank_bnll(&self, l: &[BakeTr]) -> Result<Bnll> {
        Bnll::new(self.rank.bound, l.iter().map(|a| self.rank.mk_bnl(a)).collect::<Result<_>>()?)
    }

    pub fn measure(&self, l: &[BakeTr]) -> Result<Ordinal> {
        bnll_to_o(l.len(), &self.rank_bnll(l)?)
    }

    /// Steps chosen processes until all are done. Every iteration must lower
    /// the bnll of the process list and its ordinal.
    pub fn bake_run(&self, st: &BakeSt, oracle: &mut dyn Oracle) -> Result<RunReport> {
        let mut st = st.clone();
        let mut bl = self.rank_bnll(&st.trs)?;
        let mut o = bnll_to_o(st.trs.len(), &bl)?;
        let initial_measure = o.clone();
        let mut steps = Vec::new();
        let mut unblok_calls = 0;
        while !bake_all_done(&st.trs) {
            let i = self.choose_ready(&st.trs, oracle)?;
            unblok_calls += 1;
            let a = st.trs[i];
            let b = bake_tr_next(&self.params, &a, &st.sh);
            st.sh = bake_sh_next(&st.sh, &a);
            st.trs[i] = b;
            let nb = self.rank_bnll(&st.trs)?;
            let no = bnll_to_o(st.trs.len(), &nb)?;
            if !bnll_lt(&nb, &bl)? || !bnl_lt(&nb.items[i], &bl.items[i])? || !o_lt(&no, &o) {
                return Err(Error::Monitor(format!(
                    "step {} (ndx {}, loc {} -> {}): {bl} then {nb}",
                    steps.len() + 1,
                    a.ndx,
                    a.loc,
                    b.loc
                )));
            }
            steps.push(Step {
                ndx: a.ndx,
                loc_before: a.loc,
                loc_after: b.loc,
                measure: no.clone(),
            });
            bl = nb;
            o = no;
        }
        Ok(RunReport {
            final_state: st,
            initial_measure,
            steps,
            unblok_calls,
        })
    }
}
