mod common;

use std::collections::{BTreeSet, VecDeque};
use std::sync::OnceLock;

use proptest::prelude::*;

use wfgraph::bakery::*;
use wfgraph::enumerate::Backend;
use wfgraph::model::{eval, Model, Value};
use wfgraph::ordinals::{bnll_lt, o_lt};
use wfgraph::Error;

fn states(p: &Params) -> impl Iterator<Item = BakeTr> + '_ {
    let v = 1u64 << p.w;
    (0..=17u64).flat_map(move |loc| {
        (0..v * v * 4 * (p.n + 1) * (p.r + 1) * 2 * p.n).map(move |mut k| {
            let mut take = |m: u64| {
                let d = k % m;
                k /= m;
                d
            };
            BakeTr {
                loc,
                temp: take(v),
                pos: take(v),
                choosing: take(2) == 1,
                pos_valid: take(2) == 1,
                loop_: take(p.n + 1),
                runs: take(p.r + 1),
                done: take(2) == 1,
                ndx: 1 + take(p.n),
            }
        })
    })
}

fn call(m: &Model, name: &str, args: &[Value]) -> Value {
    eval(&m.def(name).unwrap().body, args)
}

#[test]
fn native_functions_match_the_model() {
    let p = Params { n: 2, r: 2, w: 2 };
    let m = common::bakery_at(2, 2, 2);
    let all: Vec<BakeTr> = states(&p)
        .filter(|a| call(&m, "bake-tr-valid", &[a.to_value()]) == Value::Bool(true))
        .collect();
    assert!(all.len() > 1000);
    for a in &all {
        assert_eq!(BakeTr::from_value(&a.to_value()), Some(*a));
        assert_eq!(call(&m, "bake-tr-done", &[a.to_value()]), Value::Bool(a.done));
        for max in 0..4 {
            let sh = BakeSh { max };
            let want = BakeTr::from_value(&call(&m, "bake-tr-next", &[a.to_value(), sh.to_value()])).unwrap();
            assert_eq!(bake_tr_next(&p, a, &sh), want, "{a:?} {sh:?}");
            assert_eq!(bake_sh_next(&sh, a).to_value(), call(&m, "bake-sh-next", &[sh.to_value(), a.to_value()]));
        }
    }
    // blok over a spread of pairs
    for a in all.iter().step_by(31) {
        for b in all.iter().step_by(29) {
            assert_eq!(
                Value::Bool(bake_tr_blok(a, b)),
                call(&m, "bake-tr-blok", &[a.to_value(), b.to_value()]),
                "{a:?} {b:?}"
            );
        }
    }
}

#[test]
fn blocking_basics() {
    let a = BakeTr { loc: 9, pos: 2, pos_valid: true, loop_: 1, ndx: 1, ..BakeTr::default() };
    assert!(!bake_tr_blok(&a, &a));
    let b = BakeTr { loc: 17, done: true, pos: 1, pos_valid: true, ndx: 2, ..BakeTr::default() };
    let a2 = BakeTr { loop_: 2, ..a };
    assert!(bake_tr_blok(&a2, &b), "the native relation itself says nothing about done");
    // done processes are never reached with a valid ticket
    let m = common::bakery_at(2, 2, 2);
    assert_eq!(call(&m, "bake-nlock-inv", &[b.to_value()]), Value::Bool(false));
    let c = BakeTr { pos: 1, ..b };
    let l = [a2, BakeTr { pos_valid: true, ..c }];
    assert_eq!(pick_blok(&a2, &l).unwrap(), 1);
    assert!(matches!(pick_blok(&a, &[a]), Err(Error::Precondition(_))));
    assert_eq!(find_undone(&[b, a]), Some(1));
    assert_eq!(find_undone(&[b]), None);
    assert!(bake_all_done(&[b]));
    assert!(bake_all_done(&[]));
}

fn bakery(n: u64, r: u64, w: u32) -> Bakery {
    Bakery::new(Params { n, r, w }, &Backend::Exhaustive).unwrap()
}

/// Every configuration reachable under any interleaving of ready processes.
fn reachable(b: &Bakery) -> Vec<BakeSt> {
    let start = b.init_state();
    let mut seen = BTreeSet::from([(start.trs.clone(), start.sh.max)]);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(st) = queue.pop_front() {
        for i in 0..st.trs.len() {
            let a = st.trs[i];
            if a.done || bake_blok(&a, &st.trs) {
                continue;
            }
            let mut nx = st.clone();
            nx.trs[i] = bake_tr_next(&b.params, &a, &st.sh);
            nx.sh = bake_sh_next(&st.sh, &a);
            if seen.insert((nx.trs.clone(), nx.sh.max)) {
                queue.push_back(nx);
            }
        }
        out.push(st);
    }
    out
}

#[test]
fn find_unblok_postcondition_on_reachable_configurations() {
    let b = bakery(2, 2, 2);
    let all = reachable(&b);
    assert!(all.len() > 500, "{}", all.len());
    let mut calls = 0;
    for st in &all {
        let inv = |a: &BakeTr| call(&b.model, "bake-nlock-inv", &[a.to_value()]) == Value::Bool(true);
        assert!(st.trs.iter().all(inv));
        for n in 0..st.trs.len() {
            if st.trs[n].done {
                assert!(b.find_unblok(n, &st.trs).is_err());
                continue;
            }
            let k = b.find_unblok(n, &st.trs).unwrap();
            assert!(!st.trs[k].done && !bake_blok(&st.trs[k], &st.trs));
            calls += 1;
        }
        if !bake_all_done(&st.trs) {
            let i = b.choose_ready(&st.trs, &mut ReferenceOracle).unwrap();
            assert!(!st.trs[i].done && !bake_blok(&st.trs[i], &st.trs));
        }
    }
    assert!(calls > all.len());
    // the all-done configuration is reachable
    assert!(all.iter().any(|st| bake_all_done(&st.trs)));
}

#[test]
fn every_interleaving_step_lowers_the_measure() {
    let b = bakery(2, 1, 2);
    for st in reachable(&b) {
        let before = b.rank_bnll(&st.trs).unwrap();
        for i in 0..st.trs.len() {
            let a = st.trs[i];
            if a.done || bake_blok(&a, &st.trs) {
                continue;
            }
            let mut l = st.trs.clone();
            l[i] = bake_tr_next(&b.params, &a, &st.sh);
            let after = b.rank_bnll(&l).unwrap();
            assert!(bnll_lt(&after, &before).unwrap());
            assert!(o_lt(&b.measure(&l).unwrap(), &b.measure(&st.trs).unwrap()));
        }
    }
}

#[test]
fn three_process_blocking_chain() {
    let b = bakery(3, 1, 3);
    // 1 waits on 2 at loc 9, 2 waits on 3 at loc 9, 3 is in its critical section
    let t = |ndx, loc, pos, loop_| BakeTr { ndx, loc, pos, pos_valid: true, loop_, runs: 1, ..BakeTr::default() };
    let l = [t(1, 9, 3, 2), t(2, 9, 2, 3), t(3, 13, 1, 0)];
    assert!(bake_blok(&l[0], &l) && bake_blok(&l[1], &l) && !bake_blok(&l[2], &l));
    assert_eq!(b.find_unblok(0, &l).unwrap(), 2);
    assert_eq!(b.find_unblok(1, &l).unwrap(), 2);
    assert_eq!(b.choose_ready(&l, &mut ReferenceOracle).unwrap(), 2);
    assert!(o_lt(&b.nlock.msr(&l[1]).unwrap(), &b.nlock.msr(&l[0]).unwrap()));
    assert!(o_lt(&b.nlock.msr(&l[2]).unwrap(), &b.nlock.msr(&l[1]).unwrap()));
}

#[test]
fn choose_ready_rejects_bad_oracles_and_finished_lists() {
    struct Stubborn;
    impl Oracle for Stubborn {
        fn pick(&mut self, _: &[usize], _: usize) -> usize {
            7
        }
    }
    let b = bakery(2, 1, 3);
    let st = b.init_state();
    assert!(matches!(b.choose_ready(&st.trs, &mut Stubborn), Err(Error::Precondition(_))));
    let done = [BakeTr { loc: 17, done: true, ndx: 1, ..BakeTr::default() }];
    assert!(b.choose_ready(&done, &mut ReferenceOracle).is_err());
}

#[test]
fn single_process_run() {
    let b = bakery(1, 1, 1);
    let rep = b.bake_run(&b.init_state(), &mut ReferenceOracle).unwrap();
    assert!(bake_all_done(&rep.final_state.trs));
    // 0..=16 once, with one extra 3 -> 4 -> 5 lap per loop value
    assert_eq!(rep.steps.first().unwrap().loc_before, 0);
    assert_eq!(rep.steps.last().unwrap().loc_after, 17);
    assert_eq!(rep.unblok_calls, rep.steps.len());
    let lines = rep.trace();
    assert!(lines.starts_with(&format!("init {}\n1 ndx 1 loc 0 -> 1 msr ", rep.initial_measure)));
}

#[test]
fn all_done_run_is_unchanged() {
    let b = bakery(2, 1, 3);
    let st = BakeSt {
        trs: (1..=2).map(|ndx| BakeTr { loc: 17, done: true, ndx, ..BakeTr::default() }).collect(),
        sh: BakeSh::default(),
    };
    let rep = b.bake_run(&st, &mut RandomOracle::seeded(3)).unwrap();
    assert_eq!(rep.final_state, st);
    assert!(rep.steps.is_empty());
}

#[test]
fn seeded_runs_terminate_with_decreasing_measure() {
    let models: Vec<Bakery> = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2)]
        .iter()
        .map(|&(n, r)| bakery(n, r, 3))
        .collect();
    for seed in 0..100u64 {
        let b = &models[seed as usize % models.len()];
        let rep = b.bake_run(&b.init_state(), &mut RandomOracle::seeded(seed)).unwrap();
        assert!(bake_all_done(&rep.final_state.trs), "seed {seed}");
        let mut prev = rep.initial_measure.clone();
        for s in &rep.steps {
            assert!(o_lt(&s.measure, &prev));
            prev = s.measure.clone();
        }
        let n = b.params.n as usize;
        assert!(rep.steps.len() >= n * (15 * b.params.r as usize + 2));
        assert_eq!(rep.unblok_calls, rep.steps.len());
        let again = b.bake_run(&b.init_state(), &mut RandomOracle::seeded(seed)).unwrap();
        assert_eq!(again.trace(), rep.trace());
    }
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(Bakery::new(Params { n: 0, r: 1, w: 1 }, &Backend::Exhaustive).is_err());
    assert!(Bakery::new(Params { n: 1, r: 1, w: 0 }, &Backend::Exhaustive).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any oracle choice among ready processes keeps the run well founded.
    #[test]
    fn arbitrary_schedules_terminate(picks in proptest::collection::vec(0usize..3, 0..400)) {
        struct Scripted(Vec<usize>, usize);
        impl Oracle for Scripted {
            fn pick(&mut self, valid: &[usize], _: usize) -> usize {
                let k = self.0.get(self.1).copied().unwrap_or(0);
                self.1 += 1;
                valid[k % valid.len()]
            }
        }
        static B: OnceLock<Bakery> = OnceLock::new();
        let b = B.get_or_init(|| bakery(3, 1, 2));
        let rep = b.bake_run(&b.init_state(), &mut Scripted(picks, 0)).unwrap();
        prop_assert!(bake_all_done(&rep.final_state.trs));
    }
}
