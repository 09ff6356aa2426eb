mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use common::{bakery_at, tagged};
use wfgraph::bakery::{bake_tr_next, BakeSh, BakeTr, Params};
use wfgraph::certify::{family_widths, Abstraction};
use wfgraph::ordinals::*;
use wfgraph::synth::{synthesize_omap, Descriptor, Omap};
use wfgraph::Error;

/// Every list of `len` entries below `base`.
fn lists(len: usize, base: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..base).map(move |d| {
                    let mut q = p.clone();
                    q.push(d);
                    q
                })
            })
            .collect();
    }
    out
}

/// Coefficient vector indexed by exponent, highest first; compares like
/// the ordinal it spells.
fn spelled(o: &Ordinal, top: u64) -> Vec<u64> {
    let mut v = vec![0; top as usize + 1];
    for &(e, c) in &o.0 {
        v[(top - e) as usize] = c;
    }
    v
}

#[test]
fn bnl_embedding_is_exhaustive_up_to_bound_three() {
    for bound in 0..=3 {
        let all = lists(bound, 4);
        let mut pairs = 0;
        for a in &all {
            for b in &all {
                let (x, y) = (Bnl(a.clone()), Bnl(b.clone()));
                let (ox, oy) = (bnl_to_o(&x), bnl_to_o(&y));
                assert!(o_p(&ox));
                assert_eq!(bnl_lt(&x, &y).unwrap(), o_lt(&ox, &oy), "{x} vs {y}");
                assert_eq!(bnl_le(&x, &y).unwrap(), !o_lt(&oy, &ox), "{x} vs {y}");
                pairs += 1;
            }
        }
        assert_eq!(pairs, 1usize << (4 * bound));
    }
}

#[test]
fn bnll_embedding_for_equal_lengths() {
    for bound in 1..=2 {
        let bnls: Vec<Bnl> = lists(bound, 3).into_iter().map(Bnl).collect();
        for len in 0..=2 {
            let all: Vec<Bnll> = lists(len, bnls.len() as u64)
                .into_iter()
                .map(|ix| Bnll::new(bound, ix.iter().map(|&i| bnls[i as usize].clone()).collect()).unwrap())
                .collect();
            for a in &all {
                for b in &all {
                    let (oa, ob) = (bnll_to_o(len, a).unwrap(), bnll_to_o(len, b).unwrap());
                    assert_eq!(bnll_lt(a, b).unwrap(), o_lt(&oa, &ob), "{a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn bnll_lengths_dominate() {
    let l = |v: &[&[u64]]| Bnll::new(2, v.iter().map(|b| Bnl(b.to_vec())).collect()).unwrap();
    assert!(bnll_lt(&l(&[]), &l(&[&[0, 0]])).unwrap());
    assert!(bnll_lt(&l(&[&[1, 0], &[0, 9]]), &l(&[&[1, 0], &[1, 0]])).unwrap());
    assert!(bnll_lt(&l(&[&[5, 5]]), &l(&[&[0, 0], &[0, 0]])).unwrap());
    assert!(!bnll_lt(&l(&[&[0, 0], &[0, 0]]), &l(&[&[5, 5]])).unwrap());
    assert!(matches!(
        bnll_lt(&l(&[]), &Bnll::new(3, vec![]).unwrap()),
        Err(Error::BoundMismatch(2, 3))
    ));
    assert_eq!(
        bnll_to_o(2, &l(&[&[1, 0], &[0, 2]])).unwrap(),
        Ordinal(vec![(3, 1), (0, 2)])
    );
    assert!(matches!(bnll_to_o(3, &l(&[&[1, 0]])), Err(Error::LengthMismatch { expected: 3, got: 1 })));
}

#[test]
fn bnl_examples() {
    assert!(bnl_lt(&Bnl(vec![1, 5]), &Bnl(vec![2, 0])).unwrap());
    assert!(!bnl_lt(&Bnl(vec![2, 0]), &Bnl(vec![2, 0])).unwrap());
    assert!(bnl_le(&Bnl(vec![2, 0]), &Bnl(vec![2, 0])).unwrap());
    for b in lists(3, 3) {
        assert!(bnl_le(&Bnl::zero(3), &Bnl(b)).unwrap());
    }
    assert!(bnl_lt(&Bnl(vec![1]), &Bnl(vec![1, 0])).is_err());
}

#[test]
fn ordinal_examples() {
    let o = |t: &[(u64, u64)]| Ordinal(t.to_vec());
    assert_eq!(bnl_to_o(&Bnl(vec![0, 0, 0])), Ordinal::zero());
    assert_eq!(bnl_to_o(&Bnl(vec![2, 1, 3])), o(&[(2, 2), (1, 1), (0, 3)]));
    assert_eq!(bnl_to_o(&Bnl(vec![2, 1, 3])).to_string(), "w^2*2 + w*1 + 3");
    assert!(o_lt(&Ordinal::zero(), &Ordinal::term(1, 1)));
    assert!(o_lt(&o(&[(1, 2), (0, 1)]), &o(&[(1, 3)])));
    assert!(!o_p(&o(&[(0, 1), (1, 1)])));
    assert!(!o_p(&o(&[(2, 0)])));
    assert!(o_p(&Ordinal::zero()));
}

/// Descending chains in the bnl order are exactly as long as the number of
/// lists, so there is no cycle and no chain longer than the domain.
#[test]
fn longest_descending_chains_are_finite() {
    for (bound, base) in [(1, 5), (2, 3), (3, 2)] {
        let all: Vec<Bnl> = lists(bound, base).into_iter().map(Bnl).collect();
        // longest chain ending below each list, in increasing list order
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.sort_by(|&i, &j| {
            if bnl_lt(&all[i], &all[j]).unwrap() {
                std::cmp::Ordering::Less
            } else if bnl_lt(&all[j], &all[i]).unwrap() {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let mut longest = vec![1usize; all.len()];
        for (k, &i) in order.iter().enumerate() {
            for &j in &order[..k] {
                assert!(!bnl_lt(&all[i], &all[j]).unwrap(), "order is not acyclic");
                if bnl_lt(&all[j], &all[i]).unwrap() {
                    longest[i] = longest[i].max(longest[j] + 1);
                }
            }
        }
        assert_eq!(longest.iter().max().copied(), Some(all.len()));
    }
}

fn rank_omap(n: u64, r: u64, w: u64) -> (wfgraph::model::Model, Omap) {
    let m = bakery_at(n, r, w);
    let o = synthesize_omap(&tagged(&m, "rank")).unwrap();
    (m, o)
}

#[test]
fn bnl_bound_examples() {
    let (m, o) = rank_omap(2, 2, 3);
    let widths = family_widths(&m.map("rank").unwrap().ord);
    assert_eq!(bnl_bnd(&o, &widths).unwrap(), 6);
    let mut one = o.clone();
    one.entries.truncate(1);
    one.entries[0].1 = Descriptor::parse("(1 0)").unwrap();
    assert_eq!(bnl_bnd(&one, &widths).unwrap(), 2);
    let w3 = BTreeMap::from([("o".to_string(), 3usize)]);
    one.entries[0].1 = Descriptor::parse("(o 0)").unwrap();
    assert_eq!(bnl_bnd(&one, &w3).unwrap(), 4);
    assert!(matches!(bnl_bnd(&one, &widths), Err(Error::UnknownMeasure(_))));
}

fn st(loc: u64, runs: u64, loop_: u64) -> BakeTr {
    BakeTr {
        loc,
        runs,
        loop_,
        done: loc == 17,
        ndx: 1,
        ..BakeTr::default()
    }
}

#[test]
fn mk_bnl_examples() {
    let (m, o) = rank_omap(2, 2, 3);
    let a = Abstraction { map: m.map("rank").unwrap() };
    let b = |x: BakeTr| a.mk_bnl(&x.to_value(), &o, 6).unwrap().0;
    assert_eq!(b(st(14, 2, 0)), vec![4, 2, 1, 0, 0, 0]);
    assert_eq!(b(st(17, 0, 0)), vec![1, 0, 0, 0, 0, 0]);
    assert_eq!(b(st(8, 1, 2)), vec![4, 1, 4, 2, 4, 0]);
    let done = a.msr(&st(17, 0, 0).to_value(), &o, 6).unwrap();
    assert_eq!(done, Ordinal::term(5, 1));
    assert_eq!(done.to_string(), "w^5*1");
    // loc 17 with runs left is not a reachable node
    assert!(matches!(a.mk_bnl(&st(17, 1, 0).to_value(), &o, 6), Err(Error::NodeNotInOmap(_))));
    assert!(a.mk_bnl(&st(8, 1, 2).to_value(), &o, 5).is_err());
}

#[test]
fn mk_bnl_all_zero_gives_zero() {
    let d = Descriptor::parse("(0 M 0)").unwrap();
    assert_eq!(msr(&d, 5, |_| Ok(vec![0, 0])).unwrap(), Ordinal::zero());
}

/// Every step from a state whose node is in the omap lowers its bnl.
#[test]
fn rank_bnl_decreases_on_every_step() {
    let p = Params { n: 2, r: 2, w: 2 };
    let (m, o) = rank_omap(p.n, p.r, p.w as u64);
    let a = Abstraction { map: m.map("rank").unwrap() };
    let bound = bnl_bnd(&o, &a.widths()).unwrap();
    let mut steps = 0;
    for x in common_states(&p) {
        if x.done || o.get(&a.map_e(&x.to_value())).is_none() {
            continue;
        }
        let bx = a.mk_bnl(&x.to_value(), &o, bound).unwrap();
        for max in 0..1 << p.w {
            let y = bake_tr_next(&p, &x, &BakeSh { max });
            let by = a.mk_bnl(&y.to_value(), &o, bound).unwrap();
            assert!(bnl_lt(&by, &bx).unwrap(), "{x:?} -> {y:?}");
            assert!(o_lt(&bnl_to_o(&by), &bnl_to_o(&bx)));
            steps += 1;
        }
    }
    assert!(steps > 10_000, "{steps}");
}

fn common_states(p: &Params) -> Vec<BakeTr> {
    let v = 1u64 << p.w;
    let mut out = Vec::new();
    for loc in 0..=17 {
        for choosing in [false, true] {
            for temp in 0..v {
                for pos in 0..v {
                    for pos_valid in [false, true] {
                        for loop_ in 0..=p.n {
                            for runs in 0..=p.r {
                                for done in [false, true] {
                                    for ndx in 1..=p.n {
                                        out.push(BakeTr { loc, choosing, temp, pos, pos_valid, loop_, runs, done, ndx });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn o_cmp_agrees_with_spelled_coefficients(a in proptest::collection::vec(0u64..4, 0..6), b in proptest::collection::vec(0u64..4, 0..6)) {
        let (oa, ob) = (bnl_to_o(&Bnl(a)), bnl_to_o(&Bnl(b)));
        prop_assert_eq!(o_lt(&oa, &ob), spelled(&oa, 6) < spelled(&ob, 6));
        prop_assert_eq!(o_cmp(&oa, &ob), spelled(&oa, 6).cmp(&spelled(&ob, 6)));
    }

    #[test]
    fn bnl_lt_is_strict_total(a in proptest::collection::vec(0u64..5, 4), b in proptest::collection::vec(0u64..5, 4), c in proptest::collection::vec(0u64..5, 4)) {
        let (a, b, c) = (Bnl(a), Bnl(b), Bnl(c));
        prop_assert!(!bnl_lt(&a, &a).unwrap());
        prop_assert_eq!(bnl_lt(&a, &b).unwrap() as u8 + bnl_lt(&b, &a).unwrap() as u8 + (a == b) as u8, 1);
        if bnl_lt(&a, &b).unwrap() && bnl_lt(&b, &c).unwrap() {
            prop_assert!(bnl_lt(&a, &c).unwrap());
        }
    }

    #[test]
    fn mk_bnl_pads_to_the_bound(ranks in proptest::collection::vec(0u64..9, 1..4), extra in 0usize..3) {
        let d = Descriptor(ranks.iter().map(|&r| wfgraph::synth::Entry::Rank(r)).collect());
        let b = mk_bnl(&d, ranks.len() + extra, |_| unreachable!()).unwrap();
        prop_assert_eq!(&b.0[..ranks.len()], ranks.as_slice());
        prop_assert!(b.0[ranks.len()..].iter().all(|&x| x == 0));
        prop_assert_eq!(b.bound(), ranks.len() + extra);
    }
}
