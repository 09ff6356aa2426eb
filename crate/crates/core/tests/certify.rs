mod common;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{at_loc, bakery_at, loc_of, node, runs_mutant_source, tagged};
use wfgraph::absgraph::{OrderTag, DEFAULT_NUM};
use wfgraph::bakery::BakeTr;
use wfgraph::certify::*;
use wfgraph::enumerate::Backend;
use wfgraph::model::{parse_model, Model};
use wfgraph::ordinals::bnl_bnd;
use wfgraph::synth::{synthesize_omap, Descriptor};
use wfgraph::Error;

fn desk() -> Model {
    bakery_at(2, 2, 2)
}

fn certify_both(m: &Model, be: &Backend) -> Certificate {
    let maps = ["rank", "nlock"]
        .iter()
        .map(|name| {
            let g = tagged(m, name);
            let o = synthesize_omap(&g).unwrap();
            certify_map(m, name, &g, &o, DEFAULT_NUM, be).unwrap()
        })
        .collect();
    certificate(m, maps, be)
}

fn check<'a>(c: &'a [Check], name: &str) -> &'a Check {
    c.iter().find(|c| c.name == name).unwrap()
}

#[test]
fn both_maps_certify_at_width_two() {
    let m = desk();
    let cert = certify_both(&m, &Backend::Exhaustive);
    assert!(cert.passed(), "{}", cert.to_json());
    for mc in &cert.maps {
        let names: Vec<&str> = mc.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["assumption-1", "assumption-2", "assumption-3", "valid-omap", "measure-decrease"]);
        assert!(mc.checks.iter().all(|c| c.cases > 0 && c.witness.is_none()));
    }
    assert!(cert.maps[0].assumed_invariant.is_none());
    let inv = cert.maps[1].assumed_invariant.as_ref().unwrap();
    assert_eq!(inv.verdict, Verdict::Pass);
    assert_eq!(inv.name, "bake-nlock-inv");
}

#[test]
fn deleting_an_arc_breaks_assumption_one() {
    let m = desk();
    let map = m.map("rank").unwrap();
    let mut g = tagged(&m, "rank");
    let u = at_loc(&g, 14)[0];
    let v = g.graph.succs[u].remove(0);
    g.tags.remove(&(u, v));
    let c = check_assumptions(&m, map, &g, &Backend::Exhaustive).unwrap();
    let a1 = check(&c, "assumption-1");
    assert!(!a1.passed());
    let w = a1.witness.as_ref().unwrap();
    assert!(w.contains("(:LOC 14)") && w.contains("y = (BAKE-TR :LOC 15"), "{w}");
    assert!(check(&c, "assumption-2").passed());
    assert!(check(&c, "assumption-3").passed());
}

#[test]
fn forcing_a_strict_tag_breaks_assumption_two() {
    let m = desk();
    let map = m.map("nlock").unwrap();
    let mut g = tagged(&m, "nlock");
    let pos = g.measure_index("pos").unwrap();
    let (u, v) = g
        .tags
        .iter()
        .map(|(&k, t)| (k, t[pos]))
        .find(|&((u, v), t)| loc_of(&g, u) == 10 && loc_of(&g, v) == 10 && t == OrderTag::NonInc)
        .expect("a 10 -> 10 arc with pos non-increasing")
        .0;
    g.tags.get_mut(&(u, v)).unwrap()[pos] = OrderTag::StrictDec;
    let c = check_assumptions(&m, map, &g, &Backend::Exhaustive).unwrap();
    assert!(check(&c, "assumption-1").passed());
    assert!(!check(&c, "assumption-2").passed(), "{u} -> {v}");
    assert!(check(&c, "assumption-3").passed());
}

#[test]
fn reference_omap_arc_examples() {
    let m = bakery_at(2, 2, 3);
    let g = tagged(&m, "rank");
    let mut o = synthesize_omap(&g).unwrap();
    assert!(check_omap_valid(&g, &o).passed());
    let l2 = at_loc(&g, 2)[0];
    let l3 = at_loc(&g, 3)[0];
    assert!(g.graph.succs[l2].contains(&l3));
    assert_eq!(o.get(&g.graph.nodes[l2]).unwrap().to_string(), "(4 RUNS 9 0)");
    assert_eq!(o.get(&g.graph.nodes[l3]).unwrap().to_string(), "(4 RUNS 8 LOOP 2 0)");

    let l0 = &g.graph.nodes[at_loc(&g, 0)[0]];
    o.entries.iter_mut().find(|(n, _)| n == l0).unwrap().1 = Descriptor::parse("(4 RUNS 10 0)").unwrap();
    let c = check_omap_valid(&g, &o);
    assert!(!c.passed());
    let w = c.witness.unwrap();
    assert!(w.contains("(:LOC 0)") && w.contains("(:LOC 1)"), "{w}");

    o.entries.remove(0);
    let c = check_omap_valid(&g, &o);
    assert!(c.witness.unwrap().contains("not in omap"));
}

#[test]
fn runs_mutant_fails_upstream_and_against_the_reference_omap() {
    let good = desk();
    let o = synthesize_omap(&tagged(&good, "rank")).unwrap();
    let bad = parse_model(&runs_mutant_source())
        .unwrap()
        .with_params(&[("N".to_string(), 2), ("R".to_string(), 2), ("W".to_string(), 2)].into())
        .unwrap();
    let g = tagged(&bad, "rank");
    assert!(synthesize_omap(&g).is_err());
    let map = bad.map("rank").unwrap();
    let d = check_measure_decrease(&bad, map, &o, &Backend::Exhaustive).unwrap();
    assert!(!d.passed());
    assert!(d.witness.is_some());
    let cert = certify_map(&bad, "rank", &g, &o, DEFAULT_NUM, &Backend::Exhaustive).unwrap();
    assert!(!cert.passed());
}

#[test]
fn measure_decrease_rejects_foreign_measure_names() {
    let m = desk();
    let g = tagged(&m, "rank");
    let mut o = synthesize_omap(&g).unwrap();
    o.entries[0].1 = Descriptor::parse("(4 BOGUS 11 0)").unwrap();
    assert!(matches!(
        check_measure_decrease(&m, m.map("rank").unwrap(), &o, &Backend::Exhaustive),
        Err(Error::UnknownMeasure(_))
    ));
}

fn rank_setup(m: &Model) -> wfgraph::synth::Omap {
    synthesize_omap(&tagged(m, "rank")).unwrap()
}

#[test]
fn single_process_descends_to_done() {
    let m = desk();
    let map = m.map("rank").unwrap();
    let o = rank_setup(&m);
    let x0 = BakeTr::init(1, 2).to_value();
    let t = iterate_descent(&m, map, &o, &x0, |_| 0, 1000).unwrap();
    let last = BakeTr::from_value(&t.last().unwrap().0).unwrap();
    assert_eq!(last.loc, 17);
    assert!(last.done);
    assert!(t.windows(2).all(|w| wfgraph::ordinals::o_lt(&w[1].1, &w[0].1)));
    assert!(t.len() > 2 * 17);
}

#[test]
fn done_state_has_no_descent() {
    let m = desk();
    let o = rank_setup(&m);
    let x0 = BakeTr { loc: 17, done: true, ndx: 1, ..BakeTr::default() }.to_value();
    let t = iterate_descent(&m, m.map("rank").unwrap(), &o, &x0, |_| 0, 10).unwrap();
    assert_eq!(t.len(), 1);
}

/// Count of bnls of length `k` with entries at most `top` that are
/// lexicographically at most `x`: a strict descent from `x` is no longer.
fn descent_bound(x: &[u64], top: u64) -> u128 {
    x.iter().fold(0u128, |acc, &d| acc * (top as u128 + 1) + d as u128) + 1
}

#[test]
fn random_choosers_still_terminate() {
    let m = desk();
    let map = m.map("rank").unwrap();
    let o = rank_setup(&m);
    let abs = Abstraction { map };
    let bound = bnl_bnd(&o, &abs.widths()).unwrap();
    let top = o
        .entries
        .iter()
        .flat_map(|(_, d)| d.0.iter())
        .filter_map(|e| match e {
            wfgraph::synth::Entry::Rank(n) => Some(*n),
            _ => None,
        })
        .max()
        .unwrap()
        .max(3);
    for seed in 0..100u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let x0 = BakeTr::init(1 + seed % 2, 1 + seed % 3 % 2).to_value();
        let b = abs.mk_bnl(&x0, &o, bound).unwrap();
        let t = iterate_descent(&m, map, &o, &x0, |ys| rng.gen_range(0..ys.len()), 10_000).unwrap();
        assert!((t.len() as u128) <= descent_bound(&b.0, top), "seed {seed}");
        assert!(BakeTr::from_value(&t.last().unwrap().0).unwrap().done);
    }
}

#[test]
fn successors_follow_the_relation() {
    let m = desk();
    let x = BakeTr::init(1, 2).to_value();
    let ys = successors(&m, m.map("rank").unwrap(), &x).unwrap();
    assert_eq!(ys.len(), 1);
    assert_eq!(BakeTr::from_value(&ys[0]).unwrap().loc, 1);
    // a process at loc 9 with a smaller ticket elsewhere is blocked by it
    let x = BakeTr { loc: 9, pos: 2, pos_valid: true, loop_: 2, ndx: 1, runs: 1, ..BakeTr::default() };
    let ys = successors(&m, m.map("nlock").unwrap(), &x.to_value()).unwrap();
    assert!(!ys.is_empty());
    for y in ys {
        let y = BakeTr::from_value(&y).unwrap();
        assert_eq!(y.ndx, 2);
        assert!(y.pos < 2 && y.pos_valid);
    }
}

fn with_invariants(extra: &str) -> Model {
    let src = format!("{}\n{extra}\n", wfgraph::BAKERY_SOURCE);
    parse_model(&src)
        .unwrap()
        .with_params(&[("W".to_string(), 2)].into())
        .unwrap()
}

#[test]
fn state_invariants() {
    let m = with_invariants(
        "(invariant choosing-inv ((a bake-tr)) :key (loc)
           (iff a.choosing (and (<= 1 a.loc) (<= a.loc 7))))
         (invariant never ((a bake-tr)) :key (loc) (not (= a.loc a.loc)))",
    );
    let by = |n: &str| m.invariants.iter().find(|i| i.def.name == n).unwrap();
    let be = Backend::Exhaustive;
    let rank = certify_state_invariant(&m, by("bake-rank-inv"), DEFAULT_NUM, &be).unwrap();
    assert_eq!(rank.verdict, Verdict::Pass);
    assert_eq!(rank.nodes, 18);
    let ch = certify_state_invariant(&m, by("choosing-inv"), DEFAULT_NUM, &be).unwrap();
    assert_eq!(ch.verdict, Verdict::Pass);
    let never = certify_state_invariant(&m, by("never"), DEFAULT_NUM, &be).unwrap();
    assert_eq!(never.verdict, Verdict::Fail);
    assert!(never.failing.iter().any(|n| n.contains("(:LOC 0)")), "{:?}", never.failing);
}

#[test]
fn certificates_are_deterministic_across_runs_and_backends() {
    let m = desk();
    let a = certify_both(&m, &Backend::Exhaustive);
    let b = certify_both(&m, &Backend::Exhaustive);
    assert_eq!(a.to_json(), b.to_json());
    let s = certify_both(&m, &Backend::Sat);
    assert_eq!(s.verdict, a.verdict);
    assert_eq!(s.model_hash, a.model_hash);
    for (x, y) in a.maps.iter().zip(&s.maps) {
        assert_eq!(x.graph_hash, y.graph_hash);
        assert_eq!(x.omap_hash, y.omap_hash);
        let vx: Vec<_> = x.checks.iter().map(|c| (&c.name, c.verdict)).collect();
        let vy: Vec<_> = y.checks.iter().map(|c| (&c.name, c.verdict)).collect();
        assert_eq!(vx, vy);
    }
    let round: Certificate = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(round, a);
}

#[test]
fn nlock_node_example() {
    let m = bakery_at(2, 2, 3);
    let g = tagged(&m, "nlock");
    node(&g, "((:LOC 3) (:CHOOSING T) (:POS-VALID NIL) (:POS=0 T) (:INV T))");
}
