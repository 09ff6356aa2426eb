mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{gen_model, Gen};
use wfgraph::bitblast::blast;
use wfgraph::enumerate::sat::{enumerate_loop, Varisat};
use wfgraph::enumerate::{compute_finite_values, find_witness, Backend, IpasirLib, Query};
use wfgraph::model::expr::{self, Expr};
use wfgraph::model::sort::Sort;
use wfgraph::model::{eval, Value};
use wfgraph::Error;

fn two_bit_query(hyp: Expr, trm: Expr) -> Query {
    let m = gen_model();
    let vars = vec![("x".to_string(), Sort::Nat(2)), ("y".to_string(), Sort::Nat(2))];
    let h = m.check(&vars, &hyp, Some(&Sort::Bool)).unwrap();
    let t = m.check(&vars, &trm, None).unwrap();
    Query::new(vars, h, t)
}

fn nats(ns: &[u64]) -> Vec<Value> {
    ns.iter().map(|&n| Value::Nat(n)).collect()
}

fn backends() -> Vec<Backend> {
    vec![Backend::Exhaustive, Backend::Sat]
}

#[test]
fn constant_term() {
    let q = two_bit_query(Expr::Bool(true), expr::constant(Value::Nat(5), Sort::Nat(3)));
    for be in backends() {
        let r = compute_finite_values(&q, 10, &be).unwrap();
        assert_eq!((r.values, r.is_total), (nats(&[5]), true), "{}", be.name());
    }
}

#[test]
fn unsatisfiable_hypothesis() {
    let q = two_bit_query(
        expr::eq(expr::var("x"), expr::add_mod(expr::var("x"), expr::nat(1))),
        expr::var("x"),
    );
    for be in backends() {
        let r = compute_finite_values(&q, 10, &be).unwrap();
        assert!(r.values.is_empty() && r.is_total, "{}", be.name());
        assert!(find_witness(&q, &be).unwrap().is_none());
    }
}

#[test]
fn sums_under_strict_order() {
    let q = two_bit_query(
        expr::lt(expr::var("x"), expr::var("y")),
        expr::add_mod(expr::var("x"), expr::var("y")),
    );
    // oracle: x < y over 2-bit pairs
    let mut want = BTreeSet::new();
    for x in 0..4u64 {
        for y in x + 1..4 {
            want.insert((x + y) % 4);
        }
    }
    for be in backends() {
        let r = compute_finite_values(&q, 10, &be).unwrap();
        assert_eq!(r.values, want.iter().map(|&n| Value::Nat(n)).collect::<Vec<_>>());
        assert!(r.is_total);
        let cut = compute_finite_values(&q, 2, &be).unwrap();
        assert_eq!(cut.values.len(), 2);
        assert!(!cut.is_total);
    }
}

#[test]
fn zero_budget_is_rejected() {
    let q = two_bit_query(Expr::Bool(true), expr::var("x"));
    assert!(matches!(compute_finite_values(&q, 0, &Backend::Sat), Err(Error::Precondition(_))));
}

#[test]
fn exact_budget_counts_as_cut_off() {
    let q = two_bit_query(Expr::Bool(true), expr::var("x"));
    for be in backends() {
        let r = compute_finite_values(&q, 4, &be).unwrap();
        assert_eq!(r.values.len(), 4);
        assert!(!r.is_total, "{}", be.name());
        assert!(compute_finite_values(&q, 5, &be).unwrap().is_total);
    }
}

#[test]
fn bound_variables_are_respected() {
    let q = two_bit_query(Expr::Bool(true), expr::add_mod(expr::var("x"), expr::var("y")))
        .bind("x", Value::Nat(3));
    for be in backends() {
        let r = compute_finite_values(&q, 10, &be).unwrap();
        assert_eq!(r.values, nats(&[0, 1, 2, 3]));
        let w = find_witness(&q, &be).unwrap().unwrap();
        assert_eq!(w[0], Value::Nat(3));
    }
}

#[test]
fn solve_calls_match_values() {
    let m = gen_model();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let q = Gen { rng: &mut rng, model: &m, scope: Vec::new() }.query(3);
        let c = blast(&q.compile()).unwrap();
        for num in [1, 2, 4096] {
            let out = enumerate_loop(&mut Varisat::default(), &c, num).unwrap();
            assert_eq!(out.solve_calls, out.values.len() + out.is_total as usize);
        }
    }
}

#[test]
fn unknown_backend_and_missing_library() {
    assert!(Backend::by_name("minisat").is_err());
    assert_eq!(Backend::by_name("sat").unwrap().name(), "sat");
    let e = IpasirLib::load(std::path::Path::new("/nonexistent/libnosolver.so")).unwrap_err();
    assert!(e.to_string().contains("libnosolver"), "{e}");
}

/// Runs only when a solver library is configured.
#[test]
fn ipasir_backend_from_environment() {
    let Some(lib) = IpasirLib::from_env() else { return };
    let be = Backend::Ipasir(lib.unwrap());
    let m = gen_model();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let q = Gen { rng: &mut rng, model: &m, scope: Vec::new() }.query(3);
        assert_eq!(
            compute_finite_values(&q, 4096, &be).unwrap(),
            compute_finite_values(&q, 4096, &Backend::Exhaustive).unwrap()
        );
    }
}

/// The randomized equivalence suite: 256 queries with domains of at most
/// 2^15 environments.
#[test]
fn sat_and_exhaustive_agree_on_random_queries() {
    let m = gen_model();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut nonempty = 0;
    for i in 0..256 {
        let q = Gen { rng: &mut rng, model: &m, scope: Vec::new() }.query(4);
        let a = compute_finite_values(&q, 4096, &Backend::Exhaustive).unwrap();
        let b = compute_finite_values(&q, 4096, &Backend::Sat).unwrap();
        assert_eq!(a, b, "query {i} disagrees");
        let brute: Vec<Value> = common::brute_values(&q).into_iter().collect();
        assert_eq!(a.values, brute, "query {i} disagrees with evaluation");
        nonempty += !a.values.is_empty() as usize;
    }
    assert!(nonempty > 64, "generator too often unsatisfiable: {nonempty}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn results_are_sorted_and_distinct(seed in any::<u64>(), num in 1usize..6) {
        let m = gen_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Gen { rng: &mut rng, model: &m, scope: Vec::new() }.query(3);
        for be in backends() {
            let r = compute_finite_values(&q, num, &be).unwrap();
            prop_assert!(r.values.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(r.values.len() <= num);
            prop_assert_eq!(r.is_total, r.values.len() < num);
            let all = common::brute_values(&q);
            prop_assert!(r.values.iter().all(|v| all.contains(v)));
            prop_assert_eq!(r.is_total, all.len() < num);
        }
    }

    #[test]
    fn larger_budgets_only_add_values(seed in any::<u64>(), k in 1usize..5, extra in 1usize..5) {
        let m = gen_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Gen { rng: &mut rng, model: &m, scope: Vec::new() }.query(3);
        let small = compute_finite_values(&q, k, &Backend::Exhaustive).unwrap();
        let big = compute_finite_values(&q, k + extra, &Backend::Exhaustive).unwrap();
        prop_assert!(small.values.iter().all(|v| big.values.contains(v)));
        prop_assert!(big.values.len() >= small.values.len());
        if small.is_total {
            prop_assert_eq!(&small, &big);
        }
    }

    #[test]
    fn witnesses_satisfy_the_hypothesis(seed in any::<u64>()) {
        let m = gen_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Gen { rng: &mut rng, model: &m, scope: Vec::new() }.query(3);
        let empty = common::brute_values(&q).is_empty();
        for be in backends() {
            match find_witness(&q, &be).unwrap() {
                Some(env) => prop_assert_eq!(eval(&q.hyp, &env), Value::Bool(true)),
                None => prop_assert!(empty),
            }
        }
    }
}
