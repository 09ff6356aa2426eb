//! Reference semantics of checked expressions over concrete values.

use super::sort::Sort;
use super::typed::{TExpr, TKind};
use super::value::Value;

fn nat(v: &Value) -> u64 {
    v.as_nat().expect("well-sorted: natural operand")
}

fn truth(v: &Value) -> bool {
    v.as_bool().expect("well-sorted: boolean operand")
}

fn mask(sort: &Sort) -> u64 {
    match sort {
        Sort::Nat(w) if *w < 64 => (1u64 << w) - 1,
        _ => u64::MAX,
    }
}

/// Evaluates `e` with frame slot `i` bound to `env[i]`.
///
/// Panics if `env` does not bind the slots `e` reads at the right sorts;
/// checked expressions built by the model never violate this.
pub fn eval(e: &TExpr, env: &[Value]) -> Value {
    match &e.kind {
        TKind::Var(i) => env[*i].clone(),
        TKind::Const(v) => v.clone(),
        TKind::Field(b, i) => match eval(b, env) {
            Value::Record(mut vs) => vs.swap_remove(*i),
            Value::Tuple(mut kv) => kv.swap_remove(*i).1,
            v => panic!("field access on scalar {v}"),
        },
        TKind::Update(b, ups) => {
            let Value::Record(mut vs) = eval(b, env) else {
                panic!("update of non-record")
            };
            for (i, x) in ups {
                vs[*i] = eval(x, env);
            }
            Value::Record(vs)
        }
        TKind::Make(es) => Value::Record(es.iter().map(|x| eval(x, env)).collect()),
        TKind::Tuple(keys, es) => Value::Tuple(
            keys.iter()
                .cloned()
                .zip(es.iter().map(|x| eval(x, env)))
                .collect(),
        ),
        TKind::Ite(c, t, f) => {
            if truth(&eval(c, env)) {
                eval(t, env)
            } else {
                eval(f, env)
            }
        }
        TKind::Eq(a, b) => Value::Bool(eval(a, env) == eval(b, env)),
        TKind::Lt(a, b) => Value::Bool(nat(&eval(a, env)) < nat(&eval(b, env))),
        TKind::Le(a, b) => Value::Bool(nat(&eval(a, env)) <= nat(&eval(b, env))),
        TKind::AddMod(a, b) => {
            let s = nat(&eval(a, env)).wrapping_add(nat(&eval(b, env)));
            Value::Nat(s & mask(&e.sort))
        }
        TKind::SubGuarded(a, b) => {
            Value::Nat(nat(&eval(a, env)).saturating_sub(nat(&eval(b, env))))
        }
        TKind::Not(a) => Value::Bool(!truth(&eval(a, env))),
        TKind::And(es) => Value::Bool(es.iter().all(|x| truth(&eval(x, env)))),
        TKind::Or(es) => Value::Bool(es.iter().any(|x| truth(&eval(x, env)))),
        TKind::Case(s, arms, d) => {
            let k = nat(&eval(s, env));
            let body = arms
                .iter()
                .find(|(keys, _)| keys.contains(&k))
                .map(|(_, b)| b)
                .unwrap_or(d);
            eval(body, env)
        }
        TKind::Apply(def, args) => {
            let frame: Vec<Value> = args.iter().map(|x| eval(x, env)).collect();
            eval(&def.body, &frame)
        }
    }
}

/// Every value of a sort, in canonical order. Intended for small sorts.
pub fn all_values(sort: &Sort) -> Vec<Value> {
    match sort {
        Sort::Record(_) | Sort::Tuple(_) => {
            let comps = sort.components();
            let mut acc: Vec<Vec<Value>> = vec![Vec::new()];
            for (_, s) in comps {
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
            acc.into_iter()
                .map(|vs| match sort {
                    Sort::Record(_) => Value::Record(vs),
                    Sort::Tuple(t) => Value::tuple(t.fields.iter().map(|(k, _)| k).zip(vs)),
                    _ => unreachable!(),
                })
                .collect()
        }
        s => (0..s.scalar_size().expect("scalar")).map(|i| s.scalar_value(i)).collect(),
    }
}
