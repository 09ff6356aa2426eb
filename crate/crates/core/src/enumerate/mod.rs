//! `compute-finite-values`: the set of values a term takes under a
//! hypothesis, up to a budget.

pub mod exhaustive;
pub mod ipasir;
pub mod sat;

use std::sync::Arc;

use crate::bitblast::blast;
use crate::error::{Error, Result};
use crate::model::sort::Sort;
use crate::model::typed::TExpr;
use crate::model::value::Value;
use crate::scalar::{compile, Compiled};

pub use ipasir::IpasirLib;

/// A term and hypothesis over typed variables. Variables with a `fixed`
/// value are bound (the reserved node variables of graph queries).
#[derive(Clone, Debug)]
pub struct Query {
    pub vars: Vec<(String, Sort)>,
    pub fixed: Vec<Option<Value>>,
    pub hyp: TExpr,
    pub trm: TExpr,
}

impl Query {
    pub fn new(vars: Vec<(String, Sort)>, hyp: TExpr, trm: TExpr) -> Query {
        let fixed = vec![None; vars.len()];
        Query { vars, fixed, hyp, trm }
    }

    /// Binds variable `name` to a value.
    pub fn bind(mut self, name: &str, v: Value) -> Query {
        let i = self
            .vars
            .iter()
            .position(|(n, _)| n == name)
            .unwrap_or_else(|| panic!("no query variable `{name}`"));
        self.fixed[i] = Some(v);
        self
    }

    pub fn compile(&self) -> Compiled {
        compile(&self.vars, &self.fixed, &self.hyp, &self.trm)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumResult {
    /// Distinct values in canonical order.
    pub values: Vec<Value>,
    /// False only when the budget was reached.
    pub is_total: bool,
}

#[derive(Clone, Debug)]
pub enum Backend {
    /// Exhaustive search evaluated directly; always available.
    Exhaustive,
    /// In-process incremental SAT solver.
    Sat,
    /// An IPASIR solver from a shared library.
    Ipasir(Arc<IpasirLib>),
}

impl Backend {
    /// Resolves a backend by name; `ipasir` reads `WFG_IPASIR_LIB`.
    pub fn by_name(name: &str) -> Result<Backend> {
        match name {
            "exhaustive" => Ok(Backend::Exhaustive),
            "sat" => Ok(Backend::Sat),
            "ipasir" => match IpasirLib::from_env() {
                Some(lib) => Ok(Backend::Ipasir(lib?)),
                None => Err(Error::Solver(format!(
                    "backend `ipasir` needs {} to name a solver library",
                    ipasir::ENV_VAR
                ))),
            },
            other => Err(Error::Solver(format!("unknown backend `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exhaustive => "exhaustive",
            Backend::Sat => "sat",
            Backend::Ipasir(_) => "ipasir",
        }
    }

    fn session(&self) -> Result<Box<dyn sat::IncrementalSolver>> {
        Ok(match self {
            Backend::Exhaustive => unreachable!("no session for the exhaustive backend"),
            Backend::Sat => Box::new(sat::Varisat::default()),
            Backend::Ipasir(lib) => Box::new(ipasir::Ipasir::new(lib.clone())?),
        })
    }
}

/// Up to `num` distinct values of the query's term over assignments that
/// satisfy its hypothesis.
///
/// Incremental backends stop after `num` values; the exhaustive backend
/// returns the `num` canonically smallest. Either way `is_total` is true
/// iff the value set has fewer than `num` elements.
pub fn compute_finite_values(q: &Query, num: usize, backend: &Backend) -> Result<EnumResult> {
    if num == 0 {
        return Err(Error::Precondition("num must be at least 1".into()));
    }
    let c = q.compile();
    match backend {
        Backend::Exhaustive => {
            let all = exhaustive::Search::new(&c)?.values();
            let is_total = all.len() < num;
            Ok(EnumResult {
                values: all.into_iter().take(num).collect(),
                is_total,
            })
        }
        b => {
            let circuit = blast(&c)?;
            let mut s = b.session()?;
            let out = sat::enumerate_loop(s.as_mut(), &circuit, num)
                .map_err(|e| Error::Solver(format!("{} backend: {e}", b.name())))?;
            Ok(EnumResult {
                values: out.values.into_iter().collect(),
                is_total: out.is_total,
            })
        }
    }
}

/// A satisfying environment (one value per query variable), if any.
pub fn find_witness(q: &Query, backend: &Backend) -> Result<Option<Vec<Value>>> {
    let c = q.compile();
    let leaves = match backend {
        Backend::Exhaustive => exhaustive::Search::new(&c)?.witness(),
        b => {
            let circuit = blast(&c)?;
            let mut s = b.session()?;
            match sat::witness_once(s.as_mut(), &circuit)? {
                Some(m) => Some(circuit.decode_inputs(&m)?),
                None => None,
            }
        }
    };
    Ok(leaves.map(|l| c.env(&q.vars, &q.fixed, &l)))
}
