//! Incremental SAT sessions: the in-process solver and the blocking-clause
//! enumeration loop shared by every incremental backend.

use std::collections::BTreeSet;

use varisat::ExtendFormula;

use crate::bitblast::{Circuit, Lit};
use crate::error::{Error, Result};
use crate::model::value::Value;

/// The incremental contract: clauses are only ever added.
pub trait IncrementalSolver {
    fn add_clause(&mut self, clause: &[Lit]) -> Result<()>;
    /// Returns a total model (`model[v - 1]` for variable `v`) or `None` when
    /// unsatisfiable.
    fn solve(&mut self, num_vars: u32) -> Result<Option<Vec<bool>>>;
}

pub struct Varisat {
    solver: varisat::Solver<'static>,
}

impl Default for Varisat {
    fn default() -> Self {
        Varisat {
            solver: varisat::Solver::new(),
        }
    }
}

impl IncrementalSolver for Varisat {
    fn add_clause(&mut self, clause: &[Lit]) -> Result<()> {
        let lits: Vec<varisat::Lit> = clause
            .iter()
            .map(|&l| varisat::Lit::from_dimacs(l as isize))
            .collect();
        self.solver.add_clause(&lits);
        Ok(())
    }

    fn solve(&mut self, num_vars: u32) -> Result<Option<Vec<bool>>> {
        let sat = self
            .solver
            .solve()
            .map_err(|e| Error::Solver(format!("varisat: {e}")))?;
        if !sat {
            return Ok(None);
        }
        let model = self
            .solver
            .model()
            .ok_or_else(|| Error::Solver("varisat: satisfiable without a model".into()))?;
        let mut out = vec![false; num_vars as usize];
        for l in model {
            let v = l.var().to_dimacs() as usize;
            if v >= 1 && v <= out.len() {
                out[v - 1] = l.is_positive();
            }
        }
        Ok(Some(out))
    }
}

/// Outcome of the blocking-clause loop.
pub struct LoopOutcome {
    pub values: BTreeSet<Value>,
    pub is_total: bool,
    pub solve_calls: usize,
}

/// Installs `c` with its hypothesis asserted, then alternates solving and
/// blocking the decoded term value until UNSAT or `num` values are known.
pub fn enumerate_loop(solver: &mut dyn IncrementalSolver, c: &Circuit, num: usize) -> Result<LoopOutcome> {
    for cl in &c.clauses {
        solver.add_clause(cl)?;
    }
    solver.add_clause(&[c.hyp])?;
    let mut values = BTreeSet::new();
    let mut solve_calls = 0;
    loop {
        if values.len() >= num {
            return Ok(LoopOutcome {
                values,
                is_total: false,
                solve_calls,
            });
        }
        solve_calls += 1;
        let Some(model) = solver.solve(c.num_vars)? else {
            return Ok(LoopOutcome {
                values,
                is_total: true,
                solve_calls,
            });
        };
        let v = c.decode(&model)?;
        if !values.insert(v.clone()) {
            return Err(Error::Solver(format!("solver repeated blocked value {v}")));
        }
        let mut block = Vec::new();
        for bits in &c.outputs {
            for &l in bits {
                let on = model[l.unsigned_abs() as usize - 1] == (l > 0);
                block.push(if on { -l } else { l });
            }
        }
        solver.add_clause(&block)?;
    }
}

/// One satisfying assignment of the circuit with its hypothesis.
pub fn witness_once(solver: &mut dyn IncrementalSolver, c: &Circuit) -> Result<Option<Vec<bool>>> {
    for cl in &c.clauses {
        solver.add_clause(cl)?;
    }
    solver.add_clause(&[c.hyp])?;
    solver.solve(c.num_vars)
}
