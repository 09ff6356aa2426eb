//! IPASIR entry points backed by varisat. Build as a shared library and point
//! `WFG_IPASIR_LIB` at it.

use std::ffi::{c_char, c_int, c_void};

use varisat::{ExtendFormula, Lit, Solver};

struct Session {
    solver: Solver<'static>,
    clause: Vec<Lit>,
    /// Truth value per variable, index 0 unused.
    model: Vec<bool>,
}

fn session<'a>(h: *mut c_void) -> &'a mut Session {
    assert!(!h.is_null(), "null solver handle");
    // SAFETY: handles are only produced by ipasir_init and live until release.
    unsafe { &mut *(h as *mut Session) }
}

#[no_mangle]
pub extern "C" fn ipasir_signature() -> *const c_char {
    c"varisat-0.2".as_ptr()
}

#[no_mangle]
pub extern "C" fn ipasir_init() -> *mut c_void {
    let s = Box::new(Session {
        solver: Solver::new(),
        clause: Vec::new(),
        model: Vec::new(),
    });
    Box::into_raw(s) as *mut c_void
}

#[no_mangle]
pub extern "C" fn ipasir_release(h: *mut c_void) {
    if !h.is_null() {
        // SAFETY: see `session`; the caller releases each handle once.
        drop(unsafe { Box::from_raw(h as *mut Session) });
    }
}

#[no_mangle]
pub extern "C" fn ipasir_add(h: *mut c_void, lit: c_int) {
    let s = session(h);
    if lit == 0 {
        let c = std::mem::take(&mut s.clause);
        s.solver.add_clause(&c);
    } else {
        s.clause.push(Lit::from_dimacs(lit as isize));
    }
}

/// 10 for SAT, 20 for UNSAT, 0 if the solver failed.
#[no_mangle]
pub extern "C" fn ipasir_solve(h: *mut c_void) -> c_int {
    let s = session(h);
    match s.solver.solve() {
        Ok(true) => {
            s.model.clear();
            for l in s.solver.model().unwrap_or_default() {
                let v = l.var().to_dimacs() as usize;
                if s.model.len() <= v {
                    s.model.resize(v + 1, false);
                }
                s.model[v] = l.is_positive();
            }
            10
        }
        Ok(false) => 20,
        Err(_) => 0,
    }
}

/// `lit` if it is true in the last model, `-lit` otherwise.
#[no_mangle]
pub extern "C" fn ipasir_val(h: *mut c_void, lit: c_int) -> c_int {
    let s = session(h);
    let v = lit.unsigned_abs() as usize;
    let on = s.model.get(v).copied().unwrap_or(false);
    if on == (lit > 0) {
        lit
    } else {
        -lit
    }
}
