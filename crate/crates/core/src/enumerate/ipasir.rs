//! Solvers behind the IPASIR C interface, loaded from a shared library.

use std::ffi::{c_int, c_void};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use libloading::Library;

use super::sat::IncrementalSolver;
use crate::bitblast::Lit;
use crate::error::{Error, Result};

/// Environment variable naming the solver library.
pub const ENV_VAR: &str = "WFG_IPASIR_LIB";

type InitFn = unsafe extern "C" fn() -> *mut c_void;
type AddFn = unsafe extern "C" fn(*mut c_void, c_int);
type SolveFn = unsafe extern "C" fn(*mut c_void) -> c_int;
type ValFn = unsafe extern "C" fn(*mut c_void, c_int) -> c_int;
type ReleaseFn = unsafe extern "C" fn(*mut c_void);

/// A loaded library with its entry points resolved.
pub struct IpasirLib {
    _lib: Library,
    path: PathBuf,
    init: InitFn,
    add: AddFn,
    solve: SolveFn,
    val: ValFn,
    release: ReleaseFn,
}

impl std::fmt::Debug for IpasirLib {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "IpasirLib({})", self.path.display())
    }
}

impl IpasirLib {
    pub fn load(path: &Path) -> Result<Arc<IpasirLib>> {
        let err = |e: libloading::Error| Error::Solver(format!("loading {}: {e}", path.display()));
        // SAFETY: loading a library runs its initializers; the path is chosen
        // by the user as an IPASIR solver.
        unsafe {
            let lib = Library::new(path).map_err(err)?;
            let init = *lib.get::<InitFn>(b"ipasir_init\0").map_err(err)?;
            let add = *lib.get::<AddFn>(b"ipasir_add\0").map_err(err)?;
            let solve = *lib.get::<SolveFn>(b"ipasir_solve\0").map_err(err)?;
            let val = *lib.get::<ValFn>(b"ipasir_val\0").map_err(err)?;
            let release = *lib.get::<ReleaseFn>(b"ipasir_release\0").map_err(err)?;
            Ok(Arc::new(IpasirLib {
                _lib: lib,
                path: path.to_path_buf(),
                init,
                add,
                solve,
                val,
                release,
            }))
        }
    }

    /// Loads the library named by `WFG_IPASIR_LIB`, if set.
    pub fn from_env() -> Option<Result<Arc<IpasirLib>>> {
        std::env::var_os(ENV_VAR).map(|p| IpasirLib::load(Path::new(&p)))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// One solver instance; single owner.
pub struct Ipasir {
    lib: Arc<IpasirLib>,
    handle: *mut c_void,
}

impl Ipasir {
    pub fn new(lib: Arc<IpasirLib>) -> Result<Ipasir> {
        // SAFETY: resolved from a library implementing the IPASIR contract.
        let handle = unsafe { (lib.init)() };
        if handle.is_null() {
            return Err(Error::Solver(format!("{}: ipasir_init returned null", lib.path.display())));
        }
        Ok(Ipasir { lib, handle })
    }
}

impl Drop for Ipasir {
    fn drop(&mut self) {
        // SAFETY: the handle came from ipasir_init and is released once.
        unsafe { (self.lib.release)(self.handle) }
    }
}

impl IncrementalSolver for Ipasir {
    fn add_clause(&mut self, clause: &[Lit]) -> Result<()> {
        // SAFETY: the handle is live; literals are non-zero.
        unsafe {
            for &l in clause {
                (self.lib.add)(self.handle, l as c_int);
            }
            (self.lib.add)(self.handle, 0);
        }
        Ok(())
    }

    fn solve(&mut self, num_vars: u32) -> Result<Option<Vec<bool>>> {
        // SAFETY: the handle is live.
        let r = unsafe { (self.lib.solve)(self.handle) };
        match r {
            10 => {
                let model = (1..=num_vars as c_int)
                    // SAFETY: called in SAT state for declared variables.
                    .map(|v| unsafe { (self.lib.val)(self.handle, v) } > 0)
                    .collect();
                Ok(Some(model))
            }
            20 => Ok(None),
            other => Err(Error::Solver(format!(
                "{}: ipasir_solve returned {other}",
                self.lib.path.display()
            ))),
        }
    }
}
