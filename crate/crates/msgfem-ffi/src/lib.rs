//! C ABI for the msgfem solver: opaque workspace handles, status codes and
//! a thread-local error message. The generated header lives in
//! `include/msgfem.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use msgfem::{gfem::GfemWorkspace, GridMesh};

/// Status codes returned by every fallible function of the C API.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgfemStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolveFailed = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Message of the most recent error on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn msgfem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque solver workspace: mesh, coefficient field, decomposition,
/// reference solution and per-subdomain spectral solvers.
pub struct MsgfemWorkspace {
    inner: GfemWorkspace,
}

fn guard<F: FnOnce() -> MsgfemStatus>(f: F) -> MsgfemStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            MsgfemStatus::Panic
        }
    }
}

/// Builds a workspace for one benchmark problem.
///
/// `example` is "random-field" or "high-contrast"; `mesh_n` is the number
/// of cells per axis; `m` subdomains per axis with `overlap` overlap layers
/// and `ell` oversampling layers; `s_max` harmonic basis functions are
/// prepared per subdomain (solves may use any s <= s_max).
///
/// # Safety
/// `example` must be a valid NUL-terminated string and `out` a valid
/// pointer; the returned handle must be released with
/// [`msgfem_workspace_free`].
#[no_mangle]
pub unsafe extern "C" fn msgfem_workspace_new(
    mesh_n: u32,
    example: *const c_char,
    seed: u64,
    m: u32,
    overlap: u32,
    ell: u32,
    s_max: u32,
    out: *mut *mut MsgfemWorkspace,
) -> MsgfemStatus {
    if example.is_null() || out.is_null() {
        set_error("null pointer argument");
        return MsgfemStatus::NullPointer;
    }
    let example = match CStr::from_ptr(example).to_str() {
        Ok(s) => s,
        Err(_) => {
            set_error("example is not valid UTF-8");
            return MsgfemStatus::InvalidArgument;
        }
    };
    *out = ptr::null_mut();
    guard(|| {
        let built = (|| -> msgfem::Result<GfemWorkspace> {
            let example: msgfem::Example = example.parse()?;
            let mesh = GridMesh::new(mesh_n as usize, mesh_n as usize)?;
            let coeff = msgfem::coefficients::paper_coefficient(&mesh, example, seed)?;
            let data = msgfem::coefficients::paper_problem_data(example);
            GfemWorkspace::build(
                mesh,
                coeff,
                data,
                m as usize,
                overlap as usize,
                ell as usize,
                s_max as usize,
            )
        })();
        match built {
            Ok(inner) => {
                unsafe {
                    *out = Box::into_raw(Box::new(MsgfemWorkspace { inner }));
                }
                MsgfemStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                MsgfemStatus::InvalidArgument
            }
        }
    })
}

/// Releases a workspace handle (accepts NULL).
///
/// # Safety
/// `handle` must come from [`msgfem_workspace_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn msgfem_workspace_free(handle: *mut MsgfemWorkspace) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of mesh nodes (the length of solution fields).
///
/// # Safety
/// `handle` must be a live workspace pointer.
#[no_mangle]
pub unsafe extern "C" fn msgfem_node_count(handle: *const MsgfemWorkspace) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).inner.mesh.n_nodes()
}

/// Runs the multiscale solve with `s` harmonic and `n_loc` spectral basis
/// functions per subdomain; writes the relative energy error against the
/// fine reference into `error_out`.
///
/// # Safety
/// `handle` and `error_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn msgfem_solve(
    handle: *const MsgfemWorkspace,
    s: u32,
    n_loc: u32,
    error_out: *mut f64,
) -> MsgfemStatus {
    if handle.is_null() || error_out.is_null() {
        set_error("null pointer argument");
        return MsgfemStatus::NullPointer;
    }
    let ws = &(*handle).inner;
    guard(|| match ws.solve(s as usize, n_loc as usize) {
        Ok((_, error)) => {
            unsafe {
                *error_out = error;
            }
            MsgfemStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            MsgfemStatus::SolveFailed
        }
    })
}

/// Runs the multiscale solve and copies the GFEM solution into `buffer`
/// (length `len` >= node count), in mesh node order.
///
/// # Safety
/// `handle`, `buffer` (with capacity `len`) and `error_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn msgfem_solve_field(
    handle: *const MsgfemWorkspace,
    s: u32,
    n_loc: u32,
    buffer: *mut f64,
    len: usize,
    error_out: *mut f64,
) -> MsgfemStatus {
    if handle.is_null() || buffer.is_null() || error_out.is_null() {
        set_error("null pointer argument");
        return MsgfemStatus::NullPointer;
    }
    let ws = &(*handle).inner;
    if len < ws.mesh.n_nodes() {
        set_error("buffer too small for the nodal field");
        return MsgfemStatus::BufferTooSmall;
    }
    guard(|| match ws.solve(s as usize, n_loc as usize) {
        Ok((solution, error)) => {
            unsafe {
                ptr::copy_nonoverlapping(solution.u_g.as_ptr(), buffer, solution.u_g.len());
                *error_out = error;
            }
            MsgfemStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            MsgfemStatus::SolveFailed
        }
    })
}

/// Copies the fine reference solution into `buffer` (length >= node count).
///
/// # Safety
/// `handle` and `buffer` (with capacity `len`) must be valid.
#[no_mangle]
pub unsafe extern "C" fn msgfem_reference_field(
    handle: *const MsgfemWorkspace,
    buffer: *mut f64,
    len: usize,
) -> MsgfemStatus {
    if handle.is_null() || buffer.is_null() {
        set_error("null pointer argument");
        return MsgfemStatus::NullPointer;
    }
    let ws = &(*handle).inner;
    if len < ws.u_h.len() {
        set_error("buffer too small for the nodal field");
        return MsgfemStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(ws.u_h.as_ptr(), buffer, ws.u_h.len());
    MsgfemStatus::Ok
}

/// The oversampling bound shape h(s) on [0, 1].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn msgfem_h_of_s(s: f64, out: *mut f64) -> MsgfemStatus {
    if out.is_null() {
        set_error("null pointer argument");
        return MsgfemStatus::NullPointer;
    }
    match msgfem::gfem::h_of_s(s) {
        Ok(v) => {
            *out = v;
            MsgfemStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            MsgfemStatus::InvalidArgument
        }
    }
}
