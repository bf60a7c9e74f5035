//! C interface to the boundary element solver. Problems and solutions
//! are opaque handles; every fallible call returns a status code and
//! leaves a message retrievable with `hibem_last_error`.
//!
//! All handles must be released with their matching free function.
//! Handles are not thread-safe; the last-error message is per thread.

use hibem::input::ProblemInput;
use hibem::study::{run_study, solve_problem, SolvedProblem, StudyConfig, StudyKind};
use hibem::{Error, Point2};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

/// Result of every fallible interface call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HibemStatus {
    /// Success.
    Ok = 0,
    /// Malformed input: JSON, geometry, configuration or a null or
    /// non-UTF-8 argument.
    InvalidInput = 1,
    /// The iterative solver did not reach the requested tolerance.
    NoConvergence = 2,
    /// Internal failure (singular system, oversized dense request, IO).
    Runtime = 3,
}

/// Study selector for `hibem_run_study`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HibemStudyKind {
    Solve = 0,
    Convergence = 1,
    Compression = 2,
}

/// Discretization and solver parameters. Obtain defaults from
/// `hibem_options_default` and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct HibemOptions {
    /// Polynomial degree of the Cauchy data spaces.
    pub degree: usize,
    /// Chebyshev interpolation order of the far field.
    pub interp_order: usize,
    /// Admissibility parameter of the block cluster tree.
    pub eta: f64,
    /// Cluster leaf size.
    pub n_min: usize,
    /// Refinement levels; spans per patch double each level.
    pub levels: usize,
    /// Iterative solver tolerance.
    pub tol: f64,
    /// Seed of the deterministic random vectors in studies.
    pub seed: u64,
}

/// Opaque parsed problem.
pub struct HibemProblem {
    input: ProblemInput,
}

/// Opaque solved problem.
pub struct HibemSolution {
    solved: SolvedProblem,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(err: &Error) -> HibemStatus {
    set_error(&err.to_string());
    match err {
        Error::NoConvergence { .. } => HibemStatus::NoConvergence,
        Error::Domain(_)
        | Error::Contract(_)
        | Error::Config(_)
        | Error::Geometry { .. }
        | Error::Unsupported(_)
        | Error::Json(_) => HibemStatus::InvalidInput,
        _ => HibemStatus::Runtime,
    }
}

fn null_arg(name: &str) -> HibemStatus {
    set_error(&format!("null argument: {name}"));
    HibemStatus::InvalidInput
}

/// # Safety
/// `s` must be a valid NUL-terminated string or null.
unsafe fn utf8_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, HibemStatus> {
    if s.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(&format!("argument {name} is not valid UTF-8"));
        HibemStatus::InvalidInput
    })
}

fn study_config(opts: &HibemOptions, kind: StudyKind) -> StudyConfig {
    StudyConfig {
        kind,
        degree: opts.degree,
        interp_order: opts.interp_order,
        eta: opts.eta,
        n_min: opts.n_min,
        levels: opts.levels,
        tol: opts.tol,
        seed: opts.seed,
        quad: Default::default(),
    }
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn hibem_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fill `out` with the default options.
#[no_mangle]
pub extern "C" fn hibem_options_default(out: *mut HibemOptions) -> HibemStatus {
    if out.is_null() {
        return null_arg("out");
    }
    unsafe {
        *out = HibemOptions {
            degree: 2,
            interp_order: 6,
            eta: 1.0,
            n_min: 16,
            levels: 3,
            tol: 1e-8,
            seed: 0,
        };
    }
    HibemStatus::Ok
}

/// Parse a problem from a JSON description.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hibem_problem_parse(
    json: *const c_char,
    out: *mut *mut HibemProblem,
) -> HibemStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let text = match utf8_arg(json, "json") {
        Ok(t) => t,
        Err(s) => return s,
    };
    match hibem::input::parse(text) {
        Ok(input) => {
            *out = Box::into_raw(Box::new(HibemProblem { input }));
            HibemStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Parse a problem from a JSON file on disk.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hibem_problem_load(
    path: *const c_char,
    out: *mut *mut HibemProblem,
) -> HibemStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let path = match utf8_arg(path, "path") {
        Ok(t) => t,
        Err(s) => return s,
    };
    match hibem::input::load(path) {
        Ok(input) => {
            *out = Box::into_raw(Box::new(HibemProblem { input }));
            HibemStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Release a problem handle. Null is ignored.
///
/// # Safety
/// `problem` must come from a parse or load call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hibem_problem_free(problem: *mut HibemProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solve the boundary value problem with boundary data manufactured from
/// the problem sources.
///
/// # Safety
/// `problem` and `opts` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hibem_solve(
    problem: *const HibemProblem,
    opts: *const HibemOptions,
    out: *mut *mut HibemSolution,
) -> HibemStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    if problem.is_null() {
        return null_arg("problem");
    }
    if opts.is_null() {
        return null_arg("opts");
    }
    let cfg = study_config(&*opts, StudyKind::Solve);
    match solve_problem(&(*problem).input, &cfg) {
        Ok(solved) => {
            *out = Box::into_raw(Box::new(HibemSolution { solved }));
            HibemStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Displacement at an interior point; writes two values to `u_out`.
///
/// # Safety
/// `solution` must be valid; `u_out` must point to at least two doubles.
#[no_mangle]
pub unsafe extern "C" fn hibem_solution_eval(
    solution: *const HibemSolution,
    x: f64,
    y: f64,
    u_out: *mut f64,
) -> HibemStatus {
    if solution.is_null() {
        return null_arg("solution");
    }
    if u_out.is_null() {
        return null_arg("u_out");
    }
    match (*solution).solved.eval(Point2::new(x, y)) {
        Ok(u) => {
            *u_out = u[0];
            *u_out.add(1) = u[1];
            HibemStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Release a solution handle. Null is ignored.
///
/// # Safety
/// `solution` must come from `hibem_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hibem_solution_free(solution: *mut HibemSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Run a study and return its CSV output as a NUL-terminated string.
/// Release the string with `hibem_string_free`.
///
/// # Safety
/// `problem` and `opts` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hibem_run_study(
    problem: *const HibemProblem,
    opts: *const HibemOptions,
    kind: HibemStudyKind,
    out: *mut *mut c_char,
) -> HibemStatus {
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    if problem.is_null() {
        return null_arg("problem");
    }
    if opts.is_null() {
        return null_arg("opts");
    }
    let kind = match kind {
        HibemStudyKind::Solve => StudyKind::Solve,
        HibemStudyKind::Convergence => StudyKind::Convergence,
        HibemStudyKind::Compression => StudyKind::Compression,
    };
    let cfg = study_config(&*opts, kind);
    let mut buf = Vec::new();
    match run_study(&(*problem).input, &cfg, &mut buf) {
        Ok(()) => {
            let c = match CString::new(buf) {
                Ok(c) => c,
                Err(_) => {
                    set_error("study output contained an interior NUL byte");
                    return HibemStatus::Runtime;
                }
            };
            *out = c.into_raw();
            HibemStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from `hibem_run_study` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hibem_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
