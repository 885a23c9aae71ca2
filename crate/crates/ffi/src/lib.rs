//! C interface: opaque handles, status codes and a per-thread error message.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rddi::cli::run::{run, RunOptions};
use rddi::cli::scenario::{load_scenario, Scenario};
use rddi::cli::selftest::selftest;
use rddi::consts::DEBYE;
use rddi::coupling::{Atom, AtomConfig, CouplingOptions, CouplingSet};
use rddi::dynamics::{weak_amplitudes, TimeGrid};
use rddi::green::GreenSource;
use rddi::rates::rate_report;
use rddi::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RddiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Model = 4,
    Numeric = 5,
    Config = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RddiStatus {
    match e {
        Error::Context { source, .. } => status_of(source),
        Error::Domain(_) | Error::Range { .. } => RddiStatus::Domain,
        Error::Model(_) => RddiStatus::Model,
        Error::Numeric(_) => RddiStatus::Numeric,
        Error::Invalid(_) => RddiStatus::InvalidArgument,
        Error::Config { .. } => RddiStatus::Config,
        Error::Io { .. } => RddiStatus::Io,
    }
}

fn fail(status: RddiStatus, msg: &str) -> RddiStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), RddiStatus>) -> RddiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RddiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(RddiStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: rddi::Result<T>) -> Result<T, RddiStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), RddiStatus> {
    if p.is_null() {
        Err(fail(RddiStatus::NullPointer, &format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Two atoms' coupling coefficients.
pub struct RddiCoupling {
    set: CouplingSet,
}

/// A validated scenario file.
pub struct RddiScenario {
    scenario: Scenario,
}

/// One atom: position in m, real dipole orientation, magnitude in debye,
/// bare transition frequency in rad/s.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RddiAtom {
    pub position: [f64; 3],
    pub dipole: [f64; 3],
    pub dipole_debye: f64,
    pub omega: f64,
}

/// Real parts of the coefficients in 1/s and rad/s.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RddiCouplingValues {
    pub gamma_aa: f64,
    pub gamma_bb: f64,
    pub gamma_ab: f64,
    pub delta_ab: f64,
    pub kappa_ab_re: f64,
    pub kappa_ab_im: f64,
    pub omega_tilde_a: f64,
    pub omega_tilde_b: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RddiRates {
    pub w1: f64,
    pub t0: f64,
    pub w2: f64,
    pub w_golden: f64,
    pub p_a0: f64,
    pub ratio: f64,
    pub corrected_ratio: f64,
}

/// Length in bytes of the last error message on this thread, without the
/// terminating NUL; 0 when there is none.
#[no_mangle]
pub extern "C" fn rddi_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copies the last error message into `buf` (NUL-terminated).
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rddi_last_error_message(buf: *mut c_char, len: usize) -> RddiStatus {
    if buf.is_null() {
        return RddiStatus::NullPointer;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_ref().map_or(&[][..], |s| s.as_bytes());
        if bytes.len() + 1 > len {
            return RddiStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        *buf.add(bytes.len()) = 0;
        RddiStatus::Ok
    })
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn rddi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds couplings from coefficients in 1/s and rad/s.
///
/// # Safety
/// `out` must be a valid pointer; the handle is released with `rddi_coupling_free`.
#[no_mangle]
pub unsafe extern "C" fn rddi_coupling_from_coefficients(
    gamma_aa: f64,
    gamma_bb: f64,
    gamma_ab: f64,
    delta_ab: f64,
    omega_tilde_a: f64,
    omega_tilde_b: f64,
    out: *mut *mut RddiCoupling,
) -> RddiStatus {
    guard(|| {
        non_null(out, "out")?;
        let set = lift(CouplingSet::from_coefficients(gamma_aa, gamma_bb, gamma_ab, delta_ab, [omega_tilde_a, omega_tilde_b]))?;
        *out = Box::into_raw(Box::new(RddiCoupling { set }));
        Ok(())
    })
}

/// Builds couplings for two atoms in free space.
///
/// # Safety
/// `a`, `b` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rddi_coupling_vacuum(
    a: *const RddiAtom,
    b: *const RddiAtom,
    lamb_shift: bool,
    out: *mut *mut RddiCoupling,
) -> RddiStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(out, "out")?;
        let build = |s: &RddiAtom| -> rddi::Result<Atom> {
            let axis = nalgebra::Vector3::from(s.dipole);
            if axis.norm() == 0.0 {
                return Err(Error::invalid("dipole orientation must be nonzero"));
            }
            Atom::new(nalgebra::Vector3::from(s.position), Atom::real_dipole(axis, s.dipole_debye * DEBYE), s.omega)
        };
        let atoms = AtomConfig::new(lift(build(&*a))?, lift(build(&*b))?);
        let opts = CouplingOptions { lamb_shift, ..CouplingOptions::default() };
        let (set, _) = lift(CouplingSet::from_geometry(&atoms, &GreenSource::Vacuum, &opts))?;
        *out = Box::into_raw(Box::new(RddiCoupling { set }));
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rddi_coupling_free(set: *mut RddiCoupling) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rddi_coupling_values(set: *const RddiCoupling, out: *mut RddiCouplingValues) -> RddiStatus {
    guard(|| {
        non_null(set, "set")?;
        non_null(out, "out")?;
        let s = &(*set).set;
        *out = RddiCouplingValues {
            gamma_aa: s.gamma_aa(),
            gamma_bb: s.gamma_bb(),
            gamma_ab: s.gamma[(0, 1)].re,
            delta_ab: s.delta[(0, 1)].re,
            kappa_ab_re: s.kappa_ab().re,
            kappa_ab_im: s.kappa_ab().im,
            omega_tilde_a: s.omega_tilde[0],
            omega_tilde_b: s.omega_tilde[1],
        };
        Ok(())
    })
}

/// Weak-coupling populations on `steps + 1` samples over `[0, t_end]`,
/// starting from atom A excited.
///
/// # Safety
/// `p_a` and `p_b` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rddi_dynamics_weak(
    set: *const RddiCoupling,
    t_end: f64,
    steps: usize,
    p_a: *mut f64,
    p_b: *mut f64,
    len: usize,
) -> RddiStatus {
    guard(|| {
        non_null(set, "set")?;
        non_null(p_a, "p_a")?;
        non_null(p_b, "p_b")?;
        if len < steps.saturating_add(1) {
            return Err(fail(RddiStatus::BufferTooSmall, &format!("need {} samples, buffer holds {len}", steps + 1)));
        }
        let grid = lift(TimeGrid::new(t_end, steps))?;
        let s = weak_amplitudes(&(*set).set, &grid);
        ptr::copy_nonoverlapping(s.p_a.as_ptr(), p_a, s.len());
        ptr::copy_nonoverlapping(s.p_b.as_ptr(), p_b, s.len());
        Ok(())
    })
}

/// Transfer rates; pass NaN for `p_a0` to use the default.
///
/// # Safety
/// `set` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rddi_rates(set: *const RddiCoupling, p_a0: f64, out: *mut RddiRates) -> RddiStatus {
    guard(|| {
        non_null(set, "set")?;
        non_null(out, "out")?;
        let r = lift(rate_report(&(*set).set, (!p_a0.is_nan()).then_some(p_a0)))?;
        *out = RddiRates {
            w1: r.w1,
            t0: r.t0,
            w2: r.w2,
            w_golden: r.w_golden,
            p_a0: r.p_a0,
            ratio: r.ratio,
            corrected_ratio: r.corrected_ratio,
        };
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rddi_scenario_load(path: *const c_char, out: *mut *mut RddiScenario) -> RddiStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let p = CStr::from_ptr(path).to_str().map_err(|_| fail(RddiStatus::InvalidArgument, "path is not UTF-8"))?;
        let scenario = lift(load_scenario(p.as_ref()))?;
        *out = Box::into_raw(Box::new(RddiScenario { scenario }));
        Ok(())
    })
}

/// Runs every analysis of the scenario. A null `output_dir` uses the
/// scenario's own.
///
/// # Safety
/// `scenario` must be valid; `output_dir` null or NUL-terminated UTF-8.
#[no_mangle]
pub unsafe extern "C" fn rddi_scenario_run(scenario: *const RddiScenario, output_dir: *const c_char, force: bool) -> RddiStatus {
    guard(|| {
        non_null(scenario, "scenario")?;
        let dir = if output_dir.is_null() {
            None
        } else {
            let s = CStr::from_ptr(output_dir)
                .to_str()
                .map_err(|_| fail(RddiStatus::InvalidArgument, "output_dir is not UTF-8"))?;
            Some(PathBuf::from(s))
        };
        lift(run(&(*scenario).scenario, &RunOptions { output_dir: dir, format: None, force }))?;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rddi_scenario_free(scenario: *mut RddiScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the invariant suite; `failures` receives the number of failed checks.
///
/// # Safety
/// `failures` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rddi_selftest(seed: u64, cases: usize, failures: *mut usize) -> RddiStatus {
    guard(|| {
        non_null(failures, "failures")?;
        let report = selftest(seed, cases);
        *failures = report.checks.iter().map(|c| c.failed).sum();
        if report.passed() {
            Ok(())
        } else {
            Err(fail(RddiStatus::Numeric, report.to_text().trim_end()))
        }
    })
}
