//! C interface to `steering-core`.
//!
//! Objects are passed as opaque handles created by `*_new`/`*_from_*`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`SteeringStatus`]; on failure a message is available from
//! [`steering_last_error`] until the next failing call on the same thread.
//! Matrices cross the boundary as separate row-major real and imaginary
//! arrays. Indices are 0-based.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use steering_core::assemblage::{random_ns, validate, Assemblage, Scenario, Tolerances};
use steering_core::freeprob::{kesten_estimate, random_reflections, yanyin_assemblage, yanyin_sum};
use steering_core::freeword::count;
use steering_core::functionals::{seesaw, tensor_bound};
use steering_core::gns::check_assemblage;
use steering_core::hierarchy::{build_moment_problem, dykstra_feasibility};
use steering_core::io::{assemblage_from_str, assemblage_to_string, realization_to_string};
use steering_core::realization::{gisin_realize, verify_realization, QuantumRealization};
use steering_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SteeringStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    /// The input is well formed but fails a mathematical precondition.
    Domain = 5,
    Numerical = 6,
    Panic = 7,
}

/// Opaque assemblage handle.
pub struct SteeringAssemblage(Assemblage);

/// Opaque realization handle.
pub struct SteeringRealization(QuantumRealization);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SteeringStatus {
    match e {
        Error::Parse(_) | Error::Json(_) => SteeringStatus::Parse,
        Error::Io(_) => SteeringStatus::Io,
        Error::InvalidScenario(_) | Error::InvalidLevel | Error::OddDimension(_) | Error::BadSetting { .. } => SteeringStatus::InvalidArgument,
        Error::NumericalBreakdown(_) | Error::NonFinite | Error::LinearProgram(_) => SteeringStatus::Numerical,
        _ => SteeringStatus::Domain,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SteeringStatus, String)>) -> SteeringStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SteeringStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SteeringStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (SteeringStatus, String)>;
}

impl<T> IntoFfi<T> for steering_core::Result<T> {
    fn ffi(self) -> Result<T, (SteeringStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (SteeringStatus, String) {
    (SteeringStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SteeringStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (SteeringStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SteeringStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SteeringStatus::Parse, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, (SteeringStatus, String)> {
    CString::new(s).map(CString::into_raw).map_err(|_| (SteeringStatus::Numerical, "string contains NUL".into()))
}

/// Message of the last failed call on this thread, or NULL. Owned by the library.
#[no_mangle]
pub extern "C" fn steering_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn steering_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn steering_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses assemblage JSON (1-based indices in the file).
#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_from_json(json: *const c_char, result: *mut *mut SteeringAssemblage) -> SteeringStatus {
    guard(|| {
        let result = out(result, "result")?;
        let a = assemblage_from_str(read_str(json, "json")?).ffi()?;
        *result = Box::into_raw(Box::new(SteeringAssemblage(a)));
        Ok(())
    })
}

/// Random no-signaling assemblage; identical to the library generator for the same seed.
#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_random(
    m: usize,
    k: usize,
    n: usize,
    seed: u64,
    result: *mut *mut SteeringAssemblage,
) -> SteeringStatus {
    guard(|| {
        let result = out(result, "result")?;
        let scenario = Scenario::new(m, k, n).ffi()?;
        *result = Box::into_raw(Box::new(SteeringAssemblage(random_ns(scenario, seed))));
        Ok(())
    })
}

/// Builds an assemblage from `m·k` row-major `n × n` blocks ordered by setting, then outcome.
#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_new(
    m: usize,
    k: usize,
    n: usize,
    re: *const f64,
    im: *const f64,
    result: *mut *mut SteeringAssemblage,
) -> SteeringStatus {
    guard(|| {
        let result = out(result, "result")?;
        let scenario = Scenario::new(m, k, n).ffi()?;
        let len = m.checked_mul(k).and_then(|v| v.checked_mul(n * n)).ok_or((SteeringStatus::InvalidArgument, "size overflow".into()))?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let (re, im) = (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len));
        let a = Assemblage::from_fn(scenario, |a, x| {
            let offset = (x * k + a) * n * n;
            steering_core::numkernel::ComplexMatrix::from_fn(n, n, |i, j| {
                let idx = offset + i * n + j;
                steering_core::numkernel::Complex64::new(re[idx], im[idx])
            })
        })
        .ffi()?;
        *result = Box::into_raw(Box::new(SteeringAssemblage(a)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_free(handle: *mut SteeringAssemblage) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_shape(
    handle: *const SteeringAssemblage,
    m: *mut usize,
    k: *mut usize,
    n: *mut usize,
) -> SteeringStatus {
    guard(|| {
        let s = deref(handle, "handle")?.0.scenario();
        *out(m, "m")? = s.settings;
        *out(k, "k")? = s.outcomes;
        *out(n, "n")? = s.dim;
        Ok(())
    })
}

/// Copies `σ_{a|x}` into `n·n` row-major buffers.
#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_element(
    handle: *const SteeringAssemblage,
    a: usize,
    x: usize,
    re: *mut f64,
    im: *mut f64,
) -> SteeringStatus {
    guard(|| {
        let asm = &deref(handle, "handle")?.0;
        let s = asm.scenario();
        if a >= s.outcomes || x >= s.settings {
            return Err((SteeringStatus::InvalidArgument, format!("(a, x) = ({a}, {x}) out of range")));
        }
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let n = s.dim;
        let (re, im) = (std::slice::from_raw_parts_mut(re, n * n), std::slice::from_raw_parts_mut(im, n * n));
        for (i, z) in asm.element(a, x).as_slice().iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Assemblage JSON; release with [`steering_string_free`].
#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_to_json(handle: *const SteeringAssemblage, result: *mut *mut c_char) -> SteeringStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = into_c_string(assemblage_to_string(&deref(handle, "handle")?.0).ffi()?)?;
        Ok(())
    })
}

/// Worst violation of positivity, no-signaling and normalization; `passes` is 1 if all are within `tol`.
#[no_mangle]
pub unsafe extern "C" fn steering_assemblage_validate(
    handle: *const SteeringAssemblage,
    tol: f64,
    worst: *mut f64,
    passes: *mut i32,
) -> SteeringStatus {
    guard(|| {
        if !(tol.is_finite() && tol > 0.0) {
            return Err((SteeringStatus::InvalidArgument, format!("tolerance {tol} is not positive")));
        }
        let r = validate(&deref(handle, "handle")?.0, &Tolerances::uniform(tol)).ffi()?;
        *out(worst, "worst")? = r.worst();
        *out(passes, "passes")? = i32::from(r.passes());
        Ok(())
    })
}

/// Purification-based realization and its reconstruction error.
#[no_mangle]
pub unsafe extern "C" fn steering_realize(
    handle: *const SteeringAssemblage,
    result: *mut *mut SteeringRealization,
    error: *mut f64,
) -> SteeringStatus {
    guard(|| {
        let result = out(result, "result")?;
        let error = out(error, "error")?;
        let a = &deref(handle, "handle")?.0;
        let r = gisin_realize(a).ffi()?;
        *error = verify_realization(&r, a).ffi()?;
        *result = Box::into_raw(Box::new(SteeringRealization(r)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn steering_realization_free(handle: *mut SteeringRealization) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Untrusted dimension `dA`.
#[no_mangle]
pub unsafe extern "C" fn steering_realization_dim(handle: *const SteeringRealization, dim_a: *mut usize) -> SteeringStatus {
    guard(|| {
        *out(dim_a, "dim_a")? = deref(handle, "handle")?.0.dim_a;
        Ok(())
    })
}

/// Realization JSON; release with [`steering_string_free`].
#[no_mangle]
pub unsafe extern "C" fn steering_realization_to_json(handle: *const SteeringRealization, result: *mut *mut c_char) -> SteeringStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = into_c_string(realization_to_string(&deref(handle, "handle")?.0, None).ffi()?)?;
        Ok(())
    })
}

/// GNS dimension and the worst residual of the commutant construction.
#[no_mangle]
pub unsafe extern "C" fn steering_gns_check(handle: *const SteeringAssemblage, gns_dim: *mut usize, worst: *mut f64) -> SteeringStatus {
    guard(|| {
        let (_, _, res) = check_assemblage(&deref(handle, "handle")?.0).ffi()?;
        *out(gns_dim, "gns_dim")? = res.gns_dim;
        *out(worst, "worst")? = res.worst();
        Ok(())
    })
}

/// Moment-hierarchy feasibility at `level`; `feasible` is 1 if the residual is within `tol`.
#[no_mangle]
pub unsafe extern "C" fn steering_hierarchy_feasibility(
    handle: *const SteeringAssemblage,
    level: usize,
    max_iters: usize,
    tol: f64,
    residual: *mut f64,
    feasible: *mut i32,
) -> SteeringStatus {
    guard(|| {
        let problem = build_moment_problem(&deref(handle, "handle")?.0, level).ffi()?;
        let r = dykstra_feasibility(&problem, max_iters, tol);
        *out(residual, "residual")? = r.residual;
        *out(feasible, "feasible")? = i32::from(r.is_feasible());
        Ok(())
    })
}

/// `2√(m−1)/m`.
#[no_mangle]
pub extern "C" fn steering_tensor_bound(m: usize) -> f64 {
    tensor_bound(m)
}

/// Best see-saw value over `restarts` seeded restarts.
#[no_mangle]
pub unsafe extern "C" fn steering_seesaw(m: usize, dim_a: usize, dim_b: usize, restarts: usize, seed: u64, value: *mut f64) -> SteeringStatus {
    guard(|| {
        let value = out(value, "value")?;
        *value = seesaw(m, dim_a, dim_b, restarts, seed).ffi()?.value;
        Ok(())
    })
}

/// Mean and maximum of `‖Σ_x u_x‖` over random reflection families.
#[no_mangle]
pub unsafe extern "C" fn steering_kesten_estimate(
    m: usize,
    d: usize,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    max: *mut f64,
) -> SteeringStatus {
    guard(|| {
        let s = kesten_estimate(m, d, trials, seed).ffi()?;
        *out(mean, "mean")? = s.mean;
        *out(max, "max")? = s.max;
        Ok(())
    })
}

/// `Σ_x Tr((σ_{0|x} − σ_{1|x}) u_x)` for a random reflection family.
#[no_mangle]
pub unsafe extern "C" fn steering_yanyin_sum(m: usize, d: usize, seed: u64, value: *mut f64) -> SteeringStatus {
    guard(|| {
        let value = out(value, "value")?;
        let f = random_reflections(m, d, seed).ffi()?;
        *value = yanyin_sum(&yanyin_assemblage(&f).ffi()?, &f).ffi()?;
        Ok(())
    })
}

/// Number of reduced words of length at most `max_len`, saturated to `UINT64_MAX`.
#[no_mangle]
pub unsafe extern "C" fn steering_word_count(m: usize, k: usize, max_len: usize, result: *mut u64) -> SteeringStatus {
    guard(|| {
        if m == 0 || k == 0 {
            return Err((SteeringStatus::InvalidArgument, "m and k must be positive".into()));
        }
        *out(result, "result")? = u64::try_from(count(m, k, max_len)).unwrap_or(u64::MAX);
        Ok(())
    })
}
