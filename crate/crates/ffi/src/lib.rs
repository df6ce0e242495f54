//! C ABI for `splitplan`.
//!
//! Objects cross the boundary as opaque handles allocated by this library
//! and released with the matching `*_free` function. Every fallible call
//! returns a [`SplitplanStatus`]; on failure a description is available
//! from [`splitplan_last_error`] on the same thread. Panics never unwind
//! into C: they are caught and reported as `SPLITPLAN_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use splitplan::planner::{self, PlanResult};
use splitplan::profile::{self, LayerProfile};
use splitplan::scenario::{self, Scenario};
use splitplan::{simulator, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitplanStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    Io = 3,
    Parse = 4,
    Internal = 5,
    Panic = 6,
}

/// Layer profile handle.
pub struct SplitplanProfile(LayerProfile);

/// Scenario handle.
pub struct SplitplanScenario(Scenario);

/// Plan handle: best cuts, allocation and the full search table.
pub struct SplitplanPlan(PlanResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SplitplanStatus {
    match e {
        Error::Io { .. } => SplitplanStatus::Io,
        Error::Parse { .. } => SplitplanStatus::Parse,
        e if e.is_internal() => SplitplanStatus::Internal,
        _ => SplitplanStatus::InvalidInput,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SplitplanStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SplitplanStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed for `{what}`"));
            SplitplanStatus::NullArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("panic inside splitplan".into());
            SplitplanStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_slot<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvariantViolation("path is not valid UTF-8".into())))?;
    Ok(PathBuf::from(s))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn splitplan_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Bundled ResNet-18 block-level profile.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn splitplan_profile_resnet18(out: *mut *mut SplitplanProfile) -> SplitplanStatus {
    guard(|| {
        *out_slot(out, "out")? = boxed(SplitplanProfile(profile::resnet18_profile()));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_profile_load(path: *const c_char, out: *mut *mut SplitplanProfile) -> SplitplanStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let p = LayerProfile::load(path_arg(path)?)?;
        *slot = boxed(SplitplanProfile(p));
        Ok(())
    })
}

/// Number of layers, or 0 for a NULL handle.
///
/// # Safety
/// `profile` must be NULL or a live profile handle.
#[no_mangle]
pub unsafe extern "C" fn splitplan_profile_layer_count(profile: *const SplitplanProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.layer_count())
}

/// # Safety
/// `profile` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splitplan_profile_free(profile: *mut SplitplanProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Seeded random scenario with `n_clients` clients sharing `profile`.
///
/// # Safety
/// `profile` must be a live profile handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_scenario_sample(
    n_clients: usize,
    capacity_hz: f64,
    profile: *const SplitplanProfile,
    seed: u64,
    out: *mut *mut SplitplanScenario,
) -> SplitplanStatus {
    guard(|| {
        let p = borrow(profile, "profile")?;
        let slot = out_slot(out, "out")?;
        if !(capacity_hz.is_finite() && capacity_hz > 0.0) {
            return Err(Error::InvariantViolation(format!("capacity_hz must be positive (got {capacity_hz})")).into());
        }
        let s = scenario::sample_scenario(n_clients, capacity_hz, &p.0, seed)?;
        *slot = boxed(SplitplanScenario(s));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_scenario_load(path: *const c_char, out: *mut *mut SplitplanScenario) -> SplitplanStatus {
    guard(|| {
        let slot = out_slot(out, "out")?;
        let s = Scenario::load(path_arg(path)?)?;
        *slot = boxed(SplitplanScenario(s));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be live; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn splitplan_scenario_save(scenario: *const SplitplanScenario, path: *const c_char) -> SplitplanStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        s.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn splitplan_scenario_client_count(scenario: *const SplitplanScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.n_clients())
}

/// Changes the server budget in place.
///
/// # Safety
/// `scenario` must be a live, exclusively accessed handle.
#[no_mangle]
pub unsafe extern "C" fn splitplan_scenario_set_capacity(scenario: *mut SplitplanScenario, capacity_hz: f64) -> SplitplanStatus {
    guard(|| {
        let s = out_slot(scenario, "scenario")?;
        let mut server = s.0.server;
        server.capacity_hz = capacity_hz;
        server.validate()?;
        s.0.server = server;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splitplan_scenario_free(scenario: *mut SplitplanScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

unsafe fn plan_with(
    scenario: *const SplitplanScenario,
    out: *mut *mut SplitplanPlan,
    make: impl FnOnce(&Scenario) -> Result<PlanResult, Error>,
) -> SplitplanStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let slot = out_slot(out, "out")?;
        *slot = boxed(SplitplanPlan(make(&s.0)?));
        Ok(())
    })
}

/// Optimal cut pair with the optimal server allocation.
///
/// # Safety
/// `scenario` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_solve(scenario: *const SplitplanScenario, out: *mut *mut SplitplanPlan) -> SplitplanStatus {
    plan_with(scenario, out, planner::solve_lscra)
}

/// Optimal cut pair with the server budget split evenly.
///
/// # Safety
/// `scenario` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_benchmark_even_optimal(
    scenario: *const SplitplanScenario,
    out: *mut *mut SplitplanPlan,
) -> SplitplanStatus {
    plan_with(scenario, out, planner::benchmark_even_optimal)
}

/// Runner-up cut pair with the server budget split evenly.
///
/// # Safety
/// `scenario` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_benchmark_even_suboptimal(
    scenario: *const SplitplanScenario,
    out: *mut *mut SplitplanPlan,
) -> SplitplanStatus {
    plan_with(scenario, out, planner::benchmark_even_suboptimal)
}

/// # Safety
/// `plan` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_plan_round_latency(plan: *const SplitplanPlan, out: *mut f64) -> SplitplanStatus {
    guard(|| {
        let p = borrow(plan, "plan")?;
        *out_slot(out, "out")? = p.0.round_latency;
        Ok(())
    })
}

/// Writes the 1-based cut layers of the plan.
///
/// # Safety
/// `plan` must be live; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_plan_cuts(plan: *const SplitplanPlan, first_cut: *mut usize, second_cut: *mut usize) -> SplitplanStatus {
    guard(|| {
        let p = borrow(plan, "plan")?;
        let first = out_slot(first_cut, "first_cut")?;
        let second = out_slot(second_cut, "second_cut")?;
        *first = p.0.best_cuts.first_cut;
        *second = p.0.best_cuts.second_cut;
        Ok(())
    })
}

/// Copies up to `capacity` per-client shares into `buffer` and stores the
/// number of clients in `needed`. Pass a NULL buffer to query the length.
///
/// # Safety
/// `plan` must be live; `buffer` must be NULL or point to `capacity`
/// writable doubles; `needed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_plan_shares(
    plan: *const SplitplanPlan,
    buffer: *mut f64,
    capacity: usize,
    needed: *mut usize,
) -> SplitplanStatus {
    guard(|| {
        let p = borrow(plan, "plan")?;
        let shares = &p.0.allocation.shares;
        *out_slot(needed, "needed")? = shares.len();
        if !buffer.is_null() {
            let n = shares.len().min(capacity);
            ptr::copy_nonoverlapping(shares.as_ptr(), buffer, n);
        }
        Ok(())
    })
}

/// Serializes the plan to JSON. Release the string with [`splitplan_string_free`].
///
/// # Safety
/// `plan` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_plan_to_json(plan: *const SplitplanPlan, out: *mut *mut c_char) -> SplitplanStatus {
    guard(|| {
        let p = borrow(plan, "plan")?;
        let slot = out_slot(out, "out")?;
        let json = serde_json::to_string(&p.0).expect("plan serialization is infallible");
        *slot = CString::new(json).expect("JSON has no NUL bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `plan` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splitplan_plan_free(plan: *mut SplitplanPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn splitplan_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Simulates one round of `plan` on `scenario` and writes the makespan.
///
/// # Safety
/// `scenario` and `plan` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn splitplan_simulate_makespan(
    scenario: *const SplitplanScenario,
    plan: *const SplitplanPlan,
    out: *mut f64,
) -> SplitplanStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let p = borrow(plan, "plan")?;
        let slot = out_slot(out, "out")?;
        let trace = simulator::simulate_round(&s.0, p.0.best_cuts, &p.0.allocation)?;
        *slot = trace.round_makespan;
        Ok(())
    })
}
