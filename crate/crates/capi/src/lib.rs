//! C ABI for the recurrence toolkit.
//!
//! The surface follows the usual opaque-handle pattern: constructors
//! return a status code and write a handle through an out-pointer, every
//! handle has a matching `_free`, and scalar accessors never fail (they
//! return sentinel values for null handles). `include/recur.h` is
//! generated by cbindgen at build time.
//!
//! Absent estimate fields are encoded as NaN plus a diagnostics bitmask
//! (`RECUR_DIAG_*`).

use std::ffi::{c_char, CStr};
use std::ptr;
use std::slice;

use recur_core::estimate::{estimate_from_observables, simpson_index, Diagnostic};
use recur_core::model::{limit_constants, zeta, ModelParams};
use recur_core::sim::{simulate, simulate_capacity, SimOpts, SimOutcome, Termination};

/// Status code returned by fallible entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecurStatus {
    RecurOk = 0,
    RecurNullPointer = 1,
    RecurInvalidParams = 2,
    RecurInvalidCapacity = 3,
    RecurInvalidArgument = 4,
}

/// `Z0 = 0` at recurrence; `lambda0_hat` is undefined.
pub const RECUR_DIAG_LAMBDA0_UNDEFINED: u32 = 1 << 0;
/// `lambda0_hat >= 0`.
pub const RECUR_DIAG_LAMBDA0_NOT_NEGATIVE: u32 = 1 << 1;
/// No surviving clones in the spectrum.
pub const RECUR_DIAG_NO_SURVIVING_CLONES: u32 = 1 << 2;
/// `I·R <= 2`; the `U` statistic is undefined.
pub const RECUR_DIAG_DIVERSITY_PRODUCT_TOO_SMALL: u32 = 1 << 3;
/// `lambda1_hat <= 0`.
pub const RECUR_DIAG_LAMBDA1_NOT_POSITIVE: u32 = 1 << 4;
/// Preconditions violated (`gamma <= 0`, `n < 2`, bad `z0`).
pub const RECUR_DIAG_INVALID_OBSERVATION: u32 = 1 << 5;

/// Opaque validated parameter set.
pub struct RecurParams(ModelParams);

/// Opaque finished trajectory.
pub struct RecurOutcome(SimOutcome);

/// Estimates by value; absent fields are NaN with a diagnostics bit set.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RecurEstimates {
    pub lambda0_hat: f64,
    pub lambda1_hat: f64,
    pub r1_hat: f64,
    pub alpha_hat: f64,
    pub u_n: f64,
    /// Bitwise OR of the `RECUR_DIAG_*` flags; 0 means complete.
    pub diagnostics: u32,
}

/// Limit constants of the recurrence observables.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RecurLimitConstants {
    pub clone_count_coef: f64,
    pub simpson_coef: f64,
    pub u_limit: f64,
    pub survival_prob: f64,
    pub extinction_prob: f64,
}

fn diag_bit(d: Diagnostic) -> u32 {
    match d {
        Diagnostic::Lambda0Undefined => RECUR_DIAG_LAMBDA0_UNDEFINED,
        Diagnostic::Lambda0NotNegative => RECUR_DIAG_LAMBDA0_NOT_NEGATIVE,
        Diagnostic::NoSurvivingClones => RECUR_DIAG_NO_SURVIVING_CLONES,
        Diagnostic::DiversityProductTooSmall => RECUR_DIAG_DIVERSITY_PRODUCT_TOO_SMALL,
        Diagnostic::Lambda1NotPositive => RECUR_DIAG_LAMBDA1_NOT_POSITIVE,
        Diagnostic::InvalidObservation => RECUR_DIAG_INVALID_OBSERVATION,
    }
}

/// Validates and allocates a parameter set.
///
/// # Safety
/// `out` must be a valid pointer; the returned handle must be released
/// with `recur_params_free`.
#[no_mangle]
pub unsafe extern "C" fn recur_params_new(
    n: u64,
    alpha: f64,
    r0: f64,
    d0: f64,
    r1: f64,
    d1: f64,
    beta: f64,
    out: *mut *mut RecurParams,
) -> RecurStatus {
    if out.is_null() {
        return RecurStatus::RecurNullPointer;
    }
    let params = ModelParams { n, alpha, r0, d0, r1, d1, beta };
    match params.validated() {
        Ok(valid) => {
            *out = Box::into_raw(Box::new(RecurParams(valid)));
            RecurStatus::RecurOk
        }
        Err(_) => {
            *out = ptr::null_mut();
            RecurStatus::RecurInvalidParams
        }
    }
}

/// Releases a parameter handle; null is a no-op.
///
/// # Safety
/// `p` must be null or a pointer from `recur_params_new`.
#[no_mangle]
pub unsafe extern "C" fn recur_params_free(p: *mut RecurParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// True when the estimator consistency condition
/// `alpha < min(1, lambda1/|lambda0|)` fails for these parameters.
///
/// # Safety
/// `p` must be a valid parameter handle.
#[no_mangle]
pub unsafe extern "C" fn recur_params_consistency_warning(p: *const RecurParams) -> bool {
    p.as_ref().map(|p| p.0.consistency_warning()).unwrap_or(false)
}

/// Deterministic recurrence-time proxy `zeta_n` (root of `Phi1(t) = n`).
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn recur_zeta(p: *const RecurParams, out: *mut f64) -> RecurStatus {
    let (Some(p), false) = (p.as_ref(), out.is_null()) else {
        return RecurStatus::RecurNullPointer;
    };
    *out = zeta(&p.0);
    RecurStatus::RecurOk
}

/// Large-n limits of the recurrence observables.
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn recur_limit_constants(
    p: *const RecurParams,
    out: *mut RecurLimitConstants,
) -> RecurStatus {
    let (Some(p), false) = (p.as_ref(), out.is_null()) else {
        return RecurStatus::RecurNullPointer;
    };
    let lc = limit_constants(&p.0);
    *out = RecurLimitConstants {
        clone_count_coef: lc.clone_count_coef,
        simpson_coef: lc.simpson_coef,
        u_limit: lc.u_limit,
        survival_prob: lc.survival_prob,
        extinction_prob: lc.extinction_prob,
    };
    RecurStatus::RecurOk
}

/// Runs one exact trajectory to recurrence/extinction/cap.
/// `max_events = 0` selects the default cap.
///
/// # Safety
/// `p` and `out` must be valid pointers; release the outcome with
/// `recur_outcome_free`.
#[no_mangle]
pub unsafe extern "C" fn recur_simulate(
    p: *const RecurParams,
    seed: u64,
    max_events: u64,
    out: *mut *mut RecurOutcome,
) -> RecurStatus {
    recur_simulate_impl(p, None, seed, max_events, out)
}

/// Capacity variant: resistant births are thinned by
/// `max(0, 1 - (Z0+Z1)/capacity)`. `capacity` must exceed `beta * n`.
///
/// # Safety
/// As for `recur_simulate`.
#[no_mangle]
pub unsafe extern "C" fn recur_simulate_capacity(
    p: *const RecurParams,
    capacity: u64,
    seed: u64,
    max_events: u64,
    out: *mut *mut RecurOutcome,
) -> RecurStatus {
    recur_simulate_impl(p, Some(capacity), seed, max_events, out)
}

unsafe fn recur_simulate_impl(
    p: *const RecurParams,
    capacity: Option<u64>,
    seed: u64,
    max_events: u64,
    out: *mut *mut RecurOutcome,
) -> RecurStatus {
    let (Some(p), false) = (p.as_ref(), out.is_null()) else {
        return RecurStatus::RecurNullPointer;
    };
    let opts = SimOpts {
        max_events: if max_events == 0 {
            recur_core::sim::DEFAULT_MAX_EVENTS
        } else {
            max_events
        },
        ..Default::default()
    };
    let outcome = match capacity {
        None => simulate(&p.0, seed, &opts),
        Some(c) => match simulate_capacity(&p.0, c, seed, &opts) {
            Ok(o) => o,
            Err(_) => {
                *out = ptr::null_mut();
                return RecurStatus::RecurInvalidCapacity;
            }
        },
    };
    *out = Box::into_raw(Box::new(RecurOutcome(outcome)));
    RecurStatus::RecurOk
}

/// Releases an outcome handle; null is a no-op.
///
/// # Safety
/// `o` must be null or a pointer from a simulate call.
#[no_mangle]
pub unsafe extern "C" fn recur_outcome_free(o: *mut RecurOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// 0 = recurrence, 1 = extinct, 2 = cap reached, -1 = null handle.
///
/// # Safety
/// `o` must be null or a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn recur_outcome_termination(o: *const RecurOutcome) -> i32 {
    match o.as_ref() {
        None => -1,
        Some(o) => match o.0.termination {
            Termination::Recurrence => 0,
            Termination::Extinct => 1,
            Termination::CapReached => 2,
        },
    }
}

/// Recurrence time, or NaN when the run did not recur.
///
/// # Safety
/// `o` must be null or a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn recur_outcome_gamma(o: *const RecurOutcome) -> f64 {
    o.as_ref().and_then(|o| o.0.gamma).unwrap_or(f64::NAN)
}

/// Sensitive count at termination.
///
/// # Safety
/// `o` must be null or a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn recur_outcome_z0(o: *const RecurOutcome) -> u64 {
    o.as_ref().map(|o| o.0.z0_at_end).unwrap_or(0)
}

/// Total executed events.
///
/// # Safety
/// `o` must be null or a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn recur_outcome_event_count(o: *const RecurOutcome) -> u64 {
    o.as_ref().map(|o| o.0.event_count).unwrap_or(0)
}

/// Ledger length (clones ever founded, including extinct ones).
///
/// # Safety
/// `o` must be null or a valid outcome handle.
#[no_mangle]
pub unsafe extern "C" fn recur_outcome_clone_count(o: *const RecurOutcome) -> usize {
    o.as_ref().map(|o| o.0.clone_ledger.len()).unwrap_or(0)
}

/// Copies up to `cap` ledger clone sizes into `buf` and returns the full
/// ledger length (call with `cap = 0` to size the buffer).
///
/// # Safety
/// `buf` must point to at least `cap` writable `uint64_t`s.
#[no_mangle]
pub unsafe extern "C" fn recur_outcome_clone_sizes(
    o: *const RecurOutcome,
    buf: *mut u64,
    cap: usize,
) -> usize {
    let Some(o) = o.as_ref() else { return 0 };
    let len = o.0.clone_ledger.len();
    if !buf.is_null() && cap > 0 {
        let dst = slice::from_raw_parts_mut(buf, cap.min(len));
        for (d, c) in dst.iter_mut().zip(&o.0.clone_ledger) {
            *d = c.size;
        }
    }
    len
}

/// Simpson's Index of a size spectrum (0 for empty input).
///
/// # Safety
/// `sizes` must point to `len` readable `uint64_t`s (or be null with
/// `len = 0`).
#[no_mangle]
pub unsafe extern "C" fn recur_simpson_index(sizes: *const u64, len: usize) -> f64 {
    if sizes.is_null() || len == 0 {
        return 0.0;
    }
    simpson_index(slice::from_raw_parts(sizes, len))
}

/// Runs the plug-in estimators on `(n, gamma, z0, clone sizes)`.
/// Absent fields come back as NaN with a diagnostics bit set; the call
/// itself only fails on null pointers.
///
/// # Safety
/// `sizes` must point to `len` readable `uint64_t`s (or be null with
/// `len = 0`); `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn recur_estimate(
    n: u64,
    gamma: f64,
    z0: f64,
    sizes: *const u64,
    len: usize,
    out: *mut RecurEstimates,
) -> RecurStatus {
    if out.is_null() || (sizes.is_null() && len > 0) {
        return RecurStatus::RecurNullPointer;
    }
    let spectrum: &[u64] =
        if len == 0 { &[] } else { slice::from_raw_parts(sizes, len) };
    let i_n = recur_core::estimate::surviving_clone_count(spectrum);
    let r_n = simpson_index(spectrum);
    let est = estimate_from_observables(n, gamma, z0, i_n as f64, r_n);
    let mut diagnostics = 0u32;
    for d in &est.diagnostics {
        diagnostics |= diag_bit(*d);
    }
    *out = RecurEstimates {
        lambda0_hat: est.lambda0_hat.unwrap_or(f64::NAN),
        lambda1_hat: est.lambda1_hat.unwrap_or(f64::NAN),
        r1_hat: est.r1_hat.unwrap_or(f64::NAN),
        alpha_hat: est.alpha_hat.unwrap_or(f64::NAN),
        u_n: est.u_n.unwrap_or(f64::NAN),
        diagnostics,
    };
    RecurStatus::RecurOk
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn recur_status_message(status: RecurStatus) -> *const c_char {
    let msg: &CStr = match status {
        RecurStatus::RecurOk => c"ok",
        RecurStatus::RecurNullPointer => c"null pointer argument",
        RecurStatus::RecurInvalidParams => c"parameters violate the model constraints",
        RecurStatus::RecurInvalidCapacity => c"capacity must exceed the recurrence threshold",
        RecurStatus::RecurInvalidArgument => c"argument out of domain",
    };
    msg.as_ptr()
}
