//! C ABI over the pebblewalk core.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns a
//! [`PwStatus`]; on failure [`pw_last_error`] describes the problem for the
//! current thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pebblewalk::adversary::{defeat_strategy, AdversarySpec, DefeatError, DefeatOutcome, SearchConfig};
use pebblewalk::builtins::builtin;
use pebblewalk::cli::strategy_file::{parse_strategy, strategy_hash};
use pebblewalk::cli::trace_doc::{TraceDocument, TraceHeader};
use pebblewalk::collective::{check_directed, run, Verdict};
use pebblewalk::machine::MemberId;
use pebblewalk::program::Strategy;
use pebblewalk::schemas::enumerate_schemas;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidInput = 2,
    RuntimeFault = 3,
    NotFound = 4,
    OutOfRange = 5,
    OutOfScope = 6,
    Inconclusive = 7,
    Panic = 8,
}

/// A strategy: collective definition plus initial configuration.
pub struct PwCollective {
    inner: Strategy,
}

/// A recorded realization.
pub struct PwTrace {
    doc: TraceDocument,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: PwStatus, msg: impl Into<String>) -> PwStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PwStatus) -> PwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == PwStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(PwStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, PwStatus> {
    if p.is_null() {
        return Err(fail(PwStatus::NullArgument, "string argument is null"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(PwStatus::InvalidInput, "string is not UTF-8"))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

fn publish<T>(out: *mut *mut T, value: T) -> PwStatus {
    if out.is_null() {
        return fail(PwStatus::NullArgument, "output pointer is null");
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    PwStatus::Ok
}

/// Look up a builtin strategy by name.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_collective_builtin(name: *const c_char, out: *mut *mut PwCollective) -> PwStatus {
    guard(|| {
        let name = try_status!(read_str(name));
        match builtin(name) {
            Some(inner) => publish(out, PwCollective { inner }),
            None => fail(PwStatus::NotFound, format!("unknown builtin '{name}'")),
        }
    })
}

/// Parse a strategy file given as TOML text.
///
/// # Safety
/// `src` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_collective_from_toml(src: *const c_char, out: *mut *mut PwCollective) -> PwStatus {
    guard(|| {
        let src = try_status!(read_str(src));
        match parse_strategy(src) {
            Ok(inner) => publish(out, PwCollective { inner }),
            Err(e) => fail(PwStatus::InvalidInput, e.to_string()),
        }
    })
}

/// # Safety
/// `c` must come from this library and not be used afterwards; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn pw_collective_free(c: *mut PwCollective) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of members, automaton included.
///
/// # Safety
/// `c` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_collective_size(c: *const PwCollective, out: *mut usize) -> PwStatus {
    guard(|| {
        if c.is_null() || out.is_null() {
            return fail(PwStatus::NullArgument, "null argument");
        }
        *out = (*c).inner.def.len();
        PwStatus::Ok
    })
}

/// Run `horizon` steps under the named adversary (`first`, `oscillator`,
/// `seeded:N`, `script:...`, `cycle:...`). On a runtime fault the partial
/// trace is still returned through `out` together with
/// `PwStatus::RuntimeFault`.
///
/// # Safety
/// `c` must be a live handle, `adversary` a valid string, `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_simulate(
    c: *const PwCollective,
    adversary: *const c_char,
    horizon: usize,
    out: *mut *mut PwTrace,
) -> PwStatus {
    guard(|| {
        if c.is_null() {
            return fail(PwStatus::NullArgument, "collective is null");
        }
        let s = &(*c).inner;
        let text = try_status!(read_str(adversary));
        let spec: AdversarySpec = match text.parse() {
            Ok(a) => a,
            Err(e) => return fail(PwStatus::InvalidInput, format!("{e}")),
        };
        let header = TraceHeader::for_strategy(s, strategy_hash(s), spec.to_string(), spec.seed(), horizon);
        let mut adv = spec.build();
        let (trace, fault) = match run(&s.def, &s.initial_state(), &mut adv, horizon) {
            Ok(t) => (t, None),
            Err(f) => (f.partial, Some(f.fault)),
        };
        let status = publish(out, PwTrace { doc: TraceDocument { header, trace } });
        match (status, fault) {
            (PwStatus::Ok, Some(f)) => fail(PwStatus::RuntimeFault, f.to_string()),
            (s, _) => s,
        }
    })
}

/// Number of records (moments) in the trace; 0 for null.
///
/// # Safety
/// `t` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn pw_trace_len(t: *const PwTrace) -> usize {
    if t.is_null() {
        0
    } else {
        (*t).doc.trace.len()
    }
}

/// Position of `member` (1 = automaton) at moment `step`.
///
/// # Safety
/// `t` must be a live handle; `x` and `y` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pw_trace_position(
    t: *const PwTrace,
    step: usize,
    member: usize,
    x: *mut i64,
    y: *mut i64,
) -> PwStatus {
    guard(|| {
        if t.is_null() || x.is_null() || y.is_null() {
            return fail(PwStatus::NullArgument, "null argument");
        }
        let records = &(*t).doc.trace.records;
        let Some(r) = records.get(step) else {
            return fail(PwStatus::OutOfRange, format!("step {step} beyond {} records", records.len()));
        };
        if member == 0 || member > r.config.len() {
            return fail(PwStatus::OutOfRange, format!("member {member} out of range"));
        }
        let v = r.config.position(MemberId::new(member));
        *x = v.x();
        *y = v.y();
        PwStatus::Ok
    })
}

/// Serialize the trace as JSON lines. Free the string with
/// [`pw_string_free`].
///
/// # Safety
/// `t` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_trace_to_jsonl(t: *const PwTrace, out: *mut *mut c_char) -> PwStatus {
    guard(|| {
        if t.is_null() || out.is_null() {
            return fail(PwStatus::NullArgument, "null argument");
        }
        match CString::new((*t).doc.to_jsonl()) {
            Ok(s) => {
                *out = s.into_raw();
                PwStatus::Ok
            }
            Err(_) => fail(PwStatus::RuntimeFault, "trace contains NUL"),
        }
    })
}

/// # Safety
/// `t` must come from this library and not be used afterwards; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn pw_trace_free(t: *mut PwTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Directedness check. `holds` receives the verdict; on a violation
/// `violated_at` receives the offending moment (it may be null).
///
/// # Safety
/// `t` must be a live handle and `holds` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_check_directed(
    t: *const PwTrace,
    c1: i64,
    c2: usize,
    holds: *mut bool,
    violated_at: *mut usize,
) -> PwStatus {
    guard(|| {
        if t.is_null() || holds.is_null() {
            return fail(PwStatus::NullArgument, "null argument");
        }
        match check_directed(&(*t).doc.trace, c1, c2) {
            Verdict::HoldsOnPrefix { .. } => *holds = true,
            Verdict::Violated { at, .. } => {
                *holds = false;
                if !violated_at.is_null() {
                    *violated_at = at;
                }
            }
        }
        PwStatus::Ok
    })
}

/// Number of schemas for 2 or 3 pebbles.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pw_schema_count(pebbles: usize, out: *mut usize) -> PwStatus {
    guard(|| {
        if out.is_null() {
            return fail(PwStatus::NullArgument, "null argument");
        }
        match enumerate_schemas(pebbles) {
            Ok(s) => {
                *out = s.len();
                PwStatus::Ok
            }
            Err(e) => fail(PwStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Search for a replay-validated zero-displacement lasso. On success the
/// certificate's prefix and cycle lengths (in steps) are written out.
///
/// # Safety
/// `c` must be a live handle; `prefix_steps` and `cycle_steps` valid
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn pw_defeat(
    c: *const PwCollective,
    max_depth: usize,
    prefix_steps: *mut usize,
    cycle_steps: *mut usize,
) -> PwStatus {
    guard(|| {
        if c.is_null() || prefix_steps.is_null() || cycle_steps.is_null() {
            return fail(PwStatus::NullArgument, "null argument");
        }
        let s = &(*c).inner;
        let initial = s.initial_state();
        match defeat_strategy(&s.def, &initial, &SearchConfig::new(max_depth)) {
            Err(e @ DefeatError::OutOfScope(_)) => fail(PwStatus::OutOfScope, e.to_string()),
            Err(e) => fail(PwStatus::InvalidInput, e.to_string()),
            Ok(DefeatOutcome::Inconclusive { explored }) => {
                fail(PwStatus::Inconclusive, format!("no lasso found ({explored} states explored)"))
            }
            Ok(DefeatOutcome::Certified { certificate, .. }) => match certificate.replay(&s.def, &initial) {
                Ok(()) => {
                    *prefix_steps = certificate.prefix_steps;
                    *cycle_steps = certificate.cycle_steps;
                    PwStatus::Ok
                }
                Err(e) => fail(PwStatus::RuntimeFault, e.to_string()),
            },
        }
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn pw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
