//! C ABI over the scenario pipeline.
//!
//! Handles are opaque; every function returns a `CcopfStatus` (or a value
//! with an out-parameter) and never unwinds across the boundary. Strings
//! returned by the library must be released with `ccopf_string_free`.

// entry points take raw pointers by ABI contract; every dereference is
// behind an explicit null check and a panic guard
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use ccopf::scenario::{builtin, run_scenario, Scenario, ScenarioResult};
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Error codes for every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcopfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    UnknownScenario = 4,
    SolveError = 5,
    IndexOutOfRange = 6,
    Panic = 7,
}

/// Opaque scenario handle.
pub struct CcopfScenario(Scenario);
/// Opaque result handle.
pub struct CcopfResult(ScenarioResult);

fn guard<F: FnOnce() -> CcopfStatus>(f: F) -> CcopfStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(CcopfStatus::Panic)
}

/// Build a handle for a built-in scenario name ("c1", "c1b", "c2").
#[no_mangle]
pub extern "C" fn ccopf_scenario_builtin(
    name: *const c_char,
    out: *mut *mut CcopfScenario,
) -> CcopfStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return CcopfStatus::NullArgument;
        }
        let name = match unsafe { CStr::from_ptr(name) }.to_str() {
            Ok(s) => s,
            Err(_) => return CcopfStatus::InvalidUtf8,
        };
        match builtin(name) {
            Some(sc) => {
                unsafe { *out = Box::into_raw(Box::new(CcopfScenario(sc))) };
                CcopfStatus::Ok
            }
            None => CcopfStatus::UnknownScenario,
        }
    })
}

/// Parse a scenario from a JSON document.
#[no_mangle]
pub extern "C" fn ccopf_scenario_from_json(
    json: *const c_char,
    out: *mut *mut CcopfScenario,
) -> CcopfStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return CcopfStatus::NullArgument;
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(s) => s,
            Err(_) => return CcopfStatus::InvalidUtf8,
        };
        let sc: Scenario = match serde_json::from_str(text) {
            Ok(sc) => sc,
            Err(_) => return CcopfStatus::ParseError,
        };
        if sc.network.validate().is_err() {
            return CcopfStatus::ParseError;
        }
        unsafe { *out = Box::into_raw(Box::new(CcopfScenario(sc))) };
        CcopfStatus::Ok
    })
}

/// Override the sample count and seed before running.
#[no_mangle]
pub extern "C" fn ccopf_scenario_set_sampling(
    sc: *mut CcopfScenario,
    samples: usize,
    seed: u64,
) -> CcopfStatus {
    guard(|| {
        if sc.is_null() {
            return CcopfStatus::NullArgument;
        }
        let sc = unsafe { &mut *sc };
        sc.0.samples = samples;
        sc.0.seed = seed;
        CcopfStatus::Ok
    })
}

/// Run the pipeline; the result handle owns all derived laws and tables.
#[no_mangle]
pub extern "C" fn ccopf_run(sc: *const CcopfScenario, out: *mut *mut CcopfResult) -> CcopfStatus {
    guard(|| {
        if sc.is_null() || out.is_null() {
            return CcopfStatus::NullArgument;
        }
        let sc = unsafe { &*sc };
        match run_scenario(&sc.0) {
            Ok(res) => {
                unsafe { *out = Box::into_raw(Box::new(CcopfResult(res))) };
                CcopfStatus::Ok
            }
            Err(_) => CcopfStatus::SolveError,
        }
    })
}

/// Number of tightening cases in the result.
#[no_mangle]
pub extern "C" fn ccopf_result_n_cases(res: *const CcopfResult) -> usize {
    if res.is_null() {
        return 0;
    }
    unsafe { &*res }.0.cases.len()
}

/// Tightening multiplier of case `idx`.
#[no_mangle]
pub extern "C" fn ccopf_result_delta(
    res: *const CcopfResult,
    idx: usize,
    out: *mut f64,
) -> CcopfStatus {
    case_scalar(res, idx, out, |c| c.delta)
}

/// Probability that all generation bounds hold for case `idx`.
#[no_mangle]
pub extern "C" fn ccopf_result_p_sat(
    res: *const CcopfResult,
    idx: usize,
    out: *mut f64,
) -> CcopfStatus {
    case_scalar(res, idx, out, |c| c.p_sat)
}

/// Variational distance to the in-hindsight law at generator `bus`.
#[no_mangle]
pub extern "C" fn ccopf_result_tvd(
    res: *const CcopfResult,
    idx: usize,
    bus: usize,
    out: *mut f64,
) -> CcopfStatus {
    guard(|| {
        if res.is_null() || out.is_null() {
            return CcopfStatus::NullArgument;
        }
        let r = unsafe { &*res };
        match r.0.cases.get(idx).and_then(|c| c.tvd.get(bus)) {
            Some(t) => {
                unsafe { *out = t.value };
                CcopfStatus::Ok
            }
            None => CcopfStatus::IndexOutOfRange,
        }
    })
}

/// Policy coefficient alpha[ell][bus] for case `idx`.
#[no_mangle]
pub extern "C" fn ccopf_result_alpha(
    res: *const CcopfResult,
    idx: usize,
    ell: usize,
    bus: usize,
    out: *mut f64,
) -> CcopfStatus {
    guard(|| {
        if res.is_null() || out.is_null() {
            return CcopfStatus::NullArgument;
        }
        let r = unsafe { &*res };
        match r
            .0
            .cases
            .get(idx)
            .and_then(|c| c.policy.alpha.get(ell))
            .and_then(|row| row.get(bus))
        {
            Some(&v) => {
                unsafe { *out = v };
                CcopfStatus::Ok
            }
            None => CcopfStatus::IndexOutOfRange,
        }
    })
}

/// Serialize the summary table as JSON; free with `ccopf_string_free`.
#[no_mangle]
pub extern "C" fn ccopf_result_summary_json(
    res: *const CcopfResult,
    out: *mut *mut c_char,
) -> CcopfStatus {
    guard(|| {
        if res.is_null() || out.is_null() {
            return CcopfStatus::NullArgument;
        }
        let r = unsafe { &*res };
        let cases: Vec<serde_json::Value> = r
            .0
            .cases
            .iter()
            .map(|c| {
                serde_json::json!({
                    "delta": c.delta,
                    "p_sat": c.p_sat,
                    "tvd": c.tvd.iter().map(|t| t.value).collect::<Vec<_>>(),
                })
            })
            .collect();
        let doc = serde_json::json!({
            "scenario": r.0.scenario.name,
            "cases": cases,
        });
        let text = doc.to_string();
        match CString::new(text) {
            Ok(cs) => {
                unsafe { *out = cs.into_raw() };
                CcopfStatus::Ok
            }
            Err(_) => CcopfStatus::Panic,
        }
    })
}

fn case_scalar(
    res: *const CcopfResult,
    idx: usize,
    out: *mut f64,
    get: impl Fn(&ccopf::scenario::CaseResult) -> f64,
) -> CcopfStatus {
    guard(|| {
        if res.is_null() || out.is_null() {
            return CcopfStatus::NullArgument;
        }
        let r = unsafe { &*res };
        match r.0.cases.get(idx) {
            Some(c) => {
                unsafe { *out = get(c) };
                CcopfStatus::Ok
            }
            None => CcopfStatus::IndexOutOfRange,
        }
    })
}

/// Release a scenario handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn ccopf_scenario_free(sc: *mut CcopfScenario) {
    if !sc.is_null() {
        drop(unsafe { Box::from_raw(sc) });
    }
}

/// Release a result handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn ccopf_result_free(res: *mut CcopfResult) {
    if !res.is_null() {
        drop(unsafe { Box::from_raw(res) });
    }
}

/// Release a string allocated by this library. Null is a no-op.
#[no_mangle]
pub extern "C" fn ccopf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
