//! C interface to chainsynth.
//!
//! Families live behind an opaque `CsFamily` handle. Queries and results are
//! exchanged as JSON strings. Every entry point returns a `CsStatus`; on
//! failure `cs_last_error` describes what went wrong on the calling thread.
//! Strings handed out by the library must be released with `cs_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chainsynth::family::{CostModel, Family, Formula};
use chainsynth::model::{check_with, CheckerConfig, Specification};
use chainsynth::sketch::{goal_states, goal_states_of, parse_property};
use chainsynth::synth::{outcome_json, realisation_json, solve, Engine, Query, SynthOptions};
use serde::Deserialize;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidRequest = 4,
    Solver = 5,
    Panic = 6,
}

/// Opaque handle to a loaded family.
pub struct CsFamily {
    family: Family,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

#[derive(Debug)]
struct Fail(CsStatus, String);

impl Fail {
    fn parse(e: impl ToString) -> Self {
        Fail(CsStatus::Parse, e.to_string())
    }
    fn request(e: impl ToString) -> Self {
        Fail(CsStatus::InvalidRequest, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CsStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CsStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(CsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn family<'a>(p: *const CsFamily) -> Result<&'a Family, Fail> {
    p.as_ref()
        .map(|f| &f.family)
        .ok_or_else(|| Fail(CsStatus::NullPointer, "family is null".into()))
}

unsafe fn hand_out(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(CsStatus::NullPointer, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|e| Fail(CsStatus::Solver, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn load(
    src: *const c_char,
    out: *mut *mut CsFamily,
    parse: fn(&str) -> Result<Family, String>,
) -> CsStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail(CsStatus::NullPointer, "output pointer is null".into()));
        }
        *out = ptr::null_mut();
        let family = parse(text(src, "source")?).map_err(Fail::parse)?;
        *out = Box::into_raw(Box::new(CsFamily { family }));
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread. Empty after a success.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn cs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse a family written in the sketch language.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_family_from_sketch(
    src: *const c_char,
    out: *mut *mut CsFamily,
) -> CsStatus {
    load(src, out, |t| {
        chainsynth::sketch::load(t).map_err(|e| e.to_string())
    })
}

/// Parse a family in the JSON exchange format.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_family_from_json(
    src: *const c_char,
    out: *mut *mut CsFamily,
) -> CsStatus {
    load(src, out, |t| {
        Family::from_json(t).map_err(|e| e.to_string())
    })
}

/// # Safety
/// `fam` must come from one of the loaders and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cs_family_free(fam: *mut CsFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// Number of states, holes and realisations. The realisation count
/// saturates at `UINT64_MAX`. Any output pointer may be null.
///
/// # Safety
/// `fam` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_family_info(
    fam: *const CsFamily,
    states: *mut usize,
    holes: *mut usize,
    realisations: *mut u64,
) -> CsStatus {
    guard(|| {
        let f = family(fam)?;
        if let Some(s) = states.as_mut() {
            *s = f.len();
        }
        if let Some(h) = holes.as_mut() {
            *h = f.holes().len();
        }
        if let Some(r) = realisations.as_mut() {
            *r = u64::try_from(f.product_size()).unwrap_or(u64::MAX);
        }
        Ok(())
    })
}

fn property(fam: &Family, text: &str) -> Result<Specification, Fail> {
    let p = parse_property(text).map_err(Fail::request)?;
    let goal = goal_states_of(fam, &p.goal).map_err(Fail::request)?;
    if goal.is_empty() {
        return Err(Fail::request(format!(
            "no state satisfies the goal of `{text}`"
        )));
    }
    Specification::new(goal, p.op, p.threshold).map_err(Fail::request)
}

fn checker(tolerance: Option<f64>) -> Result<CheckerConfig, Fail> {
    match tolerance {
        None => Ok(CheckerConfig::default()),
        Some(t) if (0.0..1.0).contains(&t) => Ok(CheckerConfig::with_tolerance(t)),
        Some(t) => Err(Fail::request(format!("tolerance {t} is outside [0, 1)"))),
    }
}

/// Check one realisation. `assign` is `hole=option,...` (null or empty for a
/// family without holes); `prop` is a property such as `P>=0.5 [F s=4]`.
/// Writes `{"realisation", "spec", "value", "holds"}` to `out`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_check(
    fam: *const CsFamily,
    assign: *const c_char,
    prop: *const c_char,
    out: *mut *mut c_char,
) -> CsStatus {
    guard(|| {
        let f = family(fam)?;
        let prop = text(prop, "property")?;
        let assign = if assign.is_null() {
            ""
        } else {
            text(assign, "assignment")?
        };
        let spec = property(f, prop)?;
        let r = if assign.trim().is_empty() && f.holes().is_empty() {
            f.full().first()
        } else {
            f.parse_realisation(assign).map_err(Fail::request)?
        };
        let mc = f
            .realise(&r)
            .map_err(|e| Fail(CsStatus::Solver, e.to_string()))?;
        let res = check_with(&mc, &spec, &CheckerConfig::default())
            .map_err(|e| Fail(CsStatus::Solver, e.to_string()))?;
        let v = serde_json::json!({
            "realisation": realisation_json(f, &r),
            "spec": prop,
            "value": res.value,
            "holds": res.holds,
        });
        hand_out(out, v.to_string())
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Request {
    query: String,
    spec: Option<String>,
    goal: Option<String>,
    #[serde(default)]
    engine: Option<String>,
    epsilon: Option<f64>,
    budget: Option<u64>,
    #[serde(default)]
    cheapest: bool,
    cost: Option<String>,
    assign: Option<String>,
    tolerance: Option<f64>,
    threads: Option<usize>,
    #[serde(default)]
    trace: bool,
}

fn build_query(fam: &Family, req: &Request) -> Result<(Query, String), Fail> {
    let spec = || {
        req.spec
            .as_deref()
            .ok_or_else(|| Fail::request("this query needs `spec`"))
    };
    let goal = || -> Result<(Vec<usize>, String), Fail> {
        if let Some(g) = &req.goal {
            let states = goal_states(fam, g).map_err(Fail::request)?;
            if states.is_empty() {
                return Err(Fail::request(format!("no state satisfies the goal `{g}`")));
            }
            return Ok((states, g.clone()));
        }
        let s = req
            .spec
            .as_deref()
            .ok_or_else(|| Fail::request("this query needs `goal`"))?;
        Ok((property(fam, s)?.goal().to_vec(), s.to_string()))
    };
    let (q, shown) = match req.query.as_str() {
        "feasible" => (
            Query::feasibility(property(fam, spec()?)?),
            spec()?.to_string(),
        ),
        "partition" => (
            Query::partition(property(fam, spec()?)?),
            spec()?.to_string(),
        ),
        "max" => {
            let (g, shown) = goal()?;
            (Query::max(g).map_err(Fail::request)?, shown)
        }
        "min" => {
            let (g, shown) = goal()?;
            (Query::min(g).map_err(Fail::request)?, shown)
        }
        "eps" => {
            let (g, shown) = goal()?;
            let eps = req
                .epsilon
                .ok_or_else(|| Fail::request("eps queries need `epsilon`"))?;
            (Query::eps_optimal(g, eps).map_err(Fail::request)?, shown)
        }
        other => {
            return Err(Fail::request(format!(
                "unknown query `{other}` (feasible, partition, max, min, eps)"
            )))
        }
    };
    if req.epsilon.is_some() && req.query != "eps" {
        return Err(Fail::request("`epsilon` only applies to eps queries"));
    }
    let q = q.with_budget(req.budget).with_cheapest(req.cheapest);
    q.validate().map_err(Fail::request)?;
    Ok((q, shown))
}

fn synth(fam: &Family, request: &str) -> Result<String, Fail> {
    let req: Request = serde_json::from_str(request).map_err(Fail::request)?;
    let engine: Engine = req
        .engine
        .as_deref()
        .unwrap_or("enum")
        .parse()
        .map_err(Fail::request)?;
    let mut fam = fam.clone();
    match req.cost.as_deref() {
        None => {}
        Some("structural") => fam = fam.with_cost_model(CostModel::Structural),
        Some("option-sum") => fam = fam.with_cost_model(CostModel::OptionSum),
        Some(other) => return Err(Fail::request(format!("unknown cost model `{other}`"))),
    }
    if let Some(text) = &req.assign {
        let mut constraints = fam.constraints().to_vec();
        for (h, o) in fam.parse_assignment(text).map_err(Fail::request)? {
            constraints.push(Formula::atom(h, o));
        }
        fam = fam.with_constraints(constraints).map_err(Fail::request)?;
    }
    let (query, shown) = build_query(&fam, &req)?;
    let opts = SynthOptions {
        checker: checker(req.tolerance)?,
        threads: req.threads.unwrap_or(1).max(1),
        trace: req.trace,
        ..SynthOptions::default()
    };
    let outcome =
        solve(engine, &fam, &query, &opts).map_err(|e| Fail(CsStatus::Solver, e.to_string()))?;
    Ok(outcome_json(&fam, &query, &shown, engine, &outcome, req.trace).to_string())
}

/// Run a synthesis query described by a JSON request, for example
/// `{"query": "partition", "spec": "P>=0.1 [F s=4]", "engine": "cegis"}`.
///
/// Fields: `query` (feasible, partition, max, min, eps), `spec`, `goal`,
/// `engine` (enum, cegar, cegis; default enum), `epsilon`, `budget`,
/// `cheapest`, `cost` (structural, option-sum), `assign`, `tolerance`,
/// `threads`, `trace`. The report is written to `out` as JSON.
///
/// # Safety
/// `request` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_synth(
    fam: *const CsFamily,
    request: *const c_char,
    out: *mut *mut c_char,
) -> CsStatus {
    guard(|| {
        let f = family(fam)?;
        let report = synth(f, text(request, "request")?)?;
        hand_out(out, report)
    })
}

/// Release a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn cs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
