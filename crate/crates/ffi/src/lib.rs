//! C ABI over `clpnlp`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns a [`ClpStatus`]; on
//! failure, [`clp_last_error`] describes the error for the calling thread.
//! Strings returned by the library are freed with [`clp_string_free`]
//! unless documented as borrowed.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use clpnlp::cfg::{self, ParseOptions, ParseStats, Strategy};
use clpnlp::constraints::syntax::parse_constraint;
use clpnlp::grammar::{load_grammar, Grammar};
use clpnlp::hpsg::parse_hpsg;
use clpnlp::solver::{Snapshot, Store, VarId};
use clpnlp::Value;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Grammar text or file could not be loaded.
    Load = 3,
    /// The input sentence or constraint text is malformed.
    Input = 4,
    /// The store rejected the request, e.g. an unknown variable.
    Store = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClpMode {
    Cfg = 0,
    Hpsg = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClpStrategy {
    Active = 0,
    Gentest = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClpStats {
    pub windows_tried: u64,
    pub reductions_applied: u64,
    pub backtracks: u64,
    pub node_expansions: u64,
}

pub struct ClpGrammar {
    grammar: Grammar,
}

pub struct ClpResult {
    lines: Vec<CString>,
    stats: ClpStats,
}

pub struct ClpStore {
    store: Store,
    names: BTreeMap<String, VarId>,
    snapshots: Vec<Option<Snapshot>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(ClpStatus, String);

impl Fail {
    fn new(status: ClpStatus, msg: impl ToString) -> Fail {
        Fail(status, msg.to_string())
    }
}

/// Runs `f`, recording its error or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ClpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ClpStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ClpStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(ClpStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(ClpStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail::new(ClpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail::new(ClpStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<T>(p: *mut T, v: T) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::new(ClpStatus::NullPointer, "output pointer is null"));
    }
    p.write(v);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or NULL. Borrowed; valid
/// until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn clp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn clp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---- grammars -----------------------------------------------------------

/// Loads a grammar from source text.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out_grammar` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clp_grammar_load(source: *const c_char, out_grammar: *mut *mut ClpGrammar) -> ClpStatus {
    guard(|| {
        let src = text(source, "source")?;
        let grammar = load_grammar(src).map_err(|e| Fail::new(ClpStatus::Load, e))?;
        out(out_grammar, Box::into_raw(Box::new(ClpGrammar { grammar })))
    })
}

/// Loads a grammar file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_grammar` must be writable.
#[no_mangle]
pub unsafe extern "C" fn clp_grammar_load_file(path: *const c_char, out_grammar: *mut *mut ClpGrammar) -> ClpStatus {
    guard(|| {
        let p = text(path, "path")?;
        let src = std::fs::read_to_string(p).map_err(|e| Fail::new(ClpStatus::Load, format!("{p}: {e}")))?;
        let grammar = load_grammar(&src).map_err(|e| Fail::new(ClpStatus::Load, format!("{p}: {e}")))?;
        out(out_grammar, Box::into_raw(Box::new(ClpGrammar { grammar })))
    })
}

/// # Safety
/// `g` must be NULL or a grammar from `clp_grammar_load*`, freed once.
#[no_mangle]
pub unsafe extern "C" fn clp_grammar_free(g: *mut ClpGrammar) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

// ---- parsing ------------------------------------------------------------

fn stats(s: &ParseStats) -> ClpStats {
    ClpStats {
        windows_tried: s.windows_tried,
        reductions_applied: s.reductions_applied,
        backtracks: s.backtracks,
        node_expansions: s.node_expansions,
    }
}

fn run_parse(g: &Grammar, input: &str, mode: ClpMode, opts: &ParseOptions) -> Result<ClpResult, Fail> {
    let bad = |e: &dyn std::fmt::Display| Fail::new(ClpStatus::Input, e);
    let (lines, st) = match mode {
        ClpMode::Cfg => {
            let cats = g.categories_of(input).map_err(|e| bad(&e))?;
            let r = cfg::parse(&cats, g, opts).map_err(|e| bad(&e))?;
            (r.derivations.iter().map(|d| d.show(g)).collect::<Vec<_>>(), r.stats)
        }
        ClpMode::Hpsg => {
            let words: Vec<&str> = input.split_whitespace().collect();
            let r = parse_hpsg(&words, g, opts).map_err(|e| bad(&e))?;
            (r.analyses.iter().map(|a| a.show(g)).collect(), r.stats)
        }
    };
    let lines = lines
        .into_iter()
        .map(|l| CString::new(l).map_err(|e| Fail::new(ClpStatus::Input, e)))
        .collect::<Result<_, _>>()?;
    Ok(ClpResult {
        lines,
        stats: stats(&st),
    })
}

/// Parses one whitespace-separated sentence. In `CLP_MODE_CFG` the tokens
/// are category names; in `CLP_MODE_HPSG` they are word forms. `limit` 0
/// means no limit. A sentence without analyses still succeeds, with an
/// empty result.
///
/// # Safety
/// `g` must be a live grammar, `input` a NUL-terminated string and
/// `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn clp_parse(
    g: *const ClpGrammar,
    input: *const c_char,
    mode: ClpMode,
    strategy: ClpStrategy,
    limit: usize,
    out_result: *mut *mut ClpResult,
) -> ClpStatus {
    guard(|| {
        let g = &handle(g, "grammar")?.grammar;
        let input = text(input, "input")?;
        let opts = ParseOptions {
            strategy: match strategy {
                ClpStrategy::Active => Strategy::Active,
                ClpStrategy::Gentest => Strategy::Gentest,
            },
            limit: (limit > 0).then_some(limit),
        };
        let r = run_parse(g, input, mode, &opts)?;
        out(out_result, Box::into_raw(Box::new(r)))
    })
}

/// Number of analyses; 0 for NULL.
///
/// # Safety
/// `r` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn clp_result_count(r: *const ClpResult) -> usize {
    r.as_ref().map_or(0, |r| r.lines.len())
}

/// Printed form of analysis `i`, borrowed from the result; NULL when out of
/// range.
///
/// # Safety
/// `r` must be NULL or a live result.
#[no_mangle]
pub unsafe extern "C" fn clp_result_get(r: *const ClpResult, i: usize) -> *const c_char {
    match r.as_ref().and_then(|r| r.lines.get(i)) {
        Some(s) => s.as_ptr(),
        None => {
            set_error(format!("no analysis {i}"));
            ptr::null()
        }
    }
}

/// # Safety
/// `r` must be a live result and `out_stats` writable.
#[no_mangle]
pub unsafe extern "C" fn clp_result_stats(r: *const ClpResult, out_stats: *mut ClpStats) -> ClpStatus {
    guard(|| out(out_stats, handle(r, "result")?.stats))
}

/// # Safety
/// `r` must be NULL or a result from `clp_parse`, freed once.
#[no_mangle]
pub unsafe extern "C" fn clp_result_free(r: *mut ClpResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

// ---- stores -------------------------------------------------------------

#[no_mangle]
pub extern "C" fn clp_store_new() -> *mut ClpStore {
    Box::into_raw(Box::new(ClpStore {
        store: Store::new(),
        names: BTreeMap::new(),
        snapshots: Vec::new(),
    }))
}

/// # Safety
/// `s` must be NULL or a store from `clp_store_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn clp_store_free(s: *mut ClpStore) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Declares variable `name` with the complete domain given as
/// whitespace-separated values, e.g. `"1 2 3"`.
///
/// # Safety
/// `s` must be a live store; `name` and `values` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn clp_store_var(s: *mut ClpStore, name: *const c_char, values: *const c_char) -> ClpStatus {
    guard(|| {
        let s = handle_mut(s, "store")?;
        let name = text(name, "name")?;
        let values = text(values, "values")?;
        if s.names.contains_key(name) {
            return Err(Fail::new(ClpStatus::Store, format!("variable {name} already declared")));
        }
        let v = s.store.new_closed_var(values.split_whitespace().map(Value::parse));
        s.store.set_name(v, name).map_err(|e| Fail::new(ClpStatus::Store, e))?;
        s.names.insert(name.to_string(), v);
        Ok(())
    })
}

/// Declares a boolean variable `name`.
///
/// # Safety
/// `s` must be a live store; `name` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn clp_store_bool(s: *mut ClpStore, name: *const c_char) -> ClpStatus {
    guard(|| {
        let s = handle_mut(s, "store")?;
        let name = text(name, "name")?;
        if s.names.contains_key(name) {
            return Err(Fail::new(ClpStatus::Store, format!("variable {name} already declared")));
        }
        let v = s.store.new_bool();
        s.store.set_name(v, name).map_err(|e| Fail::new(ClpStatus::Store, e))?;
        s.names.insert(name.to_string(), v);
        Ok(())
    })
}

/// Tells a constraint in text syntax, e.g. `"x != y"` or
/// `"alldistinct(x,y,z)"`. `*consistent` is set to 0 when the store
/// rejected it (the store is then unchanged).
///
/// # Safety
/// `s` must be a live store, `constraint` a NUL-terminated string and
/// `consistent` writable.
#[no_mangle]
pub unsafe extern "C" fn clp_store_tell(
    s: *mut ClpStore,
    constraint: *const c_char,
    consistent: *mut i32,
) -> ClpStatus {
    guard(|| {
        let s = handle_mut(s, "store")?;
        let text = text(constraint, "constraint")?;
        let c = parse_constraint(text, &s.store, &s.names).map_err(|e| Fail::new(ClpStatus::Input, e))?;
        let ok = s.store.tell(c).map_err(|e| Fail::new(ClpStatus::Store, e))?;
        out(consistent, ok as i32)
    })
}

/// Current domain of `name` as a newly allocated string such as `"{1,3}"`,
/// or its status letter for booleans. Free with `clp_string_free`.
///
/// # Safety
/// `s` must be a live store, `name` a NUL-terminated string and
/// `out_text` writable.
#[no_mangle]
pub unsafe extern "C" fn clp_store_domain(
    s: *const ClpStore,
    name: *const c_char,
    out_text: *mut *mut c_char,
) -> ClpStatus {
    guard(|| {
        let s = handle(s, "store")?;
        let name = text(name, "name")?;
        let v = *s
            .names
            .get(name)
            .ok_or_else(|| Fail::new(ClpStatus::Store, format!("unknown variable {name}")))?;
        if !s.store.contains(v) {
            return Err(Fail::new(
                ClpStatus::Store,
                format!("variable {name} was dropped by a restore"),
            ));
        }
        let shown = if s.store.is_bool(v) {
            s.store.status(v).letter().to_string()
        } else {
            let vals: Vec<String> = s.store.domain(v).values().iter().map(|x| x.to_string()).collect();
            format!("{{{}}}", vals.join(","))
        };
        out(out_text, owned_string(shown))
    })
}

/// Takes a snapshot and writes its id.
///
/// # Safety
/// `s` must be a live store and `id` writable.
#[no_mangle]
pub unsafe extern "C" fn clp_store_snapshot(s: *mut ClpStore, id: *mut u64) -> ClpStatus {
    guard(|| {
        let s = handle_mut(s, "store")?;
        let snap = s.store.snapshot();
        s.snapshots.push(Some(snap));
        out(id, (s.snapshots.len() - 1) as u64)
    })
}

/// Undoes everything since snapshot `id`. Snapshots unwind LIFO.
///
/// # Safety
/// `s` must be a live store.
#[no_mangle]
pub unsafe extern "C" fn clp_store_restore(s: *mut ClpStore, id: u64) -> ClpStatus {
    guard(|| {
        let s = handle_mut(s, "store")?;
        let snap = s
            .snapshots
            .get_mut(id as usize)
            .and_then(Option::take)
            .ok_or_else(|| Fail::new(ClpStatus::OutOfRange, format!("no live snapshot {id}")))?;
        s.store.restore(snap).map_err(|e| Fail::new(ClpStatus::Store, e))?;
        let store = &s.store;
        s.names.retain(|_, v| store.contains(*v));
        Ok(())
    })
}
