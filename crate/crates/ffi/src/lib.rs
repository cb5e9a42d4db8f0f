//! C interface to the benchmark harness.
//!
//! Every fallible function returns an [`RbStatus`]. On failure a message is
//! kept per thread and can be read with [`rb_last_error`]. Handles are
//! opaque and must be released with their `_free` function. Strings
//! returned to the caller are released with [`rb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use radbench::corpus::{bundled_corpus, TaskType};
use radbench::engine::{parse_protocol, ProtocolMessage};
use radbench::harness::{
    emit_report, load_config, parse_config, replay, run_benchmark, ConfigError, HarnessError, ReportError, RunConfig,
};
use radbench::toolset_sim::{build_toolset, solvability_oracle, Condition, GroundTruthGap, ToolSet};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    IoError = 4,
    /// Some cells failed, the replay diverged or the report had no rows.
    PartialFailure = 5,
    NotFound = 6,
    InvalidArgument = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbMessageKind {
    Call = 0,
    EndCall = 1,
    NoCall = 2,
    ParseFailure = 3,
}

/// A loaded run configuration.
pub struct RbConfig {
    inner: RunConfig,
}

/// A generated tool set together with the record and task it was built for.
pub struct RbToolset {
    set: ToolSet,
    gap: Option<GroundTruthGap>,
    record_id: String,
    task: TaskType,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl ToString) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: RbStatus, message: impl ToString) -> RbStatus {
    set_error(message);
    status
}

/// Run `f`, turning a panic into [`RbStatus::Panic`].
fn guard(f: impl FnOnce() -> RbStatus) -> RbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            fail(RbStatus::Panic, msg.unwrap_or_else(|| "panic".into()))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, RbStatus> {
    if p.is_null() {
        return Err(fail(RbStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(RbStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn config_status(e: &ConfigError) -> RbStatus {
    match e {
        ConfigError::Io { .. } => RbStatus::IoError,
        _ => RbStatus::ConfigError,
    }
}

fn harness_status(e: &HarnessError) -> RbStatus {
    match e {
        HarnessError::Config(c) => config_status(c),
        _ => RbStatus::IoError,
    }
}

macro_rules! arg {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($p:expr, $name:literal) => {
        if $p.is_null() {
            return fail(RbStatus::NullArgument, concat!("`", $name, "` is null"));
        }
    };
}

/// Message of the last failure on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn rb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a TOML run configuration. Relative paths resolve against the
/// file's directory.
///
/// # Safety
/// `path` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rb_config_load(path: *const c_char, out: *mut *mut RbConfig) -> RbStatus {
    guard(|| {
        non_null!(out, "out");
        let path = arg!(str_arg(path, "path"));
        match load_config(Path::new(path)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RbConfig { inner }));
                RbStatus::Ok
            }
            Err(e) => fail(config_status(&e), e),
        }
    })
}

/// Parse a TOML run configuration from text.
///
/// # Safety
/// `text` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rb_config_parse(text: *const c_char, out: *mut *mut RbConfig) -> RbStatus {
    guard(|| {
        non_null!(out, "out");
        let text = arg!(str_arg(text, "text"));
        match parse_config(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RbConfig { inner }));
                RbStatus::Ok
            }
            Err(e) => fail(config_status(&e), e),
        }
    })
}

/// # Safety
/// `config` must be a live handle and `dir` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn rb_config_set_output_dir(config: *mut RbConfig, dir: *const c_char) -> RbStatus {
    guard(|| {
        non_null!(config, "config");
        let dir = arg!(str_arg(dir, "dir"));
        (*config).inner.output_dir = dir.into();
        RbStatus::Ok
    })
}

/// Number of cells the configuration enumerates.
///
/// # Safety
/// `config` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rb_config_cell_count(config: *const RbConfig, out: *mut usize) -> RbStatus {
    guard(|| {
        non_null!(config, "config");
        non_null!(out, "out");
        let config = &(*config).inner;
        match radbench::harness::load_run_corpus(config) {
            Ok(corpus) => {
                *out = radbench::harness::enumerate_cells(config, &corpus).len();
                RbStatus::Ok
            }
            Err(e) => fail(harness_status(&e), e),
        }
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rb_config_free(config: *mut RbConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Execute every pending cell. `done` and `failed` may be null.
/// Returns [`RbStatus::PartialFailure`] when any cell failed.
///
/// # Safety
/// `config` must be a live handle; `done` and `failed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rb_run(config: *const RbConfig, resume: bool, done: *mut usize, failed: *mut usize) -> RbStatus {
    guard(|| {
        non_null!(config, "config");
        let config = RunConfig { resume: (*config).inner.resume || resume, ..(*config).inner.clone() };
        match run_benchmark(&config) {
            Ok(manifest) => {
                if !done.is_null() {
                    *done = manifest.done();
                }
                if !failed.is_null() {
                    *failed = manifest.failed();
                }
                if manifest.failed() > 0 {
                    fail(RbStatus::PartialFailure, format!("{} cells failed", manifest.failed()))
                } else {
                    RbStatus::Ok
                }
            }
            Err(e) => fail(harness_status(&e), e),
        }
    })
}

/// Write the report files into a run directory.
///
/// # Safety
/// `dir` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn rb_report(dir: *const c_char) -> RbStatus {
    guard(|| {
        let dir = arg!(str_arg(dir, "dir"));
        match emit_report(Path::new(dir)) {
            Ok(_) => RbStatus::Ok,
            Err(e @ ReportError::EmptyManifest) => fail(RbStatus::PartialFailure, e),
            Err(e) => fail(RbStatus::IoError, e),
        }
    })
}

/// Re-drive the stored sessions of the config's output directory.
/// `sessions` may be null. Returns [`RbStatus::PartialFailure`] on any
/// mismatch.
///
/// # Safety
/// `config` must be a live handle; `sessions` null or writable.
#[no_mangle]
pub unsafe extern "C" fn rb_replay(config: *const RbConfig, sessions: *mut usize) -> RbStatus {
    guard(|| {
        non_null!(config, "config");
        match replay(&(*config).inner) {
            Ok(report) => {
                if !sessions.is_null() {
                    *sessions = report.sessions;
                }
                if report.is_exact() {
                    RbStatus::Ok
                } else {
                    let n = report.transcript_mismatches.len() + report.metric_mismatches.len();
                    fail(RbStatus::PartialFailure, format!("{n} replay mismatches"))
                }
            }
            Err(e) => fail(harness_status(&e), e),
        }
    })
}

/// Generate the tool set of one bundled record, task and condition.
///
/// # Safety
/// `condition` and `record_id` must be valid C strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_toolset_generate(
    condition: *const c_char,
    seed: u64,
    record_id: *const c_char,
    task: u8,
    out: *mut *mut RbToolset,
) -> RbStatus {
    guard(|| {
        non_null!(out, "out");
        let condition: Condition = match arg!(str_arg(condition, "condition")).parse() {
            Ok(c) => c,
            Err(e) => return fail(RbStatus::InvalidArgument, e),
        };
        let record_id = arg!(str_arg(record_id, "record_id"));
        let task = match TaskType::new(task) {
            Ok(t) => t,
            Err(e) => return fail(RbStatus::InvalidArgument, e),
        };
        let corpus = bundled_corpus();
        let Some(entry) = corpus.get(record_id) else {
            return fail(RbStatus::NotFound, format!("no bundled record `{record_id}`"));
        };
        match build_toolset(condition, seed, &entry.record, task) {
            Ok((set, gap)) => {
                *out = Box::into_raw(Box::new(RbToolset { set, gap, record_id: record_id.to_string(), task }));
                RbStatus::Ok
            }
            Err(e) => fail(RbStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `toolset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rb_toolset_len(toolset: *const RbToolset) -> usize {
    if toolset.is_null() {
        return 0;
    }
    (*toolset).set.len()
}

/// Tool cards as a JSON object keyed by tool name. Free with
/// [`rb_string_free`].
///
/// # Safety
/// `toolset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rb_toolset_json(toolset: *const RbToolset) -> *mut c_char {
    if toolset.is_null() {
        set_error("`toolset` is null");
        return ptr::null_mut();
    }
    into_c_string((*toolset).set.to_json_string())
}

/// The withheld resource as JSON, or null for sets without a gap.
///
/// # Safety
/// `toolset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rb_toolset_gap_json(toolset: *const RbToolset) -> *mut c_char {
    if toolset.is_null() {
        set_error("`toolset` is null");
        return ptr::null_mut();
    }
    match &(*toolset).gap {
        Some(gap) => into_c_string(serde_json::to_string(gap).expect("gap serializes")),
        None => ptr::null_mut(),
    }
}

/// Whether the task can be completed with the set.
///
/// # Safety
/// `toolset` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_toolset_solvable(toolset: *const RbToolset, out: *mut bool) -> RbStatus {
    guard(|| {
        non_null!(toolset, "toolset");
        non_null!(out, "out");
        let ts = &*toolset;
        let corpus = bundled_corpus();
        let entry = corpus.get(&ts.record_id).expect("handle records a bundled id");
        match solvability_oracle(&ts.set, &entry.record, ts.task) {
            Ok(v) => {
                *out = v.solvable;
                RbStatus::Ok
            }
            Err(e) => fail(RbStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `toolset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rb_toolset_free(toolset: *mut RbToolset) {
    if !toolset.is_null() {
        drop(Box::from_raw(toolset));
    }
}

/// Classify an agent response by the protocol block it carries.
///
/// # Safety
/// `text` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_parse_response(text: *const c_char, out: *mut RbMessageKind) -> RbStatus {
    guard(|| {
        non_null!(out, "out");
        let text = arg!(str_arg(text, "text"));
        *out = match parse_protocol(text) {
            ProtocolMessage::Call(_) => RbMessageKind::Call,
            ProtocolMessage::EndCall(_) => RbMessageKind::EndCall,
            ProtocolMessage::NoCall(_) => RbMessageKind::NoCall,
            ProtocolMessage::ParseFailure { reason } => {
                set_error(reason);
                RbMessageKind::ParseFailure
            }
        };
        RbStatus::Ok
    })
}
