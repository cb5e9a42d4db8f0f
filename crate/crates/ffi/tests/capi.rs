use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use radbench_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = rb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const RECORD: &str = "chest__x-ray__pneumonia";

#[test]
fn toolset_handles() {
    unsafe {
        let mut ts: *mut RbToolset = ptr::null_mut();
        assert_eq!(rb_toolset_generate(c("Baseline").as_ptr(), 0, c(RECORD).as_ptr(), 3, &mut ts), RbStatus::Ok);
        assert_eq!(rb_toolset_len(ts), 12);
        let mut solvable = false;
        assert_eq!(rb_toolset_solvable(ts, &mut solvable), RbStatus::Ok);
        assert!(solvable);
        assert!(rb_toolset_gap_json(ts).is_null());
        let json = rb_toolset_json(ts);
        let text = CStr::from_ptr(json).to_str().unwrap().to_string();
        rb_string_free(json);
        assert!(text.starts_with('{') && text.contains("TOOL1"));
        rb_toolset_free(ts);

        let mut ts: *mut RbToolset = ptr::null_mut();
        assert_eq!(rb_toolset_generate(c("InsufficientConfig2").as_ptr(), 4, c(RECORD).as_ptr(), 7, &mut ts), RbStatus::Ok);
        assert_eq!(rb_toolset_solvable(ts, &mut solvable), RbStatus::Ok);
        assert!(!solvable);
        let gap = rb_toolset_gap_json(ts);
        assert!(CStr::from_ptr(gap).to_str().unwrap().contains("SpecificToolMissing"));
        rb_string_free(gap);
        rb_toolset_free(ts);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut ts: *mut RbToolset = ptr::null_mut();
        assert_eq!(rb_toolset_generate(c("Superb").as_ptr(), 0, c(RECORD).as_ptr(), 3, &mut ts), RbStatus::InvalidArgument);
        assert_eq!(rb_toolset_generate(c("Baseline").as_ptr(), 0, c("nowhere").as_ptr(), 3, &mut ts), RbStatus::NotFound);
        assert!(last_error().contains("nowhere"));
        assert_eq!(rb_toolset_generate(c("Baseline").as_ptr(), 0, c(RECORD).as_ptr(), 12, &mut ts), RbStatus::InvalidArgument);
        assert_eq!(rb_toolset_generate(ptr::null(), 0, c(RECORD).as_ptr(), 3, &mut ts), RbStatus::NullArgument);
        assert!(ts.is_null());

        let bad = [0xffu8, 0];
        let mut kind = RbMessageKind::Call;
        assert_eq!(rb_parse_response(bad.as_ptr().cast(), &mut kind), RbStatus::InvalidUtf8);

        let mut config: *mut RbConfig = ptr::null_mut();
        assert_eq!(rb_config_parse(c("conditions = 3").as_ptr(), &mut config), RbStatus::ConfigError);
        assert!(config.is_null());
        assert_eq!(rb_config_load(c("/nonexistent/run.toml").as_ptr(), &mut config), RbStatus::IoError);
        assert_eq!(rb_report(c("/nonexistent/run").as_ptr()), RbStatus::IoError);
        rb_config_free(ptr::null_mut());
        rb_toolset_free(ptr::null_mut());
        rb_string_free(ptr::null_mut());
    }
}

#[test]
fn response_kinds() {
    let call = "<Call>\n<Purpose>p</Purpose>\n<Tool>TOOL1</Tool>\n<Input>['$Image$']</Input>\n</Call>";
    let cases = [
        (call.to_string(), RbMessageKind::Call),
        (call.replace("Call>", "EndCall>"), RbMessageKind::EndCall),
        (
            "<NoCall><Category>Anomaly Detector</Category><Ability>CategoryMissing</Ability></NoCall>".to_string(),
            RbMessageKind::NoCall,
        ),
        ("plain prose".to_string(), RbMessageKind::ParseFailure),
    ];
    for (text, want) in cases {
        let mut kind = RbMessageKind::Call;
        assert_eq!(unsafe { rb_parse_response(c(&text).as_ptr(), &mut kind) }, RbStatus::Ok);
        assert_eq!(kind, want, "{text}");
    }
    assert!(last_error().contains("no protocol block"));
}

const CONFIG: &str = r#"
output_dir = "unused"
conditions = ["Baseline"]
tasks = [1, 7]
seeds = [0]
workers = 2

[[backends]]
label = "oracle"
kind = "scripted"
behavior = "oracle"
"#;

#[test]
fn run_report_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = c(dir.path().to_str().unwrap());
    unsafe {
        let mut config: *mut RbConfig = ptr::null_mut();
        assert_eq!(rb_config_parse(c(CONFIG).as_ptr(), &mut config), RbStatus::Ok);
        assert_eq!(rb_config_set_output_dir(config, out.as_ptr()), RbStatus::Ok);
        let mut cells = 0;
        assert_eq!(rb_config_cell_count(config, &mut cells), RbStatus::Ok);
        assert_eq!(cells, 12);
        assert_eq!(rb_report(out.as_ptr()), RbStatus::IoError);
        let (mut done, mut failed) = (0, 0);
        assert_eq!(rb_run(config, false, &mut done, &mut failed), RbStatus::Ok);
        assert_eq!((done, failed), (12, 0));
        assert_eq!(rb_report(out.as_ptr()), RbStatus::Ok);
        assert!(dir.path().join("summary.json").exists());
        let mut sessions = 0;
        assert_eq!(rb_replay(config, &mut sessions), RbStatus::Ok);
        assert_eq!(sessions, 12);
        rb_config_free(config);
    }
}

#[test]
fn header_declares_the_interface() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/radbench.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "rb_last_error", "rb_version", "rb_string_free", "rb_config_load", "rb_config_parse", "rb_config_set_output_dir",
        "rb_config_cell_count", "rb_config_free", "rb_run", "rb_report", "rb_replay", "rb_toolset_generate",
        "rb_toolset_len", "rb_toolset_json", "rb_toolset_gap_json", "rb_toolset_solvable", "rb_toolset_free",
        "rb_parse_response", "typedef struct RbConfig RbConfig", "typedef struct RbToolset RbToolset",
        "RB_STATUS_PARTIAL_FAILURE = 5",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let check = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99"]).arg(&header).status().unwrap();
    assert!(check.success(), "radbench.h does not compile as C99");
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(rb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
