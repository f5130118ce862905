use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;
use std::process::Command;
use std::ptr;

use splitinv_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(splitinv_last_error()) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { splitinv_string_free(p) };
    s
}

fn generate(family: SplitinvFamily, size: usize, protocol: SplitinvProtocol) -> *mut SplitinvModel {
    let mut m = ptr::null_mut();
    let st = unsafe { splitinv_model_generate(family, size, 0, protocol, &mut m) };
    assert_eq!(st, SplitinvStatus::Ok, "{}", last_error());
    m
}

fn verdict(r: *const SplitinvResult) -> SplitinvVerdict {
    let mut v = SplitinvVerdict::Violated;
    assert_eq!(unsafe { splitinv_result_verdict(r, &mut v) }, SplitinvStatus::Ok);
    v
}

#[test]
fn dining_ring_round_trip_and_check() {
    let m = generate(SplitinvFamily::Ring, 3, SplitinvProtocol::Dining);
    assert_eq!(unsafe { splitinv_model_node_count(m) }, 3);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { splitinv_model_to_json(m, &mut json) }, SplitinvStatus::Ok);
    let text = CString::new(take_string(json)).unwrap();
    let mut m2 = ptr::null_mut();
    assert_eq!(unsafe { splitinv_model_from_json(text.as_ptr(), &mut m2) }, SplitinvStatus::Ok);

    for (model, mode) in [(m, SplitinvMode::Ag), (m2, SplitinvMode::SplitForm)] {
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { splitinv_check(model, mode, &mut r) }, SplitinvStatus::Ok);
        assert_eq!(verdict(r), SplitinvVerdict::Proved);
        assert_eq!(unsafe { splitinv_result_node_count(r) }, 3);
        let mut size = 0;
        assert_eq!(unsafe { splitinv_result_component_size(r, 2, &mut size) }, SplitinvStatus::Ok);
        assert_eq!(size, 23);
        let mut dump = ptr::null_mut();
        assert_eq!(unsafe { splitinv_result_dump(r, &mut dump) }, SplitinvStatus::Ok);
        assert!(take_string(dump).starts_with("n0: 23 states"));
        unsafe { splitinv_result_free(r) };
    }

    let (mut states, mut complete) = (0usize, false);
    assert_eq!(unsafe { splitinv_reach(m, 1_000_000, &mut states, &mut complete) }, SplitinvStatus::Ok);
    assert_eq!((states, complete), (446, true));
    unsafe {
        splitinv_model_free(m);
        splitinv_model_free(m2);
    }
}

#[test]
fn mutex_needs_refinement() {
    let m = generate(SplitinvFamily::Star, 2, SplitinvProtocol::Mutex);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { splitinv_check(m, SplitinvMode::Ag, &mut r) }, SplitinvStatus::Ok);
    assert_eq!(verdict(r), SplitinvVerdict::Unknown);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { splitinv_result_verdict_json(r, &mut json) }, SplitinvStatus::Ok);
    assert!(take_string(json).starts_with("{\"verdict\":\"unknown\",\"witnesses\":["));
    unsafe { splitinv_result_free(r) };

    let mut r = ptr::null_mut();
    assert_eq!(unsafe { splitinv_refine(m, SplitinvStrategy::Last, 8, 100_000, &mut r) }, SplitinvStatus::Ok);
    assert_eq!(verdict(r), SplitinvVerdict::Proved);
    unsafe {
        splitinv_result_free(r);
        splitinv_model_free(m);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { splitinv_model_from_json(ptr::null(), &mut m) }, SplitinvStatus::NullArgument);
    assert!(m.is_null());
    assert!(last_error().contains("json"));

    let bad = CString::new("{\"network\": 3}").unwrap();
    assert_eq!(unsafe { splitinv_model_from_json(bad.as_ptr(), &mut m) }, SplitinvStatus::InvalidModel);
    assert!(m.is_null());
    assert!(!last_error().is_empty());

    let bytes = b"\xff\xfe\0";
    assert_eq!(unsafe { splitinv_model_from_json(bytes.as_ptr().cast(), &mut m) }, SplitinvStatus::InvalidUtf8);

    assert_eq!(
        unsafe { splitinv_model_generate(SplitinvFamily::Ring, 0, 0, SplitinvProtocol::Dining, &mut m) },
        SplitinvStatus::InvalidArgument
    );
    assert!(last_error().contains("invalid size"));

    let model = generate(SplitinvFamily::Line, 2, SplitinvProtocol::Dining);
    assert_eq!(last_error(), "");
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { splitinv_check(model, SplitinvMode::Ag, &mut r) }, SplitinvStatus::Ok);
    let mut size = 0;
    assert_eq!(unsafe { splitinv_result_component_size(r, 7, &mut size) }, SplitinvStatus::OutOfRange);
    assert_eq!(unsafe { splitinv_result_component_size(r, 0, ptr::null_mut()) }, SplitinvStatus::NullArgument);
    assert_eq!(unsafe { splitinv_check(ptr::null(), SplitinvMode::Ag, &mut r) }, SplitinvStatus::NullArgument);
    assert!(r.is_null());
    assert_eq!(unsafe { splitinv_model_node_count(ptr::null()) }, 0);
    unsafe {
        splitinv_model_free(ptr::null_mut());
        splitinv_result_free(ptr::null_mut());
        splitinv_string_free(ptr::null_mut());
        splitinv_model_free(model);
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(splitinv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("splitinv.h")).unwrap();
    for f in ["splitinv_model_from_json", "splitinv_check", "splitinv_refine", "splitinv_last_error", "SPLITINV_STATUS_OK"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"splitinv.h\"\n\
         int main(void) {\n\
           SplitinvModel *m = 0;\n\
           SplitinvStatus st = splitinv_model_generate(SPLITINV_FAMILY_RING, 3, 0, SPLITINV_PROTOCOL_DINING, &m);\n\
           splitinv_model_free(m);\n\
           return st == SPLITINV_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    for (compiler, extra) in [("cc", vec!["-std=c99"]), ("c++", vec!["-x", "c++"])] {
        let Ok(out) = Command::new(compiler)
            .args(&extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&include)
            .arg(&src)
            .output()
        else {
            eprintln!("{compiler} not available; skipping");
            continue;
        };
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
