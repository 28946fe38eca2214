use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use heraldic_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = heraldic_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn builtin(name: &str) -> *mut HeraldicScheme {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_scheme_builtin(c(name).as_ptr(), &mut s) },
        HeraldicStatus::Ok
    );
    s
}

fn evaluate(
    s: *const HeraldicScheme,
    detector: HeraldicDetector,
    corrected: bool,
) -> *mut HeraldicReport {
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_evaluate(s, HeraldicTarget::Cz, detector, corrected, 0, &mut r) },
        HeraldicStatus::Ok
    );
    r
}

fn get(
    f: unsafe extern "C" fn(*const HeraldicReport, *mut f64) -> HeraldicStatus,
    r: *const HeraldicReport,
) -> f64 {
    let mut v = f64::NAN;
    assert_eq!(unsafe { f(r, &mut v) }, HeraldicStatus::Ok);
    v
}

#[test]
fn cz_1_9_metrics() {
    let s = builtin("CZ_1_9");
    let r = evaluate(s, HeraldicDetector::Pnr, false);
    assert!((get(heraldic_report_fidelity, r) - 1.0).abs() < 1e-9);
    assert!((get(heraldic_report_probability, r) - 1.0 / 9.0).abs() < 1e-12);
    assert!((get(heraldic_report_pb_mean, r) - 0.25).abs() < 1e-9);
    let expected = [1.0 / 9.0, 1.0 / 3.0, 1.0 / 3.0, 1.0];
    for (x, want) in expected.iter().enumerate() {
        let mut pa = 0.0;
        assert_eq!(
            unsafe { heraldic_report_pa(r, x, &mut pa) },
            HeraldicStatus::Ok
        );
        assert!((pa - want).abs() < 1e-9, "{x}: {pa}");
    }
    let mut pa = 0.0;
    assert_eq!(
        unsafe { heraldic_report_pa(r, 4, &mut pa) },
        HeraldicStatus::InvalidArgument
    );
    unsafe {
        heraldic_report_free(r);
        heraldic_scheme_free(s);
    }
}

#[test]
fn corrected_cz_2_27_has_perfect_herald() {
    let s = builtin("builtin:CZ_2_27");
    let mut migrates = false;
    assert_eq!(
        unsafe { heraldic_migration_check(s, &mut migrates) },
        HeraldicStatus::Ok
    );
    assert!(migrates);
    let raw = evaluate(s, HeraldicDetector::Threshold, false);
    assert!((get(heraldic_report_pb_mean, raw) - 0.38298).abs() < 1e-4);
    let fixed = evaluate(s, HeraldicDetector::Threshold, true);
    let mut corrected = false;
    assert_eq!(
        unsafe { heraldic_report_corrected(fixed, &mut corrected) },
        HeraldicStatus::Ok
    );
    assert!(corrected);
    assert!((get(heraldic_report_pb_mean, fixed) - 1.0).abs() < 1e-9);
    unsafe {
        heraldic_report_free(raw);
        heraldic_report_free(fixed);
        heraldic_scheme_free(s);
    }
}

#[test]
fn json_round_trip() {
    let s = builtin("CX_1_9");
    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_scheme_to_json(s, &mut text) },
        HeraldicStatus::Ok
    );
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_scheme_from_json(text, &mut back) },
        HeraldicStatus::Ok
    );
    let mut again = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_scheme_to_json(back, &mut again) },
        HeraldicStatus::Ok
    );
    assert_eq!(unsafe { CStr::from_ptr(text) }, unsafe {
        CStr::from_ptr(again)
    });
    let mut modes = 0;
    assert_eq!(
        unsafe { heraldic_scheme_mode_count(back, &mut modes) },
        HeraldicStatus::Ok
    );
    assert_eq!(modes, 6);

    let r = evaluate(back, HeraldicDetector::Pnr, false);
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_report_to_json(r, &mut report) },
        HeraldicStatus::Ok
    );
    let doc: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(report) }.to_str().unwrap()).unwrap();
    assert!(doc["fidelity"].is_number());
    unsafe {
        heraldic_string_free(report);
        heraldic_string_free(text);
        heraldic_string_free(again);
        heraldic_report_free(r);
        heraldic_scheme_free(s);
        heraldic_scheme_free(back);
    }
}

#[test]
fn error_codes() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_scheme_builtin(c("CZ_9_9").as_ptr(), &mut s) },
        HeraldicStatus::UnknownBuiltin
    );
    assert!(s.is_null());
    assert!(last_error().contains("CZ_9_9"));

    assert_eq!(
        unsafe { heraldic_scheme_from_json(c("{").as_ptr(), &mut s) },
        HeraldicStatus::ParseError
    );
    let bad = r#"{"modes": 6, "elements": [{"type": "bs", "a": 0, "b": 0, "theta": "45", "phi": "0"}],
                  "signal_modes": [0, 1, 2, 3], "ancilla_modes": [4, 5], "ancilla_input": [0, 0], "herald_pattern": [0, 0]}"#;
    assert_eq!(
        unsafe { heraldic_scheme_from_json(c(bad).as_ptr(), &mut s) },
        HeraldicStatus::InvalidScheme,
        "{}",
        last_error()
    );

    let invalid = [0x66u8, 0xff, 0];
    assert_eq!(
        unsafe { heraldic_scheme_builtin(invalid.as_ptr().cast(), &mut s) },
        HeraldicStatus::InvalidUtf8
    );

    assert_eq!(
        unsafe { heraldic_scheme_builtin(ptr::null(), &mut s) },
        HeraldicStatus::NullPointer
    );
    let nsx = builtin("NSx");
    assert_eq!(
        unsafe { heraldic_scheme_builtin(c("NSx").as_ptr(), ptr::null_mut()) },
        HeraldicStatus::NullPointer
    );
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe {
            heraldic_evaluate(
                ptr::null(),
                HeraldicTarget::Cz,
                HeraldicDetector::Pnr,
                false,
                0,
                &mut r,
            )
        },
        HeraldicStatus::NullPointer
    );
    // a one-rail scheme is not a two-qubit gate
    assert_ne!(
        unsafe {
            heraldic_evaluate(
                nsx,
                HeraldicTarget::Cz,
                HeraldicDetector::Pnr,
                false,
                0,
                &mut r,
            )
        },
        HeraldicStatus::Ok
    );
    let mut v = 0.0;
    assert_eq!(
        unsafe { heraldic_report_fidelity(ptr::null(), &mut v) },
        HeraldicStatus::NullPointer
    );

    let cz = builtin("CZ_1_16");
    assert_eq!(
        unsafe {
            heraldic_evaluate(
                cz,
                HeraldicTarget::Cz,
                HeraldicDetector::Pnr,
                false,
                3,
                &mut r,
            )
        },
        HeraldicStatus::PhotonCapExceeded
    );
    unsafe {
        heraldic_scheme_free(nsx);
        heraldic_scheme_free(cz);
        heraldic_scheme_free(ptr::null_mut());
        heraldic_report_free(ptr::null_mut());
        heraldic_string_free(ptr::null_mut());
    }
}

#[test]
fn undefined_pb_is_reported() {
    // vacuum ancillas can never show a photon through an empty circuit
    let json = r#"{"modes": 6, "elements": [], "signal_modes": [0, 1, 2, 3], "ancilla_modes": [4, 5],
                   "ancilla_input": [0, 0], "herald_pattern": [1, 0]}"#;
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { heraldic_scheme_from_json(c(json).as_ptr(), &mut s) },
        HeraldicStatus::Ok,
        "{}",
        last_error()
    );
    let r = evaluate(s, HeraldicDetector::Pnr, false);
    let mut v = 0.0;
    assert_eq!(
        unsafe { heraldic_report_pb(r, 0, &mut v) },
        HeraldicStatus::Undefined
    );
    assert_eq!(
        unsafe { heraldic_report_pb_mean(r, &mut v) },
        HeraldicStatus::Undefined
    );
    assert_eq!(get(heraldic_report_pa_mean, r), 0.0);
    unsafe {
        heraldic_report_free(r);
        heraldic_scheme_free(s);
    }
}

#[test]
fn errors_are_per_thread() {
    let mut s = ptr::null_mut();
    assert_ne!(
        unsafe { heraldic_scheme_builtin(c("nope").as_ptr(), &mut s) },
        HeraldicStatus::Ok
    );
    std::thread::spawn(|| assert!(heraldic_last_error().is_null()))
        .join()
        .unwrap();
    assert!(last_error().contains("nope"));
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_header() {
    let header_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(header_dir.join("heraldic.h")).unwrap();
    assert!(header.contains("heraldic_evaluate"));
    let lib = target_dir().join("libheraldic_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("ffi-c");
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "heraldic.h"
int main(void) {
    HeraldicScheme *s = NULL;
    HeraldicReport *r = NULL;
    double p = 0.0;
    if (heraldic_scheme_builtin("CZ_1_16", &s) != HERALDIC_STATUS_OK) return 1;
    if (heraldic_evaluate(s, HERALDIC_TARGET_CZ, HERALDIC_DETECTOR_PNR, false, 0, &r) != HERALDIC_STATUS_OK) return 2;
    if (heraldic_report_probability(r, &p) != HERALDIC_STATUS_OK) return 3;
    printf("%.12f\n", p);
    heraldic_report_free(r);
    heraldic_scheme_free(s);
    return heraldic_scheme_builtin("bogus", &s) == HERALDIC_STATUS_UNKNOWN_BUILTIN ? 0 : 4;
}
"#,
    )
    .unwrap();
    let exe = dir.join("main");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{:?}", out.status);
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "0.062500000000"
    );
}
