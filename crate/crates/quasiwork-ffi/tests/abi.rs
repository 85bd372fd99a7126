//! End-to-end exercise of the C ABI from Rust: lifecycle, results against
//! pinned values, and error paths.

use quasiwork_ffi::*;
use std::ffi::CStr;
use std::f64::consts::PI;
use std::ptr;

const SQRT3: f64 = 1.732050807568877293527446341505872367_f64;

fn new_protocol(t: f64) -> *mut QwProtocol {
    let mut p: *mut QwProtocol = ptr::null_mut();
    let st = unsafe { qw_protocol_new(1.0, SQRT3, t, &mut p) };
    assert_eq!(st, QwStatus::Ok);
    assert!(!p.is_null());
    p
}

fn new_plus() -> *mut QwState {
    let mut s: *mut QwState = ptr::null_mut();
    let st = unsafe { qw_state_new_plus(1.0, SQRT3, &mut s) };
    assert_eq!(st, QwStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(qw_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn table_and_char_function_reproduce_pinned_values() {
    let p = new_protocol(7.0 * PI / 6.0);
    let s = new_plus();
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let mut w = [0.0f64; 4];
    let st = unsafe { qw_kdq_table(p, s, re.as_mut_ptr(), im.as_mut_ptr(), w.as_mut_ptr()) };
    assert_eq!(st, QwStatus::Ok);
    // Row-major 2i + f; the no-transition entry of the equal superposition.
    assert!((re[0] - 3.52123412263472768e-1).abs() <= 1e-13);
    assert!((im[0] - 1.08253175473054852e-1).abs() <= 1e-13);
    assert!((w[1] - 2.0).abs() <= 1e-12);
    assert!((w[2] + 2.0).abs() <= 1e-12);
    let total_re: f64 = re.iter().sum();
    let total_im: f64 = im.iter().sum();
    assert!((total_re - 1.0).abs() <= 1e-12);
    assert!(total_im.abs() <= 1e-12);

    let (mut gr, mut gi) = (0.0f64, 0.0f64);
    let st = unsafe { qw_char_function(p, s, 0.37, &mut gr, &mut gi) };
    assert_eq!(st, QwStatus::Ok);
    assert!((gr - 8.16990882512895311e-1).abs() <= 1e-13);
    assert!((gi + 2.15793380656825989e-1).abs() <= 1e-13);

    unsafe {
        qw_state_free(s);
        qw_protocol_free(p);
    }
}

#[test]
fn moments_and_uncertainty_bound_are_consistent() {
    let p = new_protocol(7.0 * PI / 6.0);
    let s = new_plus();
    let (mut mr, mut mi, mut vr, mut vi) = (0.0, 0.0, 0.0, 0.0);
    let st = unsafe { qw_work_moments(p, s, &mut mr, &mut mi, &mut vr, &mut vi) };
    assert_eq!(st, QwStatus::Ok);
    assert!((mr + 0.8080127018922192).abs() <= 1e-12);
    assert!(mi.abs() <= 1e-12);
    assert!((vr - 2.1461535792574953).abs() <= 1e-12);
    assert!((vi + 0.86602540378443865).abs() <= 1e-12);

    let (mut lhs, mut rhs) = (0.0, 0.0);
    let st = unsafe { qw_rsur(p, s, &mut lhs, &mut rhs) };
    assert_eq!(st, QwStatus::Ok);
    // Pure states saturate the bound.
    assert!((lhs - rhs).abs() <= 1e-9);
    assert!(lhs >= rhs - 1e-10);

    unsafe {
        qw_state_free(s);
        qw_protocol_free(p);
    }
}

#[test]
fn null_pointers_are_reported_not_dereferenced() {
    let mut out = [0.0f64; 4];
    let st = unsafe {
        qw_kdq_table(
            ptr::null(),
            ptr::null(),
            out.as_mut_ptr(),
            out.as_mut_ptr(),
            out.as_mut_ptr(),
        )
    };
    assert_eq!(st, QwStatus::NullPointer);
    let msg = unsafe { CStr::from_ptr(qw_last_error_message()) };
    assert!(!msg.to_bytes().is_empty());

    let st = unsafe { qw_protocol_new(1.0, SQRT3, 1.0, ptr::null_mut()) };
    assert_eq!(st, QwStatus::NullPointer);
    unsafe {
        // Free of null is a no-op by contract.
        qw_protocol_free(ptr::null_mut());
        qw_state_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_are_rejected_with_messages() {
    let mut s: *mut QwState = ptr::null_mut();
    let st = unsafe { qw_state_new_mixture(1.0, SQRT3, 1.5, &mut s) };
    assert_eq!(st, QwStatus::InvalidArgument);
    assert!(s.is_null());
    let msg = unsafe { CStr::from_ptr(qw_last_error_message()) };
    assert!(msg.to_str().unwrap().contains("1.5"));

    let mut p: *mut QwProtocol = ptr::null_mut();
    let st = unsafe { qw_protocol_new(-1.0, SQRT3, 1.0, &mut p) };
    assert_eq!(st, QwStatus::InvalidArgument);
    let st = unsafe { qw_protocol_new(1.0, SQRT3, f64::NAN, &mut p) };
    assert_eq!(st, QwStatus::InvalidArgument);
}

#[test]
fn generated_header_declares_the_full_surface() {
    let header = include_str!("../include/quasiwork.h");
    for symbol in [
        "qw_version",
        "qw_last_error_message",
        "qw_protocol_new",
        "qw_protocol_free",
        "qw_state_new_plus",
        "qw_state_new_minus",
        "qw_state_new_mixture",
        "qw_state_free",
        "qw_kdq_table",
        "qw_char_function",
        "qw_work_moments",
        "qw_rsur",
        "QW_STATUS_NUMERICAL_ERROR",
        "typedef struct QwProtocol QwProtocol;",
        "typedef struct QwState QwState;",
    ] {
        assert!(header.contains(symbol), "header is missing {symbol}");
    }
}
