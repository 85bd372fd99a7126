//! C ABI over the core library.
//!
//! Conventions: handles are opaque pointers created by `qw_*_new` and
//! released by the matching `qw_*_free`; results come back through out
//! pointers; every function returns a status code and never unwinds across
//! the boundary. On any non-Ok status, `qw_last_error_message` returns a
//! thread-local NUL-terminated description that stays valid until the next
//! failing call on the same thread.

use quasiwork::kdq::{char_function, kdq_table, rsur_report, work_moments};
use quasiwork::protocol::{make_initial_state, DriveParams, ProtocolError, StateLabel, WorkProtocol};
use quasiwork::qmath::Mat2;
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalError = 3,
}

/// Opaque: a fixed drive and protocol time with its spectral data.
pub struct QwProtocol {
    inner: WorkProtocol,
}

/// Opaque: an initial density matrix.
pub struct QwState {
    rho: Mat2,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn fail(status: QwStatus, message: &str) -> QwStatus {
    let sanitized: String = message.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn map_protocol_error(e: &ProtocolError) -> QwStatus {
    match e {
        ProtocolError::InvalidMixture(_) | ProtocolError::NonFiniteTime(_) => {
            QwStatus::InvalidArgument
        }
        _ => QwStatus::NumericalError,
    }
}

/// Runs a closure, converting panics into NumericalError instead of
/// crossing the ABI.
fn guarded(f: impl FnOnce() -> QwStatus) -> QwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(QwStatus::NumericalError, "internal panic"),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Description of the most recent failure on this thread.
#[no_mangle]
pub extern "C" fn qw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds a protocol from drive amplitude, detuning, and time.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qw_protocol_new(
    omega_rabi: f64,
    delta: f64,
    t: f64,
    out: *mut *mut QwProtocol,
) -> QwStatus {
    guarded(|| {
        if out.is_null() {
            return fail(QwStatus::NullPointer, "out pointer is null");
        }
        if !(omega_rabi.is_finite() && omega_rabi > 0.0) || !delta.is_finite() {
            return fail(
                QwStatus::InvalidArgument,
                "drive amplitude must be positive and finite, detuning finite",
            );
        }
        match WorkProtocol::new(DriveParams::new(omega_rabi, delta), t) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QwProtocol { inner }));
                QwStatus::Ok
            }
            Err(e) => fail(map_protocol_error(&e), &e.to_string()),
        }
    })
}

/// Releases a protocol handle; null is a no-op.
///
/// # Safety
/// `p` must be null or a pointer from `qw_protocol_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_protocol_free(p: *mut QwProtocol) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn state_new(
    omega_rabi: f64,
    delta: f64,
    label: StateLabel,
    out: *mut *mut QwState,
) -> QwStatus {
    if out.is_null() {
        return fail(QwStatus::NullPointer, "out pointer is null");
    }
    if !(omega_rabi.is_finite() && omega_rabi > 0.0) || !delta.is_finite() {
        return fail(
            QwStatus::InvalidArgument,
            "drive amplitude must be positive and finite, detuning finite",
        );
    }
    match make_initial_state(&DriveParams::new(omega_rabi, delta), label) {
        Ok(st) => {
            *out = Box::into_raw(Box::new(QwState { rho: st.rho }));
            QwStatus::Ok
        }
        Err(e) => fail(map_protocol_error(&e), &e.to_string()),
    }
}

/// Equal superposition of the two initial eigenstates.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qw_state_new_plus(
    omega_rabi: f64,
    delta: f64,
    out: *mut *mut QwState,
) -> QwStatus {
    guarded(|| state_new(omega_rabi, delta, StateLabel::Plus, out))
}

/// Orthogonal superposition of the two initial eigenstates.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qw_state_new_minus(
    omega_rabi: f64,
    delta: f64,
    out: *mut *mut QwState,
) -> QwStatus {
    guarded(|| state_new(omega_rabi, delta, StateLabel::Minus, out))
}

/// Mixture p |plus><plus| + (1-p) |minus><minus| with p in [0, 1].
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn qw_state_new_mixture(
    omega_rabi: f64,
    delta: f64,
    p: f64,
    out: *mut *mut QwState,
) -> QwStatus {
    guarded(|| state_new(omega_rabi, delta, StateLabel::Mixture(p), out))
}

/// Releases a state handle; null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer from a `qw_state_new_*` call not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qw_state_free(s: *mut QwState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Fills the 2x2 quasiprobability table in row-major layout, index
/// `2 * initial + final`: real parts, imaginary parts, and the transition
/// energies.
///
/// # Safety
/// `re`, `im`, `w` must each point to at least four writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_kdq_table(
    p: *const QwProtocol,
    s: *const QwState,
    re: *mut f64,
    im: *mut f64,
    w: *mut f64,
) -> QwStatus {
    guarded(|| {
        let (Some(proto), Some(state)) = (p.as_ref(), s.as_ref()) else {
            return fail(QwStatus::NullPointer, "protocol or state handle is null");
        };
        if re.is_null() || im.is_null() || w.is_null() {
            return fail(QwStatus::NullPointer, "output array is null");
        }
        match kdq_table(&proto.inner, &state.rho) {
            Ok(table) => {
                for i in 0..2 {
                    for f in 0..2 {
                        let k = 2 * i + f;
                        *re.add(k) = table.entries[i][f].re;
                        *im.add(k) = table.entries[i][f].im;
                        *w.add(k) = table.w[i][f];
                    }
                }
                QwStatus::Ok
            }
            Err(e) => fail(QwStatus::NumericalError, &e.to_string()),
        }
    })
}

/// Characteristic function at conjugate parameter `u`.
///
/// # Safety
/// `out_re` and `out_im` must be valid writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_char_function(
    p: *const QwProtocol,
    s: *const QwState,
    u: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> QwStatus {
    guarded(|| {
        let (Some(proto), Some(state)) = (p.as_ref(), s.as_ref()) else {
            return fail(QwStatus::NullPointer, "protocol or state handle is null");
        };
        if out_re.is_null() || out_im.is_null() {
            return fail(QwStatus::NullPointer, "output pointer is null");
        }
        if !u.is_finite() {
            return fail(QwStatus::InvalidArgument, "u must be finite");
        }
        match kdq_table(&proto.inner, &state.rho) {
            Ok(table) => {
                let g = char_function(&table, u);
                *out_re = g.re;
                *out_im = g.im;
                QwStatus::Ok
            }
            Err(e) => fail(QwStatus::NumericalError, &e.to_string()),
        }
    })
}

/// First moment and complex variance of the work variable.
///
/// # Safety
/// All four out pointers must be valid writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_work_moments(
    p: *const QwProtocol,
    s: *const QwState,
    mean_re: *mut f64,
    mean_im: *mut f64,
    var_re: *mut f64,
    var_im: *mut f64,
) -> QwStatus {
    guarded(|| {
        let (Some(proto), Some(state)) = (p.as_ref(), s.as_ref()) else {
            return fail(QwStatus::NullPointer, "protocol or state handle is null");
        };
        if mean_re.is_null() || mean_im.is_null() || var_re.is_null() || var_im.is_null() {
            return fail(QwStatus::NullPointer, "output pointer is null");
        }
        match kdq_table(&proto.inner, &state.rho) {
            Ok(table) => {
                let m = work_moments(&table);
                *mean_re = m.mean.re;
                *mean_im = m.mean.im;
                *var_re = m.variance.re;
                *var_im = m.variance.im;
                QwStatus::Ok
            }
            Err(e) => fail(QwStatus::NumericalError, &e.to_string()),
        }
    })
}

/// Both sides of the two-observable uncertainty bound for this state and
/// protocol.
///
/// # Safety
/// `lhs` and `rhs` must be valid writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qw_rsur(
    p: *const QwProtocol,
    s: *const QwState,
    lhs: *mut f64,
    rhs: *mut f64,
) -> QwStatus {
    guarded(|| {
        let (Some(proto), Some(state)) = (p.as_ref(), s.as_ref()) else {
            return fail(QwStatus::NullPointer, "protocol or state handle is null");
        };
        if lhs.is_null() || rhs.is_null() {
            return fail(QwStatus::NullPointer, "output pointer is null");
        }
        match rsur_report(&proto.inner, &state.rho) {
            Ok(rep) => {
                *lhs = rep.lhs;
                *rhs = rep.rhs;
                QwStatus::Ok
            }
            Err(e) => fail(QwStatus::NumericalError, &e.to_string()),
        }
    })
}
