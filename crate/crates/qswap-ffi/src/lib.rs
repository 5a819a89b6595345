//! C ABI over the qswap simulator.
//!
//! Every call returns a `QswapStatus`; on anything but `QSWAP_STATUS_OK` the
//! thread-local message from `qswap_last_error` says why. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qswap::circuits::{AncillaKind, NetworkConfig};
use qswap::detection::{click_probability, herald_set, vacuum_probability};
use qswap::gaussian::GaussianState;
use qswap::keyrate::evaluate;
use qswap::{Error, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QswapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    NoHerald = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QswapAncilla {
    Wcs = 0,
    Tms = 1,
    Hsps = 2,
}

/// Network configuration handle.
pub struct QswapConfig(NetworkConfig);

/// Gaussian state handle.
pub struct QswapState(GaussianState);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QswapRate {
    pub bits_per_round: f64,
    pub conditional_rate: f64,
    pub accept_probability: f64,
    pub sift_probability: f64,
    pub h_key: f64,
    pub h_test: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QswapStatus {
    match e {
        Error::InvalidArgument(_) | Error::Unsupported(_) => QswapStatus::InvalidArgument,
        Error::NoHerald(_) => QswapStatus::NoHerald,
        Error::Numerical(_) | Error::Degenerate(_) => QswapStatus::Numerical,
    }
}

/// Runs `f`, records any error or panic, and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Error>) -> QswapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QswapStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            QswapStatus::Panic
        }
    }
}

fn null() -> Error {
    Error::InvalidArgument("null pointer".into())
}

macro_rules! check_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_error("null pointer argument");
            return QswapStatus::NullPointer;
        }
    };
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qswap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qswap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New configuration with every parameter zero; `k = 0` means `k = d`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qswap_config_new(d: usize, k: usize, ancilla: QswapAncilla, out: *mut *mut QswapConfig) -> QswapStatus {
    check_null!(out);
    let kind = match ancilla {
        QswapAncilla::Wcs => AncillaKind::Wcs,
        QswapAncilla::Tms => AncillaKind::Tms,
        QswapAncilla::Hsps => AncillaKind::Hsps,
    };
    guard(|| {
        let cfg = NetworkConfig::new(d, k, kind);
        cfg.validate()?;
        *out = Box::into_raw(Box::new(QswapConfig(cfg)));
        Ok(())
    })
}

/// Parse a JSON network description (same fields as the CLI `network`
/// section).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qswap_config_from_json(json: *const c_char, out: *mut *mut QswapConfig) -> QswapStatus {
    check_null!(json, out);
    guard(|| {
        let text = CStr::from_ptr(json).to_str().map_err(|_| Error::InvalidArgument("config is not UTF-8".into()))?;
        let cfg: NetworkConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("line {}: {e}", e.line())))?;
        cfg.validate()?;
        *out = Box::into_raw(Box::new(QswapConfig(cfg)));
        Ok(())
    })
}

/// Set one numeric field: "s", "xi", "alpha", "theta" or "eta".
///
/// # Safety
/// `cfg` must come from a `qswap_config_*` constructor; `field` must be a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qswap_config_set(cfg: *mut QswapConfig, field: *const c_char, value: f64) -> QswapStatus {
    check_null!(cfg, field);
    guard(|| {
        let c = &mut (*cfg).0;
        let mut next = c.clone();
        match CStr::from_ptr(field).to_bytes() {
            b"s" => next.s = value,
            b"xi" => next.xi = value,
            b"alpha" => next.alpha = value,
            b"theta" => next.theta = value,
            b"eta" => next.eta = Some(value),
            other => {
                return Err(Error::InvalidArgument(format!("unknown field `{}`", String::from_utf8_lossy(other))));
            }
        }
        next.validate()?;
        *c = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qswap_config_free(cfg: *mut QswapConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Full pipeline: heralds, both bases, key rate.
///
/// # Safety
/// `cfg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qswap_evaluate(cfg: *const QswapConfig, out: *mut QswapRate) -> QswapStatus {
    check_null!(cfg, out);
    guard(|| {
        let r = evaluate(&(*cfg).0)?;
        *out = QswapRate {
            bits_per_round: r.bits_per_round,
            conditional_rate: r.conditional_rate,
            accept_probability: r.accept_probability,
            sift_probability: r.sift_probability,
            h_key: r.h_key,
            h_test: r.h_test,
        };
        Ok(())
    })
}

/// Number of perfect heralding patterns for dimension `d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qswap_herald_count(d: usize, out: *mut usize) -> QswapStatus {
    check_null!(out);
    guard(|| {
        *out = herald_set(d, Default::default())?.perfect.len();
        Ok(())
    })
}

/// Vacuum state on `n_modes` modes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qswap_state_vacuum(n_modes: usize, out: *mut *mut QswapState) -> QswapStatus {
    check_null!(out);
    guard(|| {
        *out = Box::into_raw(Box::new(QswapState(GaussianState::vacuum(n_modes)?)));
        Ok(())
    })
}

/// # Safety
/// `st` must be a live state handle.
#[no_mangle]
pub unsafe extern "C" fn qswap_state_two_mode_squeeze(st: *mut QswapState, a: usize, b: usize, s: f64) -> QswapStatus {
    check_null!(st);
    guard(|| {
        (*st).0 = (*st).0.two_mode_squeeze(a, b, s)?;
        Ok(())
    })
}

/// # Safety
/// `st` must be a live state handle.
#[no_mangle]
pub unsafe extern "C" fn qswap_state_squeeze(st: *mut QswapState, mode: usize, r: f64) -> QswapStatus {
    check_null!(st);
    guard(|| {
        (*st).0 = (*st).0.single_mode_squeeze(mode, r)?;
        Ok(())
    })
}

/// # Safety
/// `st` must be a live state handle.
#[no_mangle]
pub unsafe extern "C" fn qswap_state_displace(st: *mut QswapState, mode: usize, re: f64, im: f64) -> QswapStatus {
    check_null!(st);
    guard(|| {
        (*st).0 = (*st).0.displace(mode, C64::new(re, im))?;
        Ok(())
    })
}

/// # Safety
/// `st` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qswap_state_free(st: *mut QswapState) {
    if !st.is_null() {
        drop(Box::from_raw(st));
    }
}

unsafe fn modes<'a>(p: *const usize, n: usize) -> Result<&'a [usize], Error> {
    if n == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null())
    } else {
        Ok(std::slice::from_raw_parts(p, n))
    }
}

/// Probability that no photon reaches any of the listed modes.
///
/// # Safety
/// `st` must be a live handle, `subset` must hold `n` entries (may be null
/// when `n == 0`) and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qswap_vacuum_probability(st: *const QswapState, subset: *const usize, n: usize, out: *mut f64) -> QswapStatus {
    check_null!(st, out);
    guard(|| {
        *out = vacuum_probability(&(*st).0, modes(subset, n)?)?;
        Ok(())
    })
}

/// Threshold-detector probability that every `clicked` mode fires and
/// every `silent` mode stays dark.
///
/// # Safety
/// `st` must be a live handle; the arrays must hold the stated number of
/// entries (may be null when empty); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qswap_click_probability(
    st: *const QswapState,
    clicked: *const usize,
    n_clicked: usize,
    silent: *const usize,
    n_silent: usize,
    out: *mut f64,
) -> QswapStatus {
    check_null!(st, out);
    guard(|| {
        *out = click_probability(&(*st).0, modes(clicked, n_clicked)?, modes(silent, n_silent)?)?;
        Ok(())
    })
}
