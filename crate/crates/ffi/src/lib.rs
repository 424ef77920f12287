//! C interface to `tfstretch`.
//!
//! Signals are opaque heap handles created by `tfs_signal_*` constructors and
//! released with [`tfs_signal_free`]. Every fallible call returns a
//! [`TfsStatus`]; on failure a description is available from
//! [`tfs_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tfstretch::nspv::{nspv_stretch, NspvConfig};
use tfstretch::pv::{pv_stretch, PvConfig};
use tfstretch::{read_wav, write_wav, Error, Signal};

/// Status codes. `Ok` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnsupportedFormat = 3,
    CorruptFile = 4,
    Io = 5,
    InvalidSignal = 6,
    InvalidLength = 7,
    ShapeMismatch = 8,
    NotAFrame = 9,
    InvalidRate = 10,
    InfeasibleRate = 11,
    InvalidConfig = 12,
    Internal = 13,
    Panic = 14,
}

impl From<&Error> for TfsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::UnsupportedFormat(_) => Self::UnsupportedFormat,
            Error::CorruptFile(_) => Self::CorruptFile,
            Error::Io(_) => Self::Io,
            Error::InvalidSignal(_) => Self::InvalidSignal,
            Error::InvalidLength { .. } => Self::InvalidLength,
            Error::ShapeMismatch(_) => Self::ShapeMismatch,
            Error::NotAFrame { .. } => Self::NotAFrame,
            Error::InvalidRate(_) => Self::InvalidRate,
            Error::InfeasibleRate { .. } => Self::InfeasibleRate,
            Error::InvalidConfig(_) => Self::InvalidConfig,
            Error::DegenerateParabola | Error::StateMismatch(_) | Error::Serialization(_) => Self::Internal,
        }
    }
}

/// Opaque mono signal handle.
pub struct TfsSignal(Signal);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg).unwrap_or_else(|e| {
        let end = e.nul_position();
        CString::new(&e.into_vec()[..end]).expect("truncated at first nul")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (TfsStatus, String)>) -> TfsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TfsStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (TfsStatus, String) {
    (TfsStatus::from(&e), format!("{}: {e}", e.name()))
}

fn null(what: &str) -> (TfsStatus, String) {
    (TfsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, (TfsStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path).to_str().map_err(|_| (TfsStatus::InvalidUtf8, "path is not valid UTF-8".into()))
}

unsafe fn signal_arg<'a>(signal: *const TfsSignal) -> Result<&'a Signal, (TfsStatus, String)> {
    signal.as_ref().map(|s| &s.0).ok_or_else(|| null("signal"))
}

unsafe fn emit(out: *mut *mut TfsSignal, signal: Signal) -> Result<(), (TfsStatus, String)> {
    *out = Box::into_raw(Box::new(TfsSignal(signal)));
    Ok(())
}

/// Copies `len` samples into a new signal.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfs_signal_new(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    out: *mut *mut TfsSignal,
) -> TfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if samples.is_null() && len > 0 {
            return Err(null("samples"));
        }
        let data = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(samples, len).to_vec() };
        emit(out, Signal::new(data, sample_rate).map_err(lib_err)?)
    })
}

/// Reads a mono WAV file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfs_signal_read_wav(path: *const c_char, out: *mut *mut TfsSignal) -> TfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path)?;
        emit(out, read_wav(path).map_err(lib_err)?)
    })
}

/// Writes `signal` as a 32-bit float WAV file.
///
/// # Safety
/// `signal` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tfs_signal_write_wav(signal: *const TfsSignal, path: *const c_char) -> TfsStatus {
    guard(|| {
        let signal = signal_arg(signal)?;
        write_wav(path_arg(path)?, signal).map_err(lib_err)
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `signal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfs_signal_len(signal: *const TfsSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.0.len())
}

/// Sample rate in Hz, or 0 for a null handle.
///
/// # Safety
/// `signal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfs_signal_sample_rate(signal: *const TfsSignal) -> u32 {
    signal.as_ref().map_or(0, |s| s.0.sample_rate())
}

/// Borrowed pointer to the samples, valid until the handle is freed. Null for
/// a null handle.
///
/// # Safety
/// `signal` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tfs_signal_data(signal: *const TfsSignal) -> *const f64 {
    signal.as_ref().map_or(ptr::null(), |s| s.0.samples().as_ptr())
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `signal` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tfs_signal_free(signal: *mut TfsSignal) {
    if !signal.is_null() {
        drop(Box::from_raw(signal));
    }
}

/// Stretches with the uniform phase vocoder. `hop` and `channels` of zero
/// select the defaults for the signal's sample rate.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfs_stretch_pv(
    signal: *const TfsSignal,
    rate: f64,
    hop: usize,
    channels: usize,
    out: *mut *mut TfsSignal,
) -> TfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let signal = signal_arg(signal)?;
        let cfg = match (hop, channels) {
            (0, 0) if signal.sample_rate() >= 32000 => PvConfig::new(512, 2048),
            (0, 0) => PvConfig::default(),
            (0, _) | (_, 0) => {
                return Err((TfsStatus::InvalidConfig, "hop and channels must both be zero or both set".into()))
            }
            (a, m) => PvConfig::new(a, m),
        };
        let y = pv_stretch(signal.samples(), rate, &cfg).map_err(lib_err)?;
        emit(out, Signal::new(y.samples, signal.sample_rate()).map_err(lib_err)?)
    })
}

/// Stretches with the adaptive vocoder using the defaults for the signal's
/// sample rate.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tfs_stretch_nspv(signal: *const TfsSignal, rate: f64, out: *mut *mut TfsSignal) -> TfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let signal = signal_arg(signal)?;
        let cfg = NspvConfig::for_sample_rate(signal.sample_rate());
        let y = nspv_stretch(signal.samples(), rate, &cfg).map_err(lib_err)?;
        emit(out, Signal::new(y.samples, signal.sample_rate()).map_err(lib_err)?)
    })
}

/// Message for the last failure on this thread, or null if the last fallible call
/// succeeded. Valid until the next `tfs_` call on the same thread.
#[no_mangle]
pub extern "C" fn tfs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn tfs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
