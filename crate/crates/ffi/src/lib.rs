//! C ABI over the `bitrl` ternary kernels, trained lighting agents and the
//! command parser.
//!
//! Every fallible function returns a [`BitrlStatus`]. On failure a message is
//! kept per thread and can be read with [`bitrl_last_error_message`]. Objects
//! are opaque handles created by `bitrl_ternary_quantize`,
//! `bitrl_ternary_from_trits` or `bitrl_agent_load` and released with the
//! matching `*_free`. Strings returned to the caller are
//! owned by the caller and released with [`bitrl_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bitrl::agent::{load_checkpoint, QNetwork};
use bitrl::home::{initial_state, HomeConfig, SimRng};
use bitrl::intent::{intent_to_config, parse_command, Lexicon};
use bitrl::ternary::{
    lut_matvec, quantize_absmean, quantize_activation, ternary_matvec, QuantError, TernaryMatrix,
};
use bitrl::Matrix;

const BUNDLED_HOME: &str = include_str!("../../core/configs/family_4zone.json");
const VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Format = 5,
    ParseFailed = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

/// Matrix-vector kernel selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitrlKernel {
    /// Scalar decode and accumulate.
    Scalar = 0,
    /// Lookup tables over groups of four activations.
    Lut = 1,
}

/// Ternary weight matrix with its absmean scale.
pub struct BitrlTernaryMatrix {
    inner: TernaryMatrix,
}

/// Q-network restored from a checkpoint.
pub struct BitrlAgent {
    net: QNetwork,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(BitrlStatus, String);

impl Failure {
    fn new(status: BitrlStatus, msg: impl Into<String>) -> Self {
        Self(status, msg.into())
    }
}

impl From<QuantError> for Failure {
    fn from(e: QuantError) -> Self {
        let status = match e {
            QuantError::DimensionMismatch { .. } => BitrlStatus::DimensionMismatch,
            _ => BitrlStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, records any error message and converts panics to
/// [`BitrlStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BitrlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BitrlStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BitrlStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(
            BitrlStatus::NullPointer,
            format!("{name} is null"),
        ))
    } else {
        Ok(())
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(BitrlStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

fn checked_len(rows: usize, cols: usize) -> Result<usize, Failure> {
    rows.checked_mul(cols)
        .ok_or_else(|| Failure::new(BitrlStatus::InvalidArgument, "rows * cols overflows"))
}

fn copy_out(src: &[f64], out: &mut [f64]) -> Result<(), Failure> {
    if out.len() < src.len() {
        return Err(Failure::new(
            BitrlStatus::BufferTooSmall,
            format!("output holds {} values, {} needed", out.len(), src.len()),
        ));
    }
    out[..src.len()].copy_from_slice(src);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn bitrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn bitrl_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Quantizes a row-major `rows × cols` matrix with the absmean rule.
#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_quantize(
    weights: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut BitrlTernaryMatrix,
) -> BitrlStatus {
    guard(|| {
        non_null(out, "out")?;
        let w = slice(weights, checked_len(rows, cols)?, "weights")?;
        let m = Matrix::from_vec(rows, cols, w.to_vec());
        let inner = quantize_absmean(&m)?;
        *out = Box::into_raw(Box::new(BitrlTernaryMatrix { inner }));
        Ok(())
    })
}

/// Builds a matrix from row-major trits in `{-1, 0, 1}` and a positive scale.
#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_from_trits(
    trits: *const i8,
    rows: usize,
    cols: usize,
    scale: f64,
    out: *mut *mut BitrlTernaryMatrix,
) -> BitrlStatus {
    guard(|| {
        non_null(out, "out")?;
        let t = slice(trits, checked_len(rows, cols)?, "trits")?;
        let inner = TernaryMatrix::from_trits(rows, cols, t, scale)?;
        *out = Box::into_raw(Box::new(BitrlTernaryMatrix { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_rows(m: *const BitrlTernaryMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.rows())
}

#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_cols(m: *const BitrlTernaryMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.inner.cols())
}

/// Absmean scale, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_scale(m: *const BitrlTernaryMatrix) -> f64 {
    m.as_ref().map_or(0.0, |m| m.inner.scale())
}

/// Copies the unpacked trits (row-major, `rows * cols` values) into `out`.
#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_trits(
    m: *const BitrlTernaryMatrix,
    out: *mut i8,
    out_len: usize,
) -> BitrlStatus {
    guard(|| {
        let m = m
            .as_ref()
            .ok_or_else(|| Failure::new(BitrlStatus::NullPointer, "matrix is null"))?;
        let trits = m.inner.to_trits();
        let out = slice_mut(out, out_len, "out")?;
        if out.len() < trits.len() {
            return Err(Failure::new(
                BitrlStatus::BufferTooSmall,
                "output too small",
            ));
        }
        out[..trits.len()].copy_from_slice(&trits);
        Ok(())
    })
}

/// `out = W · x` with `x` quantized to int8 (absmax) first. `kernel` is a
/// [`BitrlKernel`] value; `x_len` must equal the column count and `out_len`
/// be at least the row count.
#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_matvec(
    m: *const BitrlTernaryMatrix,
    kernel: u32,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> BitrlStatus {
    guard(|| {
        let m = m
            .as_ref()
            .ok_or_else(|| Failure::new(BitrlStatus::NullPointer, "matrix is null"))?;
        let xq = quantize_activation(slice(x, x_len, "x")?)?;
        let y = match kernel {
            k if k == BitrlKernel::Scalar as u32 => ternary_matvec(&m.inner, &xq)?,
            k if k == BitrlKernel::Lut as u32 => lut_matvec(&m.inner, &xq)?,
            k => {
                return Err(Failure::new(
                    BitrlStatus::InvalidArgument,
                    format!("unknown kernel {k}"),
                ))
            }
        };
        copy_out(&y, slice_mut(out, out_len, "out")?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn bitrl_ternary_free(m: *mut BitrlTernaryMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Loads a checkpoint written by `bitrl train` or the gateway.
#[no_mangle]
pub unsafe extern "C" fn bitrl_agent_load(
    path: *const c_char,
    out: *mut *mut BitrlAgent,
) -> BitrlStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = text(path, "path")?;
        let net = load_checkpoint(path).map_err(|e| {
            let status = match e {
                bitrl::agent::AgentError::Io { .. } => BitrlStatus::Io,
                _ => BitrlStatus::Format,
            };
            Failure::new(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(BitrlAgent { net }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bitrl_agent_state_dim(a: *const BitrlAgent) -> usize {
    a.as_ref().map_or(0, |a| a.net.state_dim())
}

#[no_mangle]
pub unsafe extern "C" fn bitrl_agent_num_actions(a: *const BitrlAgent) -> usize {
    a.as_ref().map_or(0, |a| a.net.num_actions())
}

/// Q-values of every action for one encoded state.
#[no_mangle]
pub unsafe extern "C" fn bitrl_agent_q_values(
    a: *const BitrlAgent,
    state: *const f64,
    state_len: usize,
    out: *mut f64,
    out_len: usize,
) -> BitrlStatus {
    guard(|| {
        let a = a
            .as_ref()
            .ok_or_else(|| Failure::new(BitrlStatus::NullPointer, "agent is null"))?;
        let q = a
            .net
            .q_values(slice(state, state_len, "state")?)
            .map_err(|e| Failure::new(BitrlStatus::DimensionMismatch, e.to_string()))?;
        copy_out(&q, slice_mut(out, out_len, "out")?)
    })
}

/// Greedy action index (lowest index among ties) for one encoded state.
#[no_mangle]
pub unsafe extern "C" fn bitrl_agent_act(
    a: *const BitrlAgent,
    state: *const f64,
    state_len: usize,
    action: *mut usize,
) -> BitrlStatus {
    guard(|| {
        let a = a
            .as_ref()
            .ok_or_else(|| Failure::new(BitrlStatus::NullPointer, "agent is null"))?;
        non_null(action, "action")?;
        let q = a
            .net
            .q_values(slice(state, state_len, "state")?)
            .map_err(|e| Failure::new(BitrlStatus::DimensionMismatch, e.to_string()))?;
        let best = q
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > q[best] { i } else { best });
        *action = best;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn bitrl_agent_free(a: *mut BitrlAgent) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Parses `text` against a home description (JSON text, or null for the
/// bundled four-zone home). On success `*out_json` receives
/// `{"intent": …, "settings": […]}` for the home's initial state. On
/// [`BitrlStatus::ParseFailed`] it receives the structured parse error
/// instead. Release the string with [`bitrl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bitrl_parse_command(
    home_json: *const c_char,
    text_in: *const c_char,
    out_json: *mut *mut c_char,
) -> BitrlStatus {
    guard(|| {
        non_null(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let home_text = if home_json.is_null() {
            BUNDLED_HOME
        } else {
            text(home_json, "home_json")?
        };
        let home = HomeConfig::from_json(home_text)
            .map_err(|e| Failure::new(BitrlStatus::InvalidArgument, e.to_string()))?;
        let command = text(text_in, "text")?;
        let lexicon = Lexicon::from_config(&home);
        let to_c = |s: String| {
            CString::new(s)
                .map(CString::into_raw)
                .unwrap_or(ptr::null_mut())
        };
        match parse_command(command, &lexicon) {
            Ok(intent) => {
                let state = initial_state(&home, &mut SimRng::new(0));
                let doc = intent_to_config(&intent, &state, &home)
                    .map_err(|e| Failure::new(BitrlStatus::InvalidArgument, e.to_string()))?
                    .document;
                *out_json = to_c(serde_json::to_string(&doc).expect("serializable"));
                Ok(())
            }
            Err(e) => {
                *out_json = to_c(serde_json::to_string(&e).expect("serializable"));
                Err(Failure::new(BitrlStatus::ParseFailed, e.to_string()))
            }
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn bitrl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
