//! C interface to the learned index.
//!
//! Indexes are opaque handles created by `lipp_u64_new`/`lipp_f64_new`
//! and released with the matching `_free`. Every call returns a
//! [`LippStatus`]; results are written through out-pointers. Handles are
//! not thread-safe: callers must serialize access to one handle. Panics
//! never cross the boundary; they surface as `LIPP_STATUS_PANIC`.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use lipp::{Error, Key, LippIndex, Params};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LippStatus {
    Ok = 0,
    NotFound = 1,
    AlreadyExists = 2,
    /// Null pointer, bad parameter or malformed input.
    InvalidArgument = 3,
    /// NaN, out-of-range or outside the kernel's domain.
    InvalidKey = 4,
    /// Bulkload on an index that already holds elements.
    NotEmpty = 5,
    /// The output buffer was too small; the required count was written.
    BufferTooSmall = 6,
    Panic = 7,
}

/// Index parameters; start from `lipp_default_params`.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct LippParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub max_len: usize,
    pub min_adjust_elements: usize,
    pub overflow_capacity: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct LippStats {
    pub elements: usize,
    pub nodes: usize,
    pub avg_depth: f64,
    pub max_depth: usize,
    pub index_bytes: usize,
    pub adjustments: u64,
}

/// Opaque index over unsigned 64-bit keys.
pub struct LippIndexU64(LippIndex<u64>);

/// Opaque index over double keys.
pub struct LippIndexF64(LippIndex<f64>);

fn status_of(e: &Error) -> LippStatus {
    match e {
        Error::NotFound => LippStatus::NotFound,
        Error::AlreadyExists | Error::DuplicateKey => LippStatus::AlreadyExists,
        Error::InvalidKey(_) | Error::KernelDomain { .. } => LippStatus::InvalidKey,
        Error::NotEmpty => LippStatus::NotEmpty,
        _ => LippStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> LippStatus) -> LippStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(LippStatus::Panic)
}

fn to_params(p: &LippParams) -> Params {
    Params {
        alpha: p.alpha,
        beta: p.beta,
        delta: p.delta,
        max_len: p.max_len,
        min_adjust_elements: p.min_adjust_elements,
        overflow_capacity: p.overflow_capacity,
        ..Params::default()
    }
}

/// Static, NUL-terminated description of `status`.
#[no_mangle]
pub extern "C" fn lipp_status_str(status: LippStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        LippStatus::Ok => b"ok\0",
        LippStatus::NotFound => b"key not found\0",
        LippStatus::AlreadyExists => b"key already exists\0",
        LippStatus::InvalidArgument => b"invalid argument\0",
        LippStatus::InvalidKey => b"invalid key\0",
        LippStatus::NotEmpty => b"index is not empty\0",
        LippStatus::BufferTooSmall => b"buffer too small\0",
        LippStatus::Panic => b"internal error\0",
    };
    s.as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn lipp_default_params() -> LippParams {
    let p = Params::default();
    LippParams {
        alpha: p.alpha,
        beta: p.beta,
        delta: p.delta,
        max_len: p.max_len,
        min_adjust_elements: p.min_adjust_elements,
        overflow_capacity: p.overflow_capacity,
    }
}

unsafe fn create<K: Key, H>(params: *const LippParams, out: *mut *mut H, wrap: fn(LippIndex<K>) -> H) -> LippStatus {
    if out.is_null() {
        return LippStatus::InvalidArgument;
    }
    let params = if params.is_null() { Params::default() } else { to_params(&*params) };
    match LippIndex::with_params(params) {
        Ok(idx) => {
            *out = Box::into_raw(Box::new(wrap(idx)));
            LippStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

unsafe fn insert<K: Key>(idx: Option<&mut LippIndex<K>>, key: K, payload: u64) -> LippStatus {
    let Some(idx) = idx else { return LippStatus::InvalidArgument };
    match idx.insert(key, payload) {
        Ok(()) => LippStatus::Ok,
        Err(e) => status_of(&e),
    }
}

unsafe fn get<K: Key>(idx: Option<&LippIndex<K>>, key: K, out: *mut u64) -> LippStatus {
    let Some(idx) = idx else { return LippStatus::InvalidArgument };
    match idx.get(key) {
        Some(v) => {
            if !out.is_null() {
                *out = v;
            }
            LippStatus::Ok
        }
        None => LippStatus::NotFound,
    }
}

unsafe fn remove<K: Key>(idx: Option<&mut LippIndex<K>>, key: K, out: *mut u64) -> LippStatus {
    let Some(idx) = idx else { return LippStatus::InvalidArgument };
    match idx.remove(key) {
        Ok(v) => {
            if !out.is_null() {
                *out = v;
            }
            LippStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

unsafe fn update<K: Key>(idx: Option<&mut LippIndex<K>>, key: K, payload: u64) -> LippStatus {
    let Some(idx) = idx else { return LippStatus::InvalidArgument };
    match idx.update(key, payload) {
        Ok(_) => LippStatus::Ok,
        Err(e) => status_of(&e),
    }
}

unsafe fn bulkload<K: Key>(idx: Option<&mut LippIndex<K>>, keys: *const K, payloads: *const u64, n: usize) -> LippStatus {
    let Some(idx) = idx else { return LippStatus::InvalidArgument };
    if n > 0 && (keys.is_null() || payloads.is_null()) {
        return LippStatus::InvalidArgument;
    }
    let items = if n == 0 {
        Vec::new()
    } else {
        let keys = std::slice::from_raw_parts(keys, n);
        let payloads = std::slice::from_raw_parts(payloads, n);
        keys.iter().copied().zip(payloads.iter().copied()).collect()
    };
    match idx.bulkload(items) {
        Ok(()) => LippStatus::Ok,
        Err(e) => status_of(&e),
    }
}

unsafe fn range<K: Key>(
    idx: Option<&LippIndex<K>>,
    lo: K,
    hi: K,
    keys: *mut K,
    payloads: *mut u64,
    capacity: usize,
    count: *mut usize,
) -> LippStatus {
    let Some(idx) = idx else { return LippStatus::InvalidArgument };
    if count.is_null() || (capacity > 0 && (keys.is_null() || payloads.is_null())) {
        return LippStatus::InvalidArgument;
    }
    let found = match idx.range(lo, hi) {
        Ok(v) => v,
        Err(e) => return status_of(&e),
    };
    *count = found.len();
    if found.len() > capacity {
        return LippStatus::BufferTooSmall;
    }
    for (i, (k, v)) in found.into_iter().enumerate() {
        *keys.add(i) = k;
        *payloads.add(i) = v;
    }
    LippStatus::Ok
}

unsafe fn stats<K: Key>(idx: Option<&LippIndex<K>>, out: *mut LippStats) -> LippStatus {
    let Some(idx) = idx else { return LippStatus::InvalidArgument };
    if out.is_null() {
        return LippStatus::InvalidArgument;
    }
    let s = idx.stats();
    *out = LippStats {
        elements: s.elements,
        nodes: s.nodes,
        avg_depth: s.avg_depth,
        max_depth: s.max_depth,
        index_bytes: s.index_bytes,
        adjustments: s.adjustments,
    };
    LippStatus::Ok
}

/// Creates an empty index. `params` may be NULL for the defaults.
///
/// # Safety
/// `out` must be valid for writes; `params` must be NULL or readable.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_new(params: *const LippParams, out: *mut *mut LippIndexU64) -> LippStatus {
    guard(|| create(params, out, LippIndexU64))
}

/// Releases an index. NULL is ignored.
///
/// # Safety
/// `idx` must be NULL or a handle from `lipp_u64_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_free(idx: *mut LippIndexU64) {
    if !idx.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(idx))));
    }
}

/// # Safety
/// `idx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_len(idx: *const LippIndexU64) -> usize {
    idx.as_ref().map_or(0, |h| h.0.len())
}

/// # Safety
/// `idx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_insert(idx: *mut LippIndexU64, key: u64, payload: u64) -> LippStatus {
    guard(|| insert(idx.as_mut().map(|h| &mut h.0), key, payload))
}

/// Writes the payload of `key` to `out` (which may be NULL).
///
/// # Safety
/// `idx` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_get(idx: *const LippIndexU64, key: u64, out: *mut u64) -> LippStatus {
    guard(|| get(idx.as_ref().map(|h| &h.0), key, out))
}

/// Removes `key`, writing its payload to `out` (which may be NULL).
///
/// # Safety
/// `idx` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_remove(idx: *mut LippIndexU64, key: u64, out: *mut u64) -> LippStatus {
    guard(|| remove(idx.as_mut().map(|h| &mut h.0), key, out))
}

/// # Safety
/// `idx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_update(idx: *mut LippIndexU64, key: u64, payload: u64) -> LippStatus {
    guard(|| update(idx.as_mut().map(|h| &mut h.0), key, payload))
}

/// Loads `n` distinct keys, in any order, into an empty index.
///
/// # Safety
/// `keys` and `payloads` must each point to `n` readable elements.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_bulkload(
    idx: *mut LippIndexU64,
    keys: *const u64,
    payloads: *const u64,
    n: usize,
) -> LippStatus {
    guard(|| bulkload(idx.as_mut().map(|h| &mut h.0), keys, payloads, n))
}

/// Copies the elements with keys in `[lo, hi]` in ascending order and
/// stores their number in `count`. When more than `capacity` match,
/// nothing is copied and `LIPP_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `keys` and `payloads` must have room for `capacity` elements; `count`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_range(
    idx: *const LippIndexU64,
    lo: u64,
    hi: u64,
    keys: *mut u64,
    payloads: *mut u64,
    capacity: usize,
    count: *mut usize,
) -> LippStatus {
    guard(|| range(idx.as_ref().map(|h| &h.0), lo, hi, keys, payloads, capacity, count))
}

/// # Safety
/// `idx` must be NULL or a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lipp_u64_stats(idx: *const LippIndexU64, out: *mut LippStats) -> LippStatus {
    guard(|| stats(idx.as_ref().map(|h| &h.0), out))
}

/// Creates an empty index. `params` may be NULL for the defaults.
///
/// # Safety
/// `out` must be valid for writes; `params` must be NULL or readable.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_new(params: *const LippParams, out: *mut *mut LippIndexF64) -> LippStatus {
    guard(|| create(params, out, LippIndexF64))
}

/// Releases an index. NULL is ignored.
///
/// # Safety
/// `idx` must be NULL or a handle from `lipp_f64_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_free(idx: *mut LippIndexF64) {
    if !idx.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(idx))));
    }
}

/// # Safety
/// `idx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_len(idx: *const LippIndexF64) -> usize {
    idx.as_ref().map_or(0, |h| h.0.len())
}

/// # Safety
/// `idx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_insert(idx: *mut LippIndexF64, key: f64, payload: u64) -> LippStatus {
    guard(|| insert(idx.as_mut().map(|h| &mut h.0), key, payload))
}

/// # Safety
/// `idx` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_get(idx: *const LippIndexF64, key: f64, out: *mut u64) -> LippStatus {
    guard(|| get(idx.as_ref().map(|h| &h.0), key, out))
}

/// # Safety
/// `idx` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_remove(idx: *mut LippIndexF64, key: f64, out: *mut u64) -> LippStatus {
    guard(|| remove(idx.as_mut().map(|h| &mut h.0), key, out))
}

/// # Safety
/// `idx` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_update(idx: *mut LippIndexF64, key: f64, payload: u64) -> LippStatus {
    guard(|| update(idx.as_mut().map(|h| &mut h.0), key, payload))
}

/// # Safety
/// `keys` and `payloads` must each point to `n` readable elements.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_bulkload(
    idx: *mut LippIndexF64,
    keys: *const f64,
    payloads: *const u64,
    n: usize,
) -> LippStatus {
    guard(|| bulkload(idx.as_mut().map(|h| &mut h.0), keys, payloads, n))
}

/// # Safety
/// As for `lipp_u64_range`.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_range(
    idx: *const LippIndexF64,
    lo: f64,
    hi: f64,
    keys: *mut f64,
    payloads: *mut u64,
    capacity: usize,
    count: *mut usize,
) -> LippStatus {
    guard(|| range(idx.as_ref().map(|h| &h.0), lo, hi, keys, payloads, capacity, count))
}

/// # Safety
/// `idx` must be NULL or a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lipp_f64_stats(idx: *const LippIndexF64, out: *mut LippStats) -> LippStatus {
    guard(|| stats(idx.as_ref().map(|h| &h.0), out))
}
