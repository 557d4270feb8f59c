//! C ABI over `zhash`.
//!
//! Objects are opaque handles created by `zh_*_new` / `zh_*_build` /
//! `zh_*_from_bytes` and released with the matching `zh_*_free`. Every
//! fallible call returns a [`ZhStatus`]; on failure a description is
//! available from [`zh_last_error`] on the same thread. Panics never cross
//! the boundary: they are reported as `ZH_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use zhash::cuckoo::{CuckooTable, InsertOutcome};
use zhash::mphf::{acyclic_prob_bounds, build_mphf, Bpz};
use zhash::uniformsim::{SimConfig, UniformSim};
use zhash::{Error, Prng, ZFamily, ZParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    /// Key outside the admissible universe `[0, 2^61 - 1)`.
    Domain = 3,
    InvalidInput = 4,
    Unsupported = 5,
    ConstructionFailed = 6,
    Decode = 7,
    Io = 8,
    /// The output buffer is too small; the required size was stored.
    BufferTooSmall = 9,
    Panic = 10,
}

/// Result of [`zh_cuckoo_insert`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZhInsert {
    Placed = 0,
    PlacedViaStash = 1,
    /// Stash full; the table is unchanged and must be rebuilt.
    RehashNeeded = 2,
}

/// A drawn member of the hash class Z.
pub struct ZhFamily(ZFamily);

/// Cuckoo hash table with stash (two tables).
pub struct ZhCuckoo(CuckooTable);

/// Perfect hash function into `[2m]`.
pub struct ZhMphf(Bpz);

/// Uniform hash simulation over `w`-bit words.
pub struct ZhUniform(UniformSim);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> ZhStatus {
    match err {
        Error::Parameter(_) => ZhStatus::InvalidParameter,
        Error::Domain { .. } => ZhStatus::Domain,
        Error::Input(_) | Error::OverBudget(_) => ZhStatus::InvalidInput,
        Error::Unsupported(_) => ZhStatus::Unsupported,
        Error::Construction(_) => ZhStatus::ConstructionFailed,
        Error::Decode(_) => ZhStatus::Decode,
        Error::Io(_) | Error::Csv(_) => ZhStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<ZhStatus, Error>>(f: F) -> ZhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            if status != ZhStatus::Ok {
                set_last_error(status_text(status).trim_end_matches('\0'));
            }
            status
        }
        Ok(Err(e)) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            ZhStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_last_error(concat!("null pointer: ", stringify!($p)));
            return ZhStatus::NullPointer;
        })+
    };
}

fn status_text(s: ZhStatus) -> &'static str {
    match s {
        ZhStatus::Ok => "ok\0",
        ZhStatus::NullPointer => "null pointer\0",
        ZhStatus::InvalidParameter => "invalid parameter\0",
        ZhStatus::Domain => "key outside the admissible universe\0",
        ZhStatus::InvalidInput => "invalid input\0",
        ZhStatus::Unsupported => "unsupported\0",
        ZhStatus::ConstructionFailed => "construction failed\0",
        ZhStatus::Decode => "malformed encoding\0",
        ZhStatus::Io => "i/o error\0",
        ZhStatus::BufferTooSmall => "buffer too small\0",
        ZhStatus::Panic => "internal panic\0",
    }
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn zh_status_string(status: ZhStatus) -> *const c_char {
    status_text(status).as_ptr().cast()
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn zh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, NUL-terminated.
#[no_mangle]
pub extern "C" fn zh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `bytes` to `buf` if it fits; always stores the size in `*len`.
///
/// # Safety
/// `buf` must be valid for `cap` bytes of writes (or null with `cap == 0`);
/// `len` must be valid for a write.
unsafe fn write_bytes(bytes: &[u8], buf: *mut u8, cap: usize, len: *mut usize) -> ZhStatus {
    *len = bytes.len();
    if bytes.len() > cap || (buf.is_null() && !bytes.is_empty()) {
        return ZhStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    ZhStatus::Ok
}

/// Draws a member of Z with `c` g-functions, `d` hash functions of
/// independence `kappa` (even), g-range `ell` and range `m`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn zh_family_draw(
    seed: u64,
    c: usize,
    d: usize,
    kappa: usize,
    ell: u64,
    m: u64,
    out: *mut *mut ZhFamily,
) -> ZhStatus {
    non_null!(out);
    guard(|| {
        let fam = ZFamily::draw(&mut Prng::new(seed), ZParams::new(c, d, kappa, ell, m)?)?;
        *out = Box::into_raw(Box::new(ZhFamily(fam)));
        Ok(ZhStatus::Ok)
    })
}

/// # Safety
/// `fam` must come from this library and not be freed twice (null is a no-op).
#[no_mangle]
pub unsafe extern "C" fn zh_family_free(fam: *mut ZhFamily) {
    if !fam.is_null() {
        drop(Box::from_raw(fam));
    }
}

/// Number of hash functions `d`, or 0 for a null handle.
///
/// # Safety
/// `fam` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn zh_family_arity(fam: *const ZhFamily) -> usize {
    fam.as_ref().map_or(0, |f| f.0.params().d)
}

/// Writes `h_1(key), ..., h_d(key)` to `out[0..d]`; `out_len` must be at
/// least `d`.
///
/// # Safety
/// `fam` must be a live handle; `out` must be valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn zh_family_eval(fam: *const ZhFamily, key: u64, out: *mut u64, out_len: usize) -> ZhStatus {
    non_null!(fam, out);
    guard(|| {
        let fam = &(*fam).0;
        let d = fam.params().d;
        if out_len < d {
            return Ok(ZhStatus::BufferTooSmall);
        }
        fam.eval_into(key, slice::from_raw_parts_mut(out, d))?;
        Ok(ZhStatus::Ok)
    })
}

/// Serializes the family. With a too small (or null) buffer, returns
/// `ZH_STATUS_BUFFER_TOO_SMALL` and stores the needed size in `*len`.
///
/// # Safety
/// `fam` must be a live handle; `buf` valid for `cap` bytes; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_family_to_bytes(fam: *const ZhFamily, buf: *mut u8, cap: usize, len: *mut usize) -> ZhStatus {
    non_null!(fam, len);
    guard(|| Ok(write_bytes(&(*fam).0.to_bytes(), buf, cap, len)))
}

/// # Safety
/// `buf` must be valid for `len` bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_family_from_bytes(buf: *const u8, len: usize, out: *mut *mut ZhFamily) -> ZhStatus {
    non_null!(buf, out);
    guard(|| {
        let bytes = slice::from_raw_parts(buf, len);
        let (fam, used) = ZFamily::from_bytes(bytes)?;
        if used != len {
            return Err(Error::Decode(format!("{} trailing bytes", len - used)));
        }
        *out = Box::into_raw(Box::new(ZhFamily(fam)));
        Ok(ZhStatus::Ok)
    })
}

/// Cuckoo table for `n` keys: two tables of `ceil((1 + epsilon) n)` cells,
/// `ell = ceil(n^delta)`, `c` g-functions, a stash of `stash` keys.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zh_cuckoo_new(
    seed: u64,
    n: usize,
    epsilon: f64,
    delta: f64,
    c: usize,
    stash: usize,
    out: *mut *mut ZhCuckoo,
) -> ZhStatus {
    non_null!(out);
    guard(|| {
        let t = CuckooTable::for_capacity(&mut Prng::new(seed), n, epsilon, delta, c, stash)?;
        *out = Box::into_raw(Box::new(ZhCuckoo(t)));
        Ok(ZhStatus::Ok)
    })
}

/// # Safety
/// `table` must come from this library and not be freed twice (null is a no-op).
#[no_mangle]
pub unsafe extern "C" fn zh_cuckoo_free(table: *mut ZhCuckoo) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must be a live handle; `outcome` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_cuckoo_insert(table: *mut ZhCuckoo, key: u64, outcome: *mut ZhInsert) -> ZhStatus {
    non_null!(table, outcome);
    guard(|| {
        *outcome = match (*table).0.insert(key)? {
            InsertOutcome::Placed => ZhInsert::Placed,
            InsertOutcome::PlacedViaStash => ZhInsert::PlacedViaStash,
            InsertOutcome::RehashNeeded => ZhInsert::RehashNeeded,
        };
        Ok(ZhStatus::Ok)
    })
}

/// # Safety
/// `table` must be a live handle; `found` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_cuckoo_contains(table: *const ZhCuckoo, key: u64, found: *mut bool) -> ZhStatus {
    non_null!(table, found);
    guard(|| {
        *found = (*table).0.contains(key)?;
        Ok(ZhStatus::Ok)
    })
}

/// # Safety
/// `table` must be a live handle; `removed` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_cuckoo_remove(table: *mut ZhCuckoo, key: u64, removed: *mut bool) -> ZhStatus {
    non_null!(table, removed);
    guard(|| {
        *removed = (*table).0.remove(key)?;
        Ok(ZhStatus::Ok)
    })
}

/// Stored keys, or 0 for a null handle.
///
/// # Safety
/// `table` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn zh_cuckoo_len(table: *const ZhCuckoo) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

/// Keys currently in the stash, or 0 for a null handle.
///
/// # Safety
/// `table` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn zh_cuckoo_stash_len(table: *const ZhCuckoo) -> usize {
    table.as_ref().map_or(0, |t| t.0.stash().len())
}

/// Builds a perfect hash function on `keys[0..n]` (distinct). `attempts`
/// may be null.
///
/// # Safety
/// `keys` must be valid for `n` reads; `out` writable; `attempts` writable or null.
#[no_mangle]
pub unsafe extern "C" fn zh_mphf_build(
    seed: u64,
    keys: *const u64,
    n: usize,
    epsilon: f64,
    delta: f64,
    c: usize,
    out: *mut *mut ZhMphf,
    attempts: *mut u32,
) -> ZhStatus {
    non_null!(keys, out);
    guard(|| {
        let keys = slice::from_raw_parts(keys, n);
        let (ph, info) = build_mphf(&mut Prng::new(seed), keys, epsilon, delta, c)?;
        if !attempts.is_null() {
            *attempts = info.attempts;
        }
        *out = Box::into_raw(Box::new(ZhMphf(ph)));
        Ok(ZhStatus::Ok)
    })
}

/// # Safety
/// `ph` must come from this library and not be freed twice (null is a no-op).
#[no_mangle]
pub unsafe extern "C" fn zh_mphf_free(ph: *mut ZhMphf) {
    if !ph.is_null() {
        drop(Box::from_raw(ph));
    }
}

/// # Safety
/// `ph` must be a live handle; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_mphf_eval(ph: *const ZhMphf, key: u64, value: *mut u64) -> ZhStatus {
    non_null!(ph, value);
    guard(|| {
        *value = (*ph).0.eval(key)?;
        Ok(ZhStatus::Ok)
    })
}

/// Output range `2m`, or 0 for a null handle.
///
/// # Safety
/// `ph` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn zh_mphf_range(ph: *const ZhMphf) -> u64 {
    ph.as_ref().map_or(0, |p| p.0.range())
}

/// Serializes the function; see [`zh_family_to_bytes`] for the buffer protocol.
///
/// # Safety
/// `ph` must be a live handle; `buf` valid for `cap` bytes; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_mphf_to_bytes(ph: *const ZhMphf, buf: *mut u8, cap: usize, len: *mut usize) -> ZhStatus {
    non_null!(ph, len);
    guard(|| Ok(write_bytes(&(*ph).0.to_bytes(), buf, cap, len)))
}

/// # Safety
/// `buf` must be valid for `len` bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_mphf_from_bytes(buf: *const u8, len: usize, out: *mut *mut ZhMphf) -> ZhStatus {
    non_null!(buf, out);
    guard(|| {
        let ph = Bpz::from_bytes(slice::from_raw_parts(buf, len))?;
        *out = Box::into_raw(Box::new(ZhMphf(ph)));
        Ok(ZhStatus::Ok)
    })
}

/// Acyclicity probability `sqrt(1 - (1/(1+eps))^2)` and its lower bound
/// `1 + ln(1 - (1/(1+eps))^2) / 2`.
///
/// # Safety
/// `exact` and `lower` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zh_acyclic_prob_bounds(epsilon: f64, exact: *mut f64, lower: *mut f64) -> ZhStatus {
    non_null!(exact, lower);
    guard(|| {
        let (e, l) = acyclic_prob_bounds(epsilon)?;
        *exact = e;
        *lower = l;
        Ok(ZhStatus::Ok)
    })
}

/// Uniform hash simulation for `n` keys over `w`-bit words (1..=64).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zh_uniform_build(
    seed: u64,
    n: u64,
    epsilon: f64,
    delta: f64,
    c: usize,
    w: u32,
    out: *mut *mut ZhUniform,
) -> ZhStatus {
    non_null!(out);
    guard(|| {
        let cfg = SimConfig { n, epsilon, delta, c, w };
        let ds = UniformSim::build(&mut Prng::new(seed), &cfg)?;
        *out = Box::into_raw(Box::new(ZhUniform(ds)));
        Ok(ZhStatus::Ok)
    })
}

/// # Safety
/// `ds` must come from this library and not be freed twice (null is a no-op).
#[no_mangle]
pub unsafe extern "C" fn zh_uniform_free(ds: *mut ZhUniform) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live handle; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn zh_uniform_eval(ds: *const ZhUniform, key: u64, value: *mut u64) -> ZhStatus {
    non_null!(ds, value);
    guard(|| {
        *value = (*ds).0.eval(key)?;
        Ok(ZhStatus::Ok)
    })
}
