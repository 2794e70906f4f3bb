//! C interface to `darboux`.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `*_free`. Every fallible call returns a [`DarbouxStatus`]; on failure the
//! message is available from [`darboux_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use darboux::cli::{parse_config, run, to_json, CliError};
use darboux::scattering::{build_kvg_chain, closed_form_smatrix, eta_ratio, numerical_smatrix_matrix, KvGParameters};
use darboux::transform::{compute_potential, make_grid, PotentialOptions, PotentialTable, Spacing};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DarbouxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Panic = 5,
}

/// Parameters of the two-channel model chain.
pub struct DarbouxKvg {
    params: KvGParameters,
}

/// Sampled potential with pole flags.
pub struct DarbouxPotential {
    table: PotentialTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &darboux::Error) -> DarbouxStatus {
    match e {
        darboux::Error::Argument(_) | darboux::Error::Domain(_) | darboux::Error::Chain(_) => {
            DarbouxStatus::InvalidArgument
        }
        _ => DarbouxStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DarbouxStatus, String)>) -> DarbouxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DarbouxStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DarbouxStatus::Panic
        }
    }
}

fn fail(e: darboux::Error) -> (DarbouxStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DarbouxStatus, String) {
    (DarbouxStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn darboux_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn darboux_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn darboux_kvg_new(k1: f64, k2: f64, chi: f64, out: *mut *mut DarbouxKvg) -> DarbouxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = KvGParameters::new(k1, k2, chi).map_err(fail)?;
        *out = Box::into_raw(Box::new(DarbouxKvg { params }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`darboux_kvg_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn darboux_kvg_free(handle: *mut DarbouxKvg) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Ratio of the asymptotic normalizations of the deuteron D and S waves.
///
/// # Safety
/// `handle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn darboux_kvg_eta(handle: *const DarbouxKvg, out: *mut f64) -> DarbouxStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = eta_ratio(&h.params);
        Ok(())
    })
}

/// Closed-form S-matrix at real `k`, channels ordered `(s, d)`, written
/// row-major into `re[4]` and `im[4]`.
///
/// # Safety
/// `handle` must be live; `re` and `im` must each hold four doubles.
#[no_mangle]
pub unsafe extern "C" fn darboux_kvg_smatrix(
    handle: *const DarbouxKvg,
    k: f64,
    re: *mut f64,
    im: *mut f64,
) -> DarbouxStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let s = closed_form_smatrix(&h.params, k).map_err(fail)?.as_dmatrix();
        for i in 0..2 {
            for j in 0..2 {
                *re.add(2 * i + j) = s[(i, j)].re;
                *im.add(2 * i + j) = s[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Potential of the model chain on `count` points of `[r_min, r_max]`,
/// channels ordered `(d, s)`.
///
/// # Safety
/// `handle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn darboux_kvg_potential(
    handle: *const DarbouxKvg,
    r_min: f64,
    r_max: f64,
    count: usize,
    log_spacing: bool,
    out: *mut *mut DarbouxPotential,
) -> DarbouxStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spacing = if log_spacing { Spacing::Log } else { Spacing::Linear };
        let grid = make_grid(r_min, r_max, count, spacing).map_err(fail)?;
        let chain = build_kvg_chain(&h.params).map_err(fail)?;
        let options = PotentialOptions { realness_tolerance: Some(1e-6), ..PotentialOptions::default() };
        let table = compute_potential(&chain, &grid, options).map_err(fail)?;
        *out = Box::into_raw(Box::new(DarbouxPotential { table }));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn darboux_potential_free(handle: *mut DarbouxPotential) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be live; `len` and `channels` writable.
#[no_mangle]
pub unsafe extern "C" fn darboux_potential_shape(
    handle: *const DarbouxPotential,
    len: *mut usize,
    channels: *mut usize,
) -> DarbouxStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if len.is_null() || channels.is_null() {
            return Err(null("output"));
        }
        *len = h.table.len();
        *channels = h.table.channels;
        Ok(())
    })
}

/// Radius, row-major real potential (`channels^2` doubles) and pole flag of
/// sample `idx`.
///
/// # Safety
/// `handle` must be live; `values` must hold `channels^2` doubles.
#[no_mangle]
pub unsafe extern "C" fn darboux_potential_sample(
    handle: *const DarbouxPotential,
    idx: usize,
    r: *mut f64,
    values: *mut f64,
    pole: *mut bool,
) -> DarbouxStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if r.is_null() || values.is_null() || pole.is_null() {
            return Err(null("output"));
        }
        if idx >= h.table.len() {
            return Err((DarbouxStatus::InvalidArgument, format!("sample {idx} out of {}", h.table.len())));
        }
        *r = h.table.grid[idx];
        for (i, v) in h.table.values[idx].iter().enumerate() {
            *values.add(i) = *v;
        }
        *pole = h.table.poles[idx];
        Ok(())
    })
}

/// S-matrix of a sampled potential at `k`. `l` lists one angular momentum
/// per channel; results are row-major `channels^2` doubles.
///
/// # Safety
/// `handle` must be live, `l` must hold `l_len` values and `re`, `im` must
/// each hold `channels^2` doubles.
#[no_mangle]
pub unsafe extern "C" fn darboux_potential_smatrix(
    handle: *const DarbouxPotential,
    k: f64,
    l: *const u32,
    l_len: usize,
    re: *mut f64,
    im: *mut f64,
) -> DarbouxStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if l.is_null() || re.is_null() || im.is_null() {
            return Err(null("argument"));
        }
        let l = std::slice::from_raw_parts(l, l_len);
        let s = numerical_smatrix_matrix(&h.table, k, l).map_err(fail)?;
        let n = h.table.channels;
        for i in 0..n {
            for j in 0..n {
                *re.add(n * i + j) = s[(i, j)].re;
                *im.add(n * i + j) = s[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Runs a JSON run configuration (the same document the command line
/// reads) and returns the output tables as JSON. Free the string with
/// [`darboux_string_free`].
///
/// # Safety
/// `config` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn darboux_run_config(config: *const c_char, out: *mut *mut c_char) -> DarbouxStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| (DarbouxStatus::InvalidArgument, "configuration is not UTF-8".to_string()))?;
        let cfg = parse_config(text).map_err(|e| (DarbouxStatus::Config, e.to_string()))?;
        let outcome = run(&cfg).map_err(|e| match e {
            CliError::Config(_) => (DarbouxStatus::Config, e.to_string()),
            CliError::Runtime(_) => (DarbouxStatus::Numerical, e.to_string()),
        })?;
        let json = CString::new(to_json(&outcome.tables)).expect("JSON has no NUL");
        *out = json.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn darboux_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
