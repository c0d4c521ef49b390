//! C ABI over the coverage engine.
//!
//! Handles are opaque heap objects created and released by this library.
//! Every fallible call returns a [`VhStatus`]; on failure the message is
//! retrievable with [`vh_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vhetnet::assoc::{assoc_prob_mc, UserPlacement};
use vhetnet::coverage::{coverage_analytic, CoverageOptions};
use vhetnet::model::ConfigError;
use vhetnet::sigstats::MomentOptions;
use vhetnet::sim::{empirical_coverage, Policy};
use vhetnet::{Error, NetworkConfig, RngStream};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    UnknownKey = 4,
    InvalidArgument = 5,
    Computation = 6,
    Panic = 7,
}

/// Association policy used by [`vh_coverage_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VhPolicy {
    Comp3SameTier = 0,
    SingleNearest = 1,
    StrongestThree = 2,
}

impl From<VhPolicy> for Policy {
    fn from(p: VhPolicy) -> Self {
        match p {
            VhPolicy::Comp3SameTier => Policy::Comp3SameTier,
            VhPolicy::SingleNearest => Policy::SingleNearest,
            VhPolicy::StrongestThree => Policy::StrongestThree,
        }
    }
}

/// Opaque scenario handle.
pub struct VhConfig {
    inner: NetworkConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VhCoverage {
    pub p_total: f64,
    pub p_abs_cond: f64,
    pub p_tbs_cond: f64,
    /// Probability of associating with the ABS tier.
    pub p_assoc_abs: f64,
    pub std_error: f64,
    pub trials: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VhAssociation {
    pub p_abs: f64,
    pub std_error: f64,
    pub p_top3_abs: f64,
    pub p_top3_tbs: f64,
    pub p_mixed: f64,
}

/// Effort knobs for [`vh_coverage_analytic`]. Zero fields take the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VhAnalyticOptions {
    pub moment_trials: u64,
    pub assoc_trials: u64,
    pub triples: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn config_status(e: &ConfigError) -> VhStatus {
    match e {
        ConfigError::UnknownKey(_) => VhStatus::UnknownKey,
        _ => VhStatus::InvalidConfig,
    }
}

fn error_status(e: &Error) -> VhStatus {
    match e {
        Error::Config(c) => config_status(c),
        _ => VhStatus::Computation,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (VhStatus, String)>) -> VhStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VhStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VhStatus::Panic
        }
    }
}

fn fail<E: std::fmt::Display>(status: VhStatus) -> impl FnOnce(E) -> (VhStatus, String) {
    move |e| (status, e.to_string())
}

fn core_fail<E: Into<Error>>(e: E) -> (VhStatus, String) {
    let e = e.into();
    (error_status(&e), e.to_string())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (VhStatus, String)> {
    if p.is_null() {
        return Err((VhStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VhStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn read_cfg<'a>(cfg: *const VhConfig) -> Result<&'a VhConfig, (VhStatus, String)> {
    cfg.as_ref()
        .ok_or((VhStatus::NullPointer, "config handle is null".into()))
}

fn check_out<T>(out: *mut T) -> Result<(), (VhStatus, String)> {
    if out.is_null() {
        Err((VhStatus::NullPointer, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn trials(n: u64, default: usize) -> usize {
    if n == 0 {
        default
    } else {
        n as usize
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn vh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New handle holding the reference parameter set. Release with
/// [`vh_config_free`].
#[no_mangle]
pub extern "C" fn vh_config_default() -> *mut VhConfig {
    Box::into_raw(Box::new(VhConfig {
        inner: NetworkConfig::reference(),
    }))
}

/// Parses and validates a JSON scenario into `*out`.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn vh_config_from_json(
    json: *const c_char,
    out: *mut *mut VhConfig,
) -> VhStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let inner =
            NetworkConfig::from_json(text).map_err(|e| (config_status(&e), e.to_string()))?;
        inner
            .validate()
            .map_err(|e| (config_status(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(VhConfig { inner }));
        Ok(())
    })
}

/// Sets one field by its JSON name; the handle is unchanged on failure.
///
/// # Safety
/// `cfg` must be null or a live handle; `key` and `value` null or
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vh_config_set(
    cfg: *mut VhConfig,
    key: *const c_char,
    value: *const c_char,
) -> VhStatus {
    guard(|| {
        let cfg = cfg
            .as_mut()
            .ok_or((VhStatus::NullPointer, "config handle is null".into()))?;
        let key = read_str(key, "key")?;
        let value = read_str(value, "value")?;
        let mut next = cfg.inner.clone();
        next.set(key, value)
            .map_err(|e| (config_status(&e), e.to_string()))?;
        next.validate()
            .map_err(|e| (config_status(&e), e.to_string()))?;
        cfg.inner = next;
        Ok(())
    })
}

/// Serializes the handle to JSON. Release the string with [`vh_string_free`].
///
/// # Safety
/// `cfg` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn vh_config_to_json(
    cfg: *const VhConfig,
    out: *mut *mut c_char,
) -> VhStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let cfg = read_cfg(cfg)?;
        let text = serde_json::to_string(&cfg.inner).map_err(fail(VhStatus::Computation))?;
        *out = CString::new(text)
            .map_err(fail(VhStatus::Computation))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vh_config_free(cfg: *mut VhConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Semi-analytic coverage probability at threshold `gamma_db`.
///
/// # Safety
/// `cfg` must be null or a live handle; `opts` null (defaults) or readable;
/// `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn vh_coverage_analytic(
    cfg: *const VhConfig,
    gamma_db: f64,
    seed: u64,
    opts: *const VhAnalyticOptions,
    out: *mut VhCoverage,
) -> VhStatus {
    guard(|| {
        check_out(out)?;
        let cfg = read_cfg(cfg)?;
        if !gamma_db.is_finite() {
            return Err((
                VhStatus::InvalidArgument,
                format!("gamma_db must be finite, got {gamma_db}"),
            ));
        }
        let knobs = opts.as_ref().copied().unwrap_or_default();
        let base = CoverageOptions::default();
        let options = CoverageOptions {
            moments: MomentOptions {
                trials: trials(knobs.moment_trials, base.moments.trials),
                ..base.moments
            },
            assoc_trials: trials(knobs.assoc_trials, base.assoc_trials),
            triples: trials(knobs.triples, base.triples),
            rng: RngStream::new(seed, 0),
        };
        let valid = cfg.inner.validate().map_err(core_fail)?;
        let r = coverage_analytic(&valid, gamma_db, &options).map_err(core_fail)?;
        *out = VhCoverage {
            p_total: r.p_total,
            p_abs_cond: r.p_abs_cond,
            p_tbs_cond: r.p_tbs_cond,
            p_assoc_abs: r.assoc.p_abs,
            std_error: r.std_error,
            trials: r.trials as u64,
        };
        Ok(())
    })
}

/// Monte Carlo coverage probability under `policy`.
///
/// # Safety
/// `cfg` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn vh_coverage_simulate(
    cfg: *const VhConfig,
    gamma_db: f64,
    policy: VhPolicy,
    trials: u64,
    seed: u64,
    out: *mut VhCoverage,
) -> VhStatus {
    guard(|| {
        check_out(out)?;
        let cfg = read_cfg(cfg)?;
        if !gamma_db.is_finite() {
            return Err((
                VhStatus::InvalidArgument,
                format!("gamma_db must be finite, got {gamma_db}"),
            ));
        }
        let valid = cfg.inner.validate().map_err(core_fail)?;
        let r = empirical_coverage(
            &valid,
            gamma_db,
            policy.into(),
            trials as usize,
            &RngStream::new(seed, 0),
        )
        .map_err(core_fail)?;
        *out = VhCoverage {
            p_total: r.p_total,
            p_abs_cond: r.p_abs_cond,
            p_tbs_cond: r.p_tbs_cond,
            p_assoc_abs: r.assoc.p_abs,
            std_error: r.std_error,
            trials: r.trials as u64,
        };
        Ok(())
    })
}

/// Monte Carlo tier association for a user below the ABS disk centre.
///
/// # Safety
/// `cfg` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn vh_association_mc(
    cfg: *const VhConfig,
    trials: u64,
    seed: u64,
    out: *mut VhAssociation,
) -> VhStatus {
    guard(|| {
        check_out(out)?;
        let cfg = read_cfg(cfg)?;
        let valid = cfg.inner.validate().map_err(core_fail)?;
        let r = assoc_prob_mc(
            &valid,
            trials as usize,
            UserPlacement::Center,
            &RngStream::new(seed, 0),
        )
        .map_err(core_fail)?;
        *out = VhAssociation {
            p_abs: r.result.p_abs,
            std_error: r.result.std_error,
            p_top3_abs: r.p_top3_abs,
            p_top3_tbs: r.p_top3_tbs,
            p_mixed: r.p_mixed,
        };
        Ok(())
    })
}
