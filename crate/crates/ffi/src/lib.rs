//! C ABI for seqdiag.
//!
//! Models and procedures are opaque heap handles created by `*_new`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`SeqdiagStatus`]; on failure a message is available from
//! [`seqdiag_last_error`] until the next failing call on the same thread.
//! Alternative indices are 0-based.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use libc::c_char;
use seqdiag::cli::{Command, RunConfig, EXIT_INFEASIBLE, EXIT_UNRELIABLE};
use seqdiag::models::{gaussian_mean_shift, gaussian_multichannel};
use seqdiag::procedures::{decide, StepOutcome};
use seqdiag::statistics::StatisticBank;
use seqdiag::{ChangeModel, Error, ProcedureSpec, Variant};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeqdiagStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or a buffer of the wrong length.
    InvalidArgument = 1,
    InvalidModel = 2,
    InvalidParameter = 3,
    /// An observation outside the model's support, or a statistic that
    /// became NaN or infinite.
    NonFinite = 4,
    /// Run-config parse or validation error.
    Config = 5,
    /// A design produced an empty feasible set (report still returned).
    Infeasible = 6,
    /// Some estimate is flagged unreliable (report still returned).
    Unreliable = 7,
    Io = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

/// Opaque change model.
pub struct SeqdiagModel {
    inner: Arc<ChangeModel>,
}

/// Opaque online procedure bound to a model.
pub struct SeqdiagProcedure {
    model: Arc<ChangeModel>,
    spec: ProcedureSpec,
    bank: StatisticBank,
    llr: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SeqdiagStatus {
    match e {
        Error::InvalidModel(_) | Error::Unsupported(_) => SeqdiagStatus::InvalidModel,
        Error::InvalidParameter { .. } => SeqdiagStatus::InvalidParameter,
        Error::ModelSupport { .. } | Error::NonFinite { .. } => SeqdiagStatus::NonFinite,
        Error::Config(_) => SeqdiagStatus::Config,
        Error::GridExhausted { .. } => SeqdiagStatus::Infeasible,
        Error::Io(_) | Error::Json(_) => SeqdiagStatus::Io,
    }
}

struct Fail(SeqdiagStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(SeqdiagStatus::InvalidArgument, msg.to_string())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<SeqdiagStatus, Fail>) -> SeqdiagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SeqdiagStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| invalid(&format!("{what} is null")))
}

fn new_model(out: *mut *mut SeqdiagModel, m: ChangeModel) -> Result<SeqdiagStatus, Fail> {
    let slot = unsafe { out_arg(out, "out")? };
    *slot = Box::into_raw(Box::new(SeqdiagModel { inner: Arc::new(m) }));
    Ok(SeqdiagStatus::Ok)
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn seqdiag_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn seqdiag_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Scalar observations, `f = N(0, 1)` and `g_i = N(θ_i, 1)`.
///
/// # Safety
/// `thetas` must point to `k` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_model_gaussian_mean_shift(
    thetas: *const f64,
    k: usize,
    out: *mut *mut SeqdiagModel,
) -> SeqdiagStatus {
    guard(|| {
        let thetas = slice_arg(thetas, k, "thetas")?;
        new_model(out, gaussian_mean_shift(thetas)?)
    })
}

/// Independent Gaussian channels. A change shifts one channel from
/// `N(pre_mean, pre_sd²)` to `N(post_mean, post_sd²)`; with `simultaneous`
/// (two channels only) a third alternative shifts both.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_model_multichannel(
    channels: usize,
    pre_mean: f64,
    pre_sd: f64,
    post_mean: f64,
    post_sd: f64,
    simultaneous: bool,
    out: *mut *mut SeqdiagModel,
) -> SeqdiagStatus {
    guard(|| {
        let m = gaussian_multichannel(channels, pre_mean, pre_sd, post_mean, post_sd, simultaneous)?;
        new_model(out, m)
    })
}

/// Number of post-change alternatives `K` (0 for a null handle).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_model_alternatives(model: *const SeqdiagModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.k())
}

/// Observation dimension (0 for a null handle).
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_model_dim(model: *const SeqdiagModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dim())
}

/// # Safety
/// `model` must be null or a handle not yet freed. Procedures created from
/// it stay valid.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_model_free(model: *mut SeqdiagModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Creates a procedure. `variant` is one of `min_cusum`, `matrix`,
/// `adaptive`, `vector`, `generalized_m<window>`, `generalized_full`.
///
/// # Safety
/// `model` must be a live handle, `variant` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_procedure_new(
    model: *const SeqdiagModel,
    variant: *const c_char,
    b: f64,
    h: f64,
    out: *mut *mut SeqdiagProcedure,
) -> SeqdiagStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        let variant: Variant = str_arg(variant, "variant")?.parse()?;
        let spec = ProcedureSpec::new(variant, b, h)?;
        let k = model.inner.k();
        let handle = SeqdiagProcedure {
            model: Arc::clone(&model.inner),
            spec,
            bank: StatisticBank::new(k, variant.isolation_kind())?,
            llr: vec![0.0; k],
        };
        *out_arg(out, "out")? = Box::into_raw(Box::new(handle));
        Ok(SeqdiagStatus::Ok)
    })
}

/// Feeds one observation of `len` values (the model dimension). Writes the
/// decided alternative to `decision` when the procedure stops, or -1.
///
/// # Safety
/// `proc_` must be a live handle, `x` must point to `len` doubles and
/// `decision` must be writable.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_procedure_step(
    proc_: *mut SeqdiagProcedure,
    x: *const f64,
    len: usize,
    decision: *mut i64,
) -> SeqdiagStatus {
    guard(|| {
        let p = proc_.as_mut().ok_or_else(|| invalid("procedure is null"))?;
        if len != p.model.dim() {
            return Err(invalid(&format!(
                "observation has {len} values, model dimension is {}",
                p.model.dim()
            )));
        }
        let x = slice_arg(x, len, "x")?;
        let decision = out_arg(decision, "decision")?;
        p.model.llrs_into(x, &mut p.llr)?;
        p.bank.update(&p.llr)?;
        let outcome = decide(
            p.spec.variant.stop_rule(),
            p.spec.b,
            p.spec.h,
            p.bank.cusums(),
            p.bank.isolation(),
        );
        *decision = match outcome {
            StepOutcome::Continue => -1,
            StepOutcome::Stopped(i) => i as i64,
        };
        Ok(SeqdiagStatus::Ok)
    })
}

/// Copies the current `Y_i` and `W_i` (`K` values each) into `y` and `w`;
/// either may be null. `W_i` is +∞ when it does not apply.
///
/// # Safety
/// `proc_` must be a live handle and non-null buffers must hold `k` doubles.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_procedure_statistics(
    proc_: *const SeqdiagProcedure,
    y: *mut f64,
    w: *mut f64,
    k: usize,
) -> SeqdiagStatus {
    guard(|| {
        let p = proc_.as_ref().ok_or_else(|| invalid("procedure is null"))?;
        if k != p.model.k() {
            return Err(invalid(&format!("buffer length {k} differs from K = {}", p.model.k())));
        }
        if !y.is_null() {
            std::slice::from_raw_parts_mut(y, k).copy_from_slice(p.bank.cusums());
        }
        if !w.is_null() {
            std::slice::from_raw_parts_mut(w, k).copy_from_slice(p.bank.isolation());
        }
        Ok(SeqdiagStatus::Ok)
    })
}

/// Observations processed since creation or the last reset.
///
/// # Safety
/// `proc_` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_procedure_steps(proc_: *const SeqdiagProcedure) -> u64 {
    proc_.as_ref().map_or(0, |p| p.bank.n())
}

/// Clears all statistics.
///
/// # Safety
/// `proc_` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_procedure_reset(proc_: *mut SeqdiagProcedure) {
    if let Some(p) = proc_.as_mut() {
        p.bank.reset();
    }
}

/// # Safety
/// `proc_` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_procedure_free(proc_: *mut SeqdiagProcedure) {
    if !proc_.is_null() {
        drop(Box::from_raw(proc_));
    }
}

/// Runs a CLI subcommand (`calibrate`, `design`, `evaluate`,
/// `misid-sweep`, `demo-paths`) on a TOML run config. The JSON report is
/// returned in `report_json` (free with [`seqdiag_string_free`]); when
/// `out_dir` is non-null the CSV tables are written there too. Returns
/// `Infeasible` or `Unreliable` with a valid report when the run flags
/// either condition.
///
/// # Safety
/// String arguments must be NUL-terminated (`out_dir` may be null) and
/// `report_json` writable.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_run_config(
    config_toml: *const c_char,
    command: *const c_char,
    out_dir: *const c_char,
    report_json: *mut *mut c_char,
) -> SeqdiagStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        let command = Command::from_name(str_arg(command, "command")?)?;
        let out_dir = if out_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(out_dir, "out_dir")?))
        };
        let slot = out_arg(report_json, "report_json")?;
        let cfg = RunConfig::from_toml_str(text)?.resolve(None)?;
        let report = command.run(&cfg)?;
        if let Some(dir) = out_dir {
            report.write_to(&dir)?;
        }
        let json = CString::new(report.to_json()?).map_err(|_| invalid("report contains NUL"))?;
        *slot = json.into_raw();
        Ok(match report.exit_code() {
            EXIT_INFEASIBLE => SeqdiagStatus::Infeasible,
            EXIT_UNRELIABLE => SeqdiagStatus::Unreliable,
            _ => SeqdiagStatus::Ok,
        })
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from [`seqdiag_run_config`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn seqdiag_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
