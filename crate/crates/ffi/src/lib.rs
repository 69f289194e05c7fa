//! C ABI over the shapiro library.
//!
//! Every object crosses the boundary as an opaque pointer created by a `*_new`/`*_run` call and
//! released by the matching `*_free`. Functions return a [`ShapiroStatus`]; on failure the message
//! is kept per thread and can be read with [`shapiro_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shapiro::calibration::{calibrate_default, CalibrationTargets};
use shapiro::config::Config;
use shapiro::potential::{DriveSpec, DriveVariant};
use shapiro::scan::{find_resonances, run_scan, run_trajectory, AmplitudeRule, Model, ResonanceScan, ScanContext, ScanSpec};
use shapiro::twomode::TrajectoryRecord;
use shapiro::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapiroStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Configuration, domain or precondition error.
    Config = 3,
    /// Non-convergence, norm drift or another numerical failure.
    Numerical = 4,
    Io = 5,
    BufferTooSmall = 6,
    /// The requested quantity is not recorded (e.g. variance of a mean-field run).
    NotAvailable = 7,
    Panic = 8,
}

pub const SHAPIRO_MODEL_TM_STANDARD: u32 = 0;
pub const SHAPIRO_MODEL_TM_IMPROVED: u32 = 1;
pub const SHAPIRO_MODEL_GP: u32 = 2;
pub const SHAPIRO_MODEL_EXACT_SMALL: u32 = 3;

pub const SHAPIRO_VARIANT_FULL: u32 = 0;
pub const SHAPIRO_VARIANT_CONSTANT_OMEGA: u32 = 1;
pub const SHAPIRO_VARIANT_CONSTANT_DELTA_E: u32 = 2;

/// Calibrated potential plus the grids and frequency unit shared by runs.
pub struct ShapiroContext {
    ctx: ScanContext,
}

pub struct ShapiroTrajectory {
    rec: TrajectoryRecord,
}

pub struct ShapiroScan {
    scan: ResonanceScan,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ShapiroResonance {
    pub n: u32,
    /// Position in units of ΔE0.
    pub omega_min: f64,
    pub depth: f64,
    pub fwhm: f64,
    pub value_min: f64,
}

/// Drive and model parameters for a run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ShapiroRunParams {
    /// One of the SHAPIRO_MODEL_* constants.
    pub model: u32,
    /// One of the SHAPIRO_VARIANT_* constants.
    pub variant: u32,
    /// Coefficient a of λ1 = a·ΔE0/ω.
    pub a: f64,
    pub u0n: f64,
    pub n_atoms: usize,
    /// Averaging window for scans.
    pub t_avg: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ShapiroStatus {
    match e {
        Error::Io(_) => ShapiroStatus::Io,
        e if e.is_numerical() => ShapiroStatus::Numerical,
        _ => ShapiroStatus::Config,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), ShapiroStatus>) -> ShapiroStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShapiroStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ShapiroStatus::Panic
        }
    }
}

fn lib<T>(r: shapiro::Result<T>) -> Result<T, ShapiroStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn invalid(msg: &str) -> ShapiroStatus {
    set_error(msg.into());
    ShapiroStatus::InvalidArgument
}

fn non_null<'a, T>(p: *const T) -> Result<&'a T, ShapiroStatus> {
    // SAFETY: callers pass pointers obtained from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| {
        set_error("null pointer argument".into());
        ShapiroStatus::NullPointer
    })
}

fn model_of(code: u32) -> Result<Model, ShapiroStatus> {
    Ok(match code {
        SHAPIRO_MODEL_TM_STANDARD => Model::TmStandard,
        SHAPIRO_MODEL_TM_IMPROVED => Model::TmImproved,
        SHAPIRO_MODEL_GP => Model::Gp,
        SHAPIRO_MODEL_EXACT_SMALL => Model::ExactSmall,
        _ => return Err(invalid("unknown model code")),
    })
}

fn variant_of(code: u32) -> Result<DriveVariant, ShapiroStatus> {
    Ok(match code {
        SHAPIRO_VARIANT_FULL => DriveVariant::Full,
        SHAPIRO_VARIANT_CONSTANT_OMEGA => DriveVariant::ConstantOmega,
        SHAPIRO_VARIANT_CONSTANT_DELTA_E => DriveVariant::ConstantDeltaE,
        _ => return Err(invalid("unknown drive variant code")),
    })
}

fn scan_spec(p: &ShapiroRunParams, grid: Vec<f64>) -> Result<ScanSpec, ShapiroStatus> {
    let mut s = ScanSpec::new(grid, AmplitudeRule::Coefficient { a: p.a }, p.u0n, p.n_atoms, p.t_avg, model_of(p.model)?);
    s.variant = variant_of(p.variant)?;
    lib(s.validate())?;
    Ok(s)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to fit).
/// Returns the full message length in bytes, 0 when there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn shapiro_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: buf holds len bytes and n < len.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn shapiro_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(c) => c,
        Err(_) => c"",
    };
    V.as_ptr()
}

/// Calibrated context. `config_toml` may be null for the defaults, otherwise it is a TOML
/// document in the CLI's configuration format (only the potential section is used).
///
/// # Safety
/// `config_toml` must be null or a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapiro_context_new(config_toml: *const c_char, out: *mut *mut ShapiroContext) -> ShapiroStatus {
    guard(|| {
        if out.is_null() {
            return Err(non_null(out).err().unwrap());
        }
        let spec = if config_toml.is_null() {
            lib(calibrate_default(&CalibrationTargets::default()))?
        } else {
            // SAFETY: non-null and NUL-terminated per the contract.
            let text = unsafe { CStr::from_ptr(config_toml) }.to_str().map_err(|_| invalid("config is not UTF-8"))?;
            lib(lib(Config::from_toml(text))?.potential.build())?
        };
        let ctx = lib(ScanContext::new(spec))?;
        // SAFETY: out checked above.
        unsafe { *out = Box::into_raw(Box::new(ShapiroContext { ctx })) };
        Ok(())
    })
}

/// # Safety
/// `ctx` must be null or a pointer from [`shapiro_context_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shapiro_context_free(ctx: *mut ShapiroContext) {
    if !ctx.is_null() {
        // SAFETY: created by Box::into_raw in shapiro_context_new.
        drop(unsafe { Box::from_raw(ctx) });
    }
}

/// Static bias ΔE0 of the calibrated operating point (the frequency unit).
///
/// # Safety
/// `ctx` must come from [`shapiro_context_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapiro_context_delta_e0(ctx: *const ShapiroContext, out: *mut f64) -> ShapiroStatus {
    guard(|| {
        let c = non_null(ctx)?;
        if out.is_null() {
            return Err(non_null(out).err().unwrap());
        }
        // SAFETY: checked non-null.
        unsafe { *out = c.ctx.delta_e0 };
        Ok(())
    })
}

/// One driven trajectory at `omega_over_de0` for `t_final`.
///
/// # Safety
/// `ctx` and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapiro_trajectory_run(
    ctx: *const ShapiroContext,
    params: *const ShapiroRunParams,
    omega_over_de0: f64,
    t_final: f64,
    out: *mut *mut ShapiroTrajectory,
) -> ShapiroStatus {
    guard(|| {
        let c = non_null(ctx)?;
        let p = non_null(params)?;
        if out.is_null() {
            return Err(non_null(out).err().unwrap());
        }
        if !(omega_over_de0 > 0.0) || !(t_final >= 0.0) {
            return Err(invalid("need omega_over_de0 > 0 and t_final >= 0"));
        }
        let spec = scan_spec(p, vec![omega_over_de0])?;
        let de0 = c.ctx.delta_e0;
        let drive = DriveSpec::from_amplitude_rule(p.a, de0, omega_over_de0 * de0, spec.variant);
        let rec = lib(run_trajectory(&spec, &c.ctx, &drive, t_final))?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(ShapiroTrajectory { rec })) };
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a pointer from [`shapiro_trajectory_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shapiro_trajectory_free(traj: *mut ShapiroTrajectory) {
    if !traj.is_null() {
        // SAFETY: created by Box::into_raw.
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Number of recorded samples, 0 for a null handle.
///
/// # Safety
/// `traj` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn shapiro_trajectory_len(traj: *const ShapiroTrajectory) -> usize {
    // SAFETY: null or valid per the contract.
    unsafe { traj.as_ref() }.map_or(0, |t| t.rec.len())
}

fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), ShapiroStatus> {
    if dst.is_null() {
        return Ok(());
    }
    if len < src.len() {
        set_error(format!("buffer holds {len} values, {} needed", src.len()));
        return Err(ShapiroStatus::BufferTooSmall);
    }
    // SAFETY: dst holds at least len ≥ src.len() values.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len()) };
    Ok(())
}

/// Copies times, ⟨Jz⟩/N, Var(Jz) and fragmentation into caller buffers of `len` values each.
/// Any buffer may be null to skip it. Asking for variance or fragmentation of a mean-field run
/// returns `NotAvailable`.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shapiro_trajectory_copy(
    traj: *const ShapiroTrajectory,
    times: *mut f64,
    jz_over_n: *mut f64,
    jz_var: *mut f64,
    frag: *mut f64,
    len: usize,
) -> ShapiroStatus {
    guard(|| {
        let t = &non_null(traj)?.rec;
        copy_out(&t.times, times, len)?;
        copy_out(&t.jz_mean_over_n, jz_over_n, len)?;
        for (src, dst, name) in [(&t.jz_var, jz_var, "variance"), (&t.frag, frag, "fragmentation")] {
            if dst.is_null() {
                continue;
            }
            match src {
                Some(v) => copy_out(v, dst, len)?,
                None => {
                    set_error(format!("{name} is not recorded for mean-field runs"));
                    return Err(ShapiroStatus::NotAvailable);
                }
            }
        }
        Ok(())
    })
}

/// Resonance scan over `n_points` frequencies (units of ΔE0).
///
/// # Safety
/// `omega_grid` must hold `n_points` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn shapiro_scan_run(
    ctx: *const ShapiroContext,
    params: *const ShapiroRunParams,
    omega_grid: *const f64,
    n_points: usize,
    out: *mut *mut ShapiroScan,
) -> ShapiroStatus {
    guard(|| {
        let c = non_null(ctx)?;
        let p = non_null(params)?;
        if omega_grid.is_null() || out.is_null() {
            set_error("null pointer argument".into());
            return Err(ShapiroStatus::NullPointer);
        }
        if n_points == 0 {
            return Err(invalid("empty frequency grid"));
        }
        // SAFETY: omega_grid holds n_points values per the contract.
        let grid = unsafe { std::slice::from_raw_parts(omega_grid, n_points) }.to_vec();
        let spec = scan_spec(p, grid)?;
        let scan = lib(run_scan(&spec, &c.ctx))?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(ShapiroScan { scan })) };
        Ok(())
    })
}

/// # Safety
/// `scan` must be null or a pointer from [`shapiro_scan_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shapiro_scan_free(scan: *mut ShapiroScan) {
    if !scan.is_null() {
        // SAFETY: created by Box::into_raw.
        drop(unsafe { Box::from_raw(scan) });
    }
}

/// Time-averaged ⟨Jz⟩/N per grid point, NaN where a point failed.
///
/// # Safety
/// `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shapiro_scan_values(scan: *const ShapiroScan, values: *mut f64, len: usize) -> ShapiroStatus {
    guard(|| {
        let s = &non_null(scan)?.scan;
        if values.is_null() {
            return Err(non_null(values as *const f64).err().unwrap());
        }
        let v: Vec<f64> = s.records.iter().map(|r| r.jz_timeavg_over_n.unwrap_or(f64::NAN)).collect();
        copy_out(&v, values, len)
    })
}

/// Writes up to `cap` resonances and stores the number found in `count` (which may exceed `cap`).
///
/// # Safety
/// `out` must hold `cap` entries (or be null with `cap == 0`); `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapiro_scan_resonances(
    scan: *const ShapiroScan,
    out: *mut ShapiroResonance,
    cap: usize,
    count: *mut usize,
) -> ShapiroStatus {
    guard(|| {
        let s = &non_null(scan)?.scan;
        if count.is_null() || (out.is_null() && cap > 0) {
            set_error("null pointer argument".into());
            return Err(ShapiroStatus::NullPointer);
        }
        let found = find_resonances(s);
        // SAFETY: count checked non-null.
        unsafe { *count = found.len() };
        for (i, r) in found.iter().take(cap).enumerate() {
            // SAFETY: i < cap and out holds cap entries.
            unsafe {
                *out.add(i) = ShapiroResonance {
                    n: r.n,
                    omega_min: r.omega_min,
                    depth: r.depth,
                    fwhm: r.fwhm,
                    value_min: r.value_min,
                }
            };
        }
        Ok(())
    })
}
