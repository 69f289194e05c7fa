use std::ffi::{c_char, CStr, CString};
use std::ptr;

use shapiro_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { shapiro_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn context() -> *mut ShapiroContext {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { shapiro_context_new(ptr::null(), &mut ctx) }, ShapiroStatus::Ok);
    assert!(!ctx.is_null());
    ctx
}

fn params(model: u32) -> ShapiroRunParams {
    ShapiroRunParams { model, variant: SHAPIRO_VARIANT_FULL, a: 0.035, u0n: 0.0, n_atoms: 10, t_avg: 5.0 }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(shapiro_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn trajectory_and_scan_round_trip() {
    let ctx = context();
    let mut de0 = 0.0;
    assert_eq!(unsafe { shapiro_context_delta_e0(ctx, &mut de0) }, ShapiroStatus::Ok);
    assert!((de0 - 2.408395).abs() < 1e-5, "{de0}");

    let p = params(SHAPIRO_MODEL_TM_IMPROVED);
    let mut traj = ptr::null_mut();
    assert_eq!(unsafe { shapiro_trajectory_run(ctx, &p, 1.0, 2.0, &mut traj) }, ShapiroStatus::Ok);
    let len = unsafe { shapiro_trajectory_len(traj) };
    assert!(len > 10);
    let (mut t, mut z, mut var, mut frag) = (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let st = unsafe { shapiro_trajectory_copy(traj, t.as_mut_ptr(), z.as_mut_ptr(), var.as_mut_ptr(), frag.as_mut_ptr(), len) };
    assert_eq!(st, ShapiroStatus::Ok);
    assert_eq!(t[0], 0.0);
    assert!((t[len - 1] - 2.0).abs() < 1e-9);
    assert!(z.iter().all(|v| v.abs() <= 0.5 + 1e-12));
    assert!(frag.iter().all(|f| (0.0..=1.0 + 1e-12).contains(f)));

    let mut short = vec![0.0; len - 1];
    let st = unsafe { shapiro_trajectory_copy(traj, short.as_mut_ptr(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), len - 1) };
    assert_eq!(st, ShapiroStatus::BufferTooSmall);
    assert!(last_error().contains("needed"));
    unsafe { shapiro_trajectory_free(traj) };

    let grid = [0.9, 1.0, 1.1];
    let mut scan = ptr::null_mut();
    assert_eq!(unsafe { shapiro_scan_run(ctx, &p, grid.as_ptr(), grid.len(), &mut scan) }, ShapiroStatus::Ok);
    let mut vals = [0.0; 3];
    assert_eq!(unsafe { shapiro_scan_values(scan, vals.as_mut_ptr(), 3) }, ShapiroStatus::Ok);
    assert!(vals.iter().all(|v| v.is_finite()));
    let mut count = usize::MAX;
    assert_eq!(unsafe { shapiro_scan_resonances(scan, ptr::null_mut(), 0, &mut count) }, ShapiroStatus::Ok);
    assert!(count < 3);
    unsafe { shapiro_scan_free(scan) };
    unsafe { shapiro_context_free(ctx) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut ctx = ptr::null_mut();
    assert_eq!(unsafe { shapiro_context_delta_e0(ptr::null(), &mut 0.0) }, ShapiroStatus::NullPointer);
    assert_eq!(unsafe { shapiro_context_new(ptr::null(), ptr::null_mut()) }, ShapiroStatus::NullPointer);

    let bad = CString::new("[potential]\nnot_a_key = 1\n").unwrap();
    let st = unsafe { shapiro_context_new(bad.as_ptr(), &mut ctx) };
    assert_eq!(st, ShapiroStatus::Config);
    assert!(ctx.is_null());
    assert!(!last_error().is_empty());

    let ctx = context();
    let mut traj = ptr::null_mut();
    let st = unsafe { shapiro_trajectory_run(ctx, &params(17), 1.0, 1.0, &mut traj) };
    assert_eq!(st, ShapiroStatus::InvalidArgument);
    assert!(last_error().contains("model"));
    let st = unsafe { shapiro_trajectory_run(ctx, &params(SHAPIRO_MODEL_TM_STANDARD), -1.0, 1.0, &mut traj) };
    assert_eq!(st, ShapiroStatus::InvalidArgument);
    let st = unsafe { shapiro_scan_run(ctx, &params(SHAPIRO_MODEL_TM_STANDARD), [1.0].as_ptr(), 0, &mut ptr::null_mut()) };
    assert_eq!(st, ShapiroStatus::InvalidArgument);

    // mean-field runs carry no variance
    let mut p = params(SHAPIRO_MODEL_GP);
    p.u0n = 1.0;
    assert_eq!(unsafe { shapiro_trajectory_run(ctx, &p, 1.0, 0.05, &mut traj) }, ShapiroStatus::Ok);
    let len = unsafe { shapiro_trajectory_len(traj) };
    let mut var = vec![0.0; len];
    let st = unsafe { shapiro_trajectory_copy(traj, ptr::null_mut(), ptr::null_mut(), var.as_mut_ptr(), ptr::null_mut(), len) };
    assert_eq!(st, ShapiroStatus::NotAvailable);
    unsafe { shapiro_trajectory_free(traj) };
    unsafe { shapiro_context_free(ctx) };

    assert_eq!(unsafe { shapiro_trajectory_len(ptr::null()) }, 0);
    unsafe { shapiro_context_free(ptr::null_mut()) };
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shapiro.h")).unwrap();
    for name in [
        "shapiro_last_error",
        "shapiro_version",
        "shapiro_context_new",
        "shapiro_context_free",
        "shapiro_trajectory_run",
        "shapiro_trajectory_copy",
        "shapiro_scan_run",
        "shapiro_scan_resonances",
        "SHAPIRO_STATUS_BUFFER_TOO_SMALL",
        "typedef struct ShapiroContext ShapiroContext",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}
