#ifndef SHAPIRO_H
#define SHAPIRO_H

#pragma once

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define SHAPIRO_MODEL_TM_STANDARD 0

#define SHAPIRO_MODEL_TM_IMPROVED 1

#define SHAPIRO_MODEL_GP 2

#define SHAPIRO_MODEL_EXACT_SMALL 3

#define SHAPIRO_VARIANT_FULL 0

#define SHAPIRO_VARIANT_CONSTANT_OMEGA 1

#define SHAPIRO_VARIANT_CONSTANT_DELTA_E 2

typedef enum ShapiroStatus {
  SHAPIRO_STATUS_OK = 0,
  SHAPIRO_STATUS_NULL_POINTER = 1,
  SHAPIRO_STATUS_INVALID_ARGUMENT = 2,
  // Configuration, domain or precondition error.
  SHAPIRO_STATUS_CONFIG = 3,
  // Non-convergence, norm drift or another numerical failure.
  SHAPIRO_STATUS_NUMERICAL = 4,
  SHAPIRO_STATUS_IO = 5,
  SHAPIRO_STATUS_BUFFER_TOO_SMALL = 6,
  // The requested quantity is not recorded (e.g. variance of a mean-field run).
  SHAPIRO_STATUS_NOT_AVAILABLE = 7,
  SHAPIRO_STATUS_PANIC = 8,
} ShapiroStatus;

// Calibrated potential plus the grids and frequency unit shared by runs.
typedef struct ShapiroContext ShapiroContext;

typedef struct ShapiroScan ShapiroScan;

typedef struct ShapiroTrajectory ShapiroTrajectory;

// Drive and model parameters for a run.
typedef struct ShapiroRunParams {
  // One of the SHAPIRO_MODEL_* constants.
  uint32_t model;
  // One of the SHAPIRO_VARIANT_* constants.
  uint32_t variant;
  // Coefficient a of λ1 = a·ΔE0/ω.
  double a;
  double u0n;
  uintptr_t n_atoms;
  // Averaging window for scans.
  double t_avg;
} ShapiroRunParams;

typedef struct ShapiroResonance {
  uint32_t n;
  // Position in units of ΔE0.
  double omega_min;
  double depth;
  double fwhm;
  double value_min;
} ShapiroResonance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated, truncated to fit).
// Returns the full message length in bytes, 0 when there is none.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t shapiro_last_error(char *buf, uintptr_t len);

// Library version as a static NUL-terminated string.
const char *shapiro_version(void);

// Calibrated context. `config_toml` may be null for the defaults, otherwise it is a TOML
// document in the CLI's configuration format (only the potential section is used).
//
// # Safety
// `config_toml` must be null or a valid NUL-terminated string; `out` must be writable.
enum ShapiroStatus shapiro_context_new(const char *config_toml, struct ShapiroContext **out);

// # Safety
// `ctx` must be null or a pointer from [`shapiro_context_new`] not yet freed.
void shapiro_context_free(struct ShapiroContext *ctx);

// Static bias ΔE0 of the calibrated operating point (the frequency unit).
//
// # Safety
// `ctx` must come from [`shapiro_context_new`]; `out` must be writable.
enum ShapiroStatus shapiro_context_delta_e0(const struct ShapiroContext *ctx, double *out);

// One driven trajectory at `omega_over_de0` for `t_final`.
//
// # Safety
// `ctx` and `params` must be valid; `out` must be writable.
enum ShapiroStatus shapiro_trajectory_run(const struct ShapiroContext *ctx,
                                          const struct ShapiroRunParams *params,
                                          double omega_over_de0,
                                          double t_final,
                                          struct ShapiroTrajectory **out);

// # Safety
// `traj` must be null or a pointer from [`shapiro_trajectory_run`] not yet freed.
void shapiro_trajectory_free(struct ShapiroTrajectory *traj);

// Number of recorded samples, 0 for a null handle.
//
// # Safety
// `traj` must be null or valid.
uintptr_t shapiro_trajectory_len(const struct ShapiroTrajectory *traj);

// Copies times, ⟨Jz⟩/N, Var(Jz) and fragmentation into caller buffers of `len` values each.
// Any buffer may be null to skip it. Asking for variance or fragmentation of a mean-field run
// returns `NotAvailable`.
//
// # Safety
// Non-null buffers must hold `len` doubles.
enum ShapiroStatus shapiro_trajectory_copy(const struct ShapiroTrajectory *traj,
                                           double *times,
                                           double *jz_over_n,
                                           double *jz_var,
                                           double *frag,
                                           uintptr_t len);

// Resonance scan over `n_points` frequencies (units of ΔE0).
//
// # Safety
// `omega_grid` must hold `n_points` doubles; other pointers must be valid.
enum ShapiroStatus shapiro_scan_run(const struct ShapiroContext *ctx,
                                    const struct ShapiroRunParams *params,
                                    const double *omega_grid,
                                    uintptr_t n_points,
                                    struct ShapiroScan **out);

// # Safety
// `scan` must be null or a pointer from [`shapiro_scan_run`] not yet freed.
void shapiro_scan_free(struct ShapiroScan *scan);

// Time-averaged ⟨Jz⟩/N per grid point, NaN where a point failed.
//
// # Safety
// `values` must hold `len` doubles.
enum ShapiroStatus shapiro_scan_values(const struct ShapiroScan *scan,
                                       double *values,
                                       uintptr_t len);

// Writes up to `cap` resonances and stores the number found in `count` (which may exceed `cap`).
//
// # Safety
// `out` must hold `cap` entries (or be null with `cap == 0`); `count` must be writable.
enum ShapiroStatus shapiro_scan_resonances(const struct ShapiroScan *scan,
                                           struct ShapiroResonance *out,
                                           uintptr_t cap,
                                           uintptr_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPIRO_H */
