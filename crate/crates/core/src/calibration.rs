//! Fitting the default well family to a target operating point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::{PotentialSpec, WellFamily};
use crate::spectral::{lowest_two_states, tm_parameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    pub lambda0: f64,
    pub g: f64,
    pub delta_e0: f64,
    pub omega0: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self { lambda0: 0.675, g: 1.5042, delta_e0: 280.0 / 116.26, omega0: 0.15 }
    }
}

/// Shape of the default family around λ0:
/// d(λ) = d0 + d1·(λ−λ0) + ½·d2·(λ−λ0)², barrier(λ) = B0·exp(s·(λ−λ0)).
/// Only d0 and B0 are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyTemplate {
    pub d_slope: f64,
    pub d_curvature: f64,
    pub barrier_log_slope: f64,
    pub domain: (f64, f64),
    pub knot_spacing: f64,
}

impl Default for FamilyTemplate {
    fn default() -> Self {
        Self { d_slope: 3.0, d_curvature: -9.0, barrier_log_slope: 1.5, domain: (0.40, 0.95), knot_spacing: 0.025 }
    }
}

impl FamilyTemplate {
    /// Knots on λ0 + kΔ inside the domain, with the domain ends always included.
    pub fn knots(&self, lambda0: f64) -> Vec<f64> {
        let (lo, hi) = self.domain;
        let snap = |v: f64| {
            if (v - lo).abs() < 1e-9 {
                lo
            } else if (v - hi).abs() < 1e-9 {
                hi
            } else {
                v
            }
        };
        let kmin = ((lo - lambda0) / self.knot_spacing).floor() as i64 - 1;
        let kmax = ((hi - lambda0) / self.knot_spacing).ceil() as i64 + 1;
        let mut k: Vec<f64> = (kmin..=kmax)
            .map(|i| snap(lambda0 + i as f64 * self.knot_spacing))
            .filter(|&v| v >= lo && v <= hi)
            .collect();
        if k.first() != Some(&lo) {
            k.insert(0, lo);
        }
        if k.last() != Some(&hi) {
            k.push(hi);
        }
        k.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        k
    }

    pub fn family(&self, lambda0: f64, d0: f64, barrier0: f64) -> Result<WellFamily> {
        let lam = self.knots(lambda0);
        let d = lam
            .iter()
            .map(|l| {
                let dl = l - lambda0;
                d0 + self.d_slope * dl + 0.5 * self.d_curvature * dl * dl
            })
            .collect();
        let b = lam.iter().map(|l| barrier0 * (self.barrier_log_slope * (l - lambda0)).exp()).collect();
        WellFamily::new(lam, d, b)
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub spec: PotentialSpec,
    pub targets: CalibrationTargets,
    pub d0: f64,
    pub barrier0: f64,
    pub omega0: f64,
    pub delta_e0: f64,
    pub iterations: usize,
}

fn static_at(grid: &Grid, spec: &PotentialSpec) -> Result<(f64, f64)> {
    let m = lowest_two_states(grid, spec, spec.lambda0)?;
    let p = tm_parameters(grid, &m, spec, spec.lambda0, spec.g, 0.0)?;
    Ok((p.omega, p.delta_e))
}

/// Solves for (d0, B0) so that Ω(λ0) and ΔE(λ0) hit the targets.
pub fn calibrate(targets: &CalibrationTargets, template: &FamilyTemplate, grid: &Grid) -> Result<CalibrationReport> {
    let t = *targets;
    if !(t.omega0 > 0.0) {
        return Err(Error::Config("omega0 target must be positive".into()));
    }
    if t.g == 0.0 && t.delta_e0 != 0.0 {
        return Err(Error::Config("a nonzero bias target needs a nonzero tilt".into()));
    }
    if t.g != 0.0 && t.delta_e0 / t.g <= 0.0 {
        return Err(Error::Config("bias target and tilt must share sign".into()));
    }
    let build = |x: [f64; 2]| -> Result<PotentialSpec> {
        PotentialSpec::new(t.lambda0, t.g, template.family(t.lambda0, x[0], x[1].exp())?)
    };
    let fit_bias = t.g != 0.0;
    let residual = |x: [f64; 2]| -> Result<[f64; 2]> {
        let (om, de) = static_at(grid, &build(x)?)?;
        if !(om > 0.0) {
            return Err(Error::Convergence("tunnel coupling not positive during calibration".into()));
        }
        Ok([(om / t.omega0).ln(), if fit_bias { de - t.delta_e0 } else { 0.0 }])
    };

    // first-order guess ΔE ≈ g·d with the default operating point as reference
    let d_guess = if fit_bias { 1.789 * (t.delta_e0 / t.g) / (2.408 / 1.5042) } else { 1.789 };
    let mut x = [d_guess, 12.75f64.ln()];
    let mut f = residual(x)?;
    let size = |f: &[f64; 2]| f[0].abs().max(f[1].abs());
    let mut iterations = 0;
    while size(&f) > 1e-11 && iterations < 40 {
        iterations += 1;
        let eps = 1e-6;
        let mut jac = [[0.0; 2]; 2];
        let ncols = if fit_bias { 2 } else { 1 };
        for c in 0..ncols {
            let col = if fit_bias { c } else { 1 };
            let mut xp = x;
            xp[col] += eps;
            let fp = residual(xp)?;
            for r in 0..2 {
                jac[r][col] = (fp[r] - f[r]) / eps;
            }
        }
        let step = if fit_bias {
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if det.abs() < 1e-300 {
                break;
            }
            [
                (f[0] * jac[1][1] - f[1] * jac[0][1]) / det,
                (jac[0][0] * f[1] - jac[1][0] * f[0]) / det,
            ]
        } else {
            [0.0, f[0] / jac[0][1]]
        };
        let mut alpha = 1.0;
        loop {
            let xn = [x[0] - alpha * step[0], x[1] - alpha * step[1]];
            match residual(xn) {
                Ok(fnew) if size(&fnew) < size(&f) => {
                    x = xn;
                    f = fnew;
                    break;
                }
                _ if alpha > 1e-4 => alpha *= 0.5,
                _ => {
                    return Err(Error::Calibration { res_delta_e: f[1], res_ln_omega: f[0] });
                }
            }
        }
    }
    let spec = build(x)?;
    let (omega0, delta_e0) = static_at(grid, &spec)?;
    let bias_ok = if fit_bias { ((delta_e0 - t.delta_e0) / t.delta_e0).abs() <= 0.01 } else { delta_e0.abs() <= 1e-8 * omega0 };
    if !bias_ok || ((omega0 - t.omega0) / t.omega0).abs() > 0.05 {
        return Err(Error::Calibration { res_delta_e: delta_e0 - t.delta_e0, res_ln_omega: (omega0 / t.omega0).ln() });
    }
    Ok(CalibrationReport { spec, targets: t, d0: x[0], barrier0: x[1].exp(), omega0, delta_e0, iterations })
}

/// Calibrates the default family on the production grid.
pub fn calibrate_default(targets: &CalibrationTargets) -> Result<PotentialSpec> {
    Ok(calibrate(targets, &FamilyTemplate::default(), &Grid::production())?.spec)
}
