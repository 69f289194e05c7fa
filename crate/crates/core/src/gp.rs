//! Real-time 1D Gross-Pitaevskii propagation in the driven double well.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, Kinetic};
use crate::potential::{DriveSpec, PotentialSpec};
use crate::spectral::{gp_ground_state, GpSolverOptions, LinearProblem};
use crate::twomode::{step_plan, TrajectoryRecord, NORM_DRIFT_LIMIT};

/// dt·(largest kinetic eigenvalue) must not exceed this.
pub const GP_DT_RULE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GpField {
    pub grid: Grid,
    pub psi: Vec<C64>,
    /// U0·N: the nonlinearity is U0N·|ψ|² with ∫|ψ|² = 1.
    pub u0n: f64,
    pub t: f64,
}

impl GpField {
    pub fn from_real(grid: Grid, phi: &[f64], u0n: f64) -> Self {
        Self { grid, psi: phi.iter().map(|&v| C64::new(v, 0.0)).collect(), u0n, t: 0.0 }
    }

    pub fn norm(&self) -> f64 {
        self.grid.integrate(self.psi.iter().map(|p| p.norm_sqr())).sqrt()
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }
}

/// Imaginary-time ground state of the tilted potential at λ0.
pub fn gp_ground_state_tilted(grid: &Grid, spec: &PotentialSpec, lambda0: f64, g: f64, u0n: f64) -> Result<GpField> {
    let v = spec.sample(lambda0, g, &grid.points())?;
    let lp = LinearProblem::new(grid, v)?;
    let st = gp_ground_state(&lp, u0n, GpSolverOptions::default())?;
    if st.residual > 1e-8 {
        return Err(Error::Convergence(format!("tilted GP ground state residual {:.3e}", st.residual)));
    }
    let mut phi = st.phi;
    if phi.iter().sum::<f64>() < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
    Ok(GpField::from_real(*grid, &phi, u0n))
}

/// Fraction of a grid cell [x − h/2, x + h/2] lying left of `xb`.
fn left_fraction(x: f64, h: f64, xb: f64) -> f64 {
    ((xb - (x - 0.5 * h)) / h).clamp(0.0, 1.0)
}

/// Imbalance of a density split at `xb`: ½(N_left − N_right) for unit norm.
pub fn split_imbalance(grid: &Grid, density: &[f64], xb: f64) -> f64 {
    let h = grid.h();
    let mut left = 0.0;
    let mut total = 0.0;
    for (i, &d) in density.iter().enumerate() {
        left += d * left_fraction(grid.x(i), h, xb);
        total += d;
    }
    h * (left - 0.5 * total)
}

/// ½(∫_{x<x_b}|ψ|² − ∫_{x>x_b}|ψ|²), split at the barrier maximum of the tilted potential,
/// oriented so the lower well counts positive.
pub fn imbalance(field: &GpField, spec: &PotentialSpec, lambda: f64) -> Result<f64> {
    let xb = spec.barrier_position(lambda)?;
    let v = split_imbalance(&field.grid, &field.density(), xb);
    Ok(if spec.g < 0.0 { -v } else { v })
}

/// GP energy functional E = ⟨T⟩ + ∫V|ψ|² + (U0N/2)∫|ψ|⁴.
pub fn gp_energy(field: &GpField, spec: &PotentialSpec, lambda: f64) -> Result<f64> {
    let grid = &field.grid;
    let v = spec.sample(lambda, spec.g, &grid.points())?;
    let kin = kinetic_expectation(field);
    let pot = grid.integrate(field.psi.iter().zip(&v).map(|(p, vv)| vv * p.norm_sqr()));
    let int = 0.5 * field.u0n * grid.integrate(field.psi.iter().map(|p| p.norm_sqr().powi(2)));
    Ok(kin + pot + int)
}

fn kinetic_expectation(field: &GpField) -> f64 {
    let grid = &field.grid;
    let n = grid.len();
    match grid.kinetic {
        Kinetic::Spectral => {
            let mut buf = field.psi.clone();
            FftPlanner::new().plan_fft_forward(n).process(&mut buf);
            let k = grid.wavenumbers();
            grid.h() / n as f64 * buf.iter().zip(&k).map(|(b, kk)| 0.5 * kk * kk * b.norm_sqr()).sum::<f64>()
        }
        Kinetic::FiniteDifference => {
            let t = grid.kinetic_matrix();
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if t[(i, j)] != 0.0 {
                        acc += t[(i, j)] * (field.psi[i].conj() * field.psi[j]).re;
                    }
                }
            }
            grid.h() * acc
        }
    }
}

enum KineticStep {
    Fft { fwd: Arc<dyn Fft<f64>>, inv: Arc<dyn Fft<f64>>, phase: Vec<C64>, scratch: Vec<C64> },
    Dense(DMatrix<C64>),
}

impl KineticStep {
    fn new(grid: &Grid, dt: f64) -> Self {
        let n = grid.len();
        match grid.kinetic {
            Kinetic::Spectral => {
                let mut planner = FftPlanner::new();
                let fwd = planner.plan_fft_forward(n);
                let inv = planner.plan_fft_inverse(n);
                let phase = grid
                    .wavenumbers()
                    .iter()
                    .map(|k| C64::from_polar(1.0 / n as f64, -0.5 * k * k * dt))
                    .collect();
                let scratch = vec![C64::default(); fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len())];
                KineticStep::Fft { fwd, inv, phase, scratch }
            }
            Kinetic::FiniteDifference => {
                let eig = SymmetricEigen::new(grid.kinetic_matrix());
                let u = eig.eigenvectors.map(|v| C64::new(v, 0.0));
                let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * dt)));
                KineticStep::Dense(&u * d * u.transpose())
            }
        }
    }

    fn apply(&mut self, psi: &mut [C64]) {
        match self {
            KineticStep::Fft { fwd, inv, phase, scratch } => {
                fwd.process_with_scratch(psi, scratch);
                for (p, ph) in psi.iter_mut().zip(phase.iter()) {
                    *p *= ph;
                }
                inv.process_with_scratch(psi, scratch);
            }
            KineticStep::Dense(m) => {
                let v = nalgebra::DVector::from_column_slice(psi);
                let out = &*m * v;
                psi.copy_from_slice(out.as_slice());
            }
        }
    }
}

/// Strang split-step propagation: half potential+nonlinear kick, full kinetic step, half kick,
/// with the potential evaluated at each step's midpoint. Records the imbalance every `stride` steps.
pub fn propagate_gp(
    field: &mut GpField,
    drive: &DriveSpec,
    spec: &PotentialSpec,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryRecord> {
    drive.validate(spec)?;
    let grid = field.grid;
    if !(dt > 0.0) || dt * grid.kinetic_max() > GP_DT_RULE * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!(
            "dt = {dt} violates dt·Kmax ≤ {GP_DT_RULE} (Kmax = {})",
            grid.kinetic_max()
        )));
    }
    let xs = grid.points();
    let t0 = field.t;
    let lambda_at = |t: f64| drive.lambda_at(spec.lambda0, t);
    let mut rec = TrajectoryRecord::new(1, true);
    let record = |f: &GpField, rec: &mut TrajectoryRecord| -> Result<()> {
        let drift = (f.norm() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { drift });
        }
        rec.push(f.t - t0, imbalance(f, spec, lambda_at(f.t))?, None, None);
        Ok(())
    };
    record(field, &mut rec)?;
    if t_final == 0.0 {
        return Ok(rec);
    }
    let (steps, h) = step_plan(t_final, dt);
    let stride = stride.max(1);
    let mut kin = KineticStep::new(&grid, h);
    let u = field.u0n;
    let mut v = vec![0.0; grid.len()];
    for s in 0..steps {
        let tm = t0 + (s as f64 + 0.5) * h;
        let q = spec.quartic(lambda_at(tm))?;
        for (vi, &x) in v.iter_mut().zip(&xs) {
            *vi = q.eval(x) + spec.g * x;
        }
        for (p, vi) in field.psi.iter_mut().zip(&v) {
            *p *= C64::from_polar(1.0, -0.5 * h * (vi + u * p.norm_sqr()));
        }
        kin.apply(&mut field.psi);
        for (p, vi) in field.psi.iter_mut().zip(&v) {
            *p *= C64::from_polar(1.0, -0.5 * h * (vi + u * p.norm_sqr()));
        }
        field.t = t0 + (s + 1) as f64 * h;
        if (s + 1) % stride == 0 || s + 1 == steps {
            record(field, &mut rec)?;
        }
    }
    Ok(rec)
}

/// Largest admissible step for a grid.
pub fn gp_max_dt(grid: &Grid) -> f64 {
    GP_DT_RULE / grid.kinetic_max()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_imbalance_limits() {
        let grid = Grid::finite_difference(-2.0, 2.0, 63).unwrap();
        let sym: Vec<f64> = grid.points().iter().map(|x| (-4.0 * x * x).exp()).collect();
        let total: f64 = grid.integrate(sym.iter().copied());
        let v = split_imbalance(&grid, &sym, 0.0) / total;
        assert!(v.abs() < 1e-12, "{v}");
        let left: Vec<f64> = grid.points().iter().map(|&x| if x < -0.5 { 1.0 } else { 0.0 }).collect();
        let t = grid.integrate(left.iter().copied());
        assert!((split_imbalance(&grid, &left, 0.0) / t - 0.5).abs() < 1e-14);
    }
}
