//! Stationary single-particle and GP problems, and the two-mode parameters derived from them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialSpec;

/// Gap to the third level must exceed this multiple of E_e − E_g.
pub const TWO_MODE_GAP_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    SingleParticle,
    GpSelfConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TmModel {
    Standard,
    Improved,
}

#[derive(Debug, Clone)]
pub struct ModePair {
    pub phi_g: Vec<f64>,
    pub phi_e: Vec<f64>,
    /// Eigenvalues (single particle) or chemical potentials (GP).
    pub e_g: f64,
    pub e_e: f64,
    pub phi_l: Vec<f64>,
    pub phi_r: Vec<f64>,
    pub provenance: Provenance,
    /// (E_3 − E_e)/(E_e − E_g) of the linear problem.
    pub gap_ratio: f64,
    pub warn_two_mode: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TmParams {
    pub omega: f64,
    /// E_R − E_L: positive when the left well is lower.
    pub delta_e: f64,
    pub kappa: f64,
    pub model: TmModel,
}

/// Sorted eigen-decomposition of the single-particle Hamiltonian on a grid.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub grid: Grid,
    pub potential: Vec<f64>,
    pub hamiltonian: DMatrix<f64>,
    pub energies: Vec<f64>,
    /// Columns are eigenvectors normalized as grid functions (h·Σφ² = 1).
    pub modes: DMatrix<f64>,
}

impl LinearProblem {
    pub fn new(grid: &Grid, potential: Vec<f64>) -> Result<Self> {
        let n = grid.len();
        if potential.len() != n {
            return Err(Error::Precondition("potential length does not match grid".into()));
        }
        let mut h = grid.kinetic_matrix();
        for i in 0..n {
            h[(i, i)] += potential[i];
        }
        let eig = SymmetricEigen::try_new(h.clone(), 1e-14, 10_000)
            .ok_or_else(|| Error::Convergence("symmetric eigensolver".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = 1.0 / grid.h().sqrt();
        let energies = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let modes = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])] * scale);
        Ok(Self { grid: *grid, potential, hamiltonian: h, energies, modes })
    }

    pub fn mode(&self, k: usize) -> Vec<f64> {
        self.modes.column(k).iter().copied().collect()
    }

    /// Coefficients of a grid function in the eigenbasis.
    pub fn to_basis(&self, f: &[f64]) -> DVector<f64> {
        self.modes.tr_mul(&DVector::from_column_slice(f)) * self.grid.h()
    }

    pub fn from_basis(&self, c: &DVector<f64>) -> Vec<f64> {
        (&self.modes * c).iter().copied().collect()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (&self.hamiltonian * DVector::from_column_slice(f)).iter().copied().collect()
    }
}

pub fn inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.integrate(a.iter().zip(b).map(|(x, y)| x * y))
}

pub fn norm(grid: &Grid, a: &[f64]) -> f64 {
    inner(grid, a, a).sqrt()
}

pub fn quartic_integral(grid: &Grid, a: &[f64]) -> f64 {
    grid.integrate(a.iter().map(|v| v.powi(4)))
}

/// Left-biased sign convention: φ_g has positive sum, φ_e positive weight on x < 0,
/// so that φ_L = (φ_g + φ_e)/√2 sits in the left well.
fn fix_signs(grid: &Grid, phi_g: &mut [f64], phi_e: &mut [f64]) {
    if phi_g.iter().sum::<f64>() < 0.0 {
        phi_g.iter_mut().for_each(|v| *v = -*v);
    }
    let left: f64 = grid.points().iter().zip(phi_e.iter()).filter(|(x, _)| **x < 0.0).map(|(_, v)| v).sum();
    if left < 0.0 {
        phi_e.iter_mut().for_each(|v| *v = -*v);
    }
}

pub(crate) fn localized(phi_g: &[f64], phi_e: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let l = phi_g.iter().zip(phi_e).map(|(g, e)| s * (g + e)).collect();
    let r = phi_g.iter().zip(phi_e).map(|(g, e)| s * (g - e)).collect();
    (l, r)
}

fn gap_ratio(energies: &[f64]) -> f64 {
    if energies.len() < 3 {
        return f64::INFINITY;
    }
    (energies[2] - energies[1]) / (energies[1] - energies[0])
}

/// Two lowest eigenpairs of −½∂² + V on the grid.
pub fn lowest_two_states_for_potential(grid: &Grid, potential: Vec<f64>) -> Result<ModePair> {
    let lp = LinearProblem::new(grid, potential)?;
    modes_from_linear(&lp)
}

fn modes_from_linear(lp: &LinearProblem) -> Result<ModePair> {
    let grid = &lp.grid;
    let mut phi_g = lp.mode(0);
    let mut phi_e = lp.mode(1);
    fix_signs(grid, &mut phi_g, &mut phi_e);
    let (phi_l, phi_r) = localized(&phi_g, &phi_e);
    let ratio = gap_ratio(&lp.energies);
    Ok(ModePair {
        phi_g,
        phi_e,
        e_g: lp.energies[0],
        e_e: lp.energies[1],
        phi_l,
        phi_r,
        provenance: Provenance::SingleParticle,
        gap_ratio: ratio,
        warn_two_mode: ratio < TWO_MODE_GAP_RATIO,
    })
}

/// Two lowest states of the symmetric (g = 0) potential at λ.
pub fn lowest_two_states(grid: &Grid, spec: &PotentialSpec, lambda: f64) -> Result<ModePair> {
    let v = spec.sample(lambda, 0.0, &grid.points())?;
    lowest_two_states_for_potential(grid, v)
}

fn check_modes(grid: &Grid, modes: &ModePair) -> Result<()> {
    for (name, f) in [("phi_g", &modes.phi_g), ("phi_e", &modes.phi_e)] {
        if f.len() != grid.len() {
            return Err(Error::Precondition(format!("{name} does not match grid")));
        }
        let n = norm(grid, f);
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("{name} not normalized (norm {n})")));
        }
    }
    Ok(())
}

fn tilted_h(grid: &Grid, spec: &PotentialSpec, lambda: f64, g: f64) -> Result<LinearOp> {
    let v = spec.sample(lambda, g, &grid.points())?;
    Ok(LinearOp { t: grid.kinetic_matrix(), v })
}

struct LinearOp {
    t: DMatrix<f64>,
    v: Vec<f64>,
}

impl LinearOp {
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let tf = &self.t * DVector::from_column_slice(f);
        tf.iter().zip(f.iter().zip(&self.v)).map(|(a, (b, c))| a + b * c).collect()
    }
}

/// (Ω, ΔE) from localized modes under the tilted single-particle Hamiltonian.
fn omega_delta_e(grid: &Grid, h: &LinearOp, phi_l: &[f64], phi_r: &[f64]) -> (f64, f64) {
    let hl = h.apply(phi_l);
    let hr = h.apply(phi_r);
    let omega = -(inner(grid, phi_l, &hr) + inner(grid, phi_r, &hl));
    let delta_e = inner(grid, phi_r, &hr) - inner(grid, phi_l, &hl);
    (omega, delta_e)
}

/// Standard two-mode parameters: Ω = −⟨L|h|R⟩ + c.c., ΔE = ⟨R|h|R⟩ − ⟨L|h|L⟩, κ = U0/2·∫φ_L⁴.
pub fn tm_parameters(grid: &Grid, modes: &ModePair, spec: &PotentialSpec, lambda: f64, g: f64, u0: f64) -> Result<TmParams> {
    check_modes(grid, modes)?;
    let h = tilted_h(grid, spec, lambda, g)?;
    let (omega, delta_e) = omega_delta_e(grid, &h, &modes.phi_l, &modes.phi_r);
    Ok(TmParams { omega, delta_e, kappa: 0.5 * u0 * quartic_integral(grid, &modes.phi_l), model: TmModel::Standard })
}

/// Imaginary-time settings for stationary GP states.
#[derive(Debug, Clone, Copy)]
pub struct GpSolverOptions {
    /// Step of the preconditioned flow (1 = full preconditioned step).
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GpSolverOptions {
    fn default() -> Self {
        Self { step: 1.0, tol: 1e-9, max_iter: 20_000 }
    }
}

/// Result of a constrained imaginary-time solve.
#[derive(Debug, Clone)]
pub struct GpState {
    pub phi: Vec<f64>,
    pub mu: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// ‖(h + U|φ|² − μ)φ‖ evaluated in real space, with μ the Rayleigh quotient.
pub fn gp_residual(lp: &LinearProblem, u: f64, phi: &[f64]) -> (f64, f64) {
    let grid = &lp.grid;
    let hphi = lp.apply(phi);
    let full: Vec<f64> = hphi.iter().zip(phi).map(|(a, p)| a + u * p * p * p).collect();
    let mu = inner(grid, phi, &full) / inner(grid, phi, phi);
    let r: Vec<f64> = full.iter().zip(phi).map(|(f, p)| f - mu * p).collect();
    (mu, norm(grid, &r))
}

/// Normalized gradient flow in imaginary time, preconditioned by the shifted linear
/// Hamiltonian and carried out in its eigenbasis. The update is proportional to the
/// GP residual, so converged states are exact stationary states.
fn imaginary_time(
    lp: &LinearProblem,
    u: f64,
    target: usize,
    project_out: Option<&[f64]>,
    odd: bool,
    opts: GpSolverOptions,
) -> Result<GpState> {
    let grid = &lp.grid;
    let n = grid.len();
    let e = &lp.energies;
    let e_ref = e[target];
    let keep: Vec<bool> = (0..n)
        .map(|k| {
            if !odd {
                return true;
            }
            let m = lp.mode(k);
            let overlap: f64 = (0..n).map(|i| m[i] * m[(n - i) % n]).sum();
            overlap < 0.0
        })
        .collect();
    let p_coef = project_out.map(|p| lp.to_basis(p));
    let clean = |c: &mut DVector<f64>| {
        for k in 0..n {
            if !keep[k] {
                c[k] = 0.0;
            }
        }
        if let Some(p) = &p_coef {
            let d = p.dot(c) / p.dot(p);
            c.axpy(-d, p, 1.0);
        }
        let s = c.norm();
        *c /= s;
    };
    let mut c = DVector::zeros(n);
    c[target] = 1.0;
    clean(&mut c);
    let mut last = f64::INFINITY;
    for it in 0..opts.max_iter {
        let phi = lp.from_basis(&c);
        let w: Vec<f64> = phi.iter().map(|p| u * p * p * p).collect();
        let s = grid.integrate(phi.iter().zip(&w).map(|(p, q)| p * q));
        let wc = lp.to_basis(&w);
        let mu: f64 = (0..n).map(|k| e[k] * c[k] * c[k]).sum::<f64>() + s;
        let sigma = 1.0 + 2.0 * s;
        let mut rnorm = 0.0;
        for k in 0..n {
            let r = e[k] * c[k] + wc[k] - mu * c[k];
            rnorm += r * r;
            c[k] -= opts.step * r / (e[k] - e_ref + sigma);
        }
        clean(&mut c);
        let rnorm = rnorm.sqrt();
        if !rnorm.is_finite() {
            break;
        }
        last = rnorm;
        if rnorm < opts.tol {
            let phi = lp.from_basis(&c);
            let (mu, residual) = gp_residual(lp, u, &phi);
            return Ok(GpState { phi, mu, residual, iterations: it + 1 });
        }
    }
    Err(Error::Convergence(format!("GP imaginary time: residual {last:.3e} after {} iterations", opts.max_iter)))
}

/// Ground state of h + U|φ|² by imaginary time, starting from the linear ground state.
pub fn gp_ground_state(lp: &LinearProblem, u0n: f64, opts: GpSolverOptions) -> Result<GpState> {
    if u0n < 0.0 {
        return Err(Error::Precondition("U0·N must be non-negative".into()));
    }
    if u0n == 0.0 {
        let phi = lp.mode(0);
        let (mu, residual) = gp_residual(lp, 0.0, &phi);
        return Ok(GpState { phi, mu, residual, iterations: 0 });
    }
    imaginary_time(lp, u0n, 0, None, false, opts)
}

/// First excited GP state, orthogonal to `ground`; with `odd` the iteration is also parity-projected.
pub fn gp_excited_state(lp: &LinearProblem, u0n: f64, ground: &[f64], odd: bool, opts: GpSolverOptions) -> Result<GpState> {
    if u0n == 0.0 {
        let phi = lp.mode(1);
        let (mu, residual) = gp_residual(lp, 0.0, &phi);
        return Ok(GpState { phi, mu, residual, iterations: 0 });
    }
    imaginary_time(lp, u0n, 1, Some(ground), odd, opts)
}

/// Self-consistent GP ground and first excited states of the symmetric potential at λ.
pub fn gp_stationary_states(grid: &Grid, spec: &PotentialSpec, lambda: f64, u0n: f64) -> Result<ModePair> {
    let v = spec.sample(lambda, 0.0, &grid.points())?;
    let lp = LinearProblem::new(grid, v)?;
    gp_modes_from_linear(&lp, u0n, false, GpSolverOptions::default())
}

pub fn gp_modes_from_linear(lp: &LinearProblem, u0n: f64, use_parity: bool, opts: GpSolverOptions) -> Result<ModePair> {
    let grid = &lp.grid;
    let g = gp_ground_state(lp, u0n, opts)?;
    let e = gp_excited_state(lp, u0n, &g.phi, use_parity, opts)?;
    let (mut phi_g, mut phi_e) = (g.phi, e.phi);
    fix_signs(grid, &mut phi_g, &mut phi_e);
    let (phi_l, phi_r) = localized(&phi_g, &phi_e);
    let ratio = gap_ratio(&lp.energies);
    Ok(ModePair {
        phi_g,
        phi_e,
        e_g: g.mu,
        e_e: e.mu,
        phi_l,
        phi_r,
        provenance: Provenance::GpSelfConsistent,
        gap_ratio: ratio,
        warn_two_mode: ratio < TWO_MODE_GAP_RATIO,
    })
}

/// Improved two-mode parameters from GP self-consistent modes.
pub fn improved_tm_parameters(
    grid: &Grid,
    gp_modes: &ModePair,
    spec: &PotentialSpec,
    lambda: f64,
    g: f64,
    u0n: f64,
    n_atoms: usize,
) -> Result<TmParams> {
    if gp_modes.provenance != Provenance::GpSelfConsistent {
        return Err(Error::Precondition("improved parameters need GP self-consistent modes".into()));
    }
    check_modes(grid, gp_modes)?;
    let h = tilted_h(grid, spec, lambda, g)?;
    let (_, delta_e) = omega_delta_e(grid, &h, &gp_modes.phi_l, &gp_modes.phi_r);
    let i4_g = quartic_integral(grid, &gp_modes.phi_g);
    let i4_e = quartic_integral(grid, &gp_modes.phi_e);
    let omega = gp_modes.e_e - gp_modes.e_g - 0.5 * u0n * (i4_e - i4_g);
    let u0 = if n_atoms > 0 { u0n / n_atoms as f64 } else { 0.0 };
    Ok(TmParams { omega, delta_e, kappa: 0.5 * u0 * quartic_integral(grid, &gp_modes.phi_l), model: TmModel::Improved })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub lambda: f64,
    pub omega: f64,
    pub delta_e: f64,
    pub kappa: f64,
    pub warn_two_mode: bool,
}

/// Two-mode parameters tabulated over λ (computed concurrently, returned in input order).
pub fn parameter_curves(
    grid: &Grid,
    spec: &PotentialSpec,
    g: f64,
    lambdas: &[f64],
    model: TmModel,
    u0n: f64,
    n_atoms: usize,
) -> Result<Vec<CurveRow>> {
    let u0 = if n_atoms > 0 { u0n / n_atoms as f64 } else { 0.0 };
    lambdas
        .par_iter()
        .map(|&lambda| {
            let (p, warn) = match model {
                TmModel::Standard => {
                    let m = lowest_two_states(grid, spec, lambda)?;
                    (tm_parameters(grid, &m, spec, lambda, g, u0)?, m.warn_two_mode)
                }
                TmModel::Improved => {
                    let m = gp_stationary_states(grid, spec, lambda, u0n)?;
                    (improved_tm_parameters(grid, &m, spec, lambda, g, u0n, n_atoms)?, m.warn_two_mode)
                }
            };
            Ok(CurveRow { lambda, omega: p.omega, delta_e: p.delta_e, kappa: p.kappa, warn_two_mode: warn })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_levels() {
        let grid = Grid::spectral(-10.0, 10.0, 256).unwrap();
        let v = grid.points().iter().map(|x| 0.5 * x * x).collect();
        let m = lowest_two_states_for_potential(&grid, v).unwrap();
        assert!((m.e_g - 0.5).abs() < 1e-6, "{}", m.e_g);
        assert!((m.e_e - 1.5).abs() < 1e-6, "{}", m.e_e);
        assert!((norm(&grid, &m.phi_g) - 1.0).abs() < 1e-10);
        assert!(inner(&grid, &m.phi_g, &m.phi_e).abs() < 1e-8);
        // harmonic spacing is uniform, so the two-mode check must flag it
        assert!(m.warn_two_mode);
    }

    #[test]
    fn gp_linear_limit_and_residual() {
        let grid = Grid::spectral(-4.0, 4.0, 128).unwrap();
        let v: Vec<f64> = grid.points().iter().map(|x| 12.0 / 0.8f64.powi(4) * (x * x - 0.64).powi(2)).collect();
        let lp = LinearProblem::new(&grid, v).unwrap();
        let m = gp_modes_from_linear(&lp, 1.0, false, GpSolverOptions::default()).unwrap();
        let (_, rg) = gp_residual(&lp, 1.0, &m.phi_g);
        let (_, re) = gp_residual(&lp, 1.0, &m.phi_e);
        assert!(rg < 1e-8 && re < 1e-8, "{rg} {re}");
        assert!(m.e_g > lp.energies[0]);
        assert!(inner(&grid, &m.phi_g, &m.phi_e).abs() < 1e-8);
    }
}
