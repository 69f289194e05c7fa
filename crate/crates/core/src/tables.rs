//! Precomputed Ω(λ), ΔE(λ) interpolants for driven simulations.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::interp::CubicSpline;
use crate::potential::PotentialSpec;
use crate::spectral::{
    gp_stationary_states, improved_tm_parameters, lowest_two_states, quartic_integral, tm_parameters, TmModel, TmParams,
};

/// Default knot spacing in λ.
pub const KNOT_SPACING: f64 = 0.01;

/// Two-mode parameters at one λ for the chosen model.
pub fn static_params(
    grid: &Grid,
    spec: &PotentialSpec,
    lambda: f64,
    model: TmModel,
    u0n: f64,
    n_atoms: usize,
) -> Result<TmParams> {
    Ok(static_params_with_overlap(grid, spec, lambda, model, u0n, n_atoms)?.0)
}

/// Parameters plus ∫φ_L⁴ of the modes used.
fn static_params_with_overlap(
    grid: &Grid,
    spec: &PotentialSpec,
    lambda: f64,
    model: TmModel,
    u0n: f64,
    n_atoms: usize,
) -> Result<(TmParams, f64)> {
    let u0 = if n_atoms > 0 { u0n / n_atoms as f64 } else { 0.0 };
    match model {
        TmModel::Standard => {
            let m = lowest_two_states(grid, spec, lambda)?;
            Ok((tm_parameters(grid, &m, spec, lambda, spec.g, u0)?, quartic_integral(grid, &m.phi_l)))
        }
        TmModel::Improved => {
            let m = gp_stationary_states(grid, spec, lambda, u0n)?;
            Ok((improved_tm_parameters(grid, &m, spec, lambda, spec.g, u0n, n_atoms)?, quartic_integral(grid, &m.phi_l)))
        }
    }
}

/// Cubic-spline tables of ln Ω(λ) and ΔE(λ) over a λ-range, plus the constant κ at λ0.
#[derive(Debug, Clone)]
pub struct ParamTable {
    pub model: TmModel,
    pub u0n: f64,
    pub n_atoms: usize,
    pub lambda0: f64,
    /// Parameters at λ0 (κ is held at this value during drives).
    pub at_lambda0: TmParams,
    /// ∫φ_L⁴ at λ0.
    pub overlap_l4: f64,
    range: (f64, f64),
    ln_omega: CubicSpline,
    delta_e: CubicSpline,
}

impl ParamTable {
    /// Tabulates on knots λ0 + k·spacing covering `range` (clipped to the potential domain).
    pub fn build(
        spec: &PotentialSpec,
        grid: &Grid,
        model: TmModel,
        u0n: f64,
        n_atoms: usize,
        range: (f64, f64),
        spacing: f64,
    ) -> Result<Self> {
        let (dlo, dhi) = spec.lambda_domain();
        let lo = range.0.max(dlo);
        let hi = range.1.min(dhi);
        spec.check_lambda(lo)?;
        spec.check_lambda(hi)?;
        let l0 = spec.lambda0;
        let kmin = ((lo - l0) / spacing).floor() as i64;
        let kmax = ((hi - l0) / spacing).ceil() as i64;
        let mut knots: Vec<f64> = (kmin..=kmax).map(|k| (l0 + k as f64 * spacing).clamp(dlo, dhi)).collect();
        // need at least four points for a useful spline
        while knots.len() < 4 {
            let a = knots[0];
            let b = *knots.last().unwrap();
            if a - spacing >= dlo {
                knots.insert(0, a - spacing);
            } else if b + spacing <= dhi {
                knots.push(b + spacing);
            } else {
                break;
            }
        }
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if knots.len() < 2 {
            return Err(Error::Config("lambda range too narrow for tabulation".into()));
        }
        let params: Vec<TmParams> = knots
            .par_iter()
            .map(|&l| static_params(grid, spec, l, model, u0n, n_atoms))
            .collect::<Result<_>>()?;
        if let Some(p) = params.iter().find(|p| !(p.omega > 0.0)) {
            return Err(Error::Convergence(format!("non-positive tunnel coupling {} in table", p.omega)));
        }
        let (at_lambda0, overlap_l4) = static_params_with_overlap(grid, spec, l0, model, u0n, n_atoms)?;
        let ln_omega = CubicSpline::new(knots.clone(), params.iter().map(|p| p.omega.ln()).collect())?;
        let delta_e = CubicSpline::new(knots.clone(), params.iter().map(|p| p.delta_e).collect())?;
        Ok(Self {
            model,
            u0n,
            n_atoms,
            lambda0: l0,
            at_lambda0,
            overlap_l4,
            range: (knots[0], *knots.last().unwrap()),
            ln_omega,
            delta_e,
        })
    }

    /// Table covering the whole potential domain.
    pub fn full(spec: &PotentialSpec, grid: &Grid, model: TmModel, u0n: f64, n_atoms: usize) -> Result<Self> {
        Self::build(spec, grid, model, u0n, n_atoms, spec.lambda_domain(), KNOT_SPACING)
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        lo >= self.range.0 - 1e-12 && hi <= self.range.1 + 1e-12
    }

    pub fn check(&self, lambda: f64) -> Result<()> {
        if self.covers(lambda, lambda) {
            Ok(())
        } else {
            Err(Error::Domain { lambda, lo: self.range.0, hi: self.range.1 })
        }
    }

    /// κ = U0/2·∫φ_L⁴ with U0 = U0N/N.
    pub fn kappa(&self, n_atoms: usize) -> f64 {
        if n_atoms == 0 {
            return 0.0;
        }
        0.5 * self.u0n / n_atoms as f64 * self.overlap_l4
    }

    /// (Ω, ΔE) at λ without a range check.
    pub fn eval(&self, lambda: f64) -> (f64, f64) {
        (self.ln_omega.eval(lambda).exp(), self.delta_e.eval(lambda))
    }

    pub fn omega(&self, lambda: f64) -> Result<f64> {
        self.check(lambda)?;
        Ok(self.eval(lambda).0)
    }

    pub fn delta_e(&self, lambda: f64) -> Result<f64> {
        self.check(lambda)?;
        Ok(self.eval(lambda).1)
    }
}
