//! Frequency and amplitude scans of the time-averaged imbalance, and resonance extraction.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::{build_lattice, propagate_exact};
use crate::gp::{gp_ground_state_tilted, gp_max_dt, propagate_gp};
use crate::grid::Grid;
use crate::potential::{DriveSpec, DriveVariant, PotentialSpec};
use crate::spectral::TmModel;
use crate::tables::{static_params, ParamTable, KNOT_SPACING};
use crate::twomode::{
    prepare_initial_state, propagate, step_plan, time_averaged_imbalance, DrivenTmSystem, InitialState, TrajectoryRecord,
};

/// Target spacing of recorded samples used for time averages.
pub const OUTPUT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    TmStandard,
    TmImproved,
    Gp,
    ExactSmall,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::TmStandard => "tm-standard",
            Model::TmImproved => "tm-improved",
            Model::Gp => "gp",
            Model::ExactSmall => "exact-small",
        }
    }

    pub fn tm_model(&self) -> Option<TmModel> {
        match self {
            Model::TmStandard => Some(TmModel::Standard),
            Model::TmImproved => Some(TmModel::Improved),
            _ => None,
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tm-standard" => Ok(Model::TmStandard),
            "tm-improved" => Ok(Model::TmImproved),
            "gp" => Ok(Model::Gp),
            "exact-small" => Ok(Model::ExactSmall),
            _ => Err(Error::Config(format!("unknown model '{s}'"))),
        }
    }
}

/// Drive amplitude as a function of frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AmplitudeRule {
    Fixed { lambda1: f64 },
    /// λ1 = a·ΔE0/ω.
    Coefficient { a: f64 },
}

impl AmplitudeRule {
    pub fn lambda1(&self, omega: f64, delta_e0: f64) -> f64 {
        match *self {
            AmplitudeRule::Fixed { lambda1 } => lambda1,
            AmplitudeRule::Coefficient { a } => a * delta_e0 / omega,
        }
    }
}

/// Coarse finite-difference lattice used by the exact model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub sites: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { x_min: -2.4, x_max: 2.4, sites: 12 }
    }
}

impl LatticeConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::finite_difference(self.x_min, self.x_max, self.sites)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    /// Drive frequencies in units of ΔE0.
    pub omega_grid: Vec<f64>,
    pub amplitude_rule: AmplitudeRule,
    pub u0n: f64,
    pub n_atoms: usize,
    /// Averaging window.
    pub t_avg: f64,
    pub model: Model,
    pub variant: DriveVariant,
    pub initial: InitialState,
    pub lattice: LatticeConfig,
}

impl ScanSpec {
    pub fn new(omega_grid: Vec<f64>, amplitude_rule: AmplitudeRule, u0n: f64, n_atoms: usize, t_avg: f64, model: Model) -> Self {
        Self {
            omega_grid,
            amplitude_rule,
            u0n,
            n_atoms,
            t_avg,
            model,
            variant: DriveVariant::Full,
            initial: InitialState::GroundStateStatic,
            lattice: LatticeConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_grid.is_empty() {
            return Err(Error::Config("empty frequency grid".into()));
        }
        if self.omega_grid.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("frequencies must be positive".into()));
        }
        if !(self.t_avg > 0.0) {
            return Err(Error::Config("averaging window must be positive".into()));
        }
        if self.n_atoms == 0 {
            return Err(Error::Config("need at least one atom".into()));
        }
        if !(self.u0n >= 0.0) {
            return Err(Error::Config("U0N must be non-negative".into()));
        }
        // Ω and ΔE cannot be frozen separately in the full-space models
        if matches!(self.model, Model::ExactSmall | Model::Gp) && self.variant != DriveVariant::Full {
            return Err(Error::Config(format!("{} supports only the full drive variant", self.model.name())));
        }
        Ok(())
    }
}

/// Calibrated potential plus the grids and reference energy shared by every scan point.
#[derive(Debug, Clone)]
pub struct ScanContext {
    pub spec: PotentialSpec,
    /// Static bias of the non-interacting two-mode model at λ0; the frequency unit of scans.
    pub delta_e0: f64,
    pub stationary_grid: Grid,
    pub dynamics_grid: Grid,
}

impl ScanContext {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        let stationary_grid = Grid::production();
        let p = static_params(&stationary_grid, &spec, spec.lambda0, TmModel::Standard, 0.0, 1)?;
        Ok(Self { spec, delta_e0: p.delta_e, stationary_grid, dynamics_grid: Grid::dynamics() })
    }

    /// SHA-256 over λ0, g and the well-family tables.
    pub fn calibration_hash(&self) -> String {
        calibration_hash(&self.spec)
    }
}

pub fn calibration_hash(spec: &PotentialSpec) -> String {
    let mut h = Sha256::new();
    let f = spec.family();
    for v in [spec.lambda0, spec.g].iter().chain(f.lambda_knots()).chain(f.d_knots()).chain(f.barrier_knots()) {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub omega_over_de0: f64,
    pub lambda1: f64,
    /// None when the point failed; the reason is in `missing`.
    pub jz_timeavg_over_n: Option<f64>,
    pub model: Model,
    pub variant: DriveVariant,
    pub missing: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceScan {
    pub spec: ScanSpec,
    pub calibration_hash: String,
    pub delta_e0: f64,
    pub records: Vec<ScanRecord>,
}

impl ResonanceScan {
    /// (ω/ΔE0, ⟨J_z⟩_T/N) for the points that succeeded.
    pub fn curve(&self) -> (Vec<f64>, Vec<f64>) {
        self.records.iter().filter_map(|r| r.jz_timeavg_over_n.map(|y| (r.omega_over_de0, y))).unzip()
    }
}

/// Builds the parameter table a two-mode scan needs, covering the largest in-domain amplitude.
fn scan_table(spec: &ScanSpec, ctx: &ScanContext, model: TmModel) -> Result<ParamTable> {
    let (lo, hi) = ctx.spec.lambda_domain();
    let l0 = ctx.spec.lambda0;
    let reach = spec
        .omega_grid
        .iter()
        .map(|w| spec.amplitude_rule.lambda1(w * ctx.delta_e0, ctx.delta_e0))
        .fold(0.0, f64::max)
        .min(l0 - lo)
        .min(hi - l0);
    let range = (l0 - reach - KNOT_SPACING, l0 + reach + KNOT_SPACING);
    ParamTable::build(&ctx.spec, &ctx.stationary_grid, model, spec.u0n, spec.n_atoms, range, KNOT_SPACING)
}

/// Per-scan shared state: the parameter table for two-mode models.
enum Prepared {
    Tm(Arc<ParamTable>),
    Other,
}

/// Atom number used in the two-mode propagation. Without interactions every state used
/// here is a product state, so ⟨J_z⟩/N is independent of N and one atom suffices.
fn effective_atoms(spec: &ScanSpec) -> usize {
    if spec.u0n == 0.0 {
        1
    } else {
        spec.n_atoms
    }
}

/// Trajectory of one drive for the configured model.
pub fn run_trajectory(spec: &ScanSpec, ctx: &ScanContext, drive: &DriveSpec, t_final: f64) -> Result<TrajectoryRecord> {
    let prepared = prepare(spec, ctx)?;
    trajectory_with(spec, ctx, &prepared, drive, t_final, spec.n_atoms)
}

fn prepare(spec: &ScanSpec, ctx: &ScanContext) -> Result<Prepared> {
    Ok(match spec.model.tm_model() {
        Some(m) => Prepared::Tm(Arc::new(scan_table(spec, ctx, m)?)),
        None => Prepared::Other,
    })
}

fn stride_for(t_final: f64, dt: f64) -> usize {
    let (_, h) = step_plan(t_final, dt);
    ((OUTPUT_DT / h).floor() as usize).max(1)
}

fn trajectory_with(
    spec: &ScanSpec,
    ctx: &ScanContext,
    prepared: &Prepared,
    drive: &DriveSpec,
    t_final: f64,
    n_atoms: usize,
) -> Result<TrajectoryRecord> {
    drive.validate(&ctx.spec)?;
    match prepared {
        Prepared::Tm(table) => {
            let sys = DrivenTmSystem::from_table(table.clone(), *drive, n_atoms)?;
            let psi0 = prepare_initial_state(&sys, spec.initial);
            let dt = sys.max_dt();
            propagate(&sys, &psi0, t_final, dt, stride_for(t_final, dt))
        }
        Prepared::Other if spec.model == Model::Gp => {
            let grid = ctx.dynamics_grid;
            let mut field = gp_ground_state_tilted(&grid, &ctx.spec, ctx.spec.lambda0, ctx.spec.g, spec.u0n)?;
            let dt = gp_max_dt(&grid);
            if drive.variant != DriveVariant::Full && drive.lambda1 != 0.0 {
                return Err(Error::Config("the gp model supports only the full drive variant".into()));
            }
            propagate_gp(&mut field, drive, &ctx.spec, t_final, dt, stride_for(t_final, dt))
        }
        Prepared::Other => {
            let grid = spec.lattice.grid()?;
            let u0 = spec.u0n / spec.n_atoms as f64;
            let sys = build_lattice(&grid, &ctx.spec, drive, u0, spec.n_atoms)?;
            let psi0 = sys.initial_state(spec.initial)?;
            let dt = sys.max_dt()?;
            Ok(propagate_exact(&sys, &psi0, t_final, dt, stride_for(t_final, dt))?.0)
        }
    }
}

/// Runs every frequency point (in parallel, results in input order). A failing point is
/// recorded as missing; only failures of the shared setup abort the scan.
pub fn run_scan(spec: &ScanSpec, ctx: &ScanContext) -> Result<ResonanceScan> {
    spec.validate()?;
    let prepared = prepare(spec, ctx)?;
    let n_eff = match spec.model {
        Model::TmStandard | Model::TmImproved => effective_atoms(spec),
        _ => spec.n_atoms,
    };
    let de0 = ctx.delta_e0;
    let records = spec
        .omega_grid
        .par_iter()
        .map(|&w| {
            let omega = w * de0;
            let lambda1 = spec.amplitude_rule.lambda1(omega, de0);
            let drive = DriveSpec { lambda1, omega, variant: spec.variant };
            let res = trajectory_with(spec, ctx, &prepared, &drive, spec.t_avg, n_eff)
                .and_then(|rec| time_averaged_imbalance(&rec, spec.t_avg));
            let (value, missing) = match res {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            ScanRecord { omega_over_de0: w, lambda1, jz_timeavg_over_n: value, model: spec.model, variant: spec.variant, missing }
        })
        .collect();
    Ok(ResonanceScan { spec: spec.clone(), calibration_hash: ctx.calibration_hash(), delta_e0: de0, records })
}

/// One scan per amplitude coefficient, with the base rule replaced by λ1 = a·ΔE0/ω.
pub fn amplitude_sensitivity(base: &ScanSpec, a_values: &[f64], ctx: &ScanContext) -> Result<Vec<ResonanceScan>> {
    a_values
        .iter()
        .map(|&a| {
            let mut s = base.clone();
            s.amplitude_rule = AmplitudeRule::Coefficient { a };
            run_scan(&s, ctx)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub n: u32,
    /// Refined position in units of ΔE0.
    pub omega_min: f64,
    /// Topographic prominence of the minimum.
    pub depth: f64,
    pub fwhm: f64,
    pub value_min: f64,
}

/// Smallest depth reported as a resonance.
pub const MIN_DEPTH: f64 = 1e-3;
/// Minima shallower than this fraction of the deepest one are treated as ripple.
pub const REL_DEPTH: f64 = 0.1;

/// Resonances of a scan: see [`find_minima`].
pub fn find_resonances(scan: &ResonanceScan) -> Vec<Resonance> {
    let (x, y) = scan.curve();
    find_minima(&x, &y, MIN_DEPTH, REL_DEPTH)
}

/// Local minima with parabolic refinement through the lowest point and its neighbours.
/// Depth is the prominence: the lower of the highest values met walking left and right
/// before the curve drops below the minimum, minus the refined minimum. Width is the
/// full width at half depth, linearly interpolated. Minima passing both depth thresholds are
/// labelled n = 1, 2, … from the highest frequency down.
pub fn find_minima(x: &[f64], y: &[f64], min_depth: f64, rel_depth: f64) -> Vec<Resonance> {
    let n = x.len();
    let mut out: Vec<Resonance> = Vec::new();
    if n < 3 {
        return out;
    }
    for i in 1..n - 1 {
        if !(y[i] < y[i - 1] && y[i] <= y[i + 1]) {
            continue;
        }
        let mut left_max = y[i];
        for j in (0..i).rev() {
            if y[j] < y[i] {
                break;
            }
            left_max = left_max.max(y[j]);
        }
        let mut right_max = y[i];
        for &v in &y[i + 1..] {
            if v < y[i] {
                break;
            }
            right_max = right_max.max(v);
        }
        let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        let c = y1 - a * x1 * x1 - b * x1;
        let (xm, ym) = if a > 0.0 {
            let v = (-b / (2.0 * a)).clamp(x0, x2);
            (v, a * v * v + b * v + c)
        } else {
            (x1, y1)
        };
        let depth = left_max.min(right_max) - ym;
        if !(depth >= min_depth) {
            continue;
        }
        let half = ym + 0.5 * depth;
        let interp = |j0: usize, j1: usize| x[j0] + (half - y[j0]) / (y[j1] - y[j0]) * (x[j1] - x[j0]);
        let mut j = i;
        while j > 0 && y[j - 1] < half {
            j -= 1;
        }
        let left = if j > 0 { interp(j, j - 1) } else { x[0] };
        let mut k = i;
        while k + 1 < n && y[k + 1] < half {
            k += 1;
        }
        let right = if k + 1 < n { interp(k, k + 1) } else { x[n - 1] };
        out.push(Resonance { n: 0, omega_min: xm, depth, fwhm: right - left, value_min: ym });
    }
    let deepest = out.iter().map(|r| r.depth).fold(0.0, f64::max);
    out.retain(|r| r.depth >= rel_depth * deepest);
    out.sort_by(|a, b| b.omega_min.total_cmp(&a.omega_min));
    for (k, r) in out.iter_mut().enumerate() {
        r.n = k as u32 + 1;
    }
    out
}
