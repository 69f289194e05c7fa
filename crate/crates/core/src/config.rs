//! TOML run configuration. Unknown keys are rejected.
//!
//! ```toml
//! [units]
//! length_um = 1.0
//! energy_hz = 116.26
//! time_ms = 1.37
//!
//! [potential]
//! lambda0 = 0.675
//! g = 1.5042
//! # either calibration targets (defaults shown) ...
//! delta_e0_target = 2.4083950
//! omega0_target = 0.15
//! # ... or an explicit family table
//! # lambda = [0.4, 0.5, ...]
//! # d = [...]
//! # barrier = [...]
//!
//! [drive]
//! omega = 1.0                       # units of ΔE0
//! amplitude_rule = "a*dE0/omega"    # or give lambda1 directly
//! a = 0.03
//! variant = "full"
//!
//! [scan]
//! omega_min = 0.18
//! omega_max = 1.25
//! points = 200
//! spacing = "inverse"               # uniform in 1/ω, or "linear"
//! u0n = 0.0
//! n_atoms = 100
//! t_avg = 100.0
//! model = "tm-improved"
//! initial = "ground-state-static"
//!
//! [lattice]
//! x_min = -2.4
//! x_max = 2.4
//! sites = 12
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_default, CalibrationTargets};
use crate::error::{Error, Result};
use crate::potential::{DriveVariant, PotentialSpec, WellFamily};
use crate::scan::{AmplitudeRule, LatticeConfig, Model, ScanSpec};
use crate::twomode::InitialState;
use crate::units::Units;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub lambda0: f64,
    pub g: f64,
    pub delta_e0_target: f64,
    pub omega0_target: f64,
    pub lambda: Option<Vec<f64>>,
    pub d: Option<Vec<f64>>,
    pub barrier: Option<Vec<f64>>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        let t = CalibrationTargets::default();
        Self { lambda0: t.lambda0, g: t.g, delta_e0_target: t.delta_e0, omega0_target: t.omega0, lambda: None, d: None, barrier: None }
    }
}

impl PotentialConfig {
    pub fn targets(&self) -> CalibrationTargets {
        CalibrationTargets { lambda0: self.lambda0, g: self.g, delta_e0: self.delta_e0_target, omega0: self.omega0_target }
    }

    /// Uses the explicit table when given, otherwise calibrates the default family.
    pub fn build(&self) -> Result<PotentialSpec> {
        match (&self.lambda, &self.d, &self.barrier) {
            (Some(l), Some(d), Some(b)) => PotentialSpec::new(self.lambda0, self.g, WellFamily::new(l.clone(), d.clone(), b.clone())?),
            (None, None, None) => calibrate_default(&self.targets()),
            _ => Err(Error::Config("potential table needs all of lambda, d and barrier".into())),
        }
    }
}

/// The only accepted value of `amplitude_rule`.
pub const AMPLITUDE_RULE: &str = "a*dE0/omega";
/// Coefficient used when the drive section gives no amplitude.
pub const DEFAULT_COEFFICIENT: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    /// Frequency in units of ΔE0.
    pub omega: f64,
    pub lambda1: Option<f64>,
    pub amplitude_rule: Option<String>,
    pub a: Option<f64>,
    pub variant: DriveVariant,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self { omega: 1.0, lambda1: None, amplitude_rule: None, a: None, variant: DriveVariant::Full }
    }
}

impl DriveConfig {
    pub fn rule(&self) -> Result<AmplitudeRule> {
        match (self.lambda1, self.amplitude_rule.as_deref(), self.a) {
            (Some(l), None, None) => Ok(AmplitudeRule::Fixed { lambda1: l }),
            (None, Some(AMPLITUDE_RULE), Some(a)) => Ok(AmplitudeRule::Coefficient { a }),
            (None, Some(r), _) if r != AMPLITUDE_RULE => {
                Err(Error::Config(format!("unknown amplitude_rule '{r}', expected '{AMPLITUDE_RULE}'")))
            }
            (None, Some(_), None) => Err(Error::Config("amplitude_rule needs coefficient a".into())),
            (None, None, Some(a)) => Ok(AmplitudeRule::Coefficient { a }),
            (None, None, None) => Ok(AmplitudeRule::Coefficient { a: DEFAULT_COEFFICIENT }),
            _ => Err(Error::Config("give either lambda1 or amplitude_rule/a, not both".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Linear,
    /// Uniform in 1/ω, which spaces the ω = ΔE0/n resonances evenly.
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub spacing: Spacing,
    /// Explicit grid; overrides omega_min/omega_max/points.
    pub omega_grid: Option<Vec<f64>>,
    pub u0n: f64,
    pub n_atoms: usize,
    pub t_avg: f64,
    pub model: Model,
    pub initial: InitialState,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            omega_min: 0.18,
            omega_max: 1.25,
            points: 200,
            spacing: Spacing::Inverse,
            omega_grid: None,
            u0n: 0.0,
            n_atoms: 100,
            t_avg: 100.0,
            model: Model::TmImproved,
            initial: InitialState::GroundStateStatic,
        }
    }
}

impl ScanConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(g) = &self.omega_grid {
            return Ok(g.clone());
        }
        if self.points == 0 || !(self.omega_min > 0.0) || !(self.omega_max >= self.omega_min) {
            return Err(Error::Config("need points > 0 and 0 < omega_min ≤ omega_max".into()));
        }
        Ok(frequency_grid(self.omega_min, self.omega_max, self.points, self.spacing))
    }
}

/// Ascending frequency grid with `points` entries between lo and hi.
pub fn frequency_grid(lo: f64, hi: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let f = |i: usize| i as f64 / (points - 1) as f64;
    match spacing {
        Spacing::Linear => (0..points).map(|i| lo + (hi - lo) * f(i)).collect(),
        Spacing::Inverse => {
            let (a, b) = (1.0 / hi, 1.0 / lo);
            (0..points).rev().map(|i| 1.0 / (a + (b - a) * f(i))).collect()
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.units.is_consistent() {
            return Err(Error::Config(format!(
                "units violate hbar = 1: time·energy product {:.5}",
                self.units.hbar_product()
            )));
        }
        self.drive.rule()?;
        if !(self.drive.omega > 0.0) {
            return Err(Error::Config("drive omega must be positive".into()));
        }
        self.scan_spec()?.validate()
    }

    pub fn scan_spec(&self) -> Result<ScanSpec> {
        let s = &self.scan;
        let mut spec = ScanSpec::new(s.grid()?, self.drive.rule()?, s.u0n, s.n_atoms, s.t_avg, s.model);
        spec.variant = self.drive.variant;
        spec.initial = s.initial;
        spec.lattice = self.lattice;
        Ok(spec)
    }
}
