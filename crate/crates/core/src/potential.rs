//! Double-well potential family and drive schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;

/// Tabulated d(λ) (separation of minima) and barrier(λ) (barrier height above the minima).
#[derive(Debug, Clone, PartialEq)]
pub struct WellFamily {
    d: MonotoneCubic,
    barrier: MonotoneCubic,
}

impl WellFamily {
    pub fn new(lambda: Vec<f64>, d: Vec<f64>, barrier: Vec<f64>) -> Result<Self> {
        if d.iter().chain(&barrier).any(|&v| v <= 0.0) {
            return Err(Error::Config("d and barrier must be positive".into()));
        }
        if d.windows(2).any(|w| w[1] <= w[0]) || barrier.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("d and barrier must be strictly increasing in lambda".into()));
        }
        Ok(Self {
            d: MonotoneCubic::new(lambda.clone(), d)?,
            barrier: MonotoneCubic::new(lambda, barrier)?,
        })
    }

    pub fn lambda_knots(&self) -> &[f64] {
        self.d.knots()
    }

    pub fn d_knots(&self) -> &[f64] {
        self.d.values()
    }

    pub fn barrier_knots(&self) -> &[f64] {
        self.barrier.values()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub lambda0: f64,
    pub g: f64,
    family: WellFamily,
    domain: (f64, f64),
}

/// Coefficients of the symmetric quartic at one λ: V(x) = c2·(x² − a²)² with a = d/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartic {
    pub a: f64,
    pub c2: f64,
}

impl Quartic {
    pub fn eval(&self, x: f64) -> f64 {
        let u = x * x - self.a * self.a;
        self.c2 * u * u
    }

    pub fn deriv(&self, x: f64) -> f64 {
        4.0 * self.c2 * x * (x * x - self.a * self.a)
    }

    /// Stationary points of V + g·x: (left minimum, barrier maximum, right minimum).
    pub fn tilted_extrema(&self, g: f64) -> Result<(f64, f64, f64)> {
        // 4 c2 x³ − 4 c2 a² x + g = 0, depressed cubic x³ + p x + q = 0
        let p = -self.a * self.a;
        let q = g / (4.0 * self.c2);
        let disc = -(4.0 * p * p * p + 27.0 * q * q);
        if disc <= 0.0 {
            return Err(Error::Geometry(format!("tilt g = {g} merges the wells (no barrier maximum)")));
        }
        let r = 2.0 * (-p / 3.0).sqrt();
        let phi = ((3.0 * q / (p * r)).clamp(-1.0, 1.0)).acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, root) in roots.iter_mut().enumerate() {
            *root = r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        Ok((roots[0], roots[1], roots[2]))
    }
}

impl PotentialSpec {
    pub fn new(lambda0: f64, g: f64, family: WellFamily) -> Result<Self> {
        let k = family.lambda_knots();
        let domain = (k[0], k[k.len() - 1]);
        if !(lambda0 >= domain.0 && lambda0 <= domain.1) {
            return Err(Error::Config(format!("lambda0 = {lambda0} outside table domain [{}, {}]", domain.0, domain.1)));
        }
        if !g.is_finite() {
            return Err(Error::Config("tilt g must be finite".into()));
        }
        Ok(Self { lambda0, g, family, domain })
    }

    pub fn family(&self) -> &WellFamily {
        &self.family
    }

    pub fn lambda_domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn with_tilt(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn check_lambda(&self, lambda: f64) -> Result<()> {
        let (lo, hi) = self.domain;
        if lambda >= lo && lambda <= hi {
            Ok(())
        } else {
            Err(Error::Domain { lambda, lo, hi })
        }
    }

    pub fn d(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.family.d.eval(lambda))
    }

    pub fn barrier(&self, lambda: f64) -> Result<f64> {
        self.check_lambda(lambda)?;
        Ok(self.family.barrier.eval(lambda))
    }

    pub fn quartic(&self, lambda: f64) -> Result<Quartic> {
        let a = 0.5 * self.d(lambda)?;
        let b = self.barrier(lambda)?;
        Ok(Quartic { a, c2: b / (a * a * a * a) })
    }

    /// V_λ(x) + g·x.
    pub fn evaluate(&self, lambda: f64, x: f64) -> Result<f64> {
        Ok(self.quartic(lambda)?.eval(x) + self.g * x)
    }

    /// Samples V_λ(x) + g_override·x on the given points.
    pub fn sample(&self, lambda: f64, g: f64, xs: &[f64]) -> Result<Vec<f64>> {
        let q = self.quartic(lambda)?;
        Ok(xs.iter().map(|&x| q.eval(x) + g * x).collect())
    }

    /// Position of the barrier maximum of the tilted potential.
    pub fn barrier_position(&self, lambda: f64) -> Result<f64> {
        Ok(self.quartic(lambda)?.tilted_extrema(self.g)?.1)
    }
}

pub fn evaluate_potential(spec: &PotentialSpec, lambda: f64, x: f64) -> Result<f64> {
    spec.evaluate(lambda, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveVariant {
    /// Ω and ΔE both follow λ(t).
    Full,
    /// Only ΔE oscillates.
    ConstantOmega,
    /// Only Ω oscillates.
    ConstantDeltaE,
}

impl DriveVariant {
    pub const ALL: [DriveVariant; 3] = [DriveVariant::Full, DriveVariant::ConstantOmega, DriveVariant::ConstantDeltaE];

    pub fn name(&self) -> &'static str {
        match self {
            DriveVariant::Full => "full",
            DriveVariant::ConstantOmega => "constant-omega",
            DriveVariant::ConstantDeltaE => "constant-delta-e",
        }
    }
}

impl std::str::FromStr for DriveVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "constant-omega" => Ok(Self::ConstantOmega),
            "constant-delta-e" => Ok(Self::ConstantDeltaE),
            _ => Err(Error::Config(format!("unknown drive variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub lambda1: f64,
    pub omega: f64,
    pub variant: DriveVariant,
}

impl DriveSpec {
    /// λ1 = a·ΔE0/ω.
    pub fn from_amplitude_rule(a: f64, delta_e0: f64, omega: f64, variant: DriveVariant) -> Self {
        Self { lambda1: a * delta_e0 / omega, omega, variant }
    }

    pub fn undriven(omega: f64) -> Self {
        Self { lambda1: 0.0, omega, variant: DriveVariant::Full }
    }

    pub fn validate(&self, spec: &PotentialSpec) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::Config(format!("drive frequency must be positive, got {}", self.omega)));
        }
        if !(self.lambda1 >= 0.0) || !self.lambda1.is_finite() {
            return Err(Error::Config(format!("drive amplitude must be non-negative, got {}", self.lambda1)));
        }
        spec.check_lambda(spec.lambda0 - self.lambda1)?;
        spec.check_lambda(spec.lambda0 + self.lambda1)
    }

    pub fn lambda_at(&self, lambda0: f64, t: f64) -> f64 {
        lambda0 + self.lambda1 * (self.omega * t).sin()
    }
}

pub fn lambda_schedule(drive: &DriveSpec, spec: &PotentialSpec, t: f64) -> f64 {
    drive.lambda_at(spec.lambda0, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PotentialSpec {
        let lam: Vec<f64> = (0..12).map(|i| 0.4 + 0.05 * i as f64).collect();
        let d = lam.iter().map(|l| 1.0 + 2.0 * l).collect();
        let b = lam.iter().map(|l| 5.0 * (1.5 * l).exp()).collect();
        PotentialSpec::new(0.675, 0.0, WellFamily::new(lam, d, b).unwrap()).unwrap()
    }

    #[test]
    fn symmetric_and_barrier_height() {
        let s = toy();
        let d = s.d(0.6).unwrap();
        let left = s.evaluate(0.6, -d / 2.0).unwrap();
        let right = s.evaluate(0.6, d / 2.0).unwrap();
        assert_eq!(left, right);
        let h = s.evaluate(0.6, 0.0).unwrap() - right;
        assert!((h - s.barrier(0.6).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn out_of_domain_is_error() {
        let s = toy();
        assert!(matches!(s.evaluate(0.2, 0.0), Err(Error::Domain { .. })));
        let drive = DriveSpec { lambda1: 0.5, omega: 1.0, variant: DriveVariant::Full };
        assert!(drive.validate(&s).is_err());
        let edge = DriveSpec { lambda1: 0.275, omega: 1.0, variant: DriveVariant::Full };
        assert!(edge.validate(&s).is_ok());
    }

    #[test]
    fn extrema_of_tilted_quartic() {
        let q = Quartic { a: 0.8, c2: 12.0 / 0.8f64.powi(4) };
        let (l, m, r) = q.tilted_extrema(1.5).unwrap();
        for x in [l, m, r] {
            assert!((q.deriv(x) + 1.5).abs() < 1e-9);
        }
        assert!(l < m && m < r && m > 0.0);
        assert!(q.tilted_extrema(1e3).is_err());
    }

    #[test]
    fn schedule() {
        let s = toy();
        let drive = DriveSpec { lambda1: 0.03, omega: 2.0, variant: DriveVariant::Full };
        assert_eq!(lambda_schedule(&drive, &s, 0.0), s.lambda0);
        let t = 0.3;
        assert!((lambda_schedule(&drive, &s, t) - (0.675 + 0.03 * (0.6f64).sin())).abs() < 1e-15);
    }
}
