use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Conversion between dimensionless quantities and lab units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    /// Micrometers per unit length.
    pub length_um: f64,
    /// Hz per unit energy (angular frequency is 2π times this).
    pub energy_hz: f64,
    /// Milliseconds per unit time.
    pub time_ms: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { length_um: 1.0, energy_hz: 116.26, time_ms: 1.37 }
    }
}

impl Units {
    /// time unit × angular energy unit; equals 1 when ħ = 1 is respected.
    pub fn hbar_product(&self) -> f64 {
        self.time_ms * 1e-3 * 2.0 * PI * self.energy_hz
    }

    pub fn is_consistent(&self) -> bool {
        (self.hbar_product() - 1.0).abs() <= 5e-3
    }

    pub fn energy_to_hz(&self, e: f64) -> f64 {
        e * self.energy_hz
    }

    pub fn hz_to_energy(&self, f: f64) -> f64 {
        f / self.energy_hz
    }

    pub fn time_to_ms(&self, t: f64) -> f64 {
        t * self.time_ms
    }
}
