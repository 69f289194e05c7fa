//! Harmonic analysis of the drive and rotating-wave effective couplings.
//!
//! With H = −Ω(t)J_x − ΔE(t)J_z and ΔE(t) = ΔE0 + b sin ωt, the n-th resonance (nω ≈ ΔE0)
//! has the effective coupling |⟨Ω(t)·exp(i[nωt + θ(t)])⟩| where θ(t) = ∫₀ᵗ(ΔE − ΔE0).

use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::bessel::BesselTable;
use crate::error::{Error, Result};
use crate::potential::{DriveSpec, DriveVariant};
use crate::tables::ParamTable;

/// Samples per drive period for the discrete Fourier analysis.
const SAMPLES: usize = 256;
/// Hard cap on the number of retained harmonics.
pub const MAX_HARMONICS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveHarmonics {
    /// Period mean of Ω(t).
    pub omega0: f64,
    /// Complex coefficients c_m (m = 1..M) with Ω(t) = Ω0 + Σ (c_m e^{imωt} + c.c.).
    pub omega1: Vec<C64>,
    /// Amplitude of the fundamental of ΔE(t).
    pub b: f64,
    /// Period mean of ΔE(t).
    pub delta_e0: f64,
    /// Complex coefficients of ΔE(t) in the same convention as `omega1`.
    pub delta_e1: Vec<C64>,
    pub omega: f64,
    /// ΔE(t) departs from a pure fundamental by more than 2%.
    pub warn_nonlinear_bias: bool,
}

impl DriveHarmonics {
    pub fn m(&self) -> usize {
        self.omega1.len()
    }

    /// Real amplitude of the m-th harmonic of Ω(t) (2|c_m|).
    pub fn amplitude(&self, m: usize) -> f64 {
        if m == 0 {
            self.omega0.abs()
        } else {
            self.omega1.get(m - 1).map_or(0.0, |c| 2.0 * c.norm())
        }
    }

    /// c_m for any integer m (c_0 = Ω0, c_{−m} = c_m*).
    pub fn coeff(&self, m: i64) -> C64 {
        if m == 0 {
            return C64::new(self.omega0, 0.0);
        }
        let c = self.omega1.get(m.unsigned_abs() as usize - 1).copied().unwrap_or_default();
        if m > 0 {
            c
        } else {
            c.conj()
        }
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        let mut v = self.omega0;
        for (i, c) in self.omega1.iter().enumerate() {
            let ph = C64::from_polar(1.0, (i + 1) as f64 * self.omega * t);
            v += 2.0 * (c * ph).re;
        }
        v
    }

    /// Fundamental sine amplitude of ΔE(t), signed (negative when ΔE falls as λ rises).
    pub fn b_signed(&self) -> f64 {
        self.delta_e1.first().map_or(0.0, |d| 2.0 * (C64::new(0.0, 1.0) * d).re)
    }

    /// θ(t) = ∫₀ᵗ (ΔE − ΔE0) from the retained bias harmonics.
    pub fn bias_phase(&self, t: f64) -> f64 {
        self.bias_phase_truncated(t, usize::MAX)
    }

    /// θ(t) from the first `terms` bias harmonics.
    pub fn bias_phase_truncated(&self, t: f64, terms: usize) -> f64 {
        let mut v = 0.0;
        for (i, d) in self.delta_e1.iter().take(terms).enumerate() {
            let mw = (i + 1) as f64 * self.omega;
            let e = C64::from_polar(1.0, mw * t) - 1.0;
            v += 2.0 * (d * e / C64::new(0.0, mw)).re;
        }
        v
    }
}

fn dft(samples: &[f64], m: usize) -> C64 {
    let k = samples.len();
    samples
        .iter()
        .enumerate()
        .map(|(j, &v)| C64::from_polar(v, -2.0 * PI * (m * j) as f64 / k as f64))
        .sum::<C64>()
        / k as f64
}

fn truncate(samples: &[f64], mean: f64, coeffs: &[C64], scale: f64) -> Result<Vec<C64>> {
    let k = samples.len();
    let ref_scale = samples.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let threshold = 1e-12 * scale.abs().max(1e-300);
    for m in 0..=MAX_HARMONICS {
        let kept: Vec<C64> =
            coeffs[..m].iter().map(|c| if c.norm() < threshold { C64::new(0.0, 0.0) } else { *c }).collect();
        let err = (0..k)
            .map(|j| {
                let mut v = mean;
                for (i, c) in kept.iter().enumerate() {
                    v += 2.0 * (c * C64::from_polar(1.0, 2.0 * PI * ((i + 1) * j) as f64 / k as f64)).re;
                }
                (v - samples[j]).abs()
            })
            .fold(0.0, f64::max);
        if err < 1e-6 * ref_scale {
            let mut kept = kept;
            while kept.last().is_some_and(|c| c.norm() == 0.0) {
                kept.pop();
            }
            return Ok(kept);
        }
    }
    Err(Error::Convergence(format!("drive harmonics need more than {MAX_HARMONICS} terms")))
}

/// Fourier analysis of Ω(λ(t)) and ΔE(λ(t)) over one drive period, honouring the variant.
pub fn decompose_drive(table: &ParamTable, drive: &DriveSpec) -> Result<DriveHarmonics> {
    let l0 = table.lambda0;
    table.check(l0 - drive.lambda1)?;
    table.check(l0 + drive.lambda1)?;
    let (om_static, de_static) = table.eval(l0);
    let mut om = Vec::with_capacity(SAMPLES);
    let mut de = Vec::with_capacity(SAMPLES);
    for j in 0..SAMPLES {
        let s = 2.0 * PI * j as f64 / SAMPLES as f64;
        let (o, d) = table.eval(l0 + drive.lambda1 * s.sin());
        om.push(if drive.variant == DriveVariant::ConstantOmega { om_static } else { o });
        de.push(if drive.variant == DriveVariant::ConstantDeltaE { de_static } else { d });
    }
    decompose_samples(&om, &de, drive.omega)
}

/// Same analysis from samples at t_j = j·T/K over one period.
pub fn decompose_samples(om: &[f64], de: &[f64], omega: f64) -> Result<DriveHarmonics> {
    let omega0 = om.iter().sum::<f64>() / om.len() as f64;
    let delta_e0 = de.iter().sum::<f64>() / de.len() as f64;
    let half = om.len() / 2 - 1;
    let oc: Vec<C64> = (1..=half.min(MAX_HARMONICS)).map(|m| dft(om, m)).collect();
    let dc: Vec<C64> = (1..=half.min(MAX_HARMONICS)).map(|m| dft(de, m)).collect();
    let omega1 = truncate(om, omega0, &oc, omega0)?;
    let delta_e1 = truncate(de, delta_e0, &dc, delta_e0)?;
    let b = delta_e1.first().map_or(0.0, |c| 2.0 * c.norm());
    let rest: f64 = delta_e1.iter().skip(1).map(|c| 4.0 * c.norm_sqr()).sum::<f64>().sqrt();
    let warn_nonlinear_bias = b > 0.0 && rest > 0.02 * b;
    Ok(DriveHarmonics { omega0, omega1, b, delta_e0, delta_e1, omega, warn_nonlinear_bias })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonancePrediction {
    pub n: u32,
    pub omega_res: f64,
    pub omega_eff: f64,
    pub phi_n: f64,
    pub width_est: f64,
    /// n = 0: the resonance sits at ω → 0.
    pub trivial: bool,
}

fn prediction(h: &DriveHarmonics, n: u32, value: C64) -> ResonancePrediction {
    let omega_eff = value.norm();
    ResonancePrediction {
        n,
        omega_res: if n == 0 { 0.0 } else { h.delta_e0 / n as f64 },
        omega_eff,
        phi_n: if omega_eff > 0.0 { value.arg() } else { 0.0 },
        width_est: omega_eff,
        trivial: n == 0,
    }
}

/// Closed form from the Bessel generating function, keeping the phases of the harmonics:
/// Σ_m c_m (−i)^m J_{n+m}(b/ω), assuming a pure-sine bias oscillation.
pub fn bessel_effective_coupling(h: &DriveHarmonics, n: u32, omega: f64) -> ResonancePrediction {
    let beta = h.b_signed() / omega;
    let m = h.m() as i64;
    let table = BesselTable::new(n as usize + m as usize + 1, beta);
    let mut acc = C64::new(0.0, 0.0);
    let mut phase = C64::new(1.0, 0.0);
    // (−i)^m for m ≥ 0; (−i)^{−m} = i^m
    for k in 0..=m {
        let pos = h.coeff(k) * phase * table.get(n as i64 + k);
        acc += pos;
        if k > 0 {
            acc += h.coeff(-k) * phase.conj() * table.get(n as i64 - k);
        }
        phase *= C64::new(0.0, -1.0);
    }
    // overall phase e^{iβ}(−i)^n so that φ_n matches the RWA average
    let global = C64::from_polar(1.0, beta - 0.5 * PI * n as f64);
    prediction(h, n, acc * global)
}

/// Magnitude form √(Ω0²A_n² + Σ|c_m|²A_{n−m}² + 2Ω0A_nΣ(−1)^k|c_{2k+1}|A_{n−2k−1}), A_l = J_l(b/ω).
/// Exact only to leading order in b/ω for sine-phase odd harmonics.
pub fn vectorial_effective_coupling(h: &DriveHarmonics, n: u32, omega: f64) -> f64 {
    let beta = h.b / omega;
    let m = h.m();
    let table = BesselTable::new(n as usize + m + 1, beta);
    let a = |l: i64| table.get(l);
    let n = n as i64;
    let mut s = (h.omega0 * a(n)).powi(2);
    for k in 1..=m as i64 {
        s += (h.coeff(k).norm() * a(n - k)).powi(2);
    }
    let mut cross = 0.0;
    let mut k = 0i64;
    while 2 * k + 1 <= m as i64 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        cross += sign * h.coeff(2 * k + 1).norm() * a(n - 2 * k - 1);
        k += 1;
    }
    s += 2.0 * h.omega0 * a(n) * cross;
    s.max(0.0).sqrt()
}

/// Period average of Ω(t)·exp(i[nωt + θ(t)]) with θ from the fundamental of ΔE(t) alone,
/// by the trapezoid rule (spectrally accurate).
pub fn rwa_effective_coupling(h: &DriveHarmonics, n: u32, omega: f64, samples: usize) -> Result<ResonancePrediction> {
    rwa_average(h, n, omega, samples, 1)
}

/// As [`rwa_effective_coupling`] but with every retained harmonic of ΔE(t) in the phase.
/// The difference measures how far the bias departs from a pure sine.
pub fn rwa_effective_coupling_full_bias(h: &DriveHarmonics, n: u32, omega: f64, samples: usize) -> Result<ResonancePrediction> {
    rwa_average(h, n, omega, samples, usize::MAX)
}

fn rwa_average(h: &DriveHarmonics, n: u32, omega: f64, samples: usize, bias_terms: usize) -> Result<ResonancePrediction> {
    let period = 2.0 * PI / omega;
    let mut prev = C64::new(f64::NAN, 0.0);
    let mut k = samples.max(64);
    for _ in 0..6 {
        let acc: C64 = (0..k)
            .map(|j| {
                let t = period * j as f64 / k as f64;
                C64::from_polar(h.omega_at(t), n as f64 * omega * t + h.bias_phase_truncated(t, bias_terms))
            })
            .sum::<C64>()
            / k as f64;
        if (acc - prev).norm() <= 1e-13 * h.omega0.abs().max(1e-300) {
            return Ok(prediction(h, n, acc));
        }
        prev = acc;
        k *= 2;
    }
    Err(Error::Convergence("RWA quadrature did not converge".into()))
}

/// Resonant two-level dynamics: (generalized Rabi frequency, transfer amplitude).
pub fn predict_rabi(pred: &ResonancePrediction, detuning: f64) -> (f64, f64) {
    let w2 = detuning * detuning + pred.omega_eff * pred.omega_eff;
    if w2 == 0.0 {
        return (0.0, 0.0);
    }
    (w2.sqrt(), pred.omega_eff * pred.omega_eff / w2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(omega0: f64, amp1: f64, b: f64, w: f64) -> DriveHarmonics {
        let om: Vec<f64> = (0..SAMPLES)
            .map(|j| {
                let s = 2.0 * PI * j as f64 / SAMPLES as f64;
                omega0 - amp1 * s.sin()
            })
            .collect();
        let de: Vec<f64> = (0..SAMPLES)
            .map(|j| {
                let s = 2.0 * PI * j as f64 / SAMPLES as f64;
                2.0 + b * s.sin()
            })
            .collect();
        decompose_samples(&om, &de, w).unwrap()
    }

    #[test]
    fn undriven_harmonics_are_empty() {
        let h = synthetic(0.15, 0.0, 0.0, 2.0);
        assert!(h.omega1.is_empty() && h.b == 0.0);
        let p = rwa_effective_coupling(&h, 0, 2.0, 64).unwrap();
        assert!((p.omega_eff - 0.15).abs() < 1e-14);
        assert!(rwa_effective_coupling(&h, 1, 2.0, 64).unwrap().omega_eff < 1e-14);
    }

    #[test]
    fn closed_form_matches_rwa() {
        for (amp, b) in [(0.05, 0.3), (0.0, 0.5), (0.04, 0.0)] {
            let h = synthetic(0.15, amp, b, 2.0);
            for n in 0..4 {
                let a = bessel_effective_coupling(&h, n, 2.0).omega_eff;
                let r = rwa_effective_coupling(&h, n, 2.0, 128).unwrap().omega_eff;
                assert!((a - r).abs() < 1e-12, "n={n} {a} {r}");
                let pa = bessel_effective_coupling(&h, n, 2.0);
                let pr = rwa_effective_coupling(&h, n, 2.0, 128).unwrap();
                if pa.omega_eff > 1e-10 {
                    assert!((C64::from_polar(1.0, pa.phi_n) - C64::from_polar(1.0, pr.phi_n)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn rabi_formulas() {
        let p = ResonancePrediction { n: 1, omega_res: 2.0, omega_eff: 0.1, phi_n: 0.0, width_est: 0.1, trivial: false };
        assert_eq!(predict_rabi(&p, 0.0), (0.1, 1.0));
        let (_, a) = predict_rabi(&p, 0.1);
        assert!((a - 0.5).abs() < 1e-15);
    }
}
