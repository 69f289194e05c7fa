use std::f64::consts::PI;

use proptest::prelude::*;
use shapiro::bessel::{bessel_j, bessel_j_all};
use shapiro::calibration::{calibrate_default, CalibrationTargets};
use shapiro::effective::{
    bessel_effective_coupling, decompose_drive, decompose_samples, rwa_effective_coupling, vectorial_effective_coupling,
};
use shapiro::potential::{DriveSpec, DriveVariant};
use shapiro::scan::ScanContext;
use shapiro::spectral::TmModel;
use shapiro::tables::ParamTable;

/// J_n(z) = (1/π)∫₀^π cos(nτ − z sin τ) dτ by composite Simpson.
fn bessel_integral(n: i64, z: f64) -> f64 {
    let k = 4000;
    let h = PI / k as f64;
    let f = |t: f64| (n as f64 * t - z * t.sin()).cos();
    let mut s = f(0.0) + f(PI);
    for i in 1..k {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0 / PI
}

#[test]
fn bessel_values_match_integral_representation() {
    for &z in &[0.0, 0.1, 0.73, 2.5, 7.9, 15.0] {
        for n in -6..=12 {
            let a = bessel_j(n, z);
            let b = bessel_integral(n, z);
            assert!((a - b).abs() < 1e-12, "J_{n}({z}): {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bessel_squares_sum_to_one(z in 0.0f64..20.0) {
        let j = bessel_j_all(80, z);
        let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
        prop_assert!((s - 1.0).abs() < 1e-12, "{}", s);
    }

    #[test]
    fn closed_form_agrees_with_quadrature(omega0 in 0.05f64..0.3, amp in 0.0f64..0.1, b in 0.0f64..1.0, w in 0.3f64..2.5) {
        let k = 256;
        let om: Vec<f64> = (0..k).map(|j| omega0 - amp * (2.0 * PI * j as f64 / k as f64).sin()).collect();
        let de: Vec<f64> = (0..k).map(|j| 2.4 + b * (2.0 * PI * j as f64 / k as f64).sin()).collect();
        let h = decompose_samples(&om, &de, w).unwrap();
        for n in 0..4 {
            let a = bessel_effective_coupling(&h, n, w).omega_eff;
            let r = rwa_effective_coupling(&h, n, w, 128).unwrap().omega_eff;
            prop_assert!((a - r).abs() < 1e-10 * omega0, "n={} {} {}", n, a, r);
        }
    }
}

#[test]
fn undriven_coupling_is_plain_average() {
    let k = 64;
    let om = vec![0.15; k];
    let de = vec![2.4; k];
    let h = decompose_samples(&om, &de, 1.0).unwrap();
    assert_eq!(h.b, 0.0);
    assert!((bessel_effective_coupling(&h, 0, 1.0).omega_eff - 0.15).abs() < 1e-15);
    assert!(bessel_effective_coupling(&h, 2, 1.0).omega_eff < 1e-15);
    assert!((vectorial_effective_coupling(&h, 0, 1.0) - 0.15).abs() < 1e-15);
}

#[test]
fn calibrated_operating_point() {
    let spec = calibrate_default(&CalibrationTargets::default()).unwrap();
    let ctx = ScanContext::new(spec.clone()).unwrap();
    let table = ParamTable::full(&spec, &ctx.stationary_grid, TmModel::Standard, 0.0, 1).unwrap();
    let de0 = ctx.delta_e0;
    for n in 1..=3u32 {
        let w = de0 / n as f64;
        let full = DriveSpec::from_amplitude_rule(0.03, de0, w, DriveVariant::Full);
        let h = decompose_drive(&table, &full).unwrap();
        let a = bessel_effective_coupling(&h, n, w).omega_eff;
        let r = rwa_effective_coupling(&h, n, w, 256).unwrap().omega_eff;
        assert!(((a - r) / r).abs() < 0.01, "n={n}: closed form {a} vs RWA {r}");

        // modulating Ω adds a first-order term that a bias-only drive lacks
        let co = DriveSpec { variant: DriveVariant::ConstantOmega, ..full };
        let hc = decompose_drive(&table, &co).unwrap();
        let c = rwa_effective_coupling(&hc, n, w, 256).unwrap().omega_eff;
        assert!(r > c, "n={n}: full {r} vs constant-Ω {c}");
        if n >= 2 {
            assert!(r > 3.0 * c, "n={n}: enhancement only {}", r / c);
        }
    }
}
