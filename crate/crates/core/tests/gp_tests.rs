mod common;

use common::gp_drift;
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use shapiro::calibration::{calibrate_default, CalibrationTargets};
use shapiro::gp::{gp_ground_state_tilted, gp_max_dt, imbalance, propagate_gp, GpField};
use shapiro::grid::Grid;
use shapiro::potential::{DriveSpec, PotentialSpec};
use shapiro::scan::{run_trajectory, AmplitudeRule, Model, ScanContext, ScanSpec};
use shapiro::spectral::{lowest_two_states, LinearProblem};

fn spec() -> PotentialSpec {
    calibrate_default(&CalibrationTargets::default()).unwrap()
}

#[test]
fn static_energy_and_norm_conserved() {
    let d = gp_drift(&spec());
    assert!(d.norm < 1e-8, "norm drift {:.3e}", d.norm);
    assert!(d.energy < 1e-7, "energy drift {:.3e}", d.energy);
}

#[test]
fn linear_limit_matches_eigen_expansion() {
    let spec = spec();
    let grid = Grid::dynamics();
    let v = spec.sample(spec.lambda0, spec.g, &grid.points()).unwrap();
    let lp = LinearProblem::new(&grid, v).unwrap();
    let phi0: Vec<f64> = (lp.mode(0).iter().zip(lp.mode(1)).zip(lp.mode(2)))
        .map(|((a, b), c)| 0.7 * a + 0.6 * b + 0.2 * c)
        .collect();
    let c0 = lp.to_basis(&phi0);
    let scale = c0.norm();
    let phi0: Vec<f64> = phi0.iter().map(|v| v / scale).collect();
    let c0 = c0 / scale;

    let mut field = GpField::from_real(grid, &phi0, 0.0);
    let drive = DriveSpec::undriven(1.0);
    let t = 10.0;
    propagate_gp(&mut field, &drive, &spec, t, 0.05 * gp_max_dt(&grid), 1 << 30).unwrap();

    // ψ(t) = Σ c_k e^{−iE_k t} φ_k
    let re = DVector::from_iterator(c0.len(), c0.iter().zip(&lp.energies).map(|(c, e)| c * (e * t).cos()));
    let im = DVector::from_iterator(c0.len(), c0.iter().zip(&lp.energies).map(|(c, e)| -c * (e * t).sin()));
    let want_re = lp.from_basis(&re);
    let want_im = lp.from_basis(&im);
    let err = field
        .psi
        .iter()
        .zip(want_re.iter().zip(&want_im))
        .map(|(p, (a, b))| (p - C64::new(*a, *b)).norm() * grid.h().sqrt())
        .fold(0.0f64, f64::max);
    assert!(err < 1e-6, "linear GP vs eigen-expansion {err:.3e}");
}

#[test]
fn linear_ground_state_is_lowest_mode() {
    let spec = spec();
    let grid = Grid::dynamics();
    let field = gp_ground_state_tilted(&grid, &spec, spec.lambda0, spec.g, 0.0).unwrap();
    let v = spec.sample(spec.lambda0, spec.g, &grid.points()).unwrap();
    let mut mode = LinearProblem::new(&grid, v).unwrap().mode(0);
    if mode.iter().sum::<f64>() < 0.0 {
        mode.iter_mut().for_each(|v| *v = -*v);
    }
    let err = field.psi.iter().zip(&mode).map(|(p, m)| (p.re - m).abs() + p.im.abs()).fold(0.0f64, f64::max);
    assert!(err < 1e-6, "{err:.3e}");
}

#[test]
fn imbalance_limits_and_interaction_ordering() {
    let spec = spec();
    let grid = Grid::dynamics();
    let deep = spec.with_tilt(6.0);
    let f = gp_ground_state_tilted(&grid, &deep, spec.lambda0, 6.0, 1.0).unwrap();
    let z = imbalance(&f, &deep, spec.lambda0).unwrap();
    assert!((z - 0.5).abs() < 0.005, "deep tilt imbalance {z}");

    let z1 = imbalance(&gp_ground_state_tilted(&grid, &spec, spec.lambda0, spec.g, 1.0).unwrap(), &spec, spec.lambda0).unwrap();
    let z4 = imbalance(&gp_ground_state_tilted(&grid, &spec, spec.lambda0, spec.g, 4.0).unwrap(), &spec, spec.lambda0).unwrap();
    assert!(z4 < z1, "U0N=4 imbalance {z4} should be below U0N=1 imbalance {z1}");

    // symmetric state in the untilted well
    let modes = lowest_two_states(&grid, &spec, spec.lambda0).unwrap();
    let sym = GpField::from_real(grid, &modes.phi_g, 0.0);
    let flat = spec.with_tilt(0.0);
    assert!(imbalance(&sym, &flat, spec.lambda0).unwrap().abs() < 1e-6);
}

#[test]
fn ground_state_imbalance_agrees_with_two_mode() {
    let spec = spec();
    let ctx = ScanContext::new(spec).unwrap();
    let rule = AmplitudeRule::Coefficient { a: 0.0 };
    let drive = DriveSpec::undriven(1.0);
    let gp = run_trajectory(&ScanSpec::new(vec![1.0], rule, 1.0, 100, 100.0, Model::Gp), &ctx, &drive, 0.0).unwrap();
    let tm = run_trajectory(&ScanSpec::new(vec![1.0], rule, 1.0, 100, 100.0, Model::TmImproved), &ctx, &drive, 0.0).unwrap();
    let (a, b) = (gp.jz_mean_over_n[0], tm.jz_mean_over_n[0]);
    assert!((a - b).abs() < 0.02, "GP {a} vs two-mode {b}");
}

#[test]
fn undriven_superposition_beats_at_tunnel_frequency() {
    let spec = spec().with_tilt(0.0);
    let grid = Grid::dynamics();
    let modes = lowest_two_states(&grid, &spec, spec.lambda0).unwrap();
    let omega = modes.e_e - modes.e_g;
    let mut field = GpField::from_real(grid, &modes.phi_l, 0.0);
    let period = 2.0 * std::f64::consts::PI / omega;
    let dt = gp_max_dt(&grid);
    let rec = propagate_gp(&mut field, &DriveSpec::undriven(1.0), &spec, 0.5 * period, dt, 1 << 30).unwrap();
    let (z0, z1) = (rec.jz_mean_over_n[0], *rec.jz_mean_over_n.last().unwrap());
    // starts in one well and has tunnelled fully to the other after half a beat period
    assert!(z0 > 0.45 && z1 < -0.45, "{z0} → {z1}");
    assert!((z0 + z1).abs() < 1e-3, "{z0} vs {z1}");
}
