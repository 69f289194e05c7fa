mod common;

use common::{dimer_error, dimer_pair, exact_drift, single_atom_gp_error};
use shapiro::calibration::{calibrate_default, CalibrationTargets};
use shapiro::exact::{build_lattice, propagate_exact, LatticeSystem};
use shapiro::grid::Grid;
use shapiro::potential::{DriveSpec, DriveVariant};
use shapiro::twomode::{propagate, DrivenTmSystem, InitialState, SpinState};

#[test]
fn dimer_equals_two_mode() {
    let n = 8;
    let (lat, tm, _, u) = dimer_pair(n);
    // the dense dimer matrix against the two-mode tridiagonal, after removing the identity part
    for &t in &[0.0, 0.7, 2.3] {
        let d = lat.dense(t).unwrap();
        let h = tm.hamiltonian_at(t).to_dense();
        let eps = lat.onsite(t).unwrap();
        let shift = 0.5 * n as f64 * (eps[0] + eps[1]) - 0.5 * u * n as f64 + 0.25 * u * (n * n) as f64;
        // lattice index i holds n0 = N − i, the two-mode index k holds n_left = k
        for i in 0..=n {
            for k in 0..=n {
                let want = h[(n - i, n - k)] + if i == k { shift } else { 0.0 };
                assert!((d[(i, k)] - want).abs() < 1e-12, "t={t} ({i},{k}): {} vs {want}", d[(i, k)]);
            }
        }
    }
    let (err, span) = dimer_error(n);
    assert!(err < 1e-8, "dimer vs two-mode error {err:.3e}");
    assert!(span > 0.05, "{span}");
}

#[test]
fn single_atom_equals_linear_gp() {
    let spec = calibrate_default(&CalibrationTargets::default()).unwrap();
    let (err, moved) = single_atom_gp_error(&spec);
    assert!(err < 1e-6, "N=1 lattice vs linear GP error {err:.3e}");
    assert!(moved > 0.1, "state should move: {moved}");
}

#[test]
fn deep_barrier_pair_follows_two_mode() {
    let spec = calibrate_default(&CalibrationTargets::default()).unwrap();
    let grid = Grid::finite_difference(-2.4, 2.4, 12).unwrap();
    let drive = DriveSpec::undriven(1.0);
    let lat = build_lattice(&grid, &spec, &drive, 0.02, 2).unwrap();
    let (om, de, kappa) = lat.two_mode_params(0.0).unwrap();
    let tm = DrivenTmSystem::static_system(2, om, de, kappa);
    let psi0 = lat.initial_state(InitialState::AllLeftFock).unwrap();
    let dt = lat.max_dt().unwrap().min(tm.max_dt());
    let (rec_l, _) = propagate_exact(&lat, &psi0, 20.0, dt, 20).unwrap();
    let rec_t = propagate(&tm, &SpinState::all_left(2), 20.0, dt, 20).unwrap();
    let scale = rec_t.jz_mean_over_n.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let err = rec_l
        .jz_mean_over_n
        .iter()
        .zip(&rec_t.jz_mean_over_n)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(err < 0.02 * scale, "deep-barrier deviation {err:.3e} (scale {scale})");
}

#[test]
fn number_and_energy_conserved() {
    let spec = calibrate_default(&CalibrationTargets::default()).unwrap();
    let d = exact_drift(&spec);
    assert!(d.norm < 1e-8, "norm drift {:.3e}", d.norm);
    assert!(d.energy < 1e-8, "energy drift {:.3e}", d.energy);

    let grid = Grid::finite_difference(-2.4, 2.4, 10).unwrap();
    let lat = build_lattice(&grid, &spec, &DriveSpec::from_amplitude_rule(0.03, 2.408, 1.0, DriveVariant::Full), 0.3, 3).unwrap();
    let psi0 = lat.initial_state(InitialState::AllLeftFock).unwrap();
    let (_, psi) = propagate_exact(&lat, &psi0, 5.0, lat.max_dt().unwrap(), 1000).unwrap();
    let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    // every basis state holds exactly N atoms, and the density matrix trace stays N
    assert!(lat.occupations().iter().all(|o| o.iter().map(|&k| k as usize).sum::<usize>() == 3));
    let tr: f64 = lat.one_body_density(&psi).diagonal().iter().map(|c| c.re).sum();
    assert!((tr - 3.0 * norm2).abs() < 1e-10, "{tr}");
}

#[test]
fn non_interacting_spectrum_is_sum_of_orbitals() {
    let eps = vec![0.1, -0.4, 0.3, 0.0, 0.25];
    let e2 = eps.clone();
    let lat = LatticeSystem::from_sites(5, 2, 0.6, 0.0, vec![1.0, 1.0, 0.5, 0.0, 0.0], 0.0, move |_| Ok(e2.clone())).unwrap();
    let mut many: Vec<f64> = nalgebra::SymmetricEigen::new(lat.dense(0.0).unwrap()).eigenvalues.iter().copied().collect();
    let single: Vec<f64> = nalgebra::SymmetricEigen::new(lat.single_particle(0.0).unwrap()).eigenvalues.iter().copied().collect();
    let mut sums = Vec::new();
    for i in 0..5 {
        for j in i..5 {
            sums.push(single[i] + single[j]);
        }
    }
    many.sort_by(f64::total_cmp);
    sums.sort_by(f64::total_cmp);
    assert_eq!(many.len(), sums.len());
    for (a, b) in many.iter().zip(&sums) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
