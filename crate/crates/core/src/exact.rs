//! Exact small-N many-body dynamics on a coarse spatial lattice.
//!
//! The field Hamiltonian is discretized with three-point finite differences:
//! hopping J = 1/(2h²), on-site energy 1/h² + V(x_i), on-site interaction U0/h.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::expm::{lanczos_ground, lanczos_step, magnus4};
use crate::grid::{Grid, Kinetic};
use crate::potential::{DriveSpec, DriveVariant, PotentialSpec};
use crate::spectral::localized;
use crate::twomode::{step_plan, InitialState, TrajectoryRecord, DT_RULE, NORM_DRIFT_LIMIT};

/// Hard cap on the Fock-space dimension.
pub const BASIS_CAP: usize = 50_000;
/// Largest dimension handled by dense diagonalization.
const DENSE_LIMIT: usize = 1500;
const KRYLOV_TOL: f64 = 1e-13;
const KRYLOV_MAX: usize = 64;

/// C(n + m − 1, n): number of ways to put n bosons on m sites.
pub fn fock_dimension(n_atoms: usize, sites: usize) -> usize {
    if sites == 0 {
        return 0;
    }
    let mut c: u128 = 1;
    for i in 1..=n_atoms as u128 {
        c = c * (sites as u128 - 1 + i) / i;
    }
    c.min(usize::MAX as u128) as usize
}

type OnsiteFn = Arc<dyn Fn(f64) -> Result<Vec<f64>> + Send + Sync>;

/// Second-quantized lattice Hamiltonian in the full N-boson Fock space.
#[derive(Clone)]
pub struct LatticeSystem {
    pub sites: usize,
    pub n_atoms: usize,
    pub hopping: f64,
    pub u_eff: f64,
    /// Weight of each site on the left of the barrier (1 fully left, 0 fully right).
    pub left_weight: Vec<f64>,
    /// +1 when the left well is the lower one.
    pub orientation: f64,
    /// Drive frequency entering the step rule (0 when static).
    pub drive_omega: f64,
    /// Linear tilt g·x_i folded into the on-site energies; removed when building localized orbitals.
    pub tilt: Vec<f64>,
    onsite: OnsiteFn,
    occ: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// Off-diagonal hopping entries (row, col, matrix element), both triangles.
    hops: Vec<(usize, usize, f64)>,
    interaction: Vec<f64>,
}

impl std::fmt::Debug for LatticeSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeSystem")
            .field("sites", &self.sites)
            .field("n_atoms", &self.n_atoms)
            .field("hopping", &self.hopping)
            .field("u_eff", &self.u_eff)
            .field("dim", &self.dim())
            .finish()
    }
}

fn enumerate(n: usize, m: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; m];
    fn rec(site: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        let m = cur.len();
        if site == m - 1 {
            cur[site] = left as u8;
            out.push(cur.clone());
            return;
        }
        for k in (0..=left).rev() {
            cur[site] = k as u8;
            rec(site + 1, left - k, cur, out);
        }
        cur[site] = 0;
    }
    rec(0, n, &mut cur, &mut out);
    out
}

impl LatticeSystem {
    /// Lattice with uniform nearest-neighbour hopping `hopping` (entering as −J·a_i†a_{i+1} + h.c.),
    /// time-dependent on-site energies and on-site interaction U/2·n(n−1).
    pub fn from_sites(
        sites: usize,
        n_atoms: usize,
        hopping: f64,
        u_eff: f64,
        left_weight: Vec<f64>,
        drive_omega: f64,
        onsite: impl Fn(f64) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Result<Self> {
        if sites < 2 || n_atoms == 0 {
            return Err(Error::Config("lattice needs at least 2 sites and 1 atom".into()));
        }
        if n_atoms > u8::MAX as usize {
            return Err(Error::Config("too many atoms for the lattice basis".into()));
        }
        if left_weight.len() != sites {
            return Err(Error::Config("left_weight length differs from site count".into()));
        }
        let dim = fock_dimension(n_atoms, sites);
        if dim > BASIS_CAP {
            return Err(Error::BasisCap { dim, cap: BASIS_CAP });
        }
        let occ = enumerate(n_atoms, sites);
        debug_assert_eq!(occ.len(), dim);
        let index: HashMap<Vec<u8>, usize> = occ.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        let mut hops = Vec::new();
        let mut probe = vec![0u8; sites];
        for (s, o) in occ.iter().enumerate() {
            for i in 0..sites - 1 {
                // a_i† a_{i+1} and its conjugate; only the upper direction is generated, then mirrored
                if o[i + 1] > 0 {
                    probe.copy_from_slice(o);
                    probe[i + 1] -= 1;
                    probe[i] += 1;
                    let t = index[&probe];
                    let amp = -hopping * ((o[i + 1] as f64) * (o[i] as f64 + 1.0)).sqrt();
                    hops.push((t, s, amp));
                    hops.push((s, t, amp));
                }
            }
        }
        let interaction = occ
            .iter()
            .map(|o| 0.5 * u_eff * o.iter().map(|&k| (k as f64) * (k as f64 - 1.0)).sum::<f64>())
            .collect();
        Ok(Self {
            sites,
            n_atoms,
            hopping,
            u_eff,
            left_weight,
            orientation: 1.0,
            drive_omega,
            tilt: vec![0.0; sites],
            onsite: Arc::new(onsite),
            occ,
            index,
            hops,
            interaction,
        })
    }

    pub fn dim(&self) -> usize {
        self.occ.len()
    }

    pub fn occupations(&self) -> &[Vec<u8>] {
        &self.occ
    }

    pub fn state_index(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn onsite(&self, t: f64) -> Result<Vec<f64>> {
        (self.onsite)(t)
    }

    /// Diagonal of H(t) in the Fock basis.
    pub fn diagonal(&self, t: f64) -> Result<Vec<f64>> {
        let eps = self.onsite(t)?;
        Ok(self
            .occ
            .iter()
            .zip(&self.interaction)
            .map(|(o, u)| u + o.iter().zip(&eps).map(|(&k, e)| k as f64 * e).sum::<f64>())
            .collect())
    }

    fn apply_with(&self, diag: &[f64], x: &[C64], y: &mut [C64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(diag) {
            *yi = xi * d;
        }
        for &(r, c, v) in &self.hops {
            y[r] += x[c] * v;
        }
    }

    pub fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) -> Result<()> {
        let d = self.diagonal(t)?;
        self.apply_with(&d, x, y);
        Ok(())
    }

    /// Dense real Hamiltonian at time t.
    pub fn dense(&self, t: f64) -> Result<DMatrix<f64>> {
        let d = self.diagonal(t)?;
        let n = self.dim();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
        for &(r, c, v) in &self.hops {
            m[(r, c)] += v;
        }
        debug_assert_eq!(m.nrows(), n);
        Ok(m)
    }

    /// Half the Gershgorin width of H(t).
    fn half_width(&self, t: f64) -> Result<f64> {
        let d = self.diagonal(t)?;
        let mut r = vec![0.0; d.len()];
        for &(row, _, v) in &self.hops {
            r[row] += v.abs();
        }
        let lo = d.iter().zip(&r).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
        let hi = d.iter().zip(&r).map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
        Ok(0.5 * (hi - lo))
    }

    /// Largest step permitted by dt·max(ω, ‖H‖) ≤ 0.05, ‖H‖ sampled over one drive period.
    pub fn max_dt(&self) -> Result<f64> {
        let times: Vec<f64> = if self.drive_omega > 0.0 {
            let period = 2.0 * std::f64::consts::PI / self.drive_omega;
            (0..16).map(|i| period * i as f64 / 16.0).collect()
        } else {
            vec![0.0]
        };
        let mut norm: f64 = 0.0;
        for t in times {
            norm = norm.max(self.half_width(t)?);
        }
        Ok(DT_RULE / self.drive_omega.max(norm).max(1e-12))
    }

    /// Single-particle lattice Hamiltonian at time t.
    pub fn single_particle(&self, t: f64) -> Result<DMatrix<f64>> {
        let eps = self.onsite(t)?;
        let m = self.sites;
        Ok(DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                eps[i]
            } else if i.abs_diff(j) == 1 {
                -self.hopping
            } else {
                0.0
            }
        }))
    }

    /// Localized left/right orbitals from the two lowest single-particle states of the untilted
    /// lattice at time t.
    pub fn localized_orbitals(&self, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut h0 = self.single_particle(t)?;
        for (i, g) in self.tilt.iter().enumerate() {
            h0[(i, i)] -= g;
        }
        let eig = SymmetricEigen::new(h0);
        let mut order: Vec<usize> = (0..self.sites).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut g: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
        let mut e: Vec<f64> = eig.eigenvectors.column(order[1]).iter().copied().collect();
        if g.iter().sum::<f64>() < 0.0 {
            g.iter_mut().for_each(|v| *v = -*v);
        }
        // φ_e positive on the left so that (φ_g + φ_e)/√2 sits in the left well
        if self.left_weight.iter().zip(&e).map(|(w, v)| (w - 0.5) * v).sum::<f64>() < 0.0 {
            e.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(localized(&g, &e))
    }

    /// Two-mode parameters (Ω, ΔE, κ) of the lattice at time t from its localized orbitals.
    pub fn two_mode_params(&self, t: f64) -> Result<(f64, f64, f64)> {
        let (l, r) = self.localized_orbitals(t)?;
        let h = self.single_particle(t)?;
        let hl = &h * nalgebra::DVector::from_column_slice(&l);
        let hr = &h * nalgebra::DVector::from_column_slice(&r);
        let lhl: f64 = l.iter().zip(hl.iter()).map(|(a, b)| a * b).sum();
        let rhr: f64 = r.iter().zip(hr.iter()).map(|(a, b)| a * b).sum();
        let lhr: f64 = l.iter().zip(hr.iter()).map(|(a, b)| a * b).sum();
        let kappa = 0.5 * self.u_eff * l.iter().map(|v| v.powi(4)).sum::<f64>();
        Ok((-2.0 * lhr, rhr - lhl, kappa))
    }

    /// All atoms in one single-particle orbital: amplitudes √(N!/∏n_i!)·∏φ_i^{n_i}.
    pub fn product_state(&self, orbital: &[f64]) -> Result<Vec<C64>> {
        if orbital.len() != self.sites {
            return Err(Error::Precondition("orbital length differs from site count".into()));
        }
        let n2: f64 = orbital.iter().map(|v| v * v).sum();
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let nf = fact(self.n_atoms);
        let mut out: Vec<C64> = self
            .occ
            .iter()
            .map(|o| {
                let mut a = nf.sqrt();
                for (&k, &p) in o.iter().zip(orbital) {
                    a *= p.powi(k as i32) / fact(k as usize).sqrt();
                }
                C64::new(a / n2.powf(0.5 * self.n_atoms as f64), 0.0)
            })
            .collect();
        let s = out.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        out.iter_mut().for_each(|c| *c /= s);
        Ok(out)
    }

    /// Many-body ground state of H(t).
    pub fn ground_state(&self, t: f64) -> Result<Vec<C64>> {
        let n = self.dim();
        let mut v: Vec<C64> = if n <= DENSE_LIMIT {
            let eig = SymmetricEigen::new(self.dense(t)?);
            let k = (0..n).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
            eig.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect()
        } else {
            let (l, _) = self.localized_orbitals(t)?;
            let start = self.product_state(&l)?;
            let d = self.diagonal(t)?;
            lanczos_ground(|x, y| self.apply_with(&d, x, y), &start, 1e-9, 400)?.1
        };
        let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let ph = big.conj() / big.norm();
        v.iter_mut().for_each(|c| *c *= ph);
        Ok(v)
    }

    pub fn initial_state(&self, mode: InitialState) -> Result<Vec<C64>> {
        match mode {
            InitialState::GroundStateStatic => self.ground_state(0.0),
            InitialState::AllLeftFock => {
                let (l, r) = self.localized_orbitals(0.0)?;
                self.product_state(if self.orientation >= 0.0 { &l } else { &r })
            }
        }
    }

    /// ⟨H(t)⟩ for a normalized state.
    pub fn energy(&self, t: f64, psi: &[C64]) -> Result<f64> {
        let mut y = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply(t, psi, &mut y)?;
        Ok(psi.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// One-body density matrix ρ_ij = ⟨a_i† a_j⟩.
    pub fn one_body_density(&self, psi: &[C64]) -> DMatrix<C64> {
        let m = self.sites;
        let mut rho = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
        let mut probe = vec![0u8; m];
        for (s, o) in self.occ.iter().enumerate() {
            let c = psi[s];
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..m {
                rho[(i, i)] += c.norm_sqr() * o[i] as f64;
            }
            for j in 0..m {
                if o[j] == 0 {
                    continue;
                }
                for i in 0..m {
                    if i == j {
                        continue;
                    }
                    probe.copy_from_slice(o);
                    probe[j] -= 1;
                    probe[i] += 1;
                    let t = self.index[&probe];
                    let amp = ((o[j] as f64) * (o[i] as f64 + 1.0)).sqrt();
                    rho[(i, j)] += psi[t].conj() * c * amp;
                }
            }
        }
        rho
    }

    /// (⟨J_z⟩, Var J_z, frag) with J_z = Σ_i (w_i − ½) n_i, oriented so the lower well is positive.
    pub fn observables(&self, psi: &[C64]) -> (f64, f64, f64) {
        let s: Vec<f64> = self.left_weight.iter().map(|w| self.orientation * (w - 0.5)).collect();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (o, c) in self.occ.iter().zip(psi) {
            let jz: f64 = o.iter().zip(&s).map(|(&k, w)| k as f64 * w).sum();
            let p = c.norm_sqr();
            m1 += p * jz;
            m2 += p * jz * jz;
        }
        let rho = self.one_body_density(psi);
        let mut ev: Vec<f64> = SymmetricEigen::new(rho).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let frag = (ev[0] - ev.get(1).copied().unwrap_or(0.0)) / self.n_atoms as f64;
        (m1, m2 - m1 * m1, frag)
    }
}

/// Lattice from a finite-difference grid: sites are the grid's interior points.
pub fn build_lattice(
    grid: &Grid,
    spec: &PotentialSpec,
    drive: &DriveSpec,
    u0: f64,
    n_atoms: usize,
) -> Result<LatticeSystem> {
    if grid.kinetic != Kinetic::FiniteDifference {
        return Err(Error::Config("the exact lattice needs a finite-difference grid".into()));
    }
    if drive.variant != DriveVariant::Full && drive.lambda1 != 0.0 {
        return Err(Error::Config("the exact lattice only supports the full drive variant".into()));
    }
    drive.validate(spec)?;
    let h = grid.h();
    let xs = grid.points();
    let tilt: Vec<f64> = xs.iter().map(|x| spec.g * x).collect();
    let xb = spec.barrier_position(spec.lambda0)?;
    let left_weight: Vec<f64> = xs.iter().map(|&x| ((xb - (x - 0.5 * h)) / h).clamp(0.0, 1.0)).collect();
    let spec_c = spec.clone();
    let drive_c = *drive;
    let kin = 1.0 / (h * h);
    let onsite = move |t: f64| -> Result<Vec<f64>> {
        let q = spec_c.quartic(drive_c.lambda_at(spec_c.lambda0, t))?;
        Ok(xs.iter().map(|&x| kin + q.eval(x) + spec_c.g * x).collect())
    };
    let omega = if drive.lambda1 != 0.0 { drive.omega } else { 0.0 };
    let mut sys = LatticeSystem::from_sites(grid.len(), n_atoms, 0.5 * kin, u0 / h, left_weight, omega, onsite)?;
    sys.orientation = if spec.g < 0.0 { -1.0 } else { 1.0 };
    sys.tilt = tilt;
    Ok(sys)
}

/// Krylov propagation with the same fourth-order Magnus stepping as the two-mode model.
pub fn propagate_exact(
    sys: &LatticeSystem,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<(TrajectoryRecord, Vec<C64>)> {
    if psi0.len() != sys.dim() {
        return Err(Error::Precondition("state dimension differs from the lattice basis".into()));
    }
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::Precondition("need dt > 0 and t_final ≥ 0".into()));
    }
    let limit = sys.max_dt()?;
    if dt > limit * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!("dt = {dt} violates the step rule (max {limit})")));
    }
    let nf = sys.n_atoms as f64;
    let mut rec = TrajectoryRecord::new(sys.n_atoms, false);
    let record = |t: f64, psi: &[C64], rec: &mut TrajectoryRecord| -> Result<()> {
        let drift = (psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { drift });
        }
        let (m, v, f) = sys.observables(psi);
        rec.push(t, m / nf, Some(v), Some(f));
        Ok(())
    };
    let mut psi = psi0.to_vec();
    record(0.0, &psi, &mut rec)?;
    if t_final == 0.0 {
        return Ok((rec, psi));
    }
    let (steps, h) = step_plan(t_final, dt);
    let stride = stride.max(1);
    let static_diag = if sys.drive_omega == 0.0 { Some(sys.diagonal(0.0)?) } else { None };
    let mut blended = vec![0.0; sys.dim()];
    for s in 0..steps {
        let t0 = s as f64 * h;
        match &static_diag {
            Some(d) => lanczos_step(|x, y| sys.apply_with(d, x, y), h, &mut psi, KRYLOV_TOL, KRYLOV_MAX)?,
            None => {
                let d1 = sys.diagonal(t0 + magnus4::NODES[0] * h)?;
                let d2 = sys.diagonal(t0 + magnus4::NODES[1] * h)?;
                for k in 0..2 {
                    for (b, (x, y)) in blended.iter_mut().zip(d1.iter().zip(&d2)) {
                        *b = magnus4::blend(k, *x, *y);
                    }
                    lanczos_step(|x, y| sys.apply_with(&blended, x, y), 0.5 * h, &mut psi, KRYLOV_TOL, KRYLOV_MAX)?;
                }
            }
        }
        if (s + 1) % stride == 0 || s + 1 == steps {
            record((s + 1) as f64 * h, &psi, &mut rec)?;
        }
    }
    Ok((rec, psi))
}
