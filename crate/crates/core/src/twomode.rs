//! Exact dynamics of the driven two-mode Hamiltonian in the (N+1)-dimensional Fock basis.
//!
//! Basis index k counts atoms in the left well; J_z = k − N/2. The Hamiltonian is
//! H = −Ω J_x − ΔE J_z + 2κ J_z², with ΔE = E_R − E_L > 0 when the left well is lower,
//! so the all-left state is the Ω → 0 ground state.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::{magnus4, Chebyshev, Tridiag};
use crate::potential::{DriveSpec, DriveVariant};
use crate::tables::ParamTable;

/// Norm drift that aborts a propagation.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// dt·max(ω, ‖H‖) must not exceed this.
pub const DT_RULE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    GroundStateStatic,
    AllLeftFock,
}

impl std::str::FromStr for InitialState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground-state-static" | "ground" => Ok(Self::GroundStateStatic),
            "all-left-fock" | "all-left" => Ok(Self::AllLeftFock),
            _ => Err(Error::Config(format!("unknown initial state '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub n_atoms: usize,
    pub amplitudes: Vec<C64>,
}

impl SpinState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Precondition("empty state".into()));
        }
        Ok(Self { n_atoms: amplitudes.len() - 1, amplitudes })
    }

    pub fn fock(n_atoms: usize, k: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); n_atoms + 1];
        a[k] = C64::new(1.0, 0.0);
        Self { n_atoms, amplitudes: a }
    }

    pub fn all_left(n_atoms: usize) -> Self {
        Self::fock(n_atoms, n_atoms)
    }

    /// (a_L† + a_R†)^N |0⟩, normalized: binomial amplitudes.
    pub fn symmetric_coherent(n_atoms: usize) -> Self {
        let n = n_atoms;
        let mut ln_fact = vec![0.0f64; n + 1];
        for k in 1..=n {
            ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
        }
        let amps = (0..=n)
            .map(|k| {
                let ln_binom = ln_fact[n] - ln_fact[k] - ln_fact[n - k];
                C64::new((0.5 * ln_binom - 0.5 * n as f64 * 2f64.ln()).exp(), 0.0)
            })
            .collect();
        Self { n_atoms: n, amplitudes: amps }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub jz_mean: f64,
    pub jz_var: f64,
    pub frag: f64,
}

/// ⟨J_z⟩, Var(J_z) and (ρ11 − ρ22)/N from the 2×2 one-body density matrix.
pub fn observables(state: &SpinState) -> Observables {
    let n = state.n_atoms;
    let half = 0.5 * n as f64;
    let mut jz = 0.0;
    let mut jz2 = 0.0;
    let mut n_left = 0.0;
    let mut lr = C64::new(0.0, 0.0);
    for (k, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        let m = k as f64 - half;
        jz += p * m;
        jz2 += p * m * m;
        n_left += p * k as f64;
        if k < n {
            // a_L† a_R |k⟩ = sqrt((k+1)(N−k)) |k+1⟩
            lr += state.amplitudes[k + 1].conj() * a * (((k + 1) * (n - k)) as f64).sqrt();
        }
    }
    let frag = if n == 0 {
        1.0
    } else {
        let d = 0.5 * (2.0 * n_left - n as f64);
        2.0 * (d * d + lr.norm_sqr()).sqrt() / n as f64
    };
    Observables { jz_mean: jz, jz_var: (jz2 - jz * jz).max(0.0), frag }
}

/// H = −Ω J_x − ΔE J_z + 2κ J_z² as a tridiagonal matrix.
pub fn hamiltonian(n_atoms: usize, omega: f64, delta_e: f64, kappa: f64) -> Tridiag {
    let n = n_atoms;
    let half = 0.5 * n as f64;
    let diag = (0..=n)
        .map(|k| {
            let m = k as f64 - half;
            -delta_e * m + 2.0 * kappa * m * m
        })
        .collect();
    let off = (0..n).map(|k| -0.5 * omega * (((k + 1) * (n - k)) as f64).sqrt()).collect();
    Tridiag { diag, off }
}

/// Where Ω(t) and ΔE(t) come from.
#[derive(Clone)]
pub enum ParamSource {
    /// λ(t) = λ0 + λ1 sin ωt through a precomputed table.
    Table { table: Arc<ParamTable>, drive: DriveSpec },
    Static { omega: f64, delta_e: f64 },
    Custom(Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
}

impl std::fmt::Debug for ParamSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Table { drive, .. } => f.debug_struct("Table").field("drive", drive).finish(),
            Self::Static { omega, delta_e } => f.debug_struct("Static").field("omega", omega).field("delta_e", delta_e).finish(),
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DrivenTmSystem {
    pub n_atoms: usize,
    pub kappa: f64,
    pub source: ParamSource,
    /// Drive frequency entering the step-size rule (0 when undriven).
    pub drive_omega: f64,
}

impl DrivenTmSystem {
    /// Driven system from a parameter table; κ is held at its λ0 value.
    pub fn from_table(table: Arc<ParamTable>, drive: DriveSpec, n_atoms: usize) -> Result<Self> {
        if !(drive.omega > 0.0) {
            return Err(Error::Config("drive frequency must be positive".into()));
        }
        let l0 = table.lambda0;
        if !table.covers(l0 - drive.lambda1, l0 + drive.lambda1) {
            let (lo, hi) = table.range();
            let lambda = if l0 - drive.lambda1 < lo { l0 - drive.lambda1 } else { l0 + drive.lambda1 };
            return Err(Error::Domain { lambda, lo, hi });
        }
        let kappa = table.kappa(n_atoms);
        Ok(Self { n_atoms, kappa, source: ParamSource::Table { table, drive }, drive_omega: drive.omega })
    }

    pub fn static_system(n_atoms: usize, omega: f64, delta_e: f64, kappa: f64) -> Self {
        Self { n_atoms, kappa, source: ParamSource::Static { omega, delta_e }, drive_omega: 0.0 }
    }

    pub fn custom(n_atoms: usize, kappa: f64, drive_omega: f64, f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        Self { n_atoms, kappa, source: ParamSource::Custom(Arc::new(f)), drive_omega }
    }

    /// (Ω(t), ΔE(t)).
    pub fn params_at(&self, t: f64) -> (f64, f64) {
        match &self.source {
            ParamSource::Static { omega, delta_e } => (*omega, *delta_e),
            ParamSource::Custom(f) => f(t),
            ParamSource::Table { table, drive } => {
                let l0 = table.lambda0;
                let (om, de) = table.eval(drive.lambda_at(l0, t));
                match drive.variant {
                    DriveVariant::Full => (om, de),
                    DriveVariant::ConstantOmega => (table.eval(l0).0, de),
                    DriveVariant::ConstantDeltaE => (om, table.eval(l0).1),
                }
            }
        }
    }

    pub fn hamiltonian_at(&self, t: f64) -> Tridiag {
        let (om, de) = self.params_at(t);
        hamiltonian(self.n_atoms, om, de, self.kappa)
    }

    /// Largest half spectral width of H(t) over sample times in one drive period.
    /// The identity component of H only contributes a global phase and is excluded.
    pub fn norm_estimate(&self) -> f64 {
        let times: Vec<f64> = if self.drive_omega > 0.0 {
            let period = 2.0 * std::f64::consts::PI / self.drive_omega;
            (0..16).map(|i| period * i as f64 / 16.0).collect()
        } else {
            vec![0.0]
        };
        times
            .iter()
            .map(|&t| {
                let (lo, hi) = self.hamiltonian_at(t).bounds();
                0.5 * (hi - lo)
            })
            .fold(0.0, f64::max)
    }

    /// Largest step allowed by the dt rule.
    pub fn max_dt(&self) -> f64 {
        DT_RULE / self.drive_omega.max(self.norm_estimate()).max(1e-12)
    }
}

pub fn build_hamiltonian(sys: &DrivenTmSystem, t: f64) -> Tridiag {
    sys.hamiltonian_at(t)
}

/// Lowest eigenvector of a tridiagonal Hamiltonian, sign fixed so the largest component is positive.
pub fn ground_state(h: &Tridiag) -> SpinState {
    let eig = SymmetricEigen::new(h.to_dense());
    let k = (0..eig.eigenvalues.len()).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
    let v = eig.eigenvectors.column(k);
    let big = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
    let s = big.signum() / v.norm();
    SpinState { n_atoms: h.dim() - 1, amplitudes: v.iter().map(|x| C64::new(x * s, 0.0)).collect() }
}

pub fn prepare_initial_state(sys: &DrivenTmSystem, mode: InitialState) -> SpinState {
    match mode {
        InitialState::AllLeftFock => SpinState::all_left(sys.n_atoms),
        InitialState::GroundStateStatic => ground_state(&sys.hamiltonian_at(0.0)),
    }
}

/// Recorded observables along a trajectory. `jz_var` and `frag` are absent for mean-field runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub n_atoms: usize,
    pub times: Vec<f64>,
    pub jz_mean_over_n: Vec<f64>,
    pub jz_var: Option<Vec<f64>>,
    pub frag: Option<Vec<f64>>,
    /// (1/t)∫⟨J_z⟩/N, trapezoidal on the recorded samples (first entry is the initial value).
    pub jz_timeavg: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn new(n_atoms: usize, mean_field: bool) -> Self {
        Self {
            n_atoms,
            times: Vec::new(),
            jz_mean_over_n: Vec::new(),
            jz_var: if mean_field { None } else { Some(Vec::new()) },
            frag: if mean_field { None } else { Some(Vec::new()) },
            jz_timeavg: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, jz_over_n: f64, var: Option<f64>, frag: Option<f64>) {
        let avg = match (self.times.last(), self.jz_mean_over_n.last(), self.jz_timeavg.last()) {
            (Some(&t0), Some(&y0), Some(&a0)) if t > 0.0 => (a0 * t0 + 0.5 * (y0 + jz_over_n) * (t - t0)) / t,
            _ => jz_over_n,
        };
        self.times.push(t);
        self.jz_mean_over_n.push(jz_over_n);
        if let (Some(v), Some(x)) = (self.jz_var.as_mut(), var) {
            v.push(x);
        }
        if let (Some(v), Some(x)) = (self.frag.as_mut(), frag) {
            v.push(x);
        }
        self.jz_timeavg.push(avg);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// (1/T)∫₀^T ⟨J_z⟩/N dt by the trapezoid rule on the recorded samples.
pub fn time_averaged_imbalance(record: &TrajectoryRecord, t_avg: f64) -> Result<f64> {
    let ts = &record.times;
    let ys = &record.jz_mean_over_n;
    if ts.is_empty() || !(t_avg > 0.0) {
        return Err(Error::Precondition("empty record or non-positive averaging window".into()));
    }
    let last = *ts.last().unwrap();
    if t_avg > last * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("averaging window {t_avg} exceeds record length {last}")));
    }
    let mut acc = 0.0;
    for i in 1..ts.len() {
        let (t0, t1) = (ts[i - 1], ts[i]);
        if t0 >= t_avg {
            break;
        }
        let (y0, y1) = (ys[i - 1], ys[i]);
        if t1 <= t_avg {
            acc += 0.5 * (y0 + y1) * (t1 - t0);
        } else {
            let y = y0 + (y1 - y0) * (t_avg - t0) / (t1 - t0);
            acc += 0.5 * (y0 + y) * (t_avg - t0);
        }
    }
    Ok(acc / t_avg)
}

/// Step count and step size: the largest uniform step within `dt` that divides t_final.
pub fn step_plan(t_final: f64, dt: f64) -> (usize, f64) {
    let steps = ((t_final / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (steps, t_final / steps as f64)
}

/// Time-ordered propagation by the fourth-order commutator-free Magnus step: two exact
/// exponentials of H frozen at blended Gauss-point parameters per step (one exponential when
/// undriven). Observables are recorded every `stride` steps and at t_final.
pub fn propagate(sys: &DrivenTmSystem, state0: &SpinState, t_final: f64, dt: f64, stride: usize) -> Result<TrajectoryRecord> {
    Ok(propagate_with_state(sys, state0, t_final, dt, stride)?.0)
}

/// [`propagate`] that also returns the final state.
pub fn propagate_with_state(
    sys: &DrivenTmSystem,
    state0: &SpinState,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<(TrajectoryRecord, SpinState)> {
    if state0.n_atoms != sys.n_atoms {
        return Err(Error::Precondition("state and system atom numbers differ".into()));
    }
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::Precondition("need dt > 0 and t_final ≥ 0".into()));
    }
    let limit = sys.max_dt();
    if dt > limit * (1.0 + 1e-9) {
        return Err(Error::Precondition(format!("dt = {dt} violates the step rule (max {limit})")));
    }
    let n = sys.n_atoms;
    let nf = n.max(1) as f64;
    let stride = stride.max(1);
    let (steps, h) = step_plan(t_final, dt);
    let mut psi = state0.amplitudes.clone();
    let mut state = SpinState { n_atoms: n, amplitudes: Vec::new() };
    let mut rec = TrajectoryRecord::new(n, false);
    let mut record = |t: f64, psi: &[C64], rec: &mut TrajectoryRecord| -> Result<()> {
        state.amplitudes.clear();
        state.amplitudes.extend_from_slice(psi);
        let drift = (state.norm() - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift { drift });
        }
        let o = observables(&state);
        rec.push(t, o.jz_mean / nf, Some(o.jz_var), Some(o.frag));
        Ok(())
    };
    record(0.0, &psi, &mut rec)?;
    if t_final == 0.0 {
        return Ok((rec, SpinState { n_atoms: n, amplitudes: psi }));
    }
    let mut cheb = Chebyshev::new(n + 1);
    let radius = sys.norm_estimate();
    let mut ham = hamiltonian(n, 0.0, 0.0, sys.kappa);
    let half = 0.5 * n as f64;
    let jz: Vec<f64> = (0..=n).map(|k| k as f64 - half).collect();
    let hop: Vec<f64> = (0..n).map(|k| -0.5 * (((k + 1) * (n - k)) as f64).sqrt()).collect();
    let fill = |ham: &mut Tridiag, om: f64, de: f64| {
        for k in 0..=n {
            ham.diag[k] = -de * jz[k] + 2.0 * sys.kappa * jz[k] * jz[k];
        }
        for k in 0..n {
            ham.off[k] = om * hop[k];
        }
    };
    let mut advance = |ham: &Tridiag, tau: f64, psi: &mut [C64]| {
        // a fixed radius keeps r·τ constant so the expansion coefficients are reused
        let (lo, hi) = ham.bounds();
        let c = 0.5 * (lo + hi);
        let r = radius.max(0.5 * (hi - lo));
        cheb.step_tridiag(ham, (c - r, c + r), tau, psi);
    };
    let driven = sys.drive_omega > 0.0;
    for s in 0..steps {
        let t0 = s as f64 * h;
        if driven {
            let p1 = sys.params_at(t0 + magnus4::NODES[0] * h);
            let p2 = sys.params_at(t0 + magnus4::NODES[1] * h);
            for k in 0..2 {
                fill(&mut ham, magnus4::blend(k, p1.0, p2.0), magnus4::blend(k, p1.1, p2.1));
                advance(&ham, 0.5 * h, &mut psi);
            }
        } else {
            let (om, de) = sys.params_at(t0);
            fill(&mut ham, om, de);
            advance(&ham, h, &mut psi);
        }
        if (s + 1) % stride == 0 || s + 1 == steps {
            record((s + 1) as f64 * h, &psi, &mut rec)?;
        }
    }
    Ok((rec, SpinState { n_atoms: n, amplitudes: psi }))
}

/// Propagates with the largest admissible step, recording roughly every `output_dt`.
pub fn propagate_auto(sys: &DrivenTmSystem, state0: &SpinState, t_final: f64, output_dt: f64) -> Result<TrajectoryRecord> {
    let dt = sys.max_dt();
    let (_, h) = step_plan(t_final, dt);
    let stride = ((output_dt / h).floor() as usize).max(1);
    propagate(sys, state0, t_final, dt, stride)
}
