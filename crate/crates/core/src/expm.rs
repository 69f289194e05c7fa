//! Action of exp(−iH·dt) on a state for real symmetric H: Chebyshev and Lanczos.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::bessel::bessel_j_all;
use crate::error::{Error, Result};

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    /// off[k] couples k and k+1.
    pub off: Vec<f64>,
}

impl Tridiag {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.diag.len();
        for k in 0..n {
            let mut acc = x[k] * self.diag[k];
            if k > 0 {
                acc += x[k - 1] * self.off[k - 1];
            }
            if k + 1 < n {
                acc += x[k + 1] * self.off[k];
            }
            y[k] = acc;
        }
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..n {
            let mut r = 0.0;
            if k > 0 {
                r += self.off[k - 1].abs();
            }
            if k + 1 < n {
                r += self.off[k].abs();
            }
            lo = lo.min(self.diag[k] - r);
            hi = hi.max(self.diag[k] + r);
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.off[i]
            } else if i == j + 1 {
                self.off[j]
            } else {
                0.0
            }
        })
    }
}

/// Fourth-order commutator-free Magnus step from the Gauss points t + c·h, c = ½ ∓ √3/6.
/// One step of length h is exp(−i·h/2·H̃₂)·exp(−i·h/2·H̃₁) with H̃₁ = w₁H(t₁) + w₂H(t₂),
/// H̃₂ = w₂H(t₁) + w₁H(t₂); the weights sum to one, so H̃ is H at blended parameters
/// whenever H depends affinely on them.
pub mod magnus4 {
    const R: f64 = 0.288_675_134_594_812_9; // √3/6

    /// Sample offsets within a step, as fractions of h.
    pub const NODES: [f64; 2] = [0.5 - R, 0.5 + R];
    /// Weights (w₁, w₂) of the first sub-step; the second uses them swapped.
    pub const WEIGHTS: [f64; 2] = [0.5 + 2.0 * R, 0.5 - 2.0 * R];

    /// Blend of the two samples for sub-step `k` (0 applied first).
    pub fn blend(k: usize, first: f64, second: f64) -> f64 {
        if k == 0 {
            WEIGHTS[0] * first + WEIGHTS[1] * second
        } else {
            WEIGHTS[1] * first + WEIGHTS[0] * second
        }
    }
}

/// Reusable buffers for Chebyshev propagation.
#[derive(Debug, Clone, Default)]
pub struct Chebyshev {
    t_prev: Vec<C64>,
    t_cur: Vec<C64>,
    t_next: Vec<C64>,
    acc: Vec<C64>,
    /// Expansion coefficients of the last step, keyed by r·dt.
    coef: Option<(f64, Vec<f64>)>,
}

impl Chebyshev {
    pub fn new(n: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); n];
        Self { t_prev: z.clone(), t_cur: z.clone(), t_next: z.clone(), acc: z, coef: None }
    }

    /// Bessel coefficients J_k(z), cut where they drop below 1e−18.
    fn prepare(&mut self, z: f64) {
        if self.coef.as_ref().is_some_and(|(z0, _)| *z0 == z) {
            return;
        }
        let nmax = (z.ceil() as usize) + 40;
        let mut j = bessel_j_all(nmax, z);
        let start = (z.ceil() as usize).max(1);
        if let Some(k) = (start..=nmax).find(|&k| j[k].abs() < 1e-18) {
            j.truncate(k + 1);
        }
        self.coef = Some((z, j));
    }

    /// As [`Chebyshev::step`] for a tridiagonal H, with the recurrence fused into one pass.
    pub fn step_tridiag(&mut self, h: &Tridiag, (emin, emax): (f64, f64), dt: f64, psi: &mut [C64]) {
        let n = psi.len();
        if self.acc.len() != n {
            *self = Self::new(n);
        }
        let c = 0.5 * (emax + emin);
        let r = (0.5 * (emax - emin)).max(1e-300);
        self.prepare(r * dt);
        let j = &self.coef.as_ref().unwrap().1;
        // scaled operator (H − c)/r
        let a: Vec<f64> = h.diag.iter().map(|d| (d - c) / r).collect();
        let b: Vec<f64> = h.off.iter().map(|o| o / r).collect();
        // y = 2^first·(scaled H)·x − sub, acc += coef·y, with the ends peeled off
        let sweep = |x: &[C64], sub: Option<&[C64]>, two: f64, coef: C64, y: &mut [C64], acc: &mut [C64]| {
            if n == 1 {
                let v = two * x[0] * a[0] - sub.map_or(C64::new(0.0, 0.0), |p| p[0]);
                y[0] = v;
                acc[0] += v * coef;
                return;
            }
            let p = |i: usize| sub.map_or(C64::new(0.0, 0.0), |p| p[i]);
            let v = two * (x[0] * a[0] + x[1] * b[0]) - p(0);
            y[0] = v;
            acc[0] += v * coef;
            match sub {
                Some(p) => {
                    for i in 1..n - 1 {
                        let v = two * (x[i] * a[i] + x[i - 1] * b[i - 1] + x[i + 1] * b[i]) - p[i];
                        y[i] = v;
                        acc[i] += v * coef;
                    }
                }
                None => {
                    for i in 1..n - 1 {
                        let v = two * (x[i] * a[i] + x[i - 1] * b[i - 1] + x[i + 1] * b[i]);
                        y[i] = v;
                        acc[i] += v * coef;
                    }
                }
            }
            let l = n - 1;
            let v = two * (x[l] * a[l] + x[l - 1] * b[l - 1]) - p(l);
            y[l] = v;
            acc[l] += v * coef;
        };
        self.t_prev.copy_from_slice(psi);
        for i in 0..n {
            self.acc[i] = self.t_prev[i] * j[0];
        }
        if j.len() > 1 {
            sweep(&self.t_prev, None, 1.0, C64::new(0.0, -2.0 * j[1]), &mut self.t_cur, &mut self.acc);
        }
        let mut phase = C64::new(0.0, -1.0);
        for jk in j.iter().skip(2) {
            phase *= C64::new(0.0, -1.0);
            sweep(&self.t_cur, Some(&self.t_prev), 2.0, phase * (2.0 * jk), &mut self.t_next, &mut self.acc);
            std::mem::swap(&mut self.t_prev, &mut self.t_cur);
            std::mem::swap(&mut self.t_cur, &mut self.t_next);
        }
        let global = C64::from_polar(1.0, -c * dt);
        for i in 0..n {
            psi[i] = self.acc[i] * global;
        }
    }

    /// psi ← exp(−iH·dt)·psi, where `apply` computes y = H·x and the spectrum of H lies in [emin, emax].
    pub fn step<F>(&mut self, apply: F, (emin, emax): (f64, f64), dt: f64, psi: &mut [C64])
    where
        F: Fn(&[C64], &mut [C64]),
    {
        let n = psi.len();
        if self.acc.len() != n {
            *self = Self::new(n);
        }
        let c = 0.5 * (emax + emin);
        let r = (0.5 * (emax - emin)).max(1e-300);
        self.prepare(r * dt);
        let j = &self.coef.as_ref().unwrap().1;
        let kmax = j.len() - 1;
        let scale = 1.0 / r;
        // T0
        self.t_prev.copy_from_slice(psi);
        for i in 0..n {
            self.acc[i] = self.t_prev[i] * j[0];
        }
        if kmax >= 1 {
            apply(&self.t_prev, &mut self.t_cur);
            for i in 0..n {
                self.t_cur[i] = (self.t_cur[i] - self.t_prev[i] * c) * scale;
            }
            let coef = C64::new(0.0, -2.0 * j[1]);
            for i in 0..n {
                self.acc[i] += self.t_cur[i] * coef;
            }
        }
        let mut phase = C64::new(0.0, -1.0);
        for jk in j.iter().skip(2) {
            apply(&self.t_cur, &mut self.t_next);
            for i in 0..n {
                self.t_next[i] = (self.t_next[i] - self.t_cur[i] * c) * (2.0 * scale) - self.t_prev[i];
            }
            phase *= C64::new(0.0, -1.0);
            let coef = phase * (2.0 * jk);
            for i in 0..n {
                self.acc[i] += self.t_next[i] * coef;
            }
            std::mem::swap(&mut self.t_prev, &mut self.t_cur);
            std::mem::swap(&mut self.t_cur, &mut self.t_next);
        }
        let global = C64::from_polar(1.0, -c * dt);
        for i in 0..n {
            psi[i] = self.acc[i] * global;
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// psi ← exp(−iH·dt)·psi by a Lanczos (Krylov) projection with full reorthogonalization.
/// Grows the subspace until the error estimate falls below `tol`.
pub fn lanczos_step<F>(apply: F, dt: f64, psi: &mut [C64], tol: f64, max_dim: usize) -> Result<()>
where
    F: Fn(&[C64], &mut [C64]),
{
    let n = psi.len();
    let beta0 = norm(psi);
    if beta0 == 0.0 {
        return Ok(());
    }
    let mut basis: Vec<Vec<C64>> = vec![psi.iter().map(|x| x / beta0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); n];
    let max_dim = max_dim.min(n).max(1);
    loop {
        let j = basis.len() - 1;
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for v in &basis {
            let c = dot(v, &w);
            for i in 0..n {
                w[i] -= v[i] * c;
            }
        }
        let b = norm(&w);
        let m = alpha.len();
        // exponential of the projected tridiagonal; last-row coefficient times b estimates the error
        let coeffs = small_expm(&alpha, &beta, dt);
        let err = b * coeffs[m - 1].norm();
        if err < tol || m == max_dim || b < 1e-14 {
            if err >= tol && b >= 1e-14 {
                return Err(Error::Convergence(format!("Lanczos step: error estimate {err:.3e} with {m} vectors")));
            }
            for i in 0..n {
                psi[i] = basis.iter().zip(&coeffs).map(|(v, c)| v[i] * c).sum::<C64>() * beta0;
            }
            return Ok(());
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// Lowest eigenpair of a Hermitian operator by Lanczos with full reorthogonalization,
/// started from `v0`. Stops when the Ritz residual drops below `tol`.
pub fn lanczos_ground<F>(apply: F, v0: &[C64], tol: f64, max_dim: usize) -> Result<(f64, Vec<C64>)>
where
    F: Fn(&[C64], &mut [C64]),
{
    let n = v0.len();
    let b0 = norm(v0);
    if b0 == 0.0 {
        return Err(Error::Precondition("zero start vector".into()));
    }
    let mut basis: Vec<Vec<C64>> = vec![v0.iter().map(|x| x / b0).collect()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); n];
    let max_dim = max_dim.min(n).max(1);
    loop {
        let j = basis.len() - 1;
        apply(&basis[j], &mut w);
        alpha.push(dot(&basis[j], &w).re);
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for i in 0..n {
                    w[i] -= v[i] * c;
                }
            }
        }
        let b = norm(&w);
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, k| {
            if i == k {
                alpha[i]
            } else if k == i + 1 {
                beta[i]
            } else if i == k + 1 {
                beta[k]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let k = (0..m).min_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c])).unwrap();
        let resid = b * eig.eigenvectors[(m - 1, k)].abs();
        if resid < tol || m == max_dim || b < 1e-14 {
            if resid >= tol && b >= 1e-14 {
                return Err(Error::Convergence(format!("Lanczos ground state: residual {resid:.3e} with {m} vectors")));
            }
            let mut out = vec![C64::new(0.0, 0.0); n];
            for (v, c) in basis.iter().zip(eig.eigenvectors.column(k).iter()) {
                for i in 0..n {
                    out[i] += v[i] * *c;
                }
            }
            let s = norm(&out);
            out.iter_mut().for_each(|x| *x /= s);
            return Ok((eig.eigenvalues[k], out));
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// First column of exp(−iT·dt) for the symmetric tridiagonal T = tri(alpha, beta).
fn small_expm(alpha: &[f64], beta: &[f64], dt: f64) -> Vec<C64> {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if j == i + 1 {
            beta[i]
        } else if i == j + 1 {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let v = eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)];
                    C64::from_polar(v, -eig.eigenvalues[k] * dt)
                })
                .sum()
        })
        .collect()
}
