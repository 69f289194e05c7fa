//! Uniform 1D grids and kinetic-energy operators.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kinetic {
    /// Periodic Fourier-grid representation of −½∂², consistent with FFT propagation.
    Spectral,
    /// 3-point Laplacian with zero boundary values outside the box.
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub kinetic: Kinetic,
}

impl Grid {
    pub fn spectral(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        Self { x_min, x_max, n_points, kinetic: Kinetic::Spectral }.validated()
    }

    pub fn finite_difference(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        Self { x_min, x_max, n_points, kinetic: Kinetic::FiniteDifference }.validated()
    }

    /// Grid used for stationary problems: 256 points on [−4, 4).
    pub fn production() -> Self {
        Self { x_min: -4.0, x_max: 4.0, n_points: 256, kinetic: Kinetic::Spectral }
    }

    /// Grid used for real-time GP propagation: 128 points on [−4, 4).
    pub fn dynamics() -> Self {
        Self { x_min: -4.0, x_max: 4.0, n_points: 128, kinetic: Kinetic::Spectral }
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.x_max > self.x_min) || self.n_points < 2 {
            return Err(Error::Config(format!(
                "invalid grid [{}, {}) with {} points",
                self.x_min, self.x_max, self.n_points
            )));
        }
        if self.kinetic == Kinetic::Spectral && self.n_points % 2 != 0 {
            return Err(Error::Config("spectral grid needs an even number of points".into()));
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Spacing. Spectral grids are periodic on [x_min, x_max); finite-difference
    /// grids place points strictly inside (x_min, x_max).
    pub fn h(&self) -> f64 {
        match self.kinetic {
            Kinetic::Spectral => (self.x_max - self.x_min) / self.n_points as f64,
            Kinetic::FiniteDifference => (self.x_max - self.x_min) / (self.n_points + 1) as f64,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        match self.kinetic {
            Kinetic::Spectral => self.x_min + i as f64 * self.h(),
            Kinetic::FiniteDifference => self.x_min + (i + 1) as f64 * self.h(),
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let l = self.x_max - self.x_min;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                2.0 * PI * m / l
            })
            .collect()
    }

    /// Largest eigenvalue of the kinetic operator.
    pub fn kinetic_max(&self) -> f64 {
        let h = self.h();
        match self.kinetic {
            Kinetic::Spectral => 0.5 * (PI / h).powi(2),
            Kinetic::FiniteDifference => 2.0 / (h * h),
        }
    }

    /// Dense matrix of −½∂².
    pub fn kinetic_matrix(&self) -> DMatrix<f64> {
        let n = self.n_points;
        let h = self.h();
        match self.kinetic {
            Kinetic::Spectral => {
                let k = self.wavenumbers();
                let row: Vec<f64> = (0..n)
                    .map(|d| k.iter().map(|&kk| 0.5 * kk * kk * (kk * d as f64 * h).cos()).sum::<f64>() / n as f64)
                    .collect();
                DMatrix::from_fn(n, n, |i, j| row[(i + n - j) % n])
            }
            Kinetic::FiniteDifference => {
                let t = 0.5 / (h * h);
                DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        2.0 * t
                    } else if i.abs_diff(j) == 1 {
                        -t
                    } else {
                        0.0
                    }
                })
            }
        }
    }

    /// h·Σ f.
    pub fn integrate(&self, f: impl IntoIterator<Item = f64>) -> f64 {
        self.h() * f.into_iter().sum::<f64>()
    }
}
