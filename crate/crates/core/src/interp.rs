//! One-dimensional interpolants over sorted knots.

use crate::error::{Error, Result};

fn check_knots(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Config(format!("knot arrays differ in length ({} vs {})", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Config("need at least two knots".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("knots must be strictly increasing".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Config("knot values must be finite".into()));
    }
    Ok(())
}

fn segment(x: &[f64], t: f64) -> usize {
    match x.partition_point(|&k| k <= t) {
        0 => 0,
        i if i >= x.len() => x.len() - 2,
        i => i - 1,
    }
}

fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (t - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let v = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    let dv = d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1;
    (v, dv)
}

/// Shape-preserving piecewise cubic (Fritsch–Carlson).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_knots(&x, &y)?;
        let n = x.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            m[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m[i] = tau * a * delta[i];
                m[i + 1] = tau * b * delta[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Value and first derivative. Caller is responsible for domain checks.
    pub fn eval_with_deriv(&self, t: f64) -> (f64, f64) {
        let i = segment(&self.x, t);
        hermite(self.x[i], self.x[i + 1], self.y[i], self.y[i + 1], self.m[i], self.m[i + 1], t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_deriv(t).0
    }
}

/// Natural cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_knots(&x, &y)?;
        let n = x.len();
        // second derivatives via Thomas algorithm
        let mut c2 = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
                if i > 1 {
                    let w = h0 / diag[i - 1];
                    diag[i] -= w * upper[i - 1];
                    rhs[i] -= w * rhs[i - 1];
                }
            }
            for i in (1..n - 1).rev() {
                c2[i] = (rhs[i] - upper[i] * c2[i + 1]) / diag[i];
            }
        }
        // store as Hermite slopes so evaluation shares code with MonotoneCubic
        let mut m = vec![0.0; n];
        for i in 0..n {
            m[i] = if i + 1 < n {
                let h = x[i + 1] - x[i];
                (y[i + 1] - y[i]) / h - h * (2.0 * c2[i] + c2[i + 1]) / 6.0
            } else {
                let h = x[i] - x[i - 1];
                (y[i] - y[i - 1]) / h + h * (c2[i - 1] + 2.0 * c2[i]) / 6.0
            };
        }
        Ok(Self { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn eval_with_deriv(&self, t: f64) -> (f64, f64) {
        let i = segment(&self.x, t);
        hermite(self.x[i], self.x[i + 1], self.y[i], self.y[i + 1], self.m[i], self.m[i + 1], t)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_deriv(t).0
    }
}
