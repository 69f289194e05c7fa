//! Bessel functions of the first kind of integer order.

/// J_0(z) … J_nmax(z) by Miller's backward recurrence, normalized with J_0 + 2ΣJ_2k = 1.
pub fn bessel_j_all(nmax: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let az = z.abs();
    let big = nmax.max(az as usize);
    let mut m = big + 20 + (40.0 * big as f64).sqrt() as usize;
    m += m % 2;
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut sum = 0.0;
    let mut vals = vec![0.0; m + 1];
    vals[m] = j;
    for k in (1..=m).rev() {
        let jm1 = 2.0 * k as f64 / az * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
            jp1 *= 1e-250;
            j *= 1e-250;
        }
    }
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            sum += v;
        } else if k % 2 == 0 {
            sum += 2.0 * v;
        }
    }
    for k in 0..=nmax {
        let mut v = vals[k] / sum;
        if z < 0.0 && k % 2 == 1 {
            v = -v;
        }
        out[k] = v;
    }
    out
}

/// J_n(z) for any integer n.
pub fn bessel_j(n: i64, z: f64) -> f64 {
    let a = n.unsigned_abs() as usize;
    let v = bessel_j_all(a, z)[a];
    if n < 0 && a % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Table of J_l(z) for l in −lmax..=lmax.
#[derive(Debug, Clone)]
pub struct BesselTable {
    lmax: usize,
    vals: Vec<f64>,
}

impl BesselTable {
    pub fn new(lmax: usize, z: f64) -> Self {
        Self { lmax, vals: bessel_j_all(lmax, z) }
    }

    pub fn get(&self, l: i64) -> f64 {
        let a = l.unsigned_abs() as usize;
        if a > self.lmax {
            return 0.0;
        }
        let v = self.vals[a];
        if l < 0 && a % 2 == 1 {
            -v
        } else {
            v
        }
    }
}
