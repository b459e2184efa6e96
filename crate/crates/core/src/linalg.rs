//! Small dense and banded linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Spectral norm (largest singular value).
pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Largest absolute entry of a vector; zero for an empty vector.
pub fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `num / scale`, or `num` itself when the scale vanishes (so exact zeros stay zero).
pub fn scaled(num: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        num / scale
    } else {
        num
    }
}

/// Relative commutator size `‖XY − YX‖ / (‖X‖‖Y‖)` in Frobenius norm.
pub fn commutator_gap(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let c = x * y - y * x;
    scaled(c.norm(), x.norm() * y.norm())
}

/// 2-norm condition number from singular values.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `(D² + μ) w = f` on a uniform grid with homogeneous Dirichlet ends.
///
/// `rhs` holds the forcing at all `n` nodes (end values are ignored); the
/// returned vector has exact zeros at both ends.
pub fn solve_dirichlet_helmholtz(h: f64, mu: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    let inner = n - 2;
    let off = 1.0 / (h * h);
    let diag = -2.0 / (h * h) + mu;
    // Thomas sweep; the system is strictly diagonally dominant since mu < 0.
    let mut c_prime = vec![0.0; inner];
    let mut d_prime = vec![0.0; inner];
    c_prime[0] = off / diag;
    d_prime[0] = rhs[1] / diag;
    for i in 1..inner {
        let denom = diag - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        d_prime[i] = (rhs[i + 1] - off * d_prime[i - 1]) / denom;
    }
    out[inner] = d_prime[inner - 1];
    for i in (0..inner - 1).rev() {
        out[i + 1] = d_prime[i] - c_prime[i] * out[i + 2];
    }
    out
}

/// Fourth-order first derivative of uniformly spaced samples (needs `n ≥ 5`).
pub fn derivative_4th(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 5, "derivative_4th needs at least 5 samples");
    let s = 1.0 / (12.0 * h);
    let mut d = vec![0.0; n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
    }
    let l = n - 1;
    d[l - 1] = (3.0 * f[l] + 10.0 * f[l - 1] - 18.0 * f[l - 2] + 6.0 * f[l - 3] - f[l - 4]) * s;
    d[l] = (25.0 * f[l] - 48.0 * f[l - 1] + 36.0 * f[l - 2] - 16.0 * f[l - 3] + 3.0 * f[l - 4]) * s;
    d
}

/// Four-point Lagrange interpolation on a uniform grid starting at `x0`.
pub fn interp_cubic(x0: f64, h: f64, samples: &[f64], x: f64) -> f64 {
    let n = samples.len();
    debug_assert!(n >= 4);
    let t = (x - x0) / h;
    let nearest = t.round();
    if (t - nearest).abs() < 1e-12 && nearest >= 0.0 && (nearest as usize) < n {
        return samples[nearest as usize];
    }
    let i = t.floor().max(0.0) as usize;
    let j0 = i.saturating_sub(1).min(n - 4);
    let mut acc = 0.0;
    for a in 0..4 {
        let mut w = 1.0;
        let ta = (j0 + a) as f64;
        for b in 0..4 {
            if a != b {
                let tb = (j0 + b) as f64;
                w *= (t - tb) / (ta - tb);
            }
        }
        acc += w * samples[j0 + a];
    }
    acc
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, solved by
/// Gaussian elimination with partial pivoting inside the band.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    /// Build from `(row, col, value)` triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut kl = 0;
        let mut ku = 0;
        for &(i, j, _) in triplets {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        // Room for pivoting fill-in above the diagonal.
        let width = 2 * kl + ku + 1;
        let mut m = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        };
        for &(i, j, v) in triplets {
            let idx = m.index(i, j);
            m.data[idx] += v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            0.0
        } else {
            self.data[self.index(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.kl + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Solve `A x = b`, consuming a copy of the matrix.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let n = self.n;
        let mut a = self.clone();
        let mut rhs = b.to_vec();
        let upper = self.kl + self.ku;
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + upper).min(n - 1);
            let (mut p, mut best) = (k, a.get(k, k).abs());
            for i in k + 1..=last_row {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= f64::EPSILON * scale * 1e-6 {
                return Err(Error::Anomaly(format!(
                    "banded system singular at column {k}"
                )));
            }
            if p != k {
                for j in k..=last_col {
                    let ik = a.index(k, j);
                    let ip = a.index(p, j);
                    a.data.swap(ik, ip);
                }
                rhs.swap(k, p);
            }
            let pivot = a.get(k, k);
            for i in k + 1..=last_row {
                let l = a.get(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                for j in k..=last_col {
                    let akj = a.get(k, j);
                    let idx = a.index(i, j);
                    a.data[idx] -= l * akj;
                }
                rhs[i] -= l * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let last_col = (k + upper).min(n - 1);
            let mut s = rhs[k];
            for j in k + 1..=last_col {
                s -= a.get(k, j) * x[j];
            }
            x[k] = s / a.get(k, k);
        }
        Ok(x)
    }
}
