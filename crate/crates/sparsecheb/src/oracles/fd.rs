//! Finite-difference building blocks shared by the solver-backed oracles.

use std::f64::consts::PI;

use crate::linalg::gemm;

/// LU factors of a tridiagonal matrix (no pivoting; used for diagonally
/// dominant systems only).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    sub: Vec<f64>,
    sup: Vec<f64>,
    inv_pivot: Vec<f64>,
    mult: Vec<f64>,
}

impl Tridiagonal {
    /// `sub[i]` multiplies `x[i-1]`, `sup[i]` multiplies `x[i+1]` in row i.
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        let n = diag.len();
        assert!(n > 0 && sub.len() == n && sup.len() == n);
        let mut inv_pivot = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut pivot = diag[0];
        assert!(pivot != 0.0, "singular tridiagonal system");
        inv_pivot[0] = 1.0 / pivot;
        for i in 1..n {
            mult[i] = sub[i] * inv_pivot[i - 1];
            pivot = diag[i] - mult[i] * sup[i - 1];
            assert!(pivot != 0.0, "singular tridiagonal system");
            inv_pivot[i] = 1.0 / pivot;
        }
        Self {
            sub,
            sup,
            inv_pivot,
            mult,
        }
    }

    /// Constant-coefficient matrix `(lower, center, upper)` of size n.
    pub fn constant(n: usize, lower: f64, center: f64, upper: f64) -> Self {
        Self::new(vec![lower; n], vec![center; n], vec![upper; n])
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.len();
        assert_eq!(b.len(), n);
        for i in 1..n {
            b[i] -= self.mult[i] * b[i - 1];
        }
        b[n - 1] *= self.inv_pivot[n - 1];
        for i in (0..n - 1).rev() {
            b[i] = (b[i] - self.sup[i] * b[i + 1]) * self.inv_pivot[i];
        }
    }

    /// Matrix-vector product with the original matrix (for residual checks).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        // reconstruct the diagonal from the factorization
        let n = self.len();
        let mut diag = vec![0.0; n];
        diag[0] = 1.0 / self.inv_pivot[0];
        for i in 1..n {
            diag[i] = 1.0 / self.inv_pivot[i] + self.mult[i] * self.sup[i - 1];
        }
        (0..n)
            .map(|i| {
                let mut v = diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Cholesky factor of a symmetric positive definite band matrix with
/// half-bandwidth `p`, stored by rows: `band[i * (p+1) + (p - k)]` holds
/// `A[i][i-k]` for `k = 0..=p`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    p: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Returns `None` if the matrix is not numerically positive definite.
    pub fn factor(n: usize, p: usize, mut band: Vec<f64>) -> Option<Self> {
        let w = p + 1;
        assert_eq!(band.len(), n * w);
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                // L[i][j] = (A[i][j] - sum_{k<j} L[i][k] L[j][k]) / L[j][j]
                let k0 = j0.max(j.saturating_sub(p));
                let mut s = band[i * w + (p + j - i)];
                let ri = i * w + p - i;
                let rj = j * w + p - j;
                for k in k0..j {
                    s -= band[ri + k] * band[rj + k];
                }
                if j == i {
                    if !(s > 0.0) {
                        return None;
                    }
                    band[ri + i] = s.sqrt();
                } else {
                    band[ri + j] = s / band[rj + j];
                }
            }
        }
        Some(Self { n, p, l: band })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        for i in 0..n {
            let ri = i * w + p - i;
            let mut s = b[i];
            for k in i.saturating_sub(p)..i {
                s -= self.l[ri + k] * b[k];
            }
            b[i] = s / self.l[ri + i];
        }
        for i in (0..n).rev() {
            let ri = i * w + p - i;
            b[i] /= self.l[ri + i];
            let bi = b[i];
            for k in i.saturating_sub(p)..i {
                b[k] -= self.l[ri + k] * bi;
            }
        }
    }
}

/// Direct solver for the 5-point Dirichlet Laplacian on the unit square with
/// `n` nodes per axis, by diagonalizing with the discrete sine transform.
#[derive(Debug, Clone)]
pub struct SineLaplacian {
    interior: usize,
    /// Orthonormal sine matrix (symmetric).
    s: Vec<f64>,
    /// Eigenvalue sums `lambda_j + lambda_k`.
    denom: Vec<f64>,
}

impl SineLaplacian {
    pub fn new(n: usize) -> Self {
        assert!(n >= 3);
        let m = n - 1;
        let q = n - 2;
        let h = 1.0 / m as f64;
        let norm = (2.0 / m as f64).sqrt();
        let mut s = vec![0.0; q * q];
        for j in 0..q {
            for k in 0..q {
                s[j * q + k] = norm * (PI * ((j + 1) * (k + 1)) as f64 / m as f64).sin();
            }
        }
        let lambda: Vec<f64> = (1..=q)
            .map(|k| (2.0 - 2.0 * (PI * k as f64 / m as f64).cos()) / (h * h))
            .collect();
        let mut denom = vec![0.0; q * q];
        for j in 0..q {
            for k in 0..q {
                denom[j * q + k] = lambda[j] + lambda[k];
            }
        }
        Self {
            interior: q,
            s,
            denom,
        }
    }

    pub fn interior(&self) -> usize {
        self.interior
    }

    /// Solves `-Delta_h u = f` for interior values `f` (q x q, row-major).
    pub fn solve(&self, f: &[f64]) -> Vec<f64> {
        let q = self.interior;
        let mut t = vec![0.0; q * q];
        let mut u = vec![0.0; q * q];
        gemm(q, q, q, 1.0, &self.s, q, 1, f, 0.0, &mut t);
        gemm(q, q, q, 1.0, &t, q, 1, &self.s, 0.0, &mut u);
        u.iter_mut().zip(&self.denom).for_each(|(v, d)| *v /= d);
        gemm(q, q, q, 1.0, &self.s, q, 1, &u, 0.0, &mut t);
        gemm(q, q, q, 1.0, &t, q, 1, &self.s, 0.0, &mut u);
        u
    }

    /// `-Delta_h u` on interior values with zero boundary.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let q = self.interior;
        let h2 = ((q + 1) * (q + 1)) as f64;
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= q as isize || j >= q as isize {
                0.0
            } else {
                u[i as usize * q + j as usize]
            }
        };
        let mut out = vec![0.0; q * q];
        for i in 0..q as isize {
            for j in 0..q as isize {
                out[i as usize * q + j as usize] =
                    h2 * (4.0 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1));
            }
        }
        out
    }
}

/// Piecewise-linear interpolation of nodal values on the uniform grid of `[0,1]`.
pub fn interpolate_linear(values: &[f64], x: f64) -> f64 {
    let m = values.len() - 1;
    let s = (x.clamp(0.0, 1.0)) * m as f64;
    let i = (s.floor() as usize).min(m - 1);
    let t = s - i as f64;
    values[i] * (1.0 - t) + values[i + 1] * t
}

/// Bilinear interpolation of nodal values (n x n, row-major, first index = x1)
/// on the uniform grid of `[0,1]^2`.
pub fn interpolate_bilinear(values: &[f64], n: usize, x1: f64, x2: f64) -> f64 {
    let m = n - 1;
    let locate = |x: f64| {
        let s = x.clamp(0.0, 1.0) * m as f64;
        let i = (s.floor() as usize).min(m - 1);
        (i, s - i as f64)
    };
    let (i, s) = locate(x1);
    let (j, t) = locate(x2);
    let v = |a: usize, b: usize| values[a * n + b];
    (1.0 - s) * ((1.0 - t) * v(i, j) + t * v(i, j + 1)) + s * ((1.0 - t) * v(i + 1, j) + t * v(i + 1, j + 1))
}

/// Embeds interior values (q x q) into a nodal grid with zero boundary.
pub fn with_zero_boundary(interior: &[f64], q: usize) -> Vec<f64> {
    let n = q + 2;
    let mut out = vec![0.0; n * n];
    for i in 0..q {
        out[(i + 1) * n + 1..(i + 1) * n + 1 + q].copy_from_slice(&interior[i * q..(i + 1) * q]);
    }
    out
}
