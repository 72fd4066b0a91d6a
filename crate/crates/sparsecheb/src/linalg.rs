//! Dense kernels for the least-squares reconstruction: design-matrix rows,
//! Gram accumulation and a diagonally pivoted Cholesky factorization.

use num_complex::Complex64;

use crate::basis::fill_table;
use crate::index_set::IndexSet;

/// Sparse description of the design-matrix columns: for each column the
/// (position, degree) pairs of its non-zero entries.
#[derive(Debug, Clone)]
pub(crate) struct DesignColumns {
    dim: usize,
    table_offsets: Vec<usize>,
    table_len: usize,
    col_ptr: Vec<usize>,
    pairs: Vec<usize>,
}

impl DesignColumns {
    pub fn new(target: &IndexSet) -> Self {
        let dim = target.dims().len();
        let max_deg = target.max_degrees();
        let mut table_offsets = Vec::with_capacity(dim);
        let mut acc = 0;
        for &m in &max_deg {
            table_offsets.push(acc);
            acc += m as usize + 1;
        }
        let mut col_ptr = vec![0];
        let mut pairs = Vec::new();
        for k in target.iter() {
            for (pos, &e) in k.entries().iter().enumerate() {
                if e != 0 {
                    pairs.push(table_offsets[pos] + e as usize);
                }
            }
            col_ptr.push(pairs.len());
        }
        Self {
            dim,
            table_offsets,
            table_len: acc,
            col_ptr,
            pairs,
        }
    }

    pub fn ncols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    /// Fills `out` (rows x ncols, row-major) with the design rows of `nodes`
    /// (rows x dim, row-major).
    pub fn fill_rows(&self, nodes: &[f64], out: &mut [f64]) {
        let n = self.ncols();
        let rows = nodes.len() / self.dim.max(1);
        let mut table = vec![0.0; self.table_len];
        for r in 0..rows {
            let node = &nodes[r * self.dim..(r + 1) * self.dim];
            for (pos, &z) in node.iter().enumerate() {
                let start = self.table_offsets[pos];
                let end = if pos + 1 < self.dim {
                    self.table_offsets[pos + 1]
                } else {
                    self.table_len
                };
                fill_table(z, &mut table[start..end]);
            }
            let row = &mut out[r * n..(r + 1) * n];
            for (c, slot) in row.iter_mut().enumerate() {
                let mut v = 1.0;
                for &p in &self.pairs[self.col_ptr[c]..self.col_ptr[c + 1]] {
                    v *= table[p];
                }
                *slot = v;
            }
        }
    }
}

/// `c = alpha * op(a) * b + beta * c` on row-major buffers, with `op(a)` of
/// shape (m x k) given by explicit strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(b.len() >= k * n && c.len() >= m * n);
    if k > 0 {
        assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
    }
    // SAFETY: bounds checked above; all buffers are distinct slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `G = P L L^T P^T` with diagonal pivoting, so that the diagonal of `L` is
/// non-increasing and reveals the numerical rank.
#[derive(Debug, Clone)]
pub(crate) struct PivotedCholesky {
    n: usize,
    perm: Vec<usize>,
    /// Lower triangle in pivot order, row-major.
    l: Vec<f64>,
    rank: usize,
}

impl PivotedCholesky {
    pub fn factor(g: &[f64], n: usize) -> Self {
        assert_eq!(g.len(), n * n);
        let mut diag: Vec<f64> = (0..n).map(|i| g[i * n + i]).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        // rows indexed by original column, entries by elimination step
        let mut rows = vec![0.0; n * n];
        let first = diag.iter().cloned().fold(0.0, f64::max);
        let mut rank = n;
        for k in 0..n {
            let (mut best, mut best_val) = (k, f64::NEG_INFINITY);
            for (pos, &i) in perm.iter().enumerate().skip(k) {
                if diag[i] > best_val {
                    best = pos;
                    best_val = diag[i];
                }
            }
            perm.swap(k, best);
            let pk = perm[k];
            let d = diag[pk];
            if !(d > first * 1e-15) || first <= 0.0 {
                rank = k;
                break;
            }
            let lkk = d.sqrt();
            rows[pk * n + k] = lkk;
            let (gk, lk) = (&g[pk * n..(pk + 1) * n], rows[pk * n..pk * n + k].to_vec());
            for &i in &perm[k + 1..] {
                let li = &rows[i * n..i * n + k];
                let v = (gk[i] - dot(li, &lk)) / lkk;
                rows[i * n + k] = v;
                diag[i] -= v * v;
            }
        }
        let mut l = vec![0.0; n * n];
        for k in 0..n {
            let src = &rows[perm[k] * n..perm[k] * n + k.min(rank) + usize::from(k < rank)];
            l[k * n..k * n + src.len()].copy_from_slice(src);
        }
        Self { n, perm, l, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Ratio of the first to the last diagonal entry of `L`; for a Gram matrix
    /// `A^T A` this estimates the 2-norm condition number of `A`.
    pub fn condition_estimate(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        if self.rank < self.n {
            return f64::INFINITY;
        }
        let last = self.n - 1;
        self.l[0] / self.l[last * self.n + last]
    }

    /// Solves `G x = b` in place for `q` right-hand sides (`b` is n x q, row-major).
    pub fn solve_in_place(&self, b: &mut [f64], q: usize) {
        let n = self.n;
        assert_eq!(self.rank, n, "solve on a rank-deficient factorization");
        let mut y = vec![0.0; n * q];
        for k in 0..n {
            y[k * q..(k + 1) * q].copy_from_slice(&b[self.perm[k] * q..(self.perm[k] + 1) * q]);
        }
        for k in 0..n {
            let (done, rest) = y.split_at_mut(k * q);
            let yk = &mut rest[..q];
            let row = &self.l[k * n..k * n + k];
            for (l, &lkl) in row.iter().enumerate() {
                if lkl != 0.0 {
                    for (a, &b) in yk.iter_mut().zip(&done[l * q..(l + 1) * q]) {
                        *a -= lkl * b;
                    }
                }
            }
            let inv = 1.0 / self.l[k * n + k];
            yk.iter_mut().for_each(|v| *v *= inv);
        }
        for k in (0..n).rev() {
            let inv = 1.0 / self.l[k * n + k];
            let (head, tail) = y.split_at_mut(k * q);
            let xk = &mut tail[..q];
            xk.iter_mut().for_each(|v| *v *= inv);
            let row = &self.l[k * n..k * n + k];
            for (l, &lkl) in row.iter().enumerate() {
                if lkl != 0.0 {
                    for (a, &b) in head[l * q..(l + 1) * q].iter_mut().zip(xk.iter()) {
                        *a -= lkl * b;
                    }
                }
            }
        }
        for k in 0..n {
            b[self.perm[k] * q..(self.perm[k] + 1) * q].copy_from_slice(&y[k * q..(k + 1) * q]);
        }
    }
}

/// Least-squares system with a fixed node set, factorized once through its
/// scaled Gram matrix and reused for any number of right-hand sides.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquaresSystem {
    nodes: Vec<f64>,
    m: usize,
    cols: DesignColumns,
    chol: PivotedCholesky,
}

impl LeastSquaresSystem {
    pub fn build(target: &IndexSet, nodes: Vec<f64>) -> Self {
        let dim = target.dims().len();
        let m = nodes.len() / dim;
        let cols = DesignColumns::new(target);
        let n = cols.ncols();
        let mut gram = vec![0.0; n * n];
        let rows_per_chunk = Self::rows_per_chunk(n);
        let mut chunk = vec![0.0; rows_per_chunk * n];
        for start in (0..m).step_by(rows_per_chunk) {
            let rows = rows_per_chunk.min(m - start);
            let c = &mut chunk[..rows * n];
            cols.fill_rows(&nodes[start * dim..(start + rows) * dim], c);
            gemm(n, rows, n, 1.0 / m as f64, c, 1, n, c, 1.0, &mut gram);
        }
        let chol = PivotedCholesky::factor(&gram, n);
        Self { nodes, m, cols, chol }
    }

    fn rows_per_chunk(n: usize) -> usize {
        (2_000_000 / n.max(1)).clamp(64, 4096)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.m
    }

    pub fn condition_estimate(&self) -> f64 {
        self.chol.condition_estimate()
    }

    pub fn is_full_rank(&self) -> bool {
        self.chol.rank() == self.cols.ncols()
    }

    /// `A^T Y / m` for a real right-hand-side block `Y` (m x w).
    fn normal_rhs(&self, y: &[f64], w: usize, x: Option<&[f64]>) -> Vec<f64> {
        let n = self.cols.ncols();
        let dim = self.nodes.len() / self.m;
        let mut out = vec![0.0; n * w];
        let rows_per_chunk = Self::rows_per_chunk(n);
        let mut chunk = vec![0.0; rows_per_chunk * n];
        let mut resid = vec![0.0; rows_per_chunk * w];
        for start in (0..self.m).step_by(rows_per_chunk) {
            let rows = rows_per_chunk.min(self.m - start);
            let c = &mut chunk[..rows * n];
            self.cols.fill_rows(&self.nodes[start * dim..(start + rows) * dim], c);
            let r = &mut resid[..rows * w];
            r.copy_from_slice(&y[start * w..(start + rows) * w]);
            if let Some(x) = x {
                gemm(rows, n, w, -1.0, c, n, 1, x, 1.0, r);
            }
            gemm(n, rows, w, 1.0 / self.m as f64, c, 1, n, r, 1.0, &mut out);
        }
        out
    }

    /// Least-squares solutions for several complex sample vectors, with one
    /// step of iterative refinement on the residual.
    pub fn solve(&self, samples: &[&[Complex64]]) -> Vec<Vec<Complex64>> {
        let n = self.cols.ncols();
        let w = 2 * samples.len();
        let mut y = vec![0.0; self.m * w];
        for (s, ys) in samples.iter().enumerate() {
            assert_eq!(ys.len(), self.m);
            for (j, v) in ys.iter().enumerate() {
                y[j * w + 2 * s] = v.re;
                y[j * w + 2 * s + 1] = v.im;
            }
        }
        let mut x = self.normal_rhs(&y, w, None);
        self.chol.solve_in_place(&mut x, w);
        let mut dx = self.normal_rhs(&y, w, Some(&x));
        self.chol.solve_in_place(&mut dx, w);
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        (0..samples.len())
            .map(|s| {
                (0..n)
                    .map(|c| Complex64::new(x[c * w + 2 * s], x[c * w + 2 * s + 1]))
                    .collect()
            })
            .collect()
    }
}
