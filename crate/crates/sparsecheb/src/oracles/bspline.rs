//! `-u'' = f` on `(0,1)` with a right-hand side built from shifted cardinal
//! B-splines, solved by second-order finite differences.

use num_complex::Complex64;

use super::fd::{interpolate_linear, Tridiagonal};
use super::{check_point, grouped_batch, AffineTransform, Oracle, OracleError};

pub(crate) const DEFAULT_GRID: usize = 1025;

/// Centered cardinal B-spline of order `m` (support `[-m/2, m/2]`), via the
/// truncated-power representation.
pub fn cardinal_bspline(m: usize, x: f64) -> f64 {
    assert!(m >= 1);
    let half = m as f64 / 2.0;
    if x <= -half || x >= half {
        return 0.0;
    }
    if m == 1 {
        return 1.0;
    }
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 1..m {
        fact *= i as f64;
    }
    let mut s = 0.0;
    for j in 0..=m {
        let t = x + half - j as f64;
        if t > 0.0 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom * t.powi(m as i32 - 1);
        }
        binom = binom * (m - j) as f64 / (j + 1) as f64;
    }
    s / fact
}

#[derive(Debug, Clone)]
pub struct Poisson1dBspline {
    n: usize,
    order: usize,
    grid: usize,
    system: Tridiagonal,
}

impl Poisson1dBspline {
    /// `n` coefficients, spline order `order` (2..=4), `grid` nodes including both ends.
    pub fn new(n: usize, order: usize, grid: usize) -> Result<Self, OracleError> {
        if n == 0 || !(2..=4).contains(&order) || grid < 16 {
            return Err(OracleError::InvalidSpec(format!(
                "poisson1d_bspline needs n >= 1, order in 2..=4 and grid >= 16 (n = {n}, order = {order}, grid = {grid})"
            )));
        }
        let h = 1.0 / (grid - 1) as f64;
        let inv_h2 = 1.0 / (h * h);
        let system = Tridiagonal::constant(grid - 2, -inv_h2, 2.0 * inv_h2, -inv_h2);
        Ok(Self { n, order, grid, system })
    }

    /// Peak location `t_l` and scale `h` of spline `l`.
    pub fn placement(&self, l: usize) -> (f64, f64) {
        let h = 1.0 / (self.n + 1) as f64;
        ((l + 1) as f64 * h, h)
    }

    pub fn rhs(&self, b: &[f64], x: f64) -> f64 {
        b.iter()
            .enumerate()
            .map(|(l, &bl)| {
                let (t, h) = self.placement(l);
                bl * cardinal_bspline(self.order, (x - t) / h)
            })
            .sum()
    }

    /// Nodal solution values (including the zero boundary values).
    pub fn solve_nodes(&self, b: &[f64]) -> Vec<f64> {
        let h = 1.0 / (self.grid - 1) as f64;
        let mut interior: Vec<f64> = (1..self.grid - 1).map(|i| self.rhs(b, i as f64 * h)).collect();
        self.system.solve_in_place(&mut interior);
        let mut u = Vec::with_capacity(self.grid);
        u.push(0.0);
        u.extend(interior);
        u.push(0.0);
        u
    }
}

impl Oracle for Poisson1dBspline {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn transforms(&self) -> Vec<AffineTransform> {
        let mut t = vec![AffineTransform::IDENTITY; self.dim()];
        t[0] = AffineTransform::TO_UNIT;
        t
    }

    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        let p = check_point(point, self.dim(), 1)?;
        let u = self.solve_nodes(&p[1..]);
        Ok(Complex64::new(interpolate_linear(&u, AffineTransform::TO_UNIT.apply(p[0])), 0.0))
    }

    fn sample_batch(&self, points: &[f64]) -> Vec<Result<Complex64, OracleError>> {
        grouped_batch(
            points,
            self.dim(),
            1,
            |b| Ok(self.solve_nodes(b)),
            |u, x| Complex64::new(interpolate_linear(u, AffineTransform::TO_UNIT.apply(x[0])), 0.0),
        )
    }
}
