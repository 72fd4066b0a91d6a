//! `-Delta u = f` on the unit square with homogeneous Dirichlet data and
//! `f = sum_{l in {-1,0,1}^2} a_l e^{2 pi i l.x}`, solved on a uniform grid.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fd::{interpolate_bilinear, with_zero_boundary, SineLaplacian};
use super::{check_point, grouped_batch, AffineTransform, Oracle, OracleError};

/// Frequencies `(l1, l2)` in coefficient order.
pub(crate) const MODES: [(i32, i32); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Debug, Clone)]
pub struct Poisson2dFourier {
    grid: usize,
    solver: SineLaplacian,
}

/// Real and imaginary nodal fields.
pub(crate) type ComplexField = (Vec<f64>, Vec<f64>);

impl Poisson2dFourier {
    pub fn new(grid: usize) -> Result<Self, OracleError> {
        if grid < 16 {
            return Err(OracleError::InvalidSpec(format!("grid must be >= 16, got {grid}")));
        }
        Ok(Self {
            grid,
            solver: SineLaplacian::new(grid),
        })
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    /// Position of `a_(l1,l2)` among the parameters.
    pub fn mode_position(l1: i32, l2: i32) -> usize {
        MODES.iter().position(|&m| m == (l1, l2)).expect("mode in {-1,0,1}^2")
    }

    /// Nodal solution fields on the `grid x grid` mesh.
    pub fn solve_nodes(&self, a: &[f64]) -> ComplexField {
        let q = self.solver.interior();
        let h = 1.0 / (self.grid - 1) as f64;
        let mut fr = vec![0.0; q * q];
        let mut fi = vec![0.0; q * q];
        for (&(l1, l2), &al) in MODES.iter().zip(a) {
            if al == 0.0 {
                continue;
            }
            for i in 0..q {
                let x1 = (i + 1) as f64 * h;
                for j in 0..q {
                    let x2 = (j + 1) as f64 * h;
                    let phase = 2.0 * PI * (l1 as f64 * x1 + l2 as f64 * x2);
                    fr[i * q + j] += al * phase.cos();
                    fi[i * q + j] += al * phase.sin();
                }
            }
        }
        let ur = self.solver.solve(&fr);
        let ui = if fi.iter().any(|v| *v != 0.0) {
            self.solver.solve(&fi)
        } else {
            vec![0.0; q * q]
        };
        (with_zero_boundary(&ur, q), with_zero_boundary(&ui, q))
    }

    fn interpolate(&self, field: &ComplexField, z: &[f64]) -> Complex64 {
        let (x1, x2) = (AffineTransform::TO_UNIT.apply(z[0]), AffineTransform::TO_UNIT.apply(z[1]));
        Complex64::new(
            interpolate_bilinear(&field.0, self.grid, x1, x2),
            interpolate_bilinear(&field.1, self.grid, x1, x2),
        )
    }
}

impl Oracle for Poisson2dFourier {
    fn dim(&self) -> usize {
        2 + MODES.len()
    }

    fn spatial_dims(&self) -> usize {
        2
    }

    fn transforms(&self) -> Vec<AffineTransform> {
        let mut t = vec![AffineTransform::IDENTITY; self.dim()];
        t[0] = AffineTransform::TO_UNIT;
        t[1] = AffineTransform::TO_UNIT;
        t
    }

    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        let p = check_point(point, self.dim(), 2)?;
        Ok(self.interpolate(&self.solve_nodes(&p[2..]), &p[..2]))
    }

    fn sample_batch(&self, points: &[f64]) -> Vec<Result<Complex64, OracleError>> {
        grouped_batch(points, self.dim(), 2, |a| Ok(self.solve_nodes(a)), |f, z| self.interpolate(f, z))
    }
}

/// Double sine series of the solution of `-Delta u = 1` on the unit square.
pub fn unit_load_series(x1: f64, x2: f64, terms: usize) -> f64 {
    let mut s = 0.0;
    for j in (1..=terms).step_by(2) {
        for k in (1..=terms).step_by(2) {
            let (jf, kf) = (j as f64, k as f64);
            s += (jf * PI * x1).sin() * (kf * PI * x2).sin() / (jf * kf * (jf * jf + kf * kf));
        }
    }
    16.0 / PI.powi(4) * s
}
