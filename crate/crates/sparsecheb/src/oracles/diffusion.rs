//! `-div(a(x,y) grad u) = 1` on the unit square with homogeneous Dirichlet data
//! and the affine coefficient `a = 1 + sum_j y_j psi_j(x)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fd::{interpolate_bilinear, with_zero_boundary, BandCholesky};
use super::{check_point, grouped_batch, AffineTransform, Oracle, OracleError};

/// `0.9 / zeta(2)`.
pub(crate) fn default_constant() -> f64 {
    0.9 * 6.0 / (PI * PI)
}

/// `(m1(j), m2(j), k(j))` for `j >= 1`.
pub fn diffusion_mode(j: usize) -> (usize, usize, usize) {
    assert!(j >= 1);
    let mut k = ((-0.5 + (0.25 + 2.0 * j as f64).sqrt()).floor()) as usize;
    // guard the floor against rounding at triangular numbers
    while (k + 1) * (k + 2) / 2 <= j {
        k += 1;
    }
    while k * (k + 1) / 2 > j {
        k -= 1;
    }
    let m1 = j - k * (k + 1) / 2;
    (m1, k - m1, k)
}

#[derive(Debug, Clone)]
pub struct AffineDiffusion {
    n_y: usize,
    decay: f64,
    constant: f64,
    grid: usize,
    /// `cos(2 pi m x)` on the half grid `x = i h / 2`, per mode, for both axes.
    cos1: Vec<Vec<f64>>,
    cos2: Vec<Vec<f64>>,
}

impl AffineDiffusion {
    pub fn new(n_y: usize, decay: f64, constant: f64, grid: usize) -> Result<Self, OracleError> {
        if n_y == 0 || !(decay > 1.0) || !(constant > 0.0) || grid < 16 {
            return Err(OracleError::InvalidSpec(format!(
                "affine_diffusion needs n_y >= 1, decay > 1, constant > 0 and grid >= 16 (n_y = {n_y}, decay = {decay}, constant = {constant}, grid = {grid})"
            )));
        }
        let half = 2 * grid - 1;
        let hh = 0.5 / (grid - 1) as f64;
        let table = |m: usize| -> Vec<f64> { (0..half).map(|i| (2.0 * PI * m as f64 * i as f64 * hh).cos()).collect() };
        let modes: Vec<_> = (1..=n_y).map(diffusion_mode).collect();
        Ok(Self {
            n_y,
            decay,
            constant,
            grid,
            cos1: modes.iter().map(|&(m1, _, _)| table(m1)).collect(),
            cos2: modes.iter().map(|&(_, m2, _)| table(m2)).collect(),
        })
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    /// `a(x, y)` at half-grid position `(i1, i2)`, i.e. `x = (i1, i2) h / 2`.
    fn coefficient(&self, weights: &[f64], i1: usize, i2: usize) -> f64 {
        let mut a = 1.0;
        for (j, &w) in weights.iter().enumerate() {
            a += w * self.cos1[j][i1] * self.cos2[j][i2];
        }
        a
    }

    /// `a(x, y)` at an arbitrary point of the unit square.
    pub fn coefficient_at(&self, y: &[f64], x1: f64, x2: f64) -> f64 {
        1.0 + y
            .iter()
            .enumerate()
            .map(|(j, &yj)| {
                let (m1, m2, _) = diffusion_mode(j + 1);
                yj * self.constant
                    * ((j + 1) as f64).powf(-self.decay)
                    * (2.0 * PI * m1 as f64 * x1).cos()
                    * (2.0 * PI * m2 as f64 * x2).cos()
            })
            .sum::<f64>()
    }

    /// Nodal solution on the `grid x grid` mesh.
    pub fn solve_nodes(&self, y: &[f64]) -> Result<Vec<f64>, OracleError> {
        let weights: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(j, &yj)| yj * self.constant * ((j + 1) as f64).powf(-self.decay))
            .collect();
        let n = self.grid;
        let q = n - 2;
        let inv_h2 = ((n - 1) * (n - 1)) as f64;
        let p = q;
        let w = p + 1;
        let mut band = vec![0.0; q * q * w];
        for i in 0..q {
            for j in 0..q {
                // node (i+1, j+1) sits at half-grid index (2i+2, 2j+2)
                let (c1, c2) = (2 * i + 2, 2 * j + 2);
                let west = self.coefficient(&weights, c1 - 1, c2);
                let east = self.coefficient(&weights, c1 + 1, c2);
                let south = self.coefficient(&weights, c1, c2 - 1);
                let north = self.coefficient(&weights, c1, c2 + 1);
                let min = west.min(east).min(south).min(north);
                if !(min > 0.0) {
                    return Err(OracleError::Solver(format!(
                        "diffusion coefficient not positive ({min:.3e}) for the given parameters"
                    )));
                }
                let r = i * q + j;
                band[r * w + p] = (west + east + south + north) * inv_h2;
                if j > 0 {
                    band[r * w + p - 1] = -south * inv_h2;
                }
                if i > 0 {
                    band[r * w] = -west * inv_h2;
                }
            }
        }
        let chol = BandCholesky::factor(q * q, p, band)
            .ok_or_else(|| OracleError::Solver("diffusion matrix is not positive definite".into()))?;
        let mut u = vec![1.0; q * q];
        chol.solve_in_place(&mut u);
        Ok(with_zero_boundary(&u, q))
    }

    fn interpolate(&self, u: &[f64], z: &[f64]) -> Complex64 {
        let x1 = AffineTransform::TO_UNIT.apply(z[0]);
        let x2 = AffineTransform::TO_UNIT.apply(z[1]);
        Complex64::new(interpolate_bilinear(u, self.grid, x1, x2), 0.0)
    }
}

impl Oracle for AffineDiffusion {
    fn dim(&self) -> usize {
        2 + self.n_y
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
        let u = self.solve_nodes(&p[2..])?;
        Ok(self.interpolate(&u, &p[..2]))
    }

    fn sample_batch(&self, points: &[f64]) -> Vec<Result<Complex64, OracleError>> {
        grouped_batch(points, self.dim(), 2, |y| self.solve_nodes(y), |u, z| self.interpolate(u, z))
    }
}

#[cfg(test)]
mod tests {
    use super::super::poisson2d::unit_load_series;
    use super::*;

    fn point(x1: f64, x2: f64, y: &[f64]) -> Vec<f64> {
        let mut p = vec![2.0 * x1 - 1.0, 2.0 * x2 - 1.0];
        p.extend_from_slice(y);
        p
    }

    #[test]
    fn mode_table() {
        assert_eq!(diffusion_mode(1), (0, 1, 1));
        assert_eq!(diffusion_mode(2), (1, 0, 1));
        assert_eq!(diffusion_mode(3), (0, 2, 2));
        assert_eq!(diffusion_mode(4), (1, 1, 2));
        assert_eq!(diffusion_mode(5), (2, 0, 2));
        assert_eq!(diffusion_mode(6), (0, 3, 3));
        assert_eq!(diffusion_mode(9), (3, 0, 3));
        assert_eq!(diffusion_mode(10), (0, 4, 4));
        for j in 1..500 {
            let (m1, m2, k) = diffusion_mode(j);
            assert_eq!(m1 + m2, k);
            assert_eq!(k * (k + 1) / 2 + m1, j);
        }
        assert!((default_constant() * PI * PI / 6.0 - 0.9).abs() < 1e-15);
    }

    #[test]
    fn zero_parameters_give_the_poisson_solution() {
        let o = AffineDiffusion::new(20, 2.0, default_constant(), 51).unwrap();
        let v = o.sample(&point(0.5, 0.5, &[0.0; 20])).unwrap();
        let reference = unit_load_series(0.5, 0.5, 200);
        assert!((v.re - reference).abs() < 2e-3, "{v} vs {reference}");
    }

    #[test]
    fn boundaries_vanish_and_coefficient_stays_elliptic() {
        let o = AffineDiffusion::new(20, 2.0, default_constant(), 31).unwrap();
        let y: Vec<f64> = (0..20).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for (x1, x2) in [(0.0, 0.3), (1.0, 0.6), (0.4, 0.0), (0.9, 1.0)] {
            assert!(o.sample(&point(x1, x2, &y)).unwrap().norm() <= 1e-12);
        }
        for x in [0.0, 0.25, 0.5, 0.75] {
            assert!(o.coefficient_at(&[-1.0; 20], x, x) >= 0.1 - 1e-12);
        }
        assert!(o.sample(&point(0.3, 0.7, &y)).unwrap().re > 0.0);
    }

    #[test]
    fn response_to_small_perturbations_is_smooth() {
        let o = AffineDiffusion::new(3, 2.0, default_constant(), 41).unwrap();
        let base = o.sample(&point(0.5, 0.5, &[0.0; 3])).unwrap().re;
        let eps = 1e-4;
        let plus = o.sample(&point(0.5, 0.5, &[eps, 0.0, 0.0])).unwrap().re;
        let minus = o.sample(&point(0.5, 0.5, &[-eps, 0.0, 0.0])).unwrap().re;
        assert!(((plus - base) + (minus - base)).abs() < 1e-9);
        assert!((plus - minus).abs() < 1e-3 * base);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(AffineDiffusion::new(5, 1.0, 0.5, 51).is_err());
        assert!(AffineDiffusion::new(5, 2.0, 0.5, 8).is_err());
        let strong = AffineDiffusion::new(1, 2.0, 3.0, 21).unwrap();
        assert!(matches!(strong.sample(&point(0.5, 0.5, &[-1.0])), Err(OracleError::Solver(_))));
    }
}
