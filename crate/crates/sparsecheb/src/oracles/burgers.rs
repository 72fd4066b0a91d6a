//! Viscous Burgers equation `u_t + u u_x = nu u_xx` on `(0,1)` with zero
//! boundary values, sine-series initial data and evaluation at `t = 1`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::fd::{interpolate_linear, Tridiagonal};
use super::{check_point, grouped_batch, AffineTransform, Oracle, OracleError};

const FINAL_TIME: f64 = 1.0;
const MIN_TIME_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Burgers1d {
    n: usize,
    viscosity: f64,
    grid: usize,
    time_step: f64,
}

impl Burgers1d {
    pub fn new(n: usize, viscosity: f64, grid: usize, time_step: f64) -> Result<Self, OracleError> {
        if n == 0 || !(viscosity > 0.0) || grid < 16 || !(time_step > MIN_TIME_STEP) {
            return Err(OracleError::InvalidSpec(format!(
                "burgers1d needs n >= 1, viscosity > 0, grid >= 16 and time_step > {MIN_TIME_STEP} (n = {n}, viscosity = {viscosity}, grid = {grid}, time_step = {time_step})"
            )));
        }
        Ok(Self {
            n,
            viscosity,
            grid,
            time_step,
        })
    }

    pub fn viscosity(&self) -> f64 {
        self.viscosity
    }

    /// Nodal values of `u(., 1)` for the initial data `sum_l a_l sin(l pi x)`.
    pub fn solve_nodes(&self, a: &[f64]) -> Result<Vec<f64>, OracleError> {
        let m = self.grid - 1;
        let dx = 1.0 / m as f64;
        let mut u: Vec<f64> = (0..=m)
            .map(|i| {
                let x = i as f64 * dx;
                a.iter()
                    .enumerate()
                    .map(|(l, &al)| al * ((l + 1) as f64 * PI * x).sin())
                    .sum()
            })
            .collect();
        u[0] = 0.0;
        u[m] = 0.0;
        let q = m - 1;
        let mut systems: HashMap<u64, Tridiagonal> = HashMap::new();
        let mut rhs = vec![0.0; q];
        let mut t = 0.0;
        while FINAL_TIME - t > 1e-14 {
            let umax = u.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let mut dt = self.time_step;
            while umax > 0.0 && dt > 0.5 * dx / umax {
                dt *= 0.5;
                if dt < MIN_TIME_STEP {
                    return Err(OracleError::Solver(format!(
                        "time step underflow at t = {t:.4} (max |u| = {umax:.3e})"
                    )));
                }
            }
            dt = dt.min(FINAL_TIME - t);
            let r = self.viscosity * dt / (dx * dx);
            let system = systems
                .entry(dt.to_bits())
                .or_insert_with(|| Tridiagonal::constant(q, -r, 1.0 + 2.0 * r, -r));
            for i in 1..m {
                rhs[i - 1] = u[i] - dt * u[i] * (u[i + 1] - u[i - 1]) / (2.0 * dx);
            }
            system.solve_in_place(&mut rhs);
            u[1..m].copy_from_slice(&rhs);
            t += dt;
        }
        Ok(u)
    }
}

impl Oracle for Burgers1d {
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
        let u = self.solve_nodes(&p[1..])?;
        Ok(Complex64::new(interpolate_linear(&u, AffineTransform::TO_UNIT.apply(p[0])), 0.0))
    }

    fn sample_batch(&self, points: &[f64]) -> Vec<Result<Complex64, OracleError>> {
        grouped_batch(
            points,
            self.dim(),
            1,
            |a| self.solve_nodes(a),
            |u, x| Complex64::new(interpolate_linear(u, AffineTransform::TO_UNIT.apply(x[0])), 0.0),
        )
    }
}

/// Closed-form solution for the initial data `2 pi nu sin(pi x) / (alpha + cos(pi x))`.
pub fn explicit_solution(x: f64, t: f64, viscosity: f64, alpha: f64) -> f64 {
    let e = (-PI * PI * viscosity * t).exp();
    2.0 * PI * viscosity * (PI * x).sin() * e / (alpha + (PI * x).cos() * e)
}

/// First `n` sine coefficients `2 int_0^1 f(x) sin(l pi x) dx`, by composite
/// Simpson quadrature.
pub fn sine_coefficients(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
    let panels = 4096;
    let h = 1.0 / panels as f64;
    (1..=n)
        .map(|l| {
            let g = |x: f64| f(x) * (l as f64 * PI * x).sin();
            let mut s = g(0.0) + g(1.0);
            for i in 1..panels {
                s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            2.0 * s * h / 3.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle() -> Burgers1d {
        Burgers1d::new(9, 0.05, 257, 1e-3).unwrap()
    }

    #[test]
    fn explicit_solution_fit_is_tracked() {
        let nu = 0.05;
        let a = sine_coefficients(|x| explicit_solution(x, 0.0, nu, 2.0), 9);
        assert!(a.iter().all(|v| v.abs() < 0.2));
        let u = oracle().solve_nodes(&a).unwrap();
        let mut worst = 0.0f64;
        for g in 0..100 {
            let x = g as f64 / 99.0;
            worst = worst.max((interpolate_linear(&u, x) - explicit_solution(x, 1.0, nu, 2.0)).abs());
        }
        assert!(worst <= 5e-3, "max error {worst}");
        let mut p = vec![0.0];
        p.extend(&a);
        let mid = oracle().sample(&p).unwrap().re;
        assert!((explicit_solution(0.5, 1.0, nu, 2.0) - 0.09590).abs() < 1e-5);
        assert!((mid - 0.09590).abs() < 5e-3, "{mid}");
    }

    #[test]
    fn zero_data_and_boundaries() {
        let o = oracle();
        let mut p = vec![0.2];
        p.extend([0.0; 9]);
        assert_eq!(o.sample(&p).unwrap().norm(), 0.0);
        let a = [0.9, -0.7, 0.5, 0.3, -1.0, 0.2, 0.8, -0.4, 0.6];
        for x in [-1.0, 1.0] {
            let mut p = vec![x];
            p.extend(a);
            assert!(o.sample(&p).unwrap().norm() <= 1e-10);
        }
    }

    #[test]
    fn extreme_corner_stays_bounded() {
        let u = oracle().solve_nodes(&[1.0; 9]).unwrap();
        assert!(u.iter().all(|v| v.is_finite() && v.abs() < 9.0));
    }

    #[test]
    fn sine_coefficients_of_a_sine_series() {
        let c = sine_coefficients(|x| 0.5 * (PI * x).sin() - 0.25 * (3.0 * PI * x).sin(), 4);
        for (got, want) in c.iter().zip([0.5, 0.0, -0.25, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
