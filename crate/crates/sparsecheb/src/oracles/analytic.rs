//! Oracles with closed-form solutions.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{check_point, AffineTransform, Oracle, OracleError};

/// `u' = f` on `(0,1)`, `u(0) = 0`, with `f = f_0 + sum_l f_l e^{2 pi i l x}`.
#[derive(Debug, Clone)]
pub struct IntroOde {
    n: usize,
}

impl IntroOde {
    /// `n` Fourier coefficients `f_0 .. f_{n-1}`.
    pub fn new(n: usize) -> Result<Self, OracleError> {
        if n == 0 {
            return Err(OracleError::InvalidSpec("intro_ode needs n >= 1".into()));
        }
        Ok(Self { n })
    }
}

impl Oracle for IntroOde {
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
        let x = AffineTransform::TO_UNIT.apply(p[0]);
        let f = &p[1..];
        let mut u = Complex64::new(f[0] * x, 0.0);
        for (l, &fl) in f.iter().enumerate().skip(1) {
            let w = 2.0 * PI * l as f64;
            u += fl * (Complex64::cis(w * x) - 1.0) / Complex64::new(0.0, w);
        }
        Ok(u)
    }
}

/// `-u'' = f` on `(-1,1)` with homogeneous Dirichlet data and
/// `f = sum_{|l| <= h} a_l e^{pi i l x}`, solved in closed form.
#[derive(Debug, Clone)]
pub struct Poisson1dFourier {
    half: usize,
}

impl Poisson1dFourier {
    /// `n` odd coefficients `a_{-h} .. a_h`, `h = (n-1)/2`.
    pub fn new(n: usize) -> Result<Self, OracleError> {
        if n % 2 == 0 {
            return Err(OracleError::InvalidSpec(format!(
                "poisson1d_fourier needs an odd number of coefficients, got {n}"
            )));
        }
        Ok(Self { half: (n - 1) / 2 })
    }

    /// Position of `a_l` in the point.
    pub fn coefficient_position(&self, l: i64) -> usize {
        (1 + self.half as i64 + l) as usize
    }
}

impl Oracle for Poisson1dFourier {
    fn dim(&self) -> usize {
        2 * self.half + 2
    }

    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        let p = check_point(point, self.dim(), 1)?;
        let x = p[0];
        let h = self.half as i64;
        let mut u = Complex64::new(p[self.coefficient_position(0)] / 8.0 * (1.0 - x * x), 0.0);
        for l in (-h..=h).filter(|&l| l != 0) {
            let a = p[self.coefficient_position(l)];
            if a == 0.0 {
                continue;
            }
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let lf = l as f64;
            u += a / (4.0 * PI * PI * lf * lf) * (sign * Complex64::cis(PI * lf * x) - 1.0);
        }
        Ok(u)
    }
}

/// `-(a u')' = f` on `(-1,1)`, `a = 1/2` left of 0 and 1 right of 0, with
/// `f = sum_l b_l 1_{[-1+l/4, -1+(l+1)/4]}` and `b` scaled by 2.
#[derive(Debug, Clone, Copy, Default)]
pub struct PwcOde;

impl PwcOde {
    pub const N_COEFFS: usize = 8;
    pub const SCALE: f64 = 2.0;

    /// Second antiderivative of the characteristic function of piece `l`.
    pub fn w(l: usize, x: f64) -> f64 {
        let a = -1.0 + l as f64 / 4.0;
        if x < a {
            0.0
        } else if x < a + 0.25 {
            0.5 * (x - a) * (x - a)
        } else {
            0.25 * x + 7.0 / 32.0 - l as f64 / 16.0
        }
    }

    fn f2(b: &[f64], x: f64) -> f64 {
        b.iter().enumerate().map(|(l, &bl)| bl * Self::w(l, x)).sum()
    }

    /// Flux constant `K` (the slope constant `C_1`) and left offset `C_2 = 2K`
    /// for model-scale coefficients `b`.
    pub fn constants(b: &[f64]) -> (f64, f64) {
        let k = (Self::f2(b, 1.0) + Self::f2(b, 0.0)) / 3.0;
        (k, 2.0 * k)
    }

    /// Exact weak solution for model-scale coefficients `b`.
    pub fn solution(b: &[f64], x: f64) -> f64 {
        let (k, c2) = Self::constants(b);
        let f = Self::f2(b, x);
        if x < 0.0 {
            -2.0 * f + 2.0 * k * x + c2
        } else {
            -f + k * x + c2 - Self::f2(b, 0.0)
        }
    }
}

impl Oracle for PwcOde {
    fn dim(&self) -> usize {
        Self::N_COEFFS + 1
    }

    fn transforms(&self) -> Vec<AffineTransform> {
        let mut t = vec![AffineTransform::new(Self::SCALE, 0.0).unwrap(); self.dim()];
        t[0] = AffineTransform::IDENTITY;
        t
    }

    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        let p = check_point(point, self.dim(), 1)?;
        let b: Vec<f64> = p[1..].iter().map(|v| Self::SCALE * v).collect();
        Ok(Complex64::new(Self::solution(&b, p[0]), 0.0))
    }
}

/// Heat equation `u_t = alpha^2 u_xx` on `(0,1)` with sine-series initial data.
#[derive(Debug, Clone)]
pub struct Heat1d {
    n: usize,
    alpha: f64,
}

impl Heat1d {
    pub fn new(n: usize, diffusivity: f64) -> Result<Self, OracleError> {
        if n == 0 || !(diffusivity > 0.0) {
            return Err(OracleError::InvalidSpec(format!(
                "heat1d needs n >= 1 and diffusivity > 0, got n = {n}, alpha = {diffusivity}"
            )));
        }
        Ok(Self { n, alpha: diffusivity })
    }
}

impl Oracle for Heat1d {
    fn dim(&self) -> usize {
        self.n + 2
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
        let x = AffineTransform::TO_UNIT.apply(p[0]);
        let tau = AffineTransform::TO_UNIT.apply(p[1]);
        let rate = PI * PI * self.alpha * self.alpha * tau;
        let u: f64 = p[2..]
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let l = (i + 1) as f64;
                a * (l * PI * x).sin() * (-l * l * rate).exp()
            })
            .sum();
        Ok(Complex64::new(u, 0.0))
    }
}
