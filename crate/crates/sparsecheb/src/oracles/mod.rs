//! Black-box sampling oracles: a point of `[-1,1]^D` is mapped to model
//! coordinates and a (possibly complex) solution value.
//!
//! Coordinates are ordered spatial/time dimensions first, then parameters.

mod analytic;
mod bspline;
mod burgers;
mod diffusion;
pub mod fd;
mod poisson2d;

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::basis::DOMAIN_TOLERANCE;

pub use analytic::{Heat1d, IntroOde, Poisson1dFourier, PwcOde};
pub use bspline::{cardinal_bspline, Poisson1dBspline};
pub use burgers::{explicit_solution, sine_coefficients, Burgers1d};
pub use diffusion::{diffusion_mode, AffineDiffusion};
pub use poisson2d::{unit_load_series, Poisson2dFourier};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("point has {found} coordinates, oracle expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("coordinate {index} = {value} is outside the admissible range")]
    Domain { index: usize, value: f64 },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("invalid oracle specification: {0}")]
    InvalidSpec(String),
}

/// `z -> scale * z + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    scale: f64,
    offset: f64,
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        scale: 1.0,
        offset: 0.0,
    };
    /// `[-1,1] -> [0,1]`.
    pub const TO_UNIT: AffineTransform = AffineTransform {
        scale: 0.5,
        offset: 0.5,
    };

    pub fn new(scale: f64, offset: f64) -> Result<Self, OracleError> {
        if scale == 0.0 || !scale.is_finite() || !offset.is_finite() {
            return Err(OracleError::InvalidSpec(format!(
                "affine map needs a finite non-zero scale, got {scale}"
            )));
        }
        Ok(Self { scale, offset })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn apply(&self, z: f64) -> f64 {
        self.scale * z + self.offset
    }

    pub fn invert(&self, x: f64) -> f64 {
        (x - self.offset) / self.scale
    }
}

/// Applies one affine map per coordinate.
pub fn transform_point(raw: &[f64], transforms: &[AffineTransform]) -> Result<Vec<f64>, OracleError> {
    if raw.len() != transforms.len() {
        return Err(OracleError::Dimension {
            expected: transforms.len(),
            found: raw.len(),
        });
    }
    Ok(raw.iter().zip(transforms).map(|(&z, t)| t.apply(z)).collect())
}

/// Sampling contract. Implementations must be deterministic functions of the
/// point and safe to call from many threads.
pub trait Oracle: Sync {
    /// Ambient dimension `d + n`.
    fn dim(&self) -> usize;

    /// Number of leading spatial/time coordinates.
    fn spatial_dims(&self) -> usize {
        1
    }

    /// Per-dimension maps from `[-1,1]` to model coordinates.
    fn transforms(&self) -> Vec<AffineTransform> {
        vec![AffineTransform::IDENTITY; self.dim()]
    }

    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError>;

    /// Evaluates `points` (row-major, `dim()` coordinates each).
    fn sample_batch(&self, points: &[f64]) -> Vec<Result<Complex64, OracleError>> {
        points.par_chunks(self.dim()).map(|p| self.sample(p)).collect()
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn spatial_dims(&self) -> usize {
        (**self).spatial_dims()
    }
    fn transforms(&self) -> Vec<AffineTransform> {
        (**self).transforms()
    }
    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        (**self).sample(point)
    }
    fn sample_batch(&self, points: &[f64]) -> Vec<Result<Complex64, OracleError>> {
        (**self).sample_batch(points)
    }
}

impl<T: Oracle + ?Sized> Oracle for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn spatial_dims(&self) -> usize {
        (**self).spatial_dims()
    }
    fn transforms(&self) -> Vec<AffineTransform> {
        (**self).transforms()
    }
    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        (**self).sample(point)
    }
    fn sample_batch(&self, points: &[f64]) -> Vec<Result<Complex64, OracleError>> {
        (**self).sample_batch(points)
    }
}

/// Checks the length, clamps spatial coordinates into `[-1,1]` and rejects
/// non-finite parameters.
pub(crate) fn check_point(point: &[f64], dim: usize, spatial: usize) -> Result<Vec<f64>, OracleError> {
    if point.len() != dim {
        return Err(OracleError::Dimension {
            expected: dim,
            found: point.len(),
        });
    }
    let mut out = point.to_vec();
    for (index, v) in out.iter_mut().enumerate() {
        if !v.is_finite() || (index < spatial && v.abs() > 1.0 + DOMAIN_TOLERANCE) {
            return Err(OracleError::Domain { index, value: *v });
        }
        if index < spatial {
            *v = v.clamp(-1.0, 1.0);
        }
    }
    Ok(out)
}

/// Batch evaluation for solver-backed oracles: points sharing their parameter
/// coordinates are served by a single solve.
pub(crate) fn grouped_batch<F, S, E>(
    points: &[f64],
    dim: usize,
    spatial: usize,
    solve: S,
    eval: E,
) -> Vec<Result<Complex64, OracleError>>
where
    F: Send,
    S: Fn(&[f64]) -> Result<F, OracleError> + Sync,
    E: Fn(&F, &[f64]) -> Complex64 + Sync,
{
    let n = points.len() / dim;
    let mut results: Vec<Option<Result<Complex64, OracleError>>> = vec![None; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut by_key: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut checked = Vec::with_capacity(n);
    for (i, p) in points.chunks_exact(dim).enumerate() {
        match check_point(p, dim, spatial) {
            Ok(q) => {
                let key: Vec<u64> = q[spatial..].iter().map(|v| v.to_bits()).collect();
                let g = *by_key.entry(key).or_insert_with(|| {
                    groups.push(Vec::new());
                    groups.len() - 1
                });
                groups[g].push(i);
                checked.push(q);
            }
            Err(e) => {
                results[i] = Some(Err(e));
                checked.push(Vec::new());
            }
        }
    }
    let solved: Vec<Vec<(usize, Result<Complex64, OracleError>)>> = groups
        .par_iter()
        .map(|members| {
            let params = &checked[members[0]][spatial..];
            match solve(params) {
                Ok(field) => members
                    .iter()
                    .map(|&i| (i, Ok(eval(&field, &checked[i][..spatial]))))
                    .collect(),
                Err(e) => members.iter().map(|&i| (i, Err(e.clone()))).collect(),
            }
        })
        .collect();
    for (i, r) in solved.into_iter().flatten() {
        results[i] = Some(r);
    }
    results.into_iter().map(|r| r.expect("every point handled")).collect()
}

/// Oracle backed by a closure; mainly for tests and synthetic targets.
pub struct FnOracle<F> {
    dim: usize,
    spatial: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, spatial: 1, f }
    }

    pub fn with_spatial_dims(mut self, spatial: usize) -> Self {
        self.spatial = spatial;
        self
    }
}

impl<F> Oracle for FnOracle<F>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn spatial_dims(&self) -> usize {
        self.spatial
    }
    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        let p = check_point(point, self.dim, self.dim)?;
        Ok((self.f)(&p))
    }
}

/// The zero function in `dim` dimensions.
#[derive(Debug, Clone, Copy)]
pub struct ZeroOracle {
    pub dim: usize,
}

impl Oracle for ZeroOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn sample(&self, point: &[f64]) -> Result<Complex64, OracleError> {
        check_point(point, self.dim, self.dim)?;
        Ok(Complex64::new(0.0, 0.0))
    }
}

/// Every oracle the experiments use, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    Zero { dim: usize },
    IntroOde { n: usize },
    Poisson1dFourier { n: usize },
    Poisson1dBspline { n: usize, order: usize, grid: usize },
    PwcOde,
    Poisson2dFourier { grid: usize },
    AffineDiffusion { n_y: usize, decay: f64, constant: f64, grid: usize },
    Heat1d { n: usize, diffusivity: f64 },
    Burgers1d { n: usize, viscosity: f64, grid: usize, time_step: f64 },
}

impl OracleSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            OracleSpec::Zero { .. } => "zero",
            OracleSpec::IntroOde { .. } => "intro_ode",
            OracleSpec::Poisson1dFourier { .. } => "poisson1d_fourier",
            OracleSpec::Poisson1dBspline { .. } => "poisson1d_bspline",
            OracleSpec::PwcOde => "pwc_ode",
            OracleSpec::Poisson2dFourier { .. } => "poisson2d_fourier",
            OracleSpec::AffineDiffusion { .. } => "affine_diffusion",
            OracleSpec::Heat1d { .. } => "heat1d",
            OracleSpec::Burgers1d { .. } => "burgers1d",
        }
    }

    /// Default parameters of each kind as used in the experiments.
    pub fn default_for(kind: &str) -> Option<OracleSpec> {
        Some(match kind {
            "zero" => OracleSpec::Zero { dim: 2 },
            "intro_ode" => OracleSpec::IntroOde { n: 9 },
            "poisson1d_fourier" => OracleSpec::Poisson1dFourier { n: 9 },
            "poisson1d_bspline" => OracleSpec::Poisson1dBspline {
                n: 9,
                order: 3,
                grid: bspline::DEFAULT_GRID,
            },
            "pwc_ode" => OracleSpec::PwcOde,
            "poisson2d_fourier" => OracleSpec::Poisson2dFourier { grid: 51 },
            "affine_diffusion" => OracleSpec::AffineDiffusion {
                n_y: 20,
                decay: 2.0,
                constant: diffusion::default_constant(),
                grid: 51,
            },
            "heat1d" => OracleSpec::Heat1d {
                n: 9,
                diffusivity: 0.25,
            },
            "burgers1d" => OracleSpec::Burgers1d {
                n: 9,
                viscosity: 0.05,
                grid: 257,
                time_step: 1e-3,
            },
            _ => return None,
        })
    }

    pub fn build(&self) -> Result<Box<dyn Oracle>, OracleError> {
        Ok(match *self {
            OracleSpec::Zero { dim } => {
                if dim == 0 {
                    return Err(OracleError::InvalidSpec("dimension must be positive".into()));
                }
                Box::new(ZeroOracle { dim })
            }
            OracleSpec::IntroOde { n } => Box::new(IntroOde::new(n)?),
            OracleSpec::Poisson1dFourier { n } => Box::new(Poisson1dFourier::new(n)?),
            OracleSpec::Poisson1dBspline { n, order, grid } => Box::new(Poisson1dBspline::new(n, order, grid)?),
            OracleSpec::PwcOde => Box::new(PwcOde),
            OracleSpec::Poisson2dFourier { grid } => Box::new(Poisson2dFourier::new(grid)?),
            OracleSpec::AffineDiffusion {
                n_y,
                decay,
                constant,
                grid,
            } => Box::new(AffineDiffusion::new(n_y, decay, constant, grid)?),
            OracleSpec::Heat1d { n, diffusivity } => Box::new(Heat1d::new(n, diffusivity)?),
            OracleSpec::Burgers1d {
                n,
                viscosity,
                grid,
                time_step,
            } => Box::new(Burgers1d::new(n, viscosity, grid, time_step)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_examples() {
        let t = AffineTransform::TO_UNIT;
        assert_eq!(t.apply(-1.0), 0.0);
        assert_eq!(t.apply(1.0), 1.0);
        let pwc = AffineTransform::new(2.0, 0.0).unwrap();
        assert_eq!(pwc.apply(0.5), 1.0);
        assert!(AffineTransform::new(0.0, 1.0).is_err());
        let p = transform_point(&[-1.0, 0.5], &[t, pwc]).unwrap();
        assert_eq!(p, vec![0.0, 1.0]);
        assert!(transform_point(&[0.0], &[t, pwc]).is_err());
    }

    #[test]
    fn point_checks() {
        assert!(matches!(check_point(&[0.0], 2, 1), Err(OracleError::Dimension { .. })));
        assert!(matches!(check_point(&[1.5, 0.0], 2, 1), Err(OracleError::Domain { index: 0, .. })));
        assert_eq!(check_point(&[1.0 + 1e-13, 3.0], 2, 1).unwrap(), vec![1.0, 3.0]);
        assert!(check_point(&[0.0, f64::NAN], 2, 1).is_err());
    }

    #[test]
    fn grouping_solves_once_per_parameter_vector() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let solves = AtomicUsize::new(0);
        let pts = [0.1, 0.5, -0.2, 0.5, 0.3, 0.7, 0.9, 0.5];
        let r = grouped_batch(
            &pts,
            2,
            1,
            |a| {
                solves.fetch_add(1, Ordering::SeqCst);
                Ok(a[0])
            },
            |a, x| Complex64::new(a * x[0], 0.0),
        );
        assert_eq!(solves.load(Ordering::SeqCst), 2);
        let vals: Vec<f64> = r.into_iter().map(|v| v.unwrap().re).collect();
        assert_eq!(vals, vec![0.05, -0.1, 0.21, 0.45]);
    }

    #[test]
    fn every_default_spec_builds_with_matching_dimension() {
        let expected = [
            ("intro_ode", 10),
            ("poisson1d_fourier", 10),
            ("poisson1d_bspline", 10),
            ("pwc_ode", 9),
            ("poisson2d_fourier", 11),
            ("affine_diffusion", 22),
            ("heat1d", 11),
            ("burgers1d", 10),
        ];
        for (kind, dim) in expected {
            let spec = OracleSpec::default_for(kind).unwrap();
            assert_eq!(spec.kind(), kind);
            assert_eq!(spec.build().unwrap().dim(), dim, "{kind}");
        }
    }
}
