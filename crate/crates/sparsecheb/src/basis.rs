//! Chebyshev product basis on `[-1,1]^D`, normalized to be orthonormal with
//! respect to the arcsine measure.

use std::f64::consts::{PI, SQRT_2};
use std::ops::Deref;

use thiserror::Error;

use crate::index_set::MultiIndex;

/// Points this far outside `[-1,1]` are clamped instead of rejected.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BasisError {
    #[error("coordinate {0} lies outside [-1, 1]")]
    Domain(f64),
    #[error("index has {index} entries but the point has {point} coordinates")]
    DimensionMismatch { index: usize, point: usize },
}

fn clamp_unit(z: f64) -> Result<f64, BasisError> {
    if !(z.abs() <= 1.0 + DOMAIN_TOLERANCE) {
        return Err(BasisError::Domain(z));
    }
    Ok(z.clamp(-1.0, 1.0))
}

/// A point of the approximation domain `[-1,1]^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPoint(Vec<f64>);

impl BasisPoint {
    /// Validates the coordinates, clamping values within the rounding band.
    pub fn new(coords: Vec<f64>) -> Result<Self, BasisError> {
        let coords = coords
            .into_iter()
            .map(clamp_unit)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for BasisPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `T_0 = 1`, `T_k(z) = sqrt(2) cos(k arccos z)`.
pub fn eval_univariate(k: u32, z: f64) -> Result<f64, BasisError> {
    let z = clamp_unit(z)?;
    Ok(univariate_unchecked(k, z))
}

#[inline]
pub(crate) fn univariate_unchecked(k: u32, z: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2 * (k as f64 * z.acos()).cos()
    }
}

/// Analytic continuation of `T_k` to the whole real line. The flag is set
/// when `|z| > 1`, i.e. the value is an extrapolation.
pub fn eval_univariate_extended(k: u32, z: f64) -> (f64, bool) {
    if z.abs() <= 1.0 {
        return (univariate_unchecked(k, z), false);
    }
    if k == 0 {
        return (1.0, true);
    }
    let sign = if z < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
    (sign * SQRT_2 * (k as f64 * z.abs().acosh()).cosh(), true)
}

/// Tensor-product basis function `T_k(p) = prod_j T_{k_j}(p_j)`.
pub fn eval_product(k: &MultiIndex, p: &[f64]) -> Result<f64, BasisError> {
    if k.len() != p.len() {
        return Err(BasisError::DimensionMismatch {
            index: k.len(),
            point: p.len(),
        });
    }
    let mut value = 1.0;
    for (&kj, &zj) in k.entries().iter().zip(p) {
        value *= eval_univariate(kj, zj)?;
    }
    Ok(value)
}

/// Writes `T_0(z), ..., T_{out.len()-1}(z)` into `out`; `z` must already be in range.
pub(crate) fn fill_table(z: f64, out: &mut [f64]) {
    let theta = z.clamp(-1.0, 1.0).acos();
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = if k == 0 {
            1.0
        } else {
            SQRT_2 * (k as f64 * theta).cos()
        };
    }
}

/// Uniform sup-norm bound of basis functions with at most `d_s` active dimensions.
pub fn bound_constant(d_s: usize) -> f64 {
    2f64.powf(d_s as f64 / 2.0)
}

/// The `m` Chebyshev-Gauss nodes `cos((2i+1) pi / (2m))`.
pub fn gauss_nodes(m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| ((2 * i + 1) as f64 * PI / (2 * m) as f64).cos())
        .collect()
}
