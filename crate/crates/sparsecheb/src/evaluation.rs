//! Relative discrete L2 errors of an approximant against its oracle and the
//! five-number summaries used to report them.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::approximant::{ApproxError, Approximant};
use crate::detector::AnchorLaw;
use crate::oracles::{Oracle, OracleError};
use crate::sampling::{SampleFailure, Sampler};

/// Denominators below this fall back to the absolute error.
pub const ZERO_NORM: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("approximant has dimension {approximant}, oracle {oracle}")]
    DimensionMismatch { approximant: usize, oracle: usize },
    #[error("expected {expected} parameters, got {found}")]
    ParameterCount { expected: usize, found: usize },
    #[error("invalid evaluation options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Approximant(#[from] ApproxError),
    #[error("oracle failed twice at {point:?}: {source}")]
    Oracle { point: Vec<f64>, source: OracleError },
}

impl From<SampleFailure> for EvalError {
    fn from(f: SampleFailure) -> Self {
        EvalError::Oracle {
            point: f.point,
            source: f.source,
        }
    }
}

/// Minimum, quartiles and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub lw: f64,
    pub lq: f64,
    pub med: f64,
    pub uq: f64,
    pub uw: f64,
    pub count: usize,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ErrorStats {
    pub const CSV_HEADER: &'static str = "lw,lq,med,uq,uw";

    /// `None` for an empty sample or one containing NaN.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() || samples.iter().any(|v| v.is_nan()) {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Self {
            lw: s[0],
            lq: quantile(&s, 0.25),
            med: quantile(&s, 0.5),
            uq: quantile(&s, 0.75),
            uw: s[s.len() - 1],
            count: s.len(),
        })
    }

    pub fn is_ordered(&self) -> bool {
        self.lw <= self.lq && self.lq <= self.med && self.med <= self.uq && self.uq <= self.uw
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.lw, self.lq, self.med, self.uq, self.uw
        )
    }
}

/// Settings of an error campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Points per spatial axis.
    pub grid: usize,
    /// Law of the test parameters (before scaling).
    pub law: AnchorLaw,
    /// Parameters are drawn from `[-scale, scale]`; values above 1 test
    /// extrapolation.
    pub scale: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            grid: 1000,
            law: AnchorLaw::Uniform,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeError {
    pub value: f64,
    /// The reference norm vanished and `value` is the absolute error.
    pub absolute: bool,
    /// Some parameter lay outside `[-1,1]`.
    pub extrapolated: bool,
}

/// Equidistant tensor grid on `[-1,1]^spatial`, `g` points per axis, row-major
/// with the last axis fastest.
pub fn spatial_grid(spatial: usize, g: usize) -> Vec<Vec<f64>> {
    assert!(g >= 2);
    let axis: Vec<f64> = (0..g).map(|i| -1.0 + 2.0 * i as f64 / (g - 1) as f64).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..spatial {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&z| {
                    let mut q = p.clone();
                    q.push(z);
                    q
                })
            })
            .collect();
    }
    out
}

fn check_dims<O: Oracle + ?Sized>(appr: &Approximant, oracle: &O, params: &[f64]) -> Result<usize, EvalError> {
    if appr.dim() != oracle.dim() {
        return Err(EvalError::DimensionMismatch {
            approximant: appr.dim(),
            oracle: oracle.dim(),
        });
    }
    let spatial = oracle.spatial_dims();
    if params.len() + spatial != oracle.dim() {
        return Err(EvalError::ParameterCount {
            expected: oracle.dim() - spatial,
            found: params.len(),
        });
    }
    Ok(spatial)
}

/// Approximant and oracle values on the spatial grid for fixed parameters;
/// returns (spatial point, approximant, oracle) triples.
pub fn grid_values<O: Oracle + ?Sized>(
    appr: &Approximant,
    oracle: &O,
    params: &[f64],
    g: usize,
) -> Result<(Vec<(Vec<f64>, Complex64, Complex64)>, bool), EvalError> {
    let spatial = check_dims(appr, oracle, params)?;
    let grid = spatial_grid(spatial, g);
    let mut points = Vec::with_capacity(grid.len() * oracle.dim());
    for x in &grid {
        points.extend_from_slice(x);
        points.extend_from_slice(params);
    }
    let exact = Sampler::new(oracle, 0).sample(&points)?;
    let mut extrapolated = false;
    let mut out = Vec::with_capacity(grid.len());
    for ((x, p), u) in grid.into_iter().zip(points.chunks_exact(oracle.dim())).zip(exact) {
        let (v, flag) = appr.evaluate_extrapolated(p)?;
        extrapolated |= flag;
        out.push((x, v, u));
    }
    Ok((out, extrapolated))
}

/// `||S u - u|| / ||u||` over the spatial grid at parameters `params`.
pub fn relative_l2_error<O: Oracle + ?Sized>(
    appr: &Approximant,
    oracle: &O,
    params: &[f64],
    g: usize,
) -> Result<RelativeError, EvalError> {
    let (values, extrapolated) = grid_values(appr, oracle, params, g)?;
    let num: f64 = values.iter().map(|(_, v, u)| (v - u).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = values.iter().map(|(_, _, u)| u.norm_sqr()).sum::<f64>().sqrt();
    Ok(if den < ZERO_NORM {
        RelativeError {
            value: num,
            absolute: true,
            extrapolated,
        }
    } else {
        RelativeError {
            value: num / den,
            absolute: false,
            extrapolated,
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub stats: ErrorStats,
    /// One error per trial, in draw order.
    pub samples: Vec<f64>,
    pub parameters: Vec<Vec<f64>>,
    /// Trials whose reference norm vanished.
    pub absolute_count: usize,
    pub extrapolated: bool,
}

/// Draws `trials` parameter vectors and summarizes their relative errors.
pub fn error_distribution<O: Oracle + ?Sized>(
    appr: &Approximant,
    oracle: &O,
    trials: usize,
    opts: &EvalOptions,
    seed: u64,
) -> Result<ErrorReport, EvalError> {
    if trials == 0 {
        return Err(EvalError::InvalidOptions("trials must be positive".into()));
    }
    if opts.grid < 2 || !(opts.scale > 0.0 && opts.scale.is_finite()) {
        return Err(EvalError::InvalidOptions(format!(
            "grid must be >= 2 and scale positive (grid = {}, scale = {})",
            opts.grid, opts.scale
        )));
    }
    let n = oracle.dim().saturating_sub(oracle.spatial_dims());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parameters: Vec<Vec<f64>> = (0..trials)
        .map(|_| draw_parameters(n, opts.law, opts.scale, &mut rng))
        .collect();
    let errors = parameters
        .par_iter()
        .map(|a| relative_l2_error(appr, oracle, a, opts.grid))
        .collect::<Result<Vec<_>, _>>()?;
    let samples: Vec<f64> = errors.iter().map(|e| e.value).collect();
    let stats = ErrorStats::from_samples(&samples)
        .ok_or_else(|| EvalError::InvalidOptions("error sample contains NaN".into()))?;
    Ok(ErrorReport {
        stats,
        absolute_count: errors.iter().filter(|e| e.absolute).count(),
        extrapolated: errors.iter().any(|e| e.extrapolated),
        samples,
        parameters,
    })
}

/// `n` parameters from `law`, scaled to `[-scale, scale]`.
pub fn draw_parameters<R: Rng + ?Sized>(n: usize, law: AnchorLaw, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| scale * law.draw(rng)).collect()
}
