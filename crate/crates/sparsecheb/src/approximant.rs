//! Truncated Chebyshev expansions: evaluation, refitting on a given index set
//! and CSV storage.

use std::io::{self, BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::basis::{bound_constant, eval_univariate_extended, fill_table, BasisError, DOMAIN_TOLERANCE};
use crate::index_set::{IndexError, IndexSet, MultiIndex};
use crate::oracles::{AffineTransform, Oracle, OracleError};
use crate::reconstruction::{plan_for, PlanOptions, ReconError};
use crate::sampling::{SampleFailure, Sampler};

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("{coefficients} coefficients for {indices} indices")]
    Length { indices: usize, coefficients: usize },
    #[error("index set must cover dimensions 0..{0} in order")]
    Dims(usize),
    #[error("expected a point of dimension {expected}, got {found}")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Reconstruction(#[from] ReconError),
    #[error("oracle failed twice at {point:?}: {source}")]
    Oracle { point: Vec<f64>, source: OracleError },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<SampleFailure> for ApproxError {
    fn from(f: SampleFailure) -> Self {
        ApproxError::Oracle {
            point: f.point,
            source: f.source,
        }
    }
}

/// `sum_{k in I} c_k T_k` on `[-1,1]^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant {
    index_set: IndexSet,
    coefficients: Vec<Complex64>,
    transforms: Vec<AffineTransform>,
    max_degrees: Vec<u32>,
    /// Non-zero (dimension, degree) pairs of every member, flattened.
    active: Vec<(u32, u32)>,
    offsets: Vec<usize>,
}

impl Approximant {
    pub fn new(index_set: IndexSet, coefficients: Vec<Complex64>) -> Result<Self, ApproxError> {
        let dim = index_set.dims().len();
        if index_set.dims().iter().enumerate().any(|(i, &d)| i != d) {
            return Err(ApproxError::Dims(dim));
        }
        if coefficients.len() != index_set.len() {
            return Err(ApproxError::Length {
                indices: index_set.len(),
                coefficients: coefficients.len(),
            });
        }
        let mut active = Vec::new();
        let mut offsets = Vec::with_capacity(index_set.len() + 1);
        offsets.push(0);
        for k in index_set.iter() {
            active.extend(
                k.entries()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(d, &e)| (d as u32, e)),
            );
            offsets.push(active.len());
        }
        let max_degrees = if index_set.is_empty() { vec![0; dim] } else { index_set.max_degrees() };
        Ok(Self {
            transforms: vec![AffineTransform::IDENTITY; dim],
            index_set,
            coefficients,
            max_degrees,
            active,
            offsets,
        })
    }

    /// Per-dimension maps from `[-1,1]` coordinates to model coordinates.
    pub fn with_transforms(mut self, transforms: Vec<AffineTransform>) -> Result<Self, ApproxError> {
        if transforms.len() != self.dim() {
            return Err(ApproxError::Dimension {
                expected: self.dim(),
                found: transforms.len(),
            });
        }
        self.transforms = transforms;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.index_set.dims().len()
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn transforms(&self) -> &[AffineTransform] {
        &self.transforms
    }

    pub fn coefficient(&self, k: &MultiIndex) -> Option<Complex64> {
        self.index_set.position(k).map(|i| self.coefficients[i])
    }

    fn check_len(&self, p: &[f64]) -> Result<(), ApproxError> {
        if p.len() != self.dim() {
            return Err(ApproxError::Dimension {
                expected: self.dim(),
                found: p.len(),
            });
        }
        Ok(())
    }

    fn sum_with_tables(&self, tables: &[Vec<f64>]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coefficients.iter().enumerate() {
            let mut v = 1.0;
            for &(d, e) in &self.active[self.offsets[i]..self.offsets[i + 1]] {
                v *= tables[d as usize][e as usize];
            }
            acc += c * v;
        }
        acc
    }

    /// Value at a point of `[-1,1]^D`.
    pub fn evaluate(&self, p: &[f64]) -> Result<Complex64, ApproxError> {
        self.check_len(p)?;
        let mut tables = Vec::with_capacity(p.len());
        for (&z, &m) in p.iter().zip(&self.max_degrees) {
            if !(z.abs() <= 1.0 + DOMAIN_TOLERANCE) {
                return Err(BasisError::Domain(z).into());
            }
            let mut t = vec![0.0; m as usize + 1];
            fill_table(z, &mut t);
            tables.push(t);
        }
        Ok(self.sum_with_tables(&tables))
    }

    /// Value anywhere on the real line via the continuation of the basis; the
    /// flag reports whether any coordinate left `[-1,1]`.
    pub fn evaluate_extrapolated(&self, p: &[f64]) -> Result<(Complex64, bool), ApproxError> {
        self.check_len(p)?;
        let mut outside = false;
        let mut tables = Vec::with_capacity(p.len());
        for (&z, &m) in p.iter().zip(&self.max_degrees) {
            if !z.is_finite() {
                return Err(BasisError::Domain(z).into());
            }
            let t = (0..=m)
                .map(|k| {
                    let (v, flag) = eval_univariate_extended(k, z);
                    outside |= flag;
                    v
                })
                .collect();
            tables.push(t);
        }
        Ok((self.sum_with_tables(&tables), outside))
    }

    /// Value at a point given in model coordinates.
    pub fn evaluate_model(&self, x: &[f64]) -> Result<(Complex64, bool), ApproxError> {
        self.check_len(x)?;
        let z: Vec<f64> = x.iter().zip(&self.transforms).map(|(&v, t)| t.invert(v)).collect();
        self.evaluate_extrapolated(&z)
    }

    /// Writes `k1..kD,re,im` rows in lexicographic index order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = (1..=self.dim()).map(|i| format!("k{i}")).collect();
        writeln!(w, "{},re,im", header.join(","))?;
        for (k, c) in self.index_set.iter().zip(&self.coefficients) {
            for e in k.entries() {
                write!(w, "{e},")?;
            }
            writeln!(w, "{:.16e},{:.16e}", c.re, c.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, ApproxError> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, message: String| ApproxError::Parse { line: line + 1, message };
        let (_, header) = lines.next().ok_or_else(|| parse_err(0, "missing header".into()))?;
        let header = header?;
        let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
        let dim = cols.len().saturating_sub(2);
        let expected: Vec<String> = (1..=dim)
            .map(|i| format!("k{i}"))
            .chain(["re".to_string(), "im".to_string()])
            .collect();
        if dim == 0 || cols != expected {
            return Err(parse_err(0, format!("header must be k1..kD,re,im, got `{header}`")));
        }
        let mut members = Vec::new();
        let mut coefficients = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 2 {
                return Err(parse_err(i, format!("expected {} fields, got {}", dim + 2, fields.len())));
            }
            let k = fields[..dim]
                .iter()
                .map(|f| f.trim().parse::<u32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| parse_err(i, format!("bad index entry: {e}")))?;
            let re: f64 = fields[dim].trim().parse().map_err(|e| parse_err(i, format!("bad re: {e}")))?;
            let im: f64 = fields[dim + 1].trim().parse().map_err(|e| parse_err(i, format!("bad im: {e}")))?;
            members.push(MultiIndex::new(k));
            coefficients.push(Complex64::new(re, im));
        }
        let n = members.len();
        let set = IndexSet::new((0..dim).collect(), members.clone())?;
        if set.len() != n {
            return Err(parse_err(0, "duplicate indices".into()));
        }
        // rows may come in any order
        let mut aligned = vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in members.iter().zip(coefficients) {
            aligned[set.position(k).unwrap()] = c;
        }
        Approximant::new(set, aligned)
    }
}

/// `B(d_s) (tail + err)`: the sup-norm error bound from the coefficient tail
/// outside the index set and the coefficient error on it. Both sums are known
/// only for synthetic targets.
pub fn error_bound(coeff_tail: f64, coeff_err: f64, d_s: usize) -> f64 {
    assert!(coeff_tail >= 0.0 && coeff_err >= 0.0, "sums must be non-negative");
    bound_constant(d_s) * (coeff_tail + coeff_err)
}

/// All `(k_x; e)` with `k_x in 0..=n_x` and `e` zero or a unit vector of length `n`.
pub fn build_extended_index_set(n_x: u32, n: usize) -> IndexSet {
    assert!(n >= 1);
    let mut members = Vec::with_capacity((n_x as usize + 1) * (n + 1));
    for kx in 0..=n_x {
        let mut e = vec![0u32; n + 1];
        e[0] = kx;
        members.push(MultiIndex::new(e.clone()));
        for j in 1..=n {
            e[j] = 1;
            members.push(MultiIndex::new(e.clone()));
            e[j] = 0;
        }
    }
    IndexSet::new((0..=n).collect(), members).expect("dimensions 0..=n")
}

#[derive(Debug, Clone)]
pub struct Refit {
    pub approximant: Approximant,
    pub sample_count: usize,
    pub node_count: usize,
    pub condition_estimate: Option<f64>,
}

/// Fits coefficients on `set` from samples of `oracle` at the nodes of one
/// plan over all dimensions.
pub fn refit_coefficients<O: Oracle + ?Sized>(
    set: &IndexSet,
    oracle: &O,
    oversampling: f64,
    seed: u64,
) -> Result<Refit, ApproxError> {
    refit_with_options(
        set,
        oracle,
        &PlanOptions {
            oversampling,
            seed,
            ..Default::default()
        },
    )
}

pub fn refit_with_options<O: Oracle + ?Sized>(
    set: &IndexSet,
    oracle: &O,
    opts: &PlanOptions,
) -> Result<Refit, ApproxError> {
    if set.dims().len() != oracle.dim() {
        return Err(ApproxError::Dimension {
            expected: oracle.dim(),
            found: set.dims().len(),
        });
    }
    let plan = plan_for(set, opts, None)?;
    let mut sampler = Sampler::new(oracle, 0);
    let samples = sampler.sample_plan(&plan, &[Vec::new()])?;
    let values = plan.solve_many(&[samples[0].as_slice()])?.pop().unwrap();
    let approximant = Approximant::new(set.clone(), values)?.with_transforms(oracle.transforms())?;
    Ok(Refit {
        approximant,
        sample_count: sampler.calls(),
        node_count: plan.node_count(),
        condition_estimate: plan.condition_estimate(),
    })
}
