//! Dimension-incremental detection of the dominant Chebyshev coefficients of
//! a black-box function on `[-1,1]^D`.
//!
//! Step 1 finds, for every dimension on its own, the degrees that matter when
//! all other coordinates are pinned to random anchors. Step 2 then grows the
//! index set one dimension at a time: candidates are products of the set found
//! so far with the next one-dimensional set, their projected coefficients are
//! reconstructed from samples and the largest ones survive.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::index_set::{candidate_product, top_s_union, IndexError, IndexSet, MultiIndex, SearchSpace};
use crate::oracles::{Oracle, OracleError};
use crate::reconstruction::{mix_seed, plan_for, plan_gauss_1d, PlanOptions, ReconError, DEFAULT_MAX_LS_COLUMNS};
use crate::sampling::{SampleFailure, Sampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorLaw {
    Arcsine,
    Uniform,
}

impl AnchorLaw {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        match self {
            AnchorLaw::Arcsine => (PI * u).cos(),
            AnchorLaw::Uniform => 2.0 * u - 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AnchorLaw::Arcsine => "arcsine",
            AnchorLaw::Uniform => "uniform",
        }
    }
}

impl fmt::Display for AnchorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnchorLaw {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "arcsine" => Ok(AnchorLaw::Arcsine),
            "uniform" => Ok(AnchorLaw::Uniform),
            other => Err(format!("unknown distribution `{other}` (expected arcsine or uniform)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    pub sparsity: usize,
    pub extension: u32,
    pub threshold: f64,
    pub iterations: usize,
    pub superposition: Option<usize>,
    pub oversampling: f64,
    pub seed: u64,
    pub anchor: AnchorLaw,
    /// Re-solve the coefficients of the final set on a fresh plan.
    pub refit: bool,
    pub refit_oversampling: f64,
    pub max_ls_columns: usize,
    /// Leading dimensions that coupled steps cover with Gauss rules, so that
    /// nodes share their remaining coordinates.
    pub spatial_gauss: usize,
    /// Maximum number of memoized samples; 0 disables the memo.
    pub cache_capacity: usize,
}

impl DetectionConfig {
    pub fn new(sparsity: usize, extension: u32) -> Self {
        Self {
            sparsity,
            extension,
            threshold: 1e-12,
            iterations: 5,
            superposition: None,
            oversampling: 2.0,
            seed: 0,
            anchor: AnchorLaw::Arcsine,
            refit: false,
            refit_oversampling: 2.0,
            max_ls_columns: DEFAULT_MAX_LS_COLUMNS,
            spatial_gauss: 0,
            cache_capacity: 1 << 19,
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |m: String| Err(DetectError::InvalidConfig(m));
        if self.sparsity == 0 {
            return bad("sparsity must be positive".into());
        }
        if self.extension == 0 {
            return bad("extension must be positive".into());
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return bad(format!("threshold must be positive, got {}", self.threshold));
        }
        if self.iterations == 0 {
            return bad("iterations must be positive".into());
        }
        if self.superposition == Some(0) {
            return bad("superposition dimension must be positive".into());
        }
        for (name, v) in [("oversampling", self.oversampling), ("refit_oversampling", self.refit_oversampling)] {
            if !(v.is_finite() && v >= 1.0) {
                return bad(format!("{name} must be >= 1, got {v}"));
            }
        }
        if self.max_ls_columns == 0 {
            return bad("max_ls_columns must be positive".into());
        }
        Ok(())
    }

    fn plan_options(&self, salt: u64, gauss_prefix: usize, oversampling: f64) -> PlanOptions {
        PlanOptions {
            oversampling,
            seed: mix_seed(self.seed, salt),
            max_ls_columns: self.max_ls_columns,
            gauss_prefix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("invalid detection config: {0}")]
    InvalidConfig(String),
    #[error("anchor requested for an empty dimension list")]
    EmptyAnchor,
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Reconstruction(#[from] ReconError),
    #[error("oracle failed twice at {point:?}: {source}")]
    Oracle { point: Vec<f64>, source: OracleError },
}

impl From<SampleFailure> for DetectError {
    fn from(f: SampleFailure) -> Self {
        DetectError::Oracle {
            point: f.point,
            source: f.source,
        }
    }
}

/// One row of the detection log. `samples` is cumulative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub label: String,
    pub candidates: usize,
    pub kept: usize,
    pub samples: usize,
    pub anchors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Final set over all dimensions, lexicographically ordered.
    pub index_set: IndexSet,
    pub coefficients: Vec<Complex64>,
    /// Number of oracle evaluations.
    pub sample_count: usize,
    pub log: Vec<StepRecord>,
    /// Step-1 sets, one per dimension.
    pub single_sets: Vec<IndexSet>,
}

impl DetectionResult {
    pub fn coefficient(&self, k: &MultiIndex) -> Option<Complex64> {
        self.index_set.position(k).map(|i| self.coefficients[i])
    }
}

/// One random anchor coordinate per listed dimension.
pub fn draw_anchor<R: Rng + ?Sized>(
    dims: &[usize],
    law: AnchorLaw,
    rng: &mut R,
) -> Result<Vec<(usize, f64)>, DetectError> {
    if dims.is_empty() {
        return Err(DetectError::EmptyAnchor);
    }
    Ok(dims.iter().map(|&d| (d, law.draw(rng))).collect())
}

/// Stateful driver; the steps can be run one by one or all at once via [`Detector::run`].
pub struct Detector<'a, O: Oracle + ?Sized> {
    cfg: DetectionConfig,
    dim: usize,
    space: SearchSpace,
    rng: ChaCha8Rng,
    sampler: Sampler<'a, O>,
    log: Vec<StepRecord>,
    last: Option<(IndexSet, Vec<Complex64>)>,
}

impl<'a, O: Oracle + ?Sized> Detector<'a, O> {
    pub fn new(oracle: &'a O, cfg: DetectionConfig) -> Result<Self, DetectError> {
        cfg.validate()?;
        let dim = oracle.dim();
        let space = SearchSpace::new(dim, cfg.extension, cfg.superposition)?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            sampler: Sampler::new(oracle, cfg.cache_capacity),
            cfg,
            dim,
            space,
            log: Vec::new(),
            last: None,
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn sample_count(&self) -> usize {
        self.sampler.calls()
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    /// Coefficients of the most recent reconstruction (last iteration), aligned
    /// with its candidate set.
    pub fn last_coefficients(&self) -> Option<(&IndexSet, &[Complex64])> {
        self.last.as_ref().map(|(k, v)| (k, v.as_slice()))
    }

    fn anchors(&mut self, dims: &[usize], count: usize) -> Result<Vec<Vec<(usize, f64)>>, DetectError> {
        if dims.is_empty() {
            return Ok(vec![Vec::new(); count]);
        }
        (0..count)
            .map(|_| draw_anchor(dims, self.cfg.anchor, &mut self.rng))
            .collect()
    }

    fn record(&mut self, label: String, candidates: usize, kept: usize, anchors: usize) {
        log::info!("{label}: {candidates} candidates, {kept} kept, {} samples", self.sample_count());
        self.log.push(StepRecord {
            label,
            candidates,
            kept,
            samples: self.sample_count(),
            anchors,
        });
    }

    /// Degrees of dimension `t` (0-based) that survive on `r` random anchors.
    pub fn single_component_step(&mut self, t: usize) -> Result<IndexSet, DetectError> {
        assert!(t < self.dim, "dimension {t} out of range");
        let plan = plan_gauss_1d(t, self.cfg.extension);
        let others: Vec<usize> = (0..self.dim).filter(|&d| d != t).collect();
        let r = self.cfg.iterations;
        let anchors = self.anchors(&others, r)?;
        let samples = self.sampler.sample_plan(&plan, &anchors)?;
        let refs: Vec<&[Complex64]> = samples.iter().map(|s| s.as_slice()).collect();
        let solved = plan.solve_many(&refs)?;
        let mut acc = IndexSet::empty(vec![t]);
        for values in &solved {
            let scored: Vec<(MultiIndex, f64)> =
                plan.target().iter().cloned().zip(values.iter().map(|v| v.norm())).collect();
            acc = top_s_union(&acc, &scored, self.cfg.sparsity, self.cfg.threshold)?;
        }
        self.last = Some((plan.target().clone(), solved.into_iter().last().unwrap()));
        self.record(format!("single:{}", t + 1), plan.target().len(), acc.len(), anchors.len());
        Ok(acc)
    }

    /// Extends `prev` (over dimensions `0..t`) by dimension `t` using the
    /// Step-1 set `one_dim`.
    pub fn coupled_step(&mut self, t: usize, prev: &IndexSet, one_dim: &IndexSet) -> Result<IndexSet, DetectError> {
        assert!(t >= 1 && t < self.dim, "coupled step needs 1 <= t < dim");
        let candidates = candidate_product(prev, one_dim, &self.space)?;
        let label = format!("coupled:{}", t + 1);
        let final_step = t + 1 == self.dim;
        if candidates.is_empty() {
            log::warn!("{label}: empty candidate set");
            self.last = Some((candidates.clone(), Vec::new()));
            self.record(label, 0, 0, 0);
            return Ok(candidates);
        }
        let prefix = self.cfg.spatial_gauss.min(t);
        let opts = self.cfg.plan_options(t as u64 + 1, prefix, self.cfg.oversampling);
        let plan = plan_for(&candidates, &opts, if prefix == 0 { Some(t) } else { None })?;
        let r = if final_step { 1 } else { self.cfg.iterations };
        let rest: Vec<usize> = (t + 1..self.dim).collect();
        let anchors = self.anchors(&rest, r)?;
        let samples = self.sampler.sample_plan(&plan, &anchors)?;
        let refs: Vec<&[Complex64]> = samples.iter().map(|s| s.as_slice()).collect();
        let solved = plan.solve_many(&refs)?;
        let mut acc = IndexSet::empty(candidates.dims().to_vec());
        for values in &solved {
            let scored: Vec<(MultiIndex, f64)> =
                candidates.iter().cloned().zip(values.iter().map(|v| v.norm())).collect();
            acc = top_s_union(&acc, &scored, self.cfg.sparsity, self.cfg.threshold)?;
        }
        self.last = Some((candidates.clone(), solved.into_iter().last().unwrap()));
        self.record(label, candidates.len(), acc.len(), if rest.is_empty() { 0 } else { r });
        Ok(acc)
    }

    /// Coefficients of `set` from a fresh plan over all dimensions.
    fn refit(&mut self, set: &IndexSet) -> Result<Vec<Complex64>, DetectError> {
        let opts = self
            .cfg
            .plan_options(0x5eed_0f_2ef1, self.cfg.spatial_gauss, self.cfg.refit_oversampling);
        let plan = plan_for(set, &opts, None)?;
        let samples = self.sampler.sample_plan(&plan, &[Vec::new()])?;
        let values = plan.solve_many(&[samples[0].as_slice()])?.pop().unwrap();
        self.record("refit".into(), set.len(), set.len(), 0);
        Ok(values)
    }

    pub fn run(mut self) -> Result<DetectionResult, DetectError> {
        let single_sets = (0..self.dim)
            .map(|t| self.single_component_step(t))
            .collect::<Result<Vec<_>, _>>()?;
        let mut current = single_sets[0].clone();
        for t in 1..self.dim {
            current = self.coupled_step(t, &current, &single_sets[t])?;
            if current.is_empty() {
                // nothing can be extended any more
                current = IndexSet::empty((0..self.dim).collect());
                self.last = Some((current.clone(), Vec::new()));
                break;
            }
        }
        let (set, values) = if current.is_empty() {
            (current, Vec::new())
        } else if self.cfg.refit {
            let values = self.refit(&current)?;
            (current, values)
        } else {
            let (cands, vals) = self.last.as_ref().expect("a reconstruction ran");
            let values = current
                .iter()
                .map(|k| vals[cands.position(k).expect("kept indices are candidates")])
                .collect();
            (current, values)
        };
        let (members, coefficients): (Vec<MultiIndex>, Vec<Complex64>) = set
            .iter()
            .cloned()
            .zip(values)
            .filter(|(_, v)| v.norm() >= self.cfg.threshold)
            .unzip();
        let index_set = IndexSet::new(set.dims().to_vec(), members)?;
        Ok(DetectionResult {
            index_set,
            coefficients,
            sample_count: self.sample_count(),
            log: self.log,
            single_sets,
        })
    }
}

/// Runs both detection steps (and the optional refit) on `oracle`.
pub fn detect<O: Oracle + ?Sized>(oracle: &O, cfg: &DetectionConfig) -> Result<DetectionResult, DetectError> {
    Detector::new(oracle, cfg.clone())?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_product;
    use crate::oracles::{FnOracle, ZeroOracle};

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn poly_oracle(dim: usize, terms: Vec<(MultiIndex, f64)>) -> FnOracle<impl Fn(&[f64]) -> Complex64 + Sync> {
        FnOracle::new(dim, move |p: &[f64]| {
            Complex64::new(terms.iter().map(|(k, c)| c * eval_product(k, p).unwrap()).sum(), 0.0)
        })
    }

    #[test]
    fn anchors_are_deterministic_and_follow_the_law() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        let x = draw_anchor(&[0, 2], AnchorLaw::Arcsine, &mut a).unwrap();
        let y = draw_anchor(&[0, 2], AnchorLaw::Arcsine, &mut a).unwrap();
        assert_ne!(x, y);
        assert_eq!(x, draw_anchor(&[0, 2], AnchorLaw::Arcsine, &mut b).unwrap());
        assert_eq!(draw_anchor(&[], AnchorLaw::Uniform, &mut a), Err(DetectError::EmptyAnchor));

        // Kolmogorov-Smirnov distance against F(z) = 1 - arccos(z)/pi
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut zs: Vec<f64> = (0..n).map(|_| AnchorLaw::Arcsine.draw(&mut rng)).collect();
        zs.sort_by(f64::total_cmp);
        let ks = zs
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let f = 1.0 - z.acos() / PI;
                (f - i as f64 / n as f64).abs().max((f - (i + 1) as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS = {ks}");
        let mut zs: Vec<f64> = (0..n).map(|_| AnchorLaw::Uniform.draw(&mut rng)).collect();
        zs.sort_by(f64::total_cmp);
        assert!(zs[0] >= -1.0 && zs[n - 1] < 1.0);
        assert!((zs[n / 2]).abs() < 0.02);
    }

    #[test]
    fn config_validation() {
        assert!(DetectionConfig::new(10, 8).validate().is_ok());
        assert!(DetectionConfig::new(0, 8).validate().is_err());
        let mut c = DetectionConfig::new(10, 8);
        c.threshold = 0.0;
        assert!(c.validate().is_err());
        let mut c = DetectionConfig::new(10, 8);
        c.iterations = 0;
        assert!(c.validate().is_err());
        assert_eq!("uniform".parse::<AnchorLaw>(), Ok(AnchorLaw::Uniform));
        assert!("normal".parse::<AnchorLaw>().is_err());
    }

    #[test]
    fn zero_oracle_yields_empty_result() {
        let o = ZeroOracle { dim: 3 };
        let res = detect(&o, &DetectionConfig::new(5, 4)).unwrap();
        assert!(res.index_set.is_empty());
        assert!(res.sample_count > 0);
        assert!(res.single_sets.iter().all(|s| s.is_empty()));
        let mut d = Detector::new(&o, DetectionConfig::new(5, 4)).unwrap();
        assert!(d.single_component_step(1).unwrap().is_empty());
    }

    #[test]
    fn single_step_recovers_one_degree() {
        let o = poly_oracle(2, vec![(mi(&[0, 5]), 1.0)]);
        let mut d = Detector::new(&o, DetectionConfig::new(10, 8)).unwrap();
        assert_eq!(d.single_component_step(1).unwrap(), IndexSet::new(vec![1], vec![mi(&[5])]).unwrap());
        assert_eq!(d.single_component_step(0).unwrap(), IndexSet::new(vec![0], vec![mi(&[0])]).unwrap());
        assert_eq!(d.log().len(), 2);
        assert_eq!(d.log()[0].label, "single:2");
        assert_eq!(d.sample_count(), 2 * 5 * 9);
    }

    #[test]
    fn empty_previous_set_gives_empty_candidates() {
        let o = poly_oracle(2, vec![(mi(&[1, 1]), 1.0)]);
        let mut d = Detector::new(&o, DetectionConfig::new(10, 8)).unwrap();
        let out = d
            .coupled_step(1, &IndexSet::empty(vec![0]), &IndexSet::new(vec![1], vec![mi(&[1])]).unwrap())
            .unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn two_term_example() {
        let o = poly_oracle(2, vec![(mi(&[1, 2]), 3.0), (mi(&[4, 0]), 0.1)]);
        let mut cfg = DetectionConfig::new(2, 8);
        cfg.seed = 11;
        let res = detect(&o, &cfg).unwrap();
        assert_eq!(res.index_set.members(), &[mi(&[1, 2]), mi(&[4, 0])]);
        assert!((res.coefficient(&mi(&[1, 2])).unwrap() - 3.0).norm() < 1e-8);
        assert!((res.coefficient(&mi(&[4, 0])).unwrap() - 0.1).norm() < 1e-8);
        // the final step runs a single iteration without anchor
        let last = res.log.last().unwrap();
        assert_eq!(last.label, "coupled:2");
        assert_eq!(last.anchors, 0);
    }

    #[test]
    fn one_dimensional_target_uses_gauss_coefficients() {
        let o = poly_oracle(1, vec![(mi(&[3]), -0.5), (mi(&[0]), 2.0)]);
        let res = detect(&o, &DetectionConfig::new(4, 6)).unwrap();
        assert_eq!(res.index_set.members(), &[mi(&[0]), mi(&[3])]);
        assert!((res.coefficients[0] - 2.0).norm() < 1e-13);
        assert!((res.coefficients[1] + 0.5).norm() < 1e-13);
    }

    #[test]
    fn spatial_gauss_and_refit_recover_terms() {
        let terms = vec![
            (mi(&[0, 0, 1, 0]), 0.8),
            (mi(&[3, 1, 0, 1]), -0.4),
            (mi(&[2, 0, 2, 0]), 0.3),
            (mi(&[1, 2, 0, 0]), 0.2),
        ];
        let o = poly_oracle(4, terms.clone());
        let mut cfg = DetectionConfig::new(8, 4);
        cfg.spatial_gauss = 2;
        cfg.refit = true;
        cfg.seed = 3;
        let res = detect(&o, &cfg).unwrap();
        assert_eq!(res.index_set.len(), 4);
        for (k, c) in &terms {
            assert!((res.coefficient(k).unwrap() - c).norm() < 1e-10, "{k:?}");
        }
        assert_eq!(res.log.last().unwrap().label, "refit");
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let o = poly_oracle(3, vec![(mi(&[1, 0, 2]), 1.0), (mi(&[0, 3, 1]), 0.5)]);
        let mut cfg = DetectionConfig::new(4, 5);
        cfg.seed = 99;
        let a = detect(&o, &cfg).unwrap();
        let b = detect(&o, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn superposition_limits_candidates() {
        let o = poly_oracle(3, vec![(mi(&[1, 1, 0]), 1.0), (mi(&[0, 1, 1]), 1.0), (mi(&[1, 0, 0]), 1.0)]);
        let mut cfg = DetectionConfig::new(6, 3);
        cfg.superposition = Some(1);
        let res = detect(&o, &cfg).unwrap();
        assert!(res.index_set.iter().all(|k| k.nz() <= 1));
        assert!(res.index_set.contains(&mi(&[1, 0, 0])));
    }
}
