//! Reconstruction plans: sampling nodes plus a rule that maps samples to the
//! projected coefficients of a candidate index set.
//!
//! Three kinds exist. `Gauss1d` is exact Chebyshev-Gauss quadrature in one
//! dimension. `LeastSquares` draws arcsine-distributed random nodes and solves
//! the discrete least-squares problem. `Tensor` combines Gauss nodes in one
//! dimension with a least-squares plan for the projection of the target onto
//! the remaining dimensions; it needs far fewer linear-algebra operations when
//! the target is a large product-like set.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::basis::{gauss_nodes, univariate_unchecked};
use crate::index_set::{IndexSet, MultiIndex};
use crate::linalg::LeastSquaresSystem;

/// Largest estimated condition number accepted for a least-squares design.
pub const CONDITION_LIMIT: f64 = 1e8;
/// Number of plan attempts under the re-plan policy.
pub const REPLAN_ATTEMPTS: usize = 3;
/// Default cap on the number of unknowns solved in a single least-squares system.
pub const DEFAULT_MAX_LS_COLUMNS: usize = 2500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconError {
    #[error("target index set is empty")]
    EmptyTarget,
    #[error("oversampling must be a finite number >= 1, got {0}")]
    InvalidOversampling(f64),
    #[error("estimated condition number {estimate:.3e} exceeds {CONDITION_LIMIT:e} after {attempts} attempt(s)")]
    IllConditioned { estimate: f64, attempts: usize },
    #[error("expected {expected} samples, got {found}")]
    SampleCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    Gauss1d,
    LeastSquares,
    Tensor,
}

/// Projected coefficients aligned with `target`; `anchor` holds the fixed
/// (dimension, value) pairs of the complement used when sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedCoefficients {
    pub target: IndexSet,
    pub values: Vec<Complex64>,
    pub anchor: Vec<(usize, f64)>,
}

impl ProjectedCoefficients {
    pub fn scored(&self) -> Vec<(MultiIndex, f64)> {
        self.target
            .iter()
            .cloned()
            .zip(self.values.iter().map(|v| v.norm()))
            .collect()
    }
}

#[derive(Debug, Clone)]
struct GaussRule {
    nodes: Vec<f64>,
    /// `T_k(xi_i)` for each target degree k (rows) and node i (columns).
    table: Vec<f64>,
}

impl GaussRule {
    fn new(m: usize, degrees: &[u32]) -> Self {
        let nodes = gauss_nodes(m);
        let mut table = Vec::with_capacity(degrees.len() * m);
        for &k in degrees {
            table.extend(nodes.iter().map(|&x| univariate_unchecked(k, x)));
        }
        Self { nodes, table }
    }

    fn m(&self) -> usize {
        self.nodes.len()
    }

    fn transform(&self, y: &[Complex64], out: &mut [Complex64]) {
        let m = self.m();
        let inv = 1.0 / m as f64;
        for (slot, row) in out.iter_mut().zip(self.table.chunks_exact(m)) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (v, t) in y.iter().zip(row) {
                acc += v * t;
            }
            *slot = acc * inv;
        }
    }
}

#[derive(Debug, Clone)]
struct TensorParts {
    gauss_pos: usize,
    rule: GaussRule,
    rest: Box<ReconstructionPlan>,
    /// For each target member: (row in the rest target, row in the Gauss table).
    lookup: Vec<(usize, usize)>,
    n_degrees: usize,
}

#[derive(Debug, Clone)]
enum Body {
    Gauss(GaussRule),
    LeastSquares(LeastSquaresSystem),
    Tensor(TensorParts),
}

/// Nodes and solve rule for one candidate index set.
#[derive(Debug, Clone)]
pub struct ReconstructionPlan {
    target: IndexSet,
    kind: PlanKind,
    oversampling: f64,
    seed: u64,
    body: Body,
}

/// Knobs shared by automatically chosen plans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub oversampling: f64,
    pub seed: u64,
    pub max_ls_columns: usize,
    /// Number of leading positions that always receive a Gauss rule (as long
    /// as at least one other position remains).
    pub gauss_prefix: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            oversampling: 2.0,
            seed: 0,
            max_ls_columns: DEFAULT_MAX_LS_COLUMNS,
            gauss_prefix: 0,
        }
    }
}

/// `max(ceil(c |K| max(1, ln(|K|+1))), |K| + 10)`.
pub fn least_squares_node_count(target_len: usize, oversampling: f64) -> usize {
    let k = target_len as f64;
    let m = (oversampling * k * (k + 1.0).ln().max(1.0)).ceil() as usize;
    m.max(target_len + 10)
}

pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Chebyshev-Gauss rule with `N + 1` nodes for the degrees `0..=N` in dimension `t`.
pub fn plan_gauss_1d(t: usize, max_degree: u32) -> ReconstructionPlan {
    let members = (0..=max_degree).map(|k| MultiIndex::new(vec![k])).collect();
    let target = IndexSet::new(vec![t], members).expect("single increasing dimension");
    let degrees: Vec<u32> = (0..=max_degree).collect();
    ReconstructionPlan {
        target,
        kind: PlanKind::Gauss1d,
        oversampling: 1.0,
        seed: 0,
        body: Body::Gauss(GaussRule::new(max_degree as usize + 1, &degrees)),
    }
}

fn check_oversampling(oversampling: f64) -> Result<(), ReconError> {
    if !(oversampling.is_finite() && oversampling >= 1.0) {
        return Err(ReconError::InvalidOversampling(oversampling));
    }
    Ok(())
}

/// Random arcsine nodes `cos(pi U)` and a least-squares solve for `target`.
/// Fails if the design is too ill-conditioned; see [`plan_least_squares_replanned`].
pub fn plan_least_squares(
    target: &IndexSet,
    oversampling: f64,
    seed: u64,
) -> Result<ReconstructionPlan, ReconError> {
    if target.is_empty() {
        return Err(ReconError::EmptyTarget);
    }
    check_oversampling(oversampling)?;
    let dim = target.dims().len();
    let m = least_squares_node_count(target.len(), oversampling);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<f64> = (0..m * dim)
        .map(|_| (PI * rng.gen::<f64>()).cos())
        .collect();
    let system = LeastSquaresSystem::build(target, nodes);
    let estimate = system.condition_estimate();
    if !system.is_full_rank() || estimate > CONDITION_LIMIT {
        return Err(ReconError::IllConditioned {
            estimate,
            attempts: 1,
        });
    }
    Ok(ReconstructionPlan {
        target: target.clone(),
        kind: PlanKind::LeastSquares,
        oversampling,
        seed,
        body: Body::LeastSquares(system),
    })
}

/// [`plan_least_squares`] under the re-plan policy: on ill-conditioning retry
/// with a fresh seed and 1.5 times the oversampling, at most three attempts.
pub fn plan_least_squares_replanned(
    target: &IndexSet,
    oversampling: f64,
    seed: u64,
) -> Result<ReconstructionPlan, ReconError> {
    let mut os = oversampling;
    let mut last = 0.0;
    for attempt in 0..REPLAN_ATTEMPTS {
        let s = if attempt == 0 { seed } else { mix_seed(seed, attempt as u64) };
        match plan_least_squares(target, os, s) {
            Err(ReconError::IllConditioned { estimate, .. }) => {
                log::warn!("least-squares design ill-conditioned ({estimate:.3e}); re-planning");
                last = estimate;
                os *= 1.5;
            }
            other => return other,
        }
    }
    Err(ReconError::IllConditioned {
        estimate: last,
        attempts: REPLAN_ATTEMPTS,
    })
}

/// Gauss nodes in the dimension at `gauss_pos` times a plan for the
/// projection of `target` onto the other dimensions.
pub fn plan_tensor(
    target: &IndexSet,
    gauss_pos: usize,
    opts: &PlanOptions,
) -> Result<ReconstructionPlan, ReconError> {
    if target.is_empty() {
        return Err(ReconError::EmptyTarget);
    }
    check_oversampling(opts.oversampling)?;
    let dim = target.dims().len();
    assert!(dim >= 2 && gauss_pos < dim, "tensor plan needs a second dimension");
    let rest_positions: Vec<usize> = (0..dim).filter(|&p| p != gauss_pos).collect();
    let rest_target = target.project_positions(&rest_positions);
    let rest_opts = PlanOptions {
        seed: mix_seed(opts.seed, 0x7e45),
        gauss_prefix: if gauss_pos == 0 { opts.gauss_prefix.saturating_sub(1) } else { 0 },
        ..*opts
    };
    let rest = plan_for(&rest_target, &rest_opts, None)?;
    let mut degrees: Vec<u32> = target.iter().map(|k| k.entries()[gauss_pos]).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let m = *degrees.last().unwrap() as usize + 1;
    let rule = GaussRule::new(m, &degrees);
    let lookup = target
        .iter()
        .map(|k| {
            let r = rest_target
                .position(&k.select(&rest_positions))
                .expect("projection contains every sub-index");
            let q = degrees.binary_search(&k.entries()[gauss_pos]).unwrap();
            (r, q)
        })
        .collect();
    Ok(ReconstructionPlan {
        target: target.clone(),
        kind: PlanKind::Tensor,
        oversampling: opts.oversampling,
        seed: opts.seed,
        body: Body::Tensor(TensorParts {
            gauss_pos,
            n_degrees: degrees.len(),
            rule,
            rest: Box::new(rest),
            lookup,
        }),
    })
}

/// Chooses between a flat least-squares plan and a tensor plan. The tensor
/// plan is used when the target exceeds `max_ls_columns` or needs fewer
/// samples; `gauss_pos` fixes its Gauss dimension (default: the position with
/// the largest degree, the last one on ties). A positive `gauss_prefix` forces
/// the tensor plan with its Gauss rule on position 0.
pub fn plan_for(
    target: &IndexSet,
    opts: &PlanOptions,
    gauss_pos: Option<usize>,
) -> Result<ReconstructionPlan, ReconError> {
    if target.is_empty() {
        return Err(ReconError::EmptyTarget);
    }
    let dim = target.dims().len();
    if dim >= 2 && opts.gauss_prefix > 0 {
        return plan_tensor(target, 0, opts);
    }
    if dim >= 2 {
        let degs = target.max_degrees();
        let gp = gauss_pos.unwrap_or_else(|| {
            let max = *degs.iter().max().unwrap();
            degs.iter().rposition(|&d| d == max).unwrap()
        });
        let rest_positions: Vec<usize> = (0..dim).filter(|&p| p != gp).collect();
        let rest_len = target.project_positions(&rest_positions).len();
        let tensor_samples = least_squares_node_count(rest_len, opts.oversampling) * (degs[gp] as usize + 1);
        let flat_samples = least_squares_node_count(target.len(), opts.oversampling);
        if target.len() > opts.max_ls_columns || tensor_samples < flat_samples {
            return plan_tensor(target, gp, opts);
        }
    }
    plan_least_squares_replanned(target, opts.oversampling, opts.seed)
}

impl ReconstructionPlan {
    pub fn target(&self) -> &IndexSet {
        &self.target
    }

    pub fn dims(&self) -> &[usize] {
        self.target.dims()
    }

    pub fn kind(&self) -> PlanKind {
        self.kind
    }

    pub fn oversampling(&self) -> f64 {
        self.oversampling
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn node_count(&self) -> usize {
        match &self.body {
            Body::Gauss(rule) => rule.m(),
            Body::LeastSquares(sys) => sys.node_count(),
            Body::Tensor(t) => t.rest.node_count() * t.rule.m(),
        }
    }

    /// Writes node `j` (coordinates in the order of `dims()`) into `out`.
    pub fn write_node(&self, j: usize, out: &mut [f64]) {
        let dim = self.dims().len();
        match &self.body {
            Body::Gauss(rule) => out[0] = rule.nodes[j],
            Body::LeastSquares(sys) => out[..dim].copy_from_slice(&sys.nodes()[j * dim..(j + 1) * dim]),
            Body::Tensor(t) => {
                let m = t.rule.m();
                t.rest.write_node(j / m, &mut out[..dim - 1]);
                out[t.gauss_pos..dim].rotate_right(1);
                out[t.gauss_pos] = t.rule.nodes[j % m];
            }
        }
    }

    pub fn node(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims().len()];
        self.write_node(j, &mut out);
        out
    }

    /// Condition estimate of the least-squares design (tensor plans report
    /// their inner system); `None` for pure quadrature.
    pub fn condition_estimate(&self) -> Option<f64> {
        match &self.body {
            Body::Gauss(_) => None,
            Body::LeastSquares(sys) => Some(sys.condition_estimate()),
            Body::Tensor(t) => t.rest.condition_estimate(),
        }
    }

    pub fn solve(&self, samples: &[Complex64]) -> Result<ProjectedCoefficients, ReconError> {
        let values = self.solve_many(&[samples])?.pop().unwrap();
        Ok(ProjectedCoefficients {
            target: self.target.clone(),
            values,
            anchor: Vec::new(),
        })
    }

    /// Coefficient vectors (aligned with the target) for several sample vectors
    /// sharing this plan's nodes.
    pub fn solve_many(&self, samples: &[&[Complex64]]) -> Result<Vec<Vec<Complex64>>, ReconError> {
        let expected = self.node_count();
        if let Some(bad) = samples.iter().find(|s| s.len() != expected) {
            return Err(ReconError::SampleCount {
                expected,
                found: bad.len(),
            });
        }
        Ok(match &self.body {
            Body::Gauss(rule) => samples
                .iter()
                .map(|y| {
                    let mut out = vec![Complex64::new(0.0, 0.0); self.target.len()];
                    rule.transform(y, &mut out);
                    out
                })
                .collect(),
            Body::LeastSquares(sys) => sys.solve(samples),
            Body::Tensor(t) => {
                let m = t.rule.m();
                let rest_nodes = t.rest.node_count();
                let nq = t.n_degrees;
                // rhs[(s * nq + q)][j]
                let mut rhs = vec![vec![Complex64::new(0.0, 0.0); rest_nodes]; samples.len() * nq];
                let mut buf = vec![Complex64::new(0.0, 0.0); nq];
                for (s, y) in samples.iter().enumerate() {
                    for j in 0..rest_nodes {
                        t.rule.transform(&y[j * m..(j + 1) * m], &mut buf);
                        for (q, v) in buf.iter().enumerate() {
                            rhs[s * nq + q][j] = *v;
                        }
                    }
                }
                let refs: Vec<&[Complex64]> = rhs.iter().map(|v| v.as_slice()).collect();
                let rest_values = t.rest.solve_many(&refs)?;
                (0..samples.len())
                    .map(|s| {
                        t.lookup
                            .iter()
                            .map(|&(r, q)| rest_values[s * nq + q][r])
                            .collect()
                    })
                    .collect()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::eval_product;
    use proptest::prelude::*;
    use rand::Rng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn sample_poly(plan: &ReconstructionPlan, terms: &[(MultiIndex, Complex64)]) -> Vec<Complex64> {
        (0..plan.node_count())
            .map(|j| {
                let p = plan.node(j);
                terms
                    .iter()
                    .map(|(k, c)| c * eval_product(k, &p).unwrap())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn gauss_single_node_is_zero() {
        let plan = plan_gauss_1d(0, 0);
        assert_eq!(plan.node_count(), 1);
        assert!(plan.node(0)[0].abs() < 1e-16);
    }

    #[test]
    fn gauss_recovers_single_degree() {
        let plan = plan_gauss_1d(2, 4);
        assert_eq!(plan.node_count(), 5);
        let y = sample_poly(&plan, &[(mi(&[3]), Complex64::new(1.0, 0.0))]);
        let c = plan.solve(&y).unwrap();
        for (k, v) in c.target.iter().zip(&c.values) {
            let expected = if k.entries()[0] == 3 { 1.0 } else { 0.0 };
            assert!((v - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn gauss_constant_function() {
        let plan = plan_gauss_1d(0, 6);
        let c = plan.solve(&vec![Complex64::new(1.0, 0.0); 7]).unwrap();
        assert!((c.values[0] - 1.0).norm() < 1e-14);
        assert!(c.values[1..].iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn node_count_examples() {
        assert_eq!(least_squares_node_count(1, 2.0), 11);
        assert_eq!(least_squares_node_count(100, 2.0), 924);
        let t = IndexSet::new(vec![0], vec![mi(&[0])]).unwrap();
        assert_eq!(plan_least_squares(&t, 2.0, 1).unwrap().node_count(), 11);
    }

    #[test]
    fn least_squares_nodes_are_deterministic_and_in_range() {
        let t = IndexSet::new(vec![0, 1], vec![mi(&[0, 1]), mi(&[2, 0]), mi(&[1, 1])]).unwrap();
        let a = plan_least_squares(&t, 2.0, 42).unwrap();
        let b = plan_least_squares(&t, 2.0, 42).unwrap();
        let c = plan_least_squares(&t, 2.0, 43).unwrap();
        for j in 0..a.node_count() {
            assert_eq!(a.node(j), b.node(j));
            assert!(a.node(j).iter().all(|z| z.abs() <= 1.0));
        }
        assert_ne!(a.node(0), c.node(0));
    }

    #[test]
    fn least_squares_recovers_synthetic_polynomial() {
        let t = IndexSet::new(
            vec![3, 5],
            vec![mi(&[1, 0]), mi(&[0, 3]), mi(&[2, 2]), mi(&[0, 0])],
        )
        .unwrap();
        let plan = plan_least_squares_replanned(&t, 2.0, 7).unwrap();
        let terms = [
            (mi(&[1, 0]), Complex64::new(2.0, 0.0)),
            (mi(&[0, 3]), Complex64::new(0.5, 0.0)),
        ];
        let c = plan.solve(&sample_poly(&plan, &terms)).unwrap();
        for (k, v) in c.target.iter().zip(&c.values) {
            let expected = terms.iter().find(|(kk, _)| kk == k).map_or(Complex64::new(0.0, 0.0), |t| t.1);
            assert!((v - expected).norm() < 1e-10, "{k:?}: {v}");
        }
    }

    #[test]
    fn zero_and_constant_samples() {
        let t = IndexSet::new(vec![0, 1], vec![mi(&[0, 0]), mi(&[1, 2])]).unwrap();
        let plan = plan_least_squares(&t, 2.0, 3).unwrap();
        let zero = plan.solve(&vec![Complex64::new(0.0, 0.0); plan.node_count()]).unwrap();
        assert!(zero.values.iter().all(|v| v.norm() == 0.0));

        let t0 = IndexSet::new(vec![0, 1], vec![mi(&[0, 0])]).unwrap();
        let plan = plan_least_squares(&t0, 2.0, 3).unwrap();
        let c = Complex64::new(0.25, -1.5);
        let r = plan.solve(&vec![c; plan.node_count()]).unwrap();
        assert!((r.values[0] - c).norm() < 1e-14);
    }

    #[test]
    fn sample_count_mismatch_is_an_error() {
        let plan = plan_gauss_1d(0, 3);
        assert!(matches!(
            plan.solve(&[Complex64::new(0.0, 0.0); 3]),
            Err(ReconError::SampleCount { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn duplicate_columns_are_ill_conditioned() {
        // a single repeated node makes every column proportional
        let t = IndexSet::new(vec![0], (0..4).map(|k| mi(&[k])).collect()).unwrap();
        let sys = LeastSquaresSystem::build(&t, vec![0.3; 20]);
        assert!(!sys.is_full_rank() || sys.condition_estimate() > CONDITION_LIMIT);
    }

    #[test]
    fn tensor_plan_recovers_product_set() {
        let mut members = Vec::new();
        for kx in 0..12 {
            members.push(mi(&[kx, 0, 0]));
            members.push(mi(&[kx, 1, 0]));
            members.push(mi(&[kx, 0, 1]));
        }
        let t = IndexSet::new(vec![0, 1, 2], members).unwrap();
        let plan = plan_tensor(&t, 0, &PlanOptions { seed: 5, ..Default::default() }).unwrap();
        assert_eq!(plan.kind(), PlanKind::Tensor);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let terms: Vec<_> = t
            .iter()
            .map(|k| (k.clone(), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
            .collect();
        let c = plan.solve(&sample_poly(&plan, &terms)).unwrap();
        for ((_, expected), v) in terms.iter().zip(&c.values) {
            assert!((v - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn automatic_choice_prefers_tensor_for_large_products() {
        let mut members = Vec::new();
        for kx in 0..40 {
            for a in 0..3 {
                members.push(mi(&[kx, a]));
            }
        }
        let t = IndexSet::new(vec![0, 1], members).unwrap();
        let opts = PlanOptions {
            max_ls_columns: 50,
            ..Default::default()
        };
        assert_eq!(plan_for(&t, &opts, None).unwrap().kind(), PlanKind::Tensor);
        let small = IndexSet::new(vec![0, 1], vec![mi(&[0, 0]), mi(&[0, 2]), mi(&[1, 0]), mi(&[1, 2])]).unwrap();
        assert_eq!(plan_for(&small, &PlanOptions::default(), None).unwrap().kind(), PlanKind::LeastSquares);
    }

    #[test]
    fn gauss_prefix_shares_trailing_coordinates() {
        let mut members = Vec::new();
        for a in 0..4 {
            for b in 0..3 {
                for c in 0..3 {
                    if a + b + c <= 5 {
                        members.push(mi(&[a, b, c]));
                    }
                }
            }
        }
        let t = IndexSet::new(vec![0, 1, 2], members).unwrap();
        let opts = PlanOptions {
            gauss_prefix: 2,
            seed: 3,
            ..Default::default()
        };
        let plan = plan_for(&t, &opts, None).unwrap();
        assert_eq!(plan.kind(), PlanKind::Tensor);
        // 4 x 3 Gauss nodes per trailing coordinate
        let block = 12;
        assert_eq!(plan.node_count() % block, 0);
        for j in 0..plan.node_count() {
            assert_eq!(plan.node(j)[2], plan.node(j - j % block)[2]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let terms: Vec<_> = t
            .iter()
            .map(|k| (k.clone(), Complex64::new(rng.gen_range(-1.0..1.0), 0.0)))
            .collect();
        let c = plan.solve(&sample_poly(&plan, &terms)).unwrap();
        for ((_, e), v) in terms.iter().zip(&c.values) {
            assert!((v - e).norm() < 1e-10);
        }
    }

    fn arb_target() -> impl Strategy<Value = IndexSet> {
        (1usize..4, proptest::collection::vec(proptest::collection::vec(0u32..6, 3), 1..25)).prop_map(|(dim, raw)| {
            let members = raw.into_iter().map(|v| MultiIndex::new(v[..dim].to_vec())).collect();
            IndexSet::new((0..dim).collect(), members).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exact_recovery_round_trip(target in arb_target(), seed in any::<u64>(), tensor in any::<bool>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let terms: Vec<_> = target.iter()
                .map(|k| (k.clone(), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
                .collect();
            let plan = if tensor && target.dims().len() > 1 {
                plan_tensor(&target, 0, &PlanOptions { seed, ..Default::default() }).unwrap()
            } else {
                plan_least_squares_replanned(&target, 2.0, seed).unwrap()
            };
            let c = plan.solve(&sample_poly(&plan, &terms)).unwrap();
            for ((_, e), v) in terms.iter().zip(&c.values) {
                prop_assert!((v - e).norm() < 1e-10);
            }
        }

        #[test]
        fn solve_is_linear(target in arb_target(), seed in any::<u64>(), alpha in -3.0f64..3.0) {
            let plan = plan_least_squares_replanned(&target, 2.0, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let m = plan.node_count();
            let y1: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let y2: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let comb: Vec<Complex64> = y1.iter().zip(&y2).map(|(a, b)| a * alpha + b).collect();
            let r = plan.solve_many(&[&y1, &y2, &comb]).unwrap();
            let scale = r[2].iter().map(|v| v.norm()).fold(1.0, f64::max);
            for i in 0..r[0].len() {
                let lin = r[0][i] * alpha + r[1][i];
                prop_assert!((lin - r[2][i]).norm() <= 1e-12 * scale);
            }
        }
    }
}
