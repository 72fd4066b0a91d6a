//! Acceptance criteria. Each test prints one PASS/FAIL line (written straight
//! to stdout so it shows without `--nocapture`) and asserts the verdict.
//!
//! The Burgers detection (7b) takes about twenty minutes on one core and is
//! `#[ignore]`d; run it with `cargo test --test acceptance -- --ignored`.

use std::f64::consts::SQRT_2;
use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparsecheb::approximant::{build_extended_index_set, refit_coefficients, Approximant};
use sparsecheb::basis::{eval_product, eval_univariate, gauss_nodes};
use sparsecheb::detector::{detect, DetectionConfig, DetectionResult};
use sparsecheb::evaluation::{error_distribution, grid_values, ErrorStats, EvalOptions};
use sparsecheb::index_set::{IndexSet, MultiIndex};
use sparsecheb::oracles::{
    explicit_solution, sine_coefficients, Burgers1d, FnOracle, Heat1d, Oracle, OracleSpec, Poisson1dFourier,
    Poisson2dFourier, PwcOde,
};

fn verdict(id: &str, pass: bool, detail: String) {
    let line = format!("{} criterion {id}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {id} failed: {detail}");
}

fn approximant(res: &DetectionResult, oracle: &dyn Oracle) -> Approximant {
    Approximant::new(res.index_set.clone(), res.coefficients.clone())
        .unwrap()
        .with_transforms(oracle.transforms())
        .unwrap()
}

fn unit_param(n: usize, pos: usize) -> MultiIndex {
    MultiIndex::unit(n, pos)
}

fn eval_opts(grid: usize) -> EvalOptions {
    EvalOptions {
        grid,
        ..EvalOptions::default()
    }
}

/// Entries of every index restricted to the parameter dimensions.
fn parameter_entries(set: &IndexSet, spatial: usize) -> impl Iterator<Item = &[u32]> {
    set.iter().map(move |k| &k.entries()[spatial..])
}

// ---------------------------------------------------------------------------
// Criteria 1 and 2: Poisson 1-D with Fourier data

fn poisson_detection() -> &'static (DetectionResult, f64) {
    static CELL: OnceLock<(DetectionResult, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let oracle = Poisson1dFourier::new(9).unwrap();
        let mut cfg = DetectionConfig::new(200, 16);
        cfg.seed = 1;
        cfg.refit = true;
        cfg.refit_oversampling = 10.0;
        let start = Instant::now();
        let res = detect(&oracle, &cfg).unwrap();
        (res, start.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_1_analytic_coefficients() {
    let (res, secs) = poisson_detection();
    let oracle = Poisson1dFourier::new(9).unwrap();
    let a0 = oracle.coefficient_position(0);
    let k1 = unit_param(10, a0);
    let mut e = k1.entries().to_vec();
    e[0] = 2;
    let k2 = MultiIndex::new(e);
    let c1 = res.coefficient(&k1);
    let c2 = res.coefficient(&k2);
    let want1 = 1.0 / (16.0 * SQRT_2);
    let want2 = -1.0 / 32.0;
    let err1 = c1.map_or(f64::INFINITY, |c| (c - want1).norm());
    let err2 = c2.map_or(f64::INFINITY, |c| (c - want2).norm());
    let binary = parameter_entries(&res.index_set, 1).all(|k| k.iter().all(|&e| e <= 1));
    verdict(
        "1",
        err1 <= 1e-6 && err2 <= 1e-6 && binary,
        format!(
            "|I| = {}, coefficient errors {err1:.2e} / {err2:.2e} (tol 1e-6), parameter entries in {{0,1}}: {binary}, {} samples, {secs:.2} s",
            res.index_set.len(),
            res.sample_count
        ),
    );
}

#[test]
fn criterion_2_poisson_error_distribution() {
    let (res, _) = poisson_detection();
    let oracle = Poisson1dFourier::new(9).unwrap();
    let appr = approximant(res, &oracle);
    let report = error_distribution(&appr, &oracle, 1000, &EvalOptions::default(), 2).unwrap();
    let s = report.stats;
    verdict(
        "2",
        s.med <= 1e-4,
        format!("median relative error {:.3e} (tol 1e-4), quartiles {:.3e} / {:.3e}, max {:.3e}", s.med, s.lq, s.uq, s.uw),
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: 100-dimensional extension

#[test]
fn criterion_3_hundred_dimensional_extension() {
    let start = Instant::now();
    let set = build_extended_index_set(999, 99);
    let oracle = Poisson1dFourier::new(99).unwrap();
    let refit = refit_coefficients(&set, &oracle, 2.0, 3).unwrap();
    let report = error_distribution(&refit.approximant, &oracle, 100, &eval_opts(1000), 3).unwrap();
    let max = report.stats.uw;
    verdict(
        "3",
        set.len() == 100_000 && max <= 1e-5,
        format!(
            "|I| = {} (want 100000), max relative error {max:.3e} over 100 draws (tol 1e-5), {} samples, {:.1} s",
            set.len(),
            refit.sample_count,
            start.elapsed().as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: piecewise-constant diffusion ODE

#[test]
fn criterion_4_pwc_structure_and_kink() {
    let start = Instant::now();
    let oracle = PwcOde;
    let mut cfg = DetectionConfig::new(500, 64);
    cfg.seed = 4;
    cfg.refit = true;
    let res = detect(&oracle, &cfg).unwrap();
    let binary = parameter_entries(&res.index_set, 1).all(|k| k.iter().all(|&e| e <= 1));
    let appr = approximant(&res, &oracle);
    let b = [0.0, 0.0, 0.0, 0.0, -2.0, -2.0, -2.0, -2.0];
    let z: Vec<f64> = b.iter().map(|v| v / PwcOde::SCALE).collect();
    let (values, _) = grid_values(&appr, &oracle, &z, 1000).unwrap();
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (x, v, _) in &values {
        let err = (v.re - PwcOde::solution(&b, x[0])).abs();
        if err > worst {
            worst = err;
            at = x[0];
        }
    }
    verdict(
        "4",
        binary && at.abs() <= 0.1 && worst <= 5e-2,
        format!(
            "|I| = {}, spline entries in {{0,1}}: {binary}, max |error| {worst:.3e} at x = {at:.4} (tol 5e-2, |x| <= 0.1), {} samples, {:.1} s",
            res.index_set.len(),
            res.sample_count,
            start.elapsed().as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: heat equation

#[test]
fn criterion_5_heat_structure() {
    let start = Instant::now();
    let oracle = Heat1d::new(9, 0.25).unwrap();
    let mut cfg = DetectionConfig::new(300, 16);
    cfg.seed = 5;
    cfg.refit = true;
    let res = detect(&oracle, &cfg).unwrap();
    let single = parameter_entries(&res.index_set, 2).all(|k| k.iter().filter(|&&e| e != 0).count() == 1 && k.iter().all(|&e| e <= 1));
    let appr = approximant(&res, &oracle);
    let report = error_distribution(&appr, &oracle, 500, &eval_opts(100), 5).unwrap();
    let med = report.stats.med;
    verdict(
        "5",
        single && med <= 1e-3,
        format!(
            "|I| = {}, one unit entry per index: {single}, median relative error {med:.3e} (tol 1e-3), {} samples, {:.1} s",
            res.index_set.len(),
            res.sample_count,
            start.elapsed().as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criteria 6 to 8: finite-difference solvers

#[test]
fn criterion_6_poisson2d_error_level() {
    let start = Instant::now();
    let oracle = Poisson2dFourier::new(51).unwrap();
    let mut cfg = DetectionConfig::new(300, 16);
    cfg.seed = 6;
    cfg.refit = true;
    cfg.spatial_gauss = oracle.spatial_dims();
    let res = detect(&oracle, &cfg).unwrap();
    let appr = approximant(&res, &oracle);
    let report = error_distribution(&appr, &oracle, 200, &eval_opts(51), 6).unwrap();
    let med = report.stats.med;
    verdict(
        "6",
        med <= 5e-3,
        format!(
            "|I| = {}, median relative error {med:.3e} (tol 5e-3), {} samples, {:.1} s",
            res.index_set.len(),
            res.sample_count,
            start.elapsed().as_secs_f64()
        ),
    );
}

fn burgers() -> Burgers1d {
    Burgers1d::new(9, 0.05, 257, 1e-3).unwrap()
}

#[test]
fn criterion_7a_burgers_explicit_solution() {
    let start = Instant::now();
    let (nu, alpha) = (0.05, 2.0);
    let a = sine_coefficients(|x| explicit_solution(x, 0.0, nu, alpha), 9);
    let oracle = burgers();
    let points: Vec<f64> = (0..100)
        .flat_map(|g| {
            let mut p = vec![2.0 * g as f64 / 99.0 - 1.0];
            p.extend(&a);
            p
        })
        .collect();
    let values = oracle.sample_batch(&points);
    let mut worst = 0.0f64;
    for (g, v) in values.into_iter().enumerate() {
        let x = g as f64 / 99.0;
        worst = worst.max((v.unwrap().re - explicit_solution(x, 1.0, nu, alpha)).abs());
    }
    verdict(
        "7 (solver)",
        worst <= 5e-3,
        format!("max pointwise error {worst:.3e} over 100 points (tol 5e-3), {:.2} s", start.elapsed().as_secs_f64()),
    );
}

#[test]
#[ignore = "solver-backed detection; run with --ignored"]
fn criterion_7b_burgers_detection() {
    let start = Instant::now();
    let oracle = burgers();
    let mut cfg = DetectionConfig::new(200, 16);
    cfg.seed = 7;
    cfg.refit = true;
    cfg.spatial_gauss = oracle.spatial_dims();
    let res = detect(&oracle, &cfg).unwrap();
    let appr = approximant(&res, &oracle);
    let report = error_distribution(&appr, &oracle, 100, &eval_opts(257), 7).unwrap();
    let med = report.stats.med;
    verdict(
        "7 (detection)",
        med <= 5e-2,
        format!(
            "|I| = {}, median relative error {med:.3e} (tol 5e-2), {} samples, {:.1} s",
            res.index_set.len(),
            res.sample_count,
            start.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_8_affine_diffusion_decay() {
    let start = Instant::now();
    let Some(OracleSpec::AffineDiffusion { decay, constant, grid, .. }) = OracleSpec::default_for("affine_diffusion") else {
        unreachable!()
    };
    let oracle = OracleSpec::AffineDiffusion { n_y: 10, decay, constant, grid }.build().unwrap();
    let mut cfg = DetectionConfig::new(200, 16);
    cfg.seed = 8;
    cfg.refit = true;
    cfg.superposition = Some(5);
    cfg.spatial_gauss = oracle.spatial_dims();
    let res = detect(oracle.as_ref(), &cfg).unwrap();
    let counts: Vec<usize> = res.single_sets[2..].iter().map(|s| s.len()).collect();
    let decaying = counts.windows(2).all(|w| w[1] <= w[0]) && counts[7..].iter().all(|&c| c <= 4);
    let appr = approximant(&res, oracle.as_ref());
    let report = error_distribution(&appr, oracle.as_ref(), 100, &eval_opts(51), 8).unwrap();
    let med = report.stats.med;
    verdict(
        "8",
        decaying && med <= 3e-2,
        format!(
            "admissible entries per y {counts:?} (non-increasing, <= 4 from y8), median relative error {med:.3e} (tol 3e-2), {} samples, {:.1} s",
            res.sample_count,
            start.elapsed().as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: oracle-free property suites

fn random_sparse_target(rng: &mut ChaCha8Rng, dim: usize, terms: usize, max_degree: u32) -> Vec<(MultiIndex, Complex64)> {
    let mut out: Vec<(MultiIndex, Complex64)> = Vec::new();
    while out.len() < terms {
        let mut e = vec![0u32; dim];
        let active = rng.gen_range(1..=dim.min(3));
        for _ in 0..active {
            e[rng.gen_range(0..dim)] = rng.gen_range(0..=max_degree);
        }
        let k = MultiIndex::new(e);
        if out.iter().any(|(m, _)| *m == k) {
            continue;
        }
        let mag = rng.gen_range(0.1..1.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        out.push((k, Complex64::from_polar(mag, phase)));
    }
    out
}

fn eval_target(target: &[(MultiIndex, Complex64)], p: &[f64]) -> Complex64 {
    target.iter().map(|(k, c)| c * eval_product(k, p).unwrap()).sum()
}

#[test]
fn criterion_9_property_suites() {
    let start = Instant::now();
    let mut failures = Vec::new();

    // discrete orthonormality on Chebyshev-Gauss nodes
    let m = 24;
    let nodes = gauss_nodes(m);
    let mut ortho = 0.0f64;
    for j in 0..m as u32 {
        for k in 0..m as u32 {
            let g: f64 = nodes
                .iter()
                .map(|&x| eval_univariate(j, x).unwrap() * eval_univariate(k, x).unwrap())
                .sum::<f64>()
                / m as f64;
            ortho = ortho.max((g - if j == k { 1.0 } else { 0.0 }).abs());
        }
    }
    if ortho > 1e-12 {
        failures.push(format!("orthonormality defect {ortho:.2e}"));
    }

    // exact recovery through detect
    let mut recovered = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + trial);
        let dim = 2 + (trial % 5) as usize;
        let terms = rng.gen_range(3..=10);
        let target = random_sparse_target(&mut rng, dim, terms, 8);
        let f = target.clone();
        let oracle = FnOracle::new(dim, move |p: &[f64]| eval_target(&f, p));
        let mut cfg = DetectionConfig::new(2 * terms, 8);
        cfg.seed = trial;
        let res = detect(&oracle, &cfg).unwrap();
        let exact = res.index_set.len() == target.len()
            && target
                .iter()
                .all(|(k, c)| res.coefficient(k).is_some_and(|got| (got - c).norm() <= 1e-8));
        recovered += exact as usize;
    }
    if recovered < 95 {
        failures.push(format!("recovered {recovered}/100"));
    }

    // reconstruction round trip
    let mut round_trip = 0.0f64;
    for trial in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1900 + trial);
        let dim = 3 + (trial % 3) as usize;
        let target = random_sparse_target(&mut rng, dim, 30, 6);
        let set = IndexSet::over_first(dim, target.iter().map(|(k, _)| k.clone()).collect()).unwrap();
        let f = target.clone();
        let oracle = FnOracle::new(dim, move |p: &[f64]| eval_target(&f, p));
        let refit = refit_coefficients(&set, &oracle, 2.0, trial).unwrap();
        for (k, c) in &target {
            round_trip = round_trip.max((refit.approximant.coefficient(k).unwrap() - c).norm());
        }
    }
    if round_trip > 1e-10 {
        failures.push(format!("round-trip error {round_trip:.2e}"));
    }

    // byte-identical outputs for a fixed seed
    let run = || {
        let oracle = Poisson1dFourier::new(5).unwrap();
        let mut cfg = DetectionConfig::new(40, 12);
        cfg.seed = 99;
        let res = detect(&oracle, &cfg).unwrap();
        let appr = approximant(&res, &oracle);
        let mut bytes = Vec::new();
        appr.write_csv(&mut bytes).unwrap();
        let report = error_distribution(&appr, &oracle, 20, &eval_opts(50), 99).unwrap();
        bytes.extend(report.stats.csv_row().bytes());
        bytes
    };
    if run() != run() {
        failures.push("outputs differ between identical runs".into());
    }

    // ErrorStats ordering
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.gen_range(1..50);
        let samples: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-12.0..1.0))).collect();
        let stats = ErrorStats::from_samples(&samples).unwrap();
        if !stats.is_ordered() {
            failures.push(format!("unordered stats {stats:?}"));
            break;
        }
    }

    verdict(
        "9",
        failures.is_empty(),
        format!(
            "orthonormality {ortho:.1e}, recovery {recovered}/100, round trip {round_trip:.1e}, problems: {failures:?}, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    );
}
