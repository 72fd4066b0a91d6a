//! Experiment runs: detection, error campaigns, the extension example and
//! single-point oracle probes, each writing plain CSV/text files.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use sparsecheb::approximant::{build_extended_index_set, refit_coefficients, ApproxError, Approximant};
use sparsecheb::detector::{detect, DetectError, DetectionResult};
use sparsecheb::evaluation::{error_distribution, grid_values, ErrorStats, EvalError};
use sparsecheb::oracles::{Oracle, OracleError, OracleSpec};
use sparsecheb::Complex64;

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot read approximant {path}: {source}")]
    Approximant { path: PathBuf, source: ApproxError },
    #[error("detection aborted: {0}")]
    Detect(#[from] DetectError),
    #[error("refit failed: {0}")]
    Refit(ApproxError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("oracle failed: {0}")]
    Oracle(#[from] OracleError),
}

impl HarnessError {
    /// 1 for configuration and input problems, 2 for numerical aborts.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_)
            | HarnessError::Usage(_)
            | HarnessError::Io { .. }
            | HarnessError::Approximant { .. } => 1,
            HarnessError::Eval(EvalError::DimensionMismatch { .. } | EvalError::ParameterCount { .. }) => 1,
            HarnessError::Oracle(OracleError::Domain { .. } | OracleError::Dimension { .. }) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a file through a buffered writer.
fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Ordered `key = value` lines for `meta.txt`.
#[derive(Debug, Default)]
pub struct Meta(Vec<(String, String)>);

impl Meta {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn write(&self, path: &Path) -> Result<(), HarnessError> {
        write_file(path, |w| {
            for (k, v) in &self.0 {
                writeln!(w, "{k} = {v}")?;
            }
            Ok(())
        })
    }
}

pub struct Harness {
    pub config: ExperimentConfig,
    pub workers: usize,
}

impl Harness {
    pub fn new(config: ExperimentConfig, workers: usize) -> Self {
        Self { config, workers }
    }

    fn out_dir(&self) -> Result<&Path, HarnessError> {
        let dir = self.config.output_dir.as_path();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(dir)
    }

    fn oracle(&self) -> Result<Box<dyn Oracle>, HarnessError> {
        Ok(self.config.oracle.build()?)
    }

    fn base_meta(&self, command: &str) -> Meta {
        let mut meta = Meta::default();
        meta.push("command", command);
        meta.push("oracle.kind", self.config.oracle.kind());
        meta.push("oracle", format!("{:?}", self.config.oracle));
        meta.push("workers", self.workers);
        meta
    }

    /// Runs detection and writes `index_set.csv`, `detect_log.csv` and
    /// `meta.txt`. An aborted detection still writes `meta.txt`.
    pub fn run_detect(&self) -> Result<DetectionResult, HarnessError> {
        let Some(cfg) = &self.config.detection else {
            return Err(HarnessError::Usage(
                "detect needs `detection.sparsity` and `detection.extension`".into(),
            ));
        };
        let dir = self.out_dir()?;
        let oracle = self.oracle()?;
        let mut meta = self.base_meta("detect");
        meta.push("detection", format!("{cfg:?}"));
        meta.push("detection.seed", cfg.seed);
        let start = Instant::now();
        let outcome = detect(oracle.as_ref(), cfg);
        meta.push("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
        let res = match outcome {
            Ok(res) => res,
            Err(e) => {
                meta.push("status", "aborted");
                meta.push("error", &e);
                meta.write(&dir.join("meta.txt"))?;
                return Err(e.into());
            }
        };
        let appr = to_approximant(&res, oracle.as_ref()).map_err(HarnessError::Refit)?;
        write_file(&dir.join("index_set.csv"), |w| appr.write_csv(w))?;
        write_file(&dir.join("detect_log.csv"), |w| {
            writeln!(w, "step,candidates,kept,samples,anchors")?;
            for r in &res.log {
                writeln!(w, "{},{},{},{},{}", r.label, r.candidates, r.kept, r.samples, r.anchors)?;
            }
            Ok(())
        })?;
        meta.push("status", "ok");
        meta.push("index_set_size", res.index_set.len());
        meta.push("sample_count", res.sample_count);
        meta.write(&dir.join("meta.txt"))?;
        Ok(res)
    }

    /// Error campaign for the approximant stored at `path`; writes
    /// `err_stats.csv`, `err_samples.csv` (one error per line, no header) and, when `evaluation.pointwise` is
    /// set, `pointwise_err.csv`.
    pub fn run_eval(&self, path: &Path) -> Result<ErrorStats, HarnessError> {
        let file = File::open(path).map_err(io_err(path))?;
        let appr = Approximant::read_csv(BufReader::new(file)).map_err(|source| HarnessError::Approximant {
            path: path.to_path_buf(),
            source,
        })?;
        let oracle = self.oracle()?;
        if appr.dim() != oracle.dim() {
            return Err(EvalError::DimensionMismatch {
                approximant: appr.dim(),
                oracle: oracle.dim(),
            }
            .into());
        }
        let appr = appr
            .with_transforms(oracle.transforms())
            .map_err(|source| HarnessError::Approximant {
                path: path.to_path_buf(),
                source,
            })?;
        self.evaluate(&appr, oracle.as_ref())
    }

    fn evaluate(&self, appr: &Approximant, oracle: &dyn Oracle) -> Result<ErrorStats, HarnessError> {
        let dir = self.out_dir()?;
        let ev = &self.config.evaluation;
        let report = error_distribution(appr, oracle, ev.trials, &ev.options, ev.seed)?;
        assert!(report.stats.is_ordered(), "error statistics out of order");
        write_file(&dir.join("err_stats.csv"), |w| {
            writeln!(w, "{}", ErrorStats::CSV_HEADER)?;
            writeln!(w, "{}", report.stats.csv_row())
        })?;
        write_file(&dir.join("err_samples.csv"), |w| {
            for e in &report.samples {
                writeln!(w, "{e:.16e}")?;
            }
            Ok(())
        })?;
        if let Some(params) = &ev.pointwise {
            let (values, _) = grid_values(appr, oracle, params, ev.options.grid)?;
            let spatial = oracle.spatial_dims();
            write_file(&dir.join("pointwise_err.csv"), |w| {
                let cols: Vec<String> = (1..=spatial).map(|i| format!("x{i}")).collect();
                writeln!(w, "{},abs_error", cols.join(","))?;
                for (x, v, u) in &values {
                    for c in x {
                        write!(w, "{c:.16e},")?;
                    }
                    writeln!(w, "{:.16e}", (v - u).norm())?;
                }
                Ok(())
            })?;
        }
        Ok(report.stats)
    }

    /// Extension example: the set of all spatial degrees up to
    /// `extend.spatial_degree` combined with zero or one unit parameter,
    /// refitted against the oracle and evaluated.
    pub fn run_extend(&self) -> Result<ErrorStats, HarnessError> {
        let Some(ext) = &self.config.extend else {
            return Err(HarnessError::Usage("extend needs `extend.spatial_degree`".into()));
        };
        let OracleSpec::Poisson1dFourier { n } = self.config.oracle else {
            return Err(HarnessError::Usage(format!(
                "extend needs oracle.kind = poisson1d_fourier, got {}",
                self.config.oracle.kind()
            )));
        };
        let dir = self.out_dir()?;
        let oracle = self.oracle()?;
        let mut meta = self.base_meta("extend");
        let start = Instant::now();
        let set = build_extended_index_set(ext.spatial_degree, n);
        let refit = refit_coefficients(&set, oracle.as_ref(), ext.oversampling, ext.seed).map_err(HarnessError::Refit)?;
        meta.push("extend.seed", ext.seed);
        meta.push("index_set_size", set.len());
        meta.push("node_count", refit.node_count);
        meta.push("sample_count", refit.sample_count);
        if let Some(c) = refit.condition_estimate {
            meta.push("condition_estimate", format!("{c:.3e}"));
        }
        write_file(&dir.join("index_set.csv"), |w| refit.approximant.write_csv(w))?;
        let stats = self.evaluate(&refit.approximant, oracle.as_ref())?;
        meta.push("evaluation.seed", self.config.evaluation.seed);
        meta.push("max_error", format!("{:.3e}", stats.uw));
        meta.push("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
        meta.push("status", "ok");
        meta.write(&dir.join("meta.txt"))?;
        Ok(stats)
    }

    /// Samples the oracle at one point in `[-1,1]` coordinates.
    pub fn probe(&self, point: &[f64]) -> Result<Complex64, HarnessError> {
        Ok(self.oracle()?.sample(point)?)
    }
}

pub fn to_approximant(res: &DetectionResult, oracle: &dyn Oracle) -> Result<Approximant, ApproxError> {
    Approximant::new(res.index_set.clone(), res.coefficients.clone())?.with_transforms(oracle.transforms())
}
