//! Flat `key = value` experiment files with dotted group names.
//!
//! ```text
//! # Poisson 1-D desk run
//! oracle.kind = poisson1d_fourier
//! oracle.n = 9
//! detection.sparsity = 200
//! detection.extension = 16
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sparsecheb::detector::{AnchorLaw, DetectionConfig};
use sparsecheb::evaluation::EvalOptions;
use sparsecheb::oracles::OracleSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// `None` for values given on the command line.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "command line: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

/// Key/value pairs with the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let n = Some(i + 1);
            let line = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(n, format!("expected `key = value`, got `{line}`"));
            };
            raw.insert(key.trim(), value.trim(), n)?;
        }
        Ok(raw)
    }

    fn insert(&mut self, key: &str, value: &str, line: Option<usize>) -> Result<(), ConfigError> {
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
            return err(line, format!("invalid key `{key}`"));
        }
        if value.is_empty() {
            return err(line, format!("`{key}` has no value"));
        }
        if line.is_some() {
            if let Some((_, Some(first))) = self.entries.get(key) {
                return err(line, format!("`{key}` already set on line {first}"));
            }
        }
        self.entries.insert(key.to_string(), (value.to_string(), line));
        Ok(())
    }

    /// Applies a command-line `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return err(None, format!("expected `key=value`, got `{assignment}`"));
        };
        self.insert(key.trim(), value.trim(), None)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }
}

/// Reads typed values out of a [`RawConfig`] and tracks which keys were used.
struct Reader<'a> {
    raw: &'a RawConfig,
    used: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn opt<T: FromStr>(&mut self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.used.push(key);
        match self.raw.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .or_else(|e| err(*line, format!("bad value `{v}` for `{key}`: {e}"))),
        }
    }

    fn or<T: FromStr>(&mut self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    fn finish(self) -> Result<(), ConfigError> {
        for (key, (_, line)) in &self.raw.entries {
            if !self.used.contains(&key.as_str()) {
                return err(*line, format!("unknown key `{key}`"));
            }
        }
        Ok(())
    }
}

/// Comma-separated reals.
#[derive(Debug, Clone, PartialEq)]
pub struct RealList(pub Vec<f64>);

impl FromStr for RealList {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',').map(|v| v.trim().parse()).collect::<Result<_, _>>().map(RealList)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub trials: usize,
    pub options: EvalOptions,
    pub seed: u64,
    /// Parameters (in `[-1,1]` coordinates) for a pointwise error profile.
    pub pointwise: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendConfig {
    pub spatial_degree: u32,
    pub oversampling: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub oracle: OracleSpec,
    /// Present when both `detection.sparsity` and `detection.extension` are set.
    pub detection: Option<DetectionConfig>,
    pub evaluation: EvaluationConfig,
    pub extend: Option<ExtendConfig>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader { raw, used: Vec::new() };
        let oracle = read_oracle(&mut r)?;
        let detection = read_detection(&mut r, &oracle)?;
        let evaluation = EvaluationConfig {
            trials: r.or("evaluation.trials", 100)?,
            options: EvalOptions {
                grid: r.or("evaluation.grid", EvalOptions::default().grid)?,
                law: r.or("evaluation.law", AnchorLaw::Uniform)?,
                scale: r.or("evaluation.scale", 1.0)?,
            },
            seed: r.or("evaluation.seed", 0)?,
            pointwise: r.opt::<RealList>("evaluation.pointwise")?.map(|l| l.0),
        };
        let line = |key: &str| raw.entries.get(key).and_then(|(_, l)| *l);
        if evaluation.trials == 0 {
            return err(line("evaluation.trials"), "evaluation.trials must be positive");
        }
        if evaluation.options.grid < 2 {
            return err(line("evaluation.grid"), "evaluation.grid must be at least 2");
        }
        if !(evaluation.options.scale > 0.0 && evaluation.options.scale.is_finite()) {
            return err(line("evaluation.scale"), "evaluation.scale must be positive");
        }
        let extend = match r.opt::<u32>("extend.spatial_degree")? {
            None => None,
            Some(spatial_degree) => Some(ExtendConfig {
                spatial_degree,
                oversampling: r.or("extend.oversampling", 2.0)?,
                seed: r.or("extend.seed", 0)?,
            }),
        };
        let output_dir = PathBuf::from(r.or("output_dir", "out".to_string())?);
        r.finish()?;
        Ok(Self {
            oracle,
            detection,
            evaluation,
            extend,
            output_dir,
        })
    }
}

fn read_oracle(r: &mut Reader) -> Result<OracleSpec, ConfigError> {
    let kind: String = match r.opt("oracle.kind")? {
        Some(k) => k,
        None => return err(None, "missing required key `oracle.kind`"),
    };
    let line = r.raw.entries.get("oracle.kind").and_then(|(_, l)| *l);
    let Some(default) = OracleSpec::default_for(&kind) else {
        return err(line, format!("unknown oracle kind `{kind}`"));
    };
    let spec = match default {
        OracleSpec::Zero { dim } => OracleSpec::Zero {
            dim: r.or("oracle.dim", dim)?,
        },
        OracleSpec::IntroOde { n } => OracleSpec::IntroOde { n: r.or("oracle.n", n)? },
        OracleSpec::Poisson1dFourier { n } => OracleSpec::Poisson1dFourier { n: r.or("oracle.n", n)? },
        OracleSpec::Poisson1dBspline { n, order, grid } => OracleSpec::Poisson1dBspline {
            n: r.or("oracle.n", n)?,
            order: r.or("oracle.order", order)?,
            grid: r.or("oracle.grid", grid)?,
        },
        OracleSpec::PwcOde => OracleSpec::PwcOde,
        OracleSpec::Poisson2dFourier { grid } => OracleSpec::Poisson2dFourier {
            grid: r.or("oracle.grid", grid)?,
        },
        OracleSpec::AffineDiffusion {
            n_y,
            decay,
            constant,
            grid,
        } => OracleSpec::AffineDiffusion {
            n_y: r.or("oracle.n_y", n_y)?,
            decay: r.or("oracle.decay", decay)?,
            constant: r.or("oracle.constant", constant)?,
            grid: r.or("oracle.grid", grid)?,
        },
        OracleSpec::Heat1d { n, diffusivity } => OracleSpec::Heat1d {
            n: r.or("oracle.n", n)?,
            diffusivity: r.or("oracle.diffusivity", diffusivity)?,
        },
        OracleSpec::Burgers1d {
            n,
            viscosity,
            grid,
            time_step,
        } => OracleSpec::Burgers1d {
            n: r.or("oracle.n", n)?,
            viscosity: r.or("oracle.viscosity", viscosity)?,
            grid: r.or("oracle.grid", grid)?,
            time_step: r.or("oracle.time_step", time_step)?,
        },
    };
    if let Err(e) = spec.build() {
        return err(line, e.to_string());
    }
    Ok(spec)
}

/// Kinds backed by a grid solver, where coupled steps keep the spatial
/// coordinates on Gauss rules.
fn solver_backed(spec: &OracleSpec) -> bool {
    matches!(
        spec,
        OracleSpec::Poisson1dBspline { .. }
            | OracleSpec::Poisson2dFourier { .. }
            | OracleSpec::AffineDiffusion { .. }
            | OracleSpec::Burgers1d { .. }
    )
}

fn read_detection(r: &mut Reader, oracle: &OracleSpec) -> Result<Option<DetectionConfig>, ConfigError> {
    let sparsity: Option<usize> = r.opt("detection.sparsity")?;
    let extension: Option<u32> = r.opt("detection.extension")?;
    let (sparsity, extension) = match (sparsity, extension) {
        (Some(s), Some(n)) => (s, n),
        (None, None) => (1, 1),
        _ => return err(None, "`detection.sparsity` and `detection.extension` must be given together"),
    };
    let mut cfg = DetectionConfig::new(sparsity, extension);
    cfg.threshold = r.or("detection.threshold", cfg.threshold)?;
    cfg.iterations = r.or("detection.iterations", cfg.iterations)?;
    cfg.superposition = r.opt("detection.superposition")?;
    cfg.oversampling = r.or("detection.oversampling", cfg.oversampling)?;
    cfg.seed = r.or("detection.seed", cfg.seed)?;
    cfg.anchor = r.or("detection.anchor", cfg.anchor)?;
    cfg.refit = r.or("detection.refit", cfg.refit)?;
    cfg.refit_oversampling = r.or("detection.refit_oversampling", cfg.refit_oversampling)?;
    cfg.max_ls_columns = r.or("detection.max_ls_columns", cfg.max_ls_columns)?;
    let spatial = if solver_backed(oracle) {
        oracle.build().map(|o| o.spatial_dims()).unwrap_or(0)
    } else {
        0
    };
    cfg.spatial_gauss = r.or("detection.spatial_gauss", spatial)?;
    cfg.cache_capacity = r.or("detection.cache_capacity", cfg.cache_capacity)?;
    let given = r.raw.get("detection.sparsity").is_some();
    if given {
        if let Err(e) = cfg.validate() {
            return err(None, e.to_string());
        }
    }
    Ok(given.then_some(cfg))
}
