//! TOML run configuration. Every field is optional; command-line flags override the
//! file, and the file overrides built-in defaults.
//!
//! ```toml
//! [window]
//! horizon = 50
//! init_len = 4
//! order_bound = 4
//!
//! [solver]
//! lambda = 10.0
//!
//! [kernel]
//! kind = "squared_exponential"   # or "polynomial", "explicit"
//! sigma = 1.0
//!
//! [noise]
//! ratio = 0.05
//! seed = 7
//! distribution = "uniform"       # or "normal"
//! ```

use std::path::{Path, PathBuf};

use ddtraj::lift::{BasisSet, Kernel};
use ddtraj::oracle::{
    example1_linear_model, example1_model, NoiseDistribution, StateSpaceModel, StaticMap,
};
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable consulted for the seed when neither a flag nor the config sets it.
pub const SEED_ENV: &str = "DDTRAJ_SEED";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub window: WindowConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub horizon: Option<usize>,
    pub init_len: Option<usize>,
    pub order_bound: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[value(alias = "se")]
    SquaredExponential,
    Polynomial,
    Explicit,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub kind: Option<KernelKind>,
    pub sigma: Option<f64>,
    pub degree: Option<u32>,
    pub offset: Option<f64>,
    pub basis: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DistributionName {
    Uniform,
    Normal,
}

impl From<DistributionName> for NoiseDistribution {
    fn from(d: DistributionName) -> Self {
        match d {
            DistributionName::Uniform => NoiseDistribution::Uniform,
            DistributionName::Normal => NoiseDistribution::StandardNormal,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub ratio: Option<f64>,
    pub seed: Option<u64>,
    pub distribution: Option<DistributionName>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rank: Option<f64>,
    pub residual: Option<f64>,
    pub junction: Option<f64>,
}

/// Either a named preset or explicit matrices (rows as arrays).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Option<String>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<Vec<f64>>>,
    pub c: Option<Vec<Vec<f64>>>,
    pub d: Option<Vec<Vec<f64>>>,
    pub input_map: Option<String>,
    pub output_map: Option<String>,
}

/// Random excitation used by `simulate` and `example1`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub length: Option<usize>,
    pub amplitude: Option<f64>,
    pub test_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
}

fn line_of_offset(text: &str, offset: usize) -> u64 {
    text[..offset.min(text.len())].matches('\n').count() as u64 + 1
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            CliError::parse(line, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.in_file(path))
    }
}

/// Flag, then config, then default.
pub fn pick<T: Clone>(flag: Option<T>, config: &Option<T>, default: T) -> T {
    flag.or_else(|| config.clone()).unwrap_or(default)
}

/// Flag, then config, then `DDTRAJ_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: &RunConfig) -> Result<u64, CliError> {
    if let Some(s) = flag.or(config.noise.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

pub fn require_positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{name} must be positive, got {v}")))
    }
}

pub fn require_nonnegative(name: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!(
            "{name} must be nonnegative, got {v}"
        )))
    }
}

fn static_map(name: &str) -> Result<StaticMap, CliError> {
    match name {
        "identity" => Ok(StaticMap::Identity),
        "sin" => Ok(StaticMap::sin()),
        "tanh" => Ok(StaticMap::elementwise("tanh", f64::tanh)),
        "cube" => Ok(StaticMap::elementwise("cube", |v| v * v * v)),
        other => Err(CliError::usage(format!(
            "unknown static map '{other}' (expected identity, sin, tanh or cube)"
        ))),
    }
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, CliError> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::usage(format!(
            "model.{name} must be a nonempty rectangular array of rows"
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl ModelConfig {
    /// Resolves the model; `preset` overrides the config's own choice.
    pub fn build(&self, preset: Option<&str>) -> Result<StateSpaceModel, CliError> {
        let explicit = [&self.a, &self.b, &self.c, &self.d];
        let name = preset.map(str::to_string).or_else(|| self.preset.clone());
        let mut model = match name.as_deref() {
            Some("example1") => example1_model(),
            Some("example1-linear") => example1_linear_model(),
            Some(other) => return Err(CliError::usage(format!("unknown model preset '{other}'"))),
            None if explicit.iter().all(|m| m.is_some()) => StateSpaceModel::new(
                matrix("a", self.a.as_ref().unwrap())?,
                matrix("b", self.b.as_ref().unwrap())?,
                matrix("c", self.c.as_ref().unwrap())?,
                matrix("d", self.d.as_ref().unwrap())?,
            )?,
            None if explicit.iter().any(|m| m.is_some()) => {
                return Err(CliError::usage(
                    "an explicit model needs all of model.a, model.b, model.c, model.d",
                ))
            }
            None => example1_model(),
        };
        if let Some(m) = &self.input_map {
            model = model.with_input_map(static_map(m)?)?;
        }
        if let Some(m) = &self.output_map {
            model = model.with_output_map(static_map(m)?)?;
        }
        Ok(model)
    }
}

impl KernelConfig {
    /// Kernel from flags layered over this section. Defaults to a squared exponential
    /// with unit width.
    pub fn build(
        &self,
        kind: Option<KernelKind>,
        sigma: Option<f64>,
        degree: Option<u32>,
        offset: Option<f64>,
        basis: Option<Vec<String>>,
    ) -> Result<Kernel, CliError> {
        let kernel = match pick(kind, &self.kind, KernelKind::SquaredExponential) {
            KernelKind::SquaredExponential => {
                Kernel::squared_exponential(pick(sigma, &self.sigma, 1.0))?
            }
            KernelKind::Polynomial => Kernel::polynomial(
                pick(degree, &self.degree, 2),
                pick(offset, &self.offset, 1.0),
            )?,
            KernelKind::Explicit => {
                let names = basis.or_else(|| self.basis.clone()).ok_or_else(|| {
                    CliError::usage(
                        "an explicit kernel needs a basis list (--basis or kernel.basis)",
                    )
                })?;
                Kernel::explicit(BasisSet::from_names(&names)?)
            }
        };
        Ok(kernel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_parses() {
        let cfg = RunConfig::from_toml(
            r#"
[window]
horizon = 50
init_len = 4
order_bound = 4
[solver]
lambda = 10.0
[kernel]
kind = "explicit"
basis = ["sin", "u^2"]
[noise]
ratio = 0.05
seed = 7
distribution = "normal"
[tolerances]
rank = 1e-10
[model]
preset = "example1-linear"
[output]
path = "out.csv"
"#,
        )
        .unwrap();
        assert_eq!(cfg.window.horizon, Some(50));
        assert_eq!(cfg.noise.distribution, Some(DistributionName::Normal));
        assert_eq!(cfg.kernel.kind, Some(KernelKind::Explicit));
        let k = cfg.kernel.build(None, None, None, None, None).unwrap();
        assert!(matches!(k, Kernel::Explicit(b) if b.len() == 2));
        assert!(cfg.model.build(None).unwrap().has_identity_maps());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let err = RunConfig::from_toml("[window]\nhorizon = 5\nwidth = 3\n").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, Some(3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flags_win_over_config() {
        let cfg = RunConfig::from_toml("[solver]\nlambda = 3.0\n").unwrap();
        assert_eq!(pick(Some(1.0), &cfg.solver.lambda, 0.0), 1.0);
        assert_eq!(pick(None, &cfg.solver.lambda, 0.0), 3.0);
        assert_eq!(pick(None, &None, 0.5), 0.5);
    }

    #[test]
    fn explicit_model() {
        let cfg = RunConfig::from_toml(
            "[model]\na = [[0.5]]\nb = [[1.0]]\nc = [[1.0]]\nd = [[0.0]]\ninput_map = \"cube\"\n",
        )
        .unwrap();
        let m = cfg.model.build(None).unwrap();
        assert_eq!(m.order(), 1);
        assert_eq!(m.input_map().name(), "cube");
        let partial = RunConfig::from_toml("[model]\na = [[0.5]]\n").unwrap();
        assert!(partial.model.build(None).is_err());
        assert!(cfg.model.build(Some("nope")).is_err());
    }
}
