//! JSON config: `{model, algorithm, experiment, output}`.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Uniform on two balls around `0` and `(1,…,1,0,…,0)`; radius defaults to `√r/2`.
    TwoBall {
        p: usize,
        r: usize,
        #[serde(default)]
        radius: Option<f64>,
    },
    /// Equal mixture of two spherical Gaussians.
    GaussMix { p: usize, r: usize, delta: f64, sigma: f64 },
    /// Finite distribution over points; per-feature dissimilarity is the squared difference.
    Atoms { points: Vec<Vec<f64>>, probs: Vec<f64> },
    /// CSV with a header row, one observation per row.
    Dataset {
        path: String,
        #[serde(default)]
        bound: Option<f64>,
    },
    /// CSV rows `(i, i', j, value)`, 1-based.
    Tensor {
        path: String,
        #[serde(default)]
        bound: Option<f64>,
    },
    /// Seeded random instances generated by the command itself.
    Random,
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::TwoBall { .. } => "two_ball",
            ModelSpec::GaussMix { .. } => "gauss_mix",
            ModelSpec::Atoms { .. } => "atoms",
            ModelSpec::Dataset { .. } => "dataset",
            ModelSpec::Tensor { .. } => "tensor",
            ModelSpec::Random => "random",
        }
    }
}

fn default_k() -> usize {
    2
}
fn default_s() -> f64 {
    1.5
}
fn default_starts() -> usize {
    10
}
fn default_max_iter() -> usize {
    50
}
fn default_max_lloyd() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    #[serde(default = "default_k")]
    pub k: usize,
    /// L1 budget on the weights.
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_starts")]
    pub n_starts: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_max_lloyd")]
    pub max_lloyd: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for AlgorithmSpec {
    fn default() -> Self {
        Self {
            k: default_k(),
            s: default_s(),
            n_starts: default_starts(),
            max_iter: default_max_iter(),
            max_lloyd: default_max_lloyd(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub prefix: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelSpec,
    #[serde(default)]
    algorithm: AlgorithmSpec,
    #[serde(default)]
    experiment: Map<String, Value>,
    #[serde(default)]
    output: OutputSpec,
}

/// Parsed config; the `experiment` section is typed later by the subcommand.
#[derive(Debug, Clone)]
pub struct Config {
    pub model: ModelSpec,
    pub algorithm: AlgorithmSpec,
    pub experiment: Map<String, Value>,
    pub output: OutputSpec,
    /// Directory of the config file; relative data paths resolve against it.
    pub base_dir: PathBuf,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        Ok(Self {
            model: raw.model,
            algorithm: raw.algorithm,
            experiment: raw.experiment,
            output: raw.output,
            base_dir,
        })
    }

    pub fn resolve_path(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Type the experiment section, returning it with the seed pulled out.
    /// `seed_override` wins over the config value; the default seed is 0.
    pub fn experiment<E: DeserializeOwned>(&self, seed_override: Option<u64>) -> Result<(E, u64)> {
        let mut map = self.experiment.clone();
        let seed = match map.remove("seed") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| CliError::Config(format!("experiment.seed must be a u64, got {v}")))?,
        };
        let exp =
            serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Config(format!("experiment: {e}")))?;
        Ok((exp, seed_override.unwrap_or(seed)))
    }
}

/// The config as actually run: defaults filled in, seed resolved, output location dropped.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved<E: Serialize> {
    pub model: ModelSpec,
    pub algorithm: AlgorithmSpec,
    pub experiment: ResolvedExperiment<E>,
    pub output: ResolvedOutput,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedExperiment<E: Serialize> {
    pub seed: u64,
    #[serde(flatten)]
    pub params: E,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedOutput {
    pub prefix: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Deserialize, Serialize, Default)]
    #[serde(deny_unknown_fields, default)]
    struct Exp {
        n: usize,
    }

    #[test]
    fn parses_sections_and_defaults() {
        let c = Config::parse(
            r#"{"model": {"kind": "two_ball", "p": 5, "r": 2}, "experiment": {"seed": 9, "n": 3}}"#,
            PathBuf::new(),
        )
        .unwrap();
        assert_eq!(c.model, ModelSpec::TwoBall { p: 5, r: 2, radius: None });
        assert_eq!(c.algorithm, AlgorithmSpec::default());
        let (e, seed): (Exp, u64) = c.experiment(None).unwrap();
        assert_eq!((e.n, seed), (3, 9));
        let (_, seed): (Exp, u64) = c.experiment(Some(4)).unwrap();
        assert_eq!(seed, 4);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = [
            r#"{"model": {"kind": "two_ball", "p": 5, "r": 2, "q": 1}}"#,
            r#"{"model": {"kind": "random"}, "algorithm": {"kk": 2}}"#,
            r#"{"model": {"kind": "random"}, "extra": {}}"#,
            r#"{"model": {"kind": "nope"}}"#,
        ];
        for text in bad {
            assert!(matches!(Config::parse(text, PathBuf::new()), Err(CliError::Config(_))), "{text}");
        }
        let c = Config::parse(r#"{"model": {"kind": "random"}, "experiment": {"m": 1}}"#, PathBuf::new()).unwrap();
        assert!(matches!(c.experiment::<Exp>(None), Err(CliError::Config(_))));
    }

    #[test]
    fn negative_seed_is_a_config_error() {
        let c = Config::parse(r#"{"model": {"kind": "random"}, "experiment": {"seed": -1}}"#, PathBuf::new()).unwrap();
        assert!(matches!(c.experiment::<Exp>(None), Err(CliError::Config(_))));
    }
}
