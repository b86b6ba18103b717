use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::classify::ScoreSpec;
use crate::concentration::{ConcentrationOptions, ConvexOptions};
use crate::error::{Error, Result};
use crate::layer_select::{GammaSpec, SelectOptions};
use crate::sdnn::NetworkSpec;
use crate::tropical::{RegionMethod, TropicalPolynomial};

/// Top-level experiment file. Each subcommand reads its own section.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub bounds: Option<BoundsConfig>,
    #[serde(default)]
    pub classify: Option<ClassifyConfig>,
    #[serde(default)]
    pub select_layers: Option<SelectConfig>,
    #[serde(default)]
    pub regions: Option<RegionsConfig>,
    #[serde(default)]
    pub mgale_check: Option<MgaleConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub network: NetworkSpec,
    #[serde(default = "default_runs")]
    pub n: usize,
    /// Fixed input; inputs are drawn from the network's input law otherwise.
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    /// Also write `runs.json`.
    #[serde(default)]
    pub json: bool,
}

fn default_runs() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub network: NetworkSpec,
    #[serde(default)]
    pub options: ConcentrationOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub network: NetworkSpec,
    #[serde(default)]
    pub score: ScoreSpec,
    /// Explicit inputs; otherwise `random_inputs` draws from the input law.
    #[serde(default)]
    pub inputs: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_random_inputs")]
    pub random_inputs: usize,
    #[serde(default = "default_classify_n")]
    pub n: usize,
}

fn default_random_inputs() -> usize {
    20
}

fn default_classify_n() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectConfig {
    pub gamma: GammaSpec,
    #[serde(default)]
    pub options: SelectOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsConfig {
    #[serde(default)]
    pub polynomials: Vec<TropicalPolynomial>,
    /// Count regions of symbolic networks and check their concentration.
    #[serde(default)]
    pub networks: Option<NetworkRegionsConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkRegionsConfig {
    pub network: NetworkSpec,
    #[serde(default = "default_region_networks")]
    pub n: usize,
    #[serde(default)]
    pub unit: usize,
    #[serde(default = "default_region_method")]
    pub method: RegionMethod,
    /// Thresholds; defaults to `(b₁−1)·k/10` for `k = 1..=10`.
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

fn default_region_networks() -> usize {
    200
}

fn default_region_method() -> RegionMethod {
    RegionMethod::ExactLp
}

fn default_cap() -> usize {
    crate::tropical::DEFAULT_MONOMIAL_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    #[serde(default = "default_walks")]
    pub runs: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Increment size per coordinate.
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1.0
}

fn default_walks() -> usize {
    100_000
}

fn default_steps() -> usize {
    20
}

fn default_dim() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgaleNetworkConfig {
    pub network: NetworkSpec,
    #[serde(default = "default_runs")]
    pub n: usize,
    /// Use `Z = ν − E[ν]` with the mean from a pilot sample.
    #[serde(default)]
    pub centered: bool,
    #[serde(default = "default_runs")]
    pub pilot_n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgaleConfig {
    #[serde(default)]
    pub walk: Option<WalkConfig>,
    #[serde(default)]
    pub network: Option<MgaleNetworkConfig>,
    /// Increment bound; the observed maximum is used when absent.
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default = "default_a_grid")]
    pub a_grid: Vec<f64>,
    /// Run convex-order grade checks.
    #[serde(default = "default_true")]
    pub grades: bool,
    #[serde(default)]
    pub convex: ConvexOptions,
}

fn default_a_grid() -> Vec<f64> {
    (1..=10).map(f64::from).collect()
}

fn default_true() -> bool {
    true
}

/// Parses a config, reporting the failing field path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        reason: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Validates every section present.
    pub fn validate(&self) -> Result<()> {
        if self.workers == Some(0) {
            return Err(Error::Config {
                path: "workers".into(),
                reason: "must be at least 1".into(),
            });
        }
        if let Some(s) = &self.simulate {
            s.network.validate("simulate.network")?;
            if let Some(x) = &s.x {
                if x.len() != s.network.input_dim() {
                    return Err(Error::spec("simulate.x", "length must equal n_0"));
                }
            }
        }
        if let Some(b) = &self.bounds {
            b.network.validate("bounds.network")?;
        }
        if let Some(c) = &self.classify {
            c.network.validate("classify.network")?;
            c.score.validate("classify.score")?;
        }
        if let Some(s) = &self.select_layers {
            s.gamma.validate("select-layers.gamma")?;
        }
        if let Some(r) = &self.regions {
            if let Some(n) = &r.networks {
                n.network.validate("regions.networks.network")?;
            }
        }
        if let Some(m) = &self.mgale_check {
            if let Some(n) = &m.network {
                n.network.validate("mgale-check.network.network")?;
            }
            if let Some(w) = &m.walk {
                if !(w.step > 0.0 && w.step.is_finite()) {
                    return Err(Error::spec("mgale-check.walk.step", "must be positive and finite"));
                }
            }
            if m.a_grid.iter().any(|a| !(*a > 0.0)) {
                return Err(Error::spec("mgale-check.a_grid", "values must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_field_paths() {
        let err = parse_config(r#"{"bounds": {"network": {"widths": [2, 1], "weights": {"mode": "iid"}}}}"#).unwrap_err();
        match err {
            Error::Config { path, .. } => assert!(path.starts_with("bounds.network.weights"), "{path}"),
            other => panic!("{other}"),
        }
        let err = parse_config(r#"{"sed": 1}"#).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn validates_sections() {
        let text = r#"{"bounds": {"network": {"widths": [2, 0],
            "weights": {"mode": "iid", "dist": {"kind": "bounded-uniform-integer", "lo": -1, "hi": 1}},
            "biases": {"mode": "iid", "dist": {"kind": "bounded-uniform-real", "lo": -1, "hi": 1}}}}}"#;
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("bounds.network.widths[1]"), "{err}");
    }

    #[test]
    fn minimal_configs_parse() {
        let cfg = parse_config(r#"{"seed": 3, "select-layers": {"gamma": {"horizon": 10, "utility": "identity",
            "penalty": {"kind": "none"}, "process": {"kind": "log-over-sqrt"}}, "options": {"method": "deterministic"}}}"#)
        .unwrap();
        assert_eq!(cfg.seed, 3);
        assert!(cfg.select_layers.is_some());
    }
}
