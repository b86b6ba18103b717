use serde::{Deserialize, Serialize};

use super::process::FiniteSupportProcess;
use crate::error::{Error, Result};
use crate::sdnn::NetworkSpec;

/// Utility map `𝔤` applied to the loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Utility {
    /// `𝔤(x) = 1/x`.
    #[default]
    Reciprocal,
    /// `𝔤(x) = x`, for already transformed utilities.
    Identity,
}

/// Depth penalty `𝔥`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Penalty {
    /// `𝔥(L) = 1/(c√L)`.
    InverseSqrt { c: f64 },
    /// `𝔥(L) = 1`.
    None,
}

impl Default for Penalty {
    fn default() -> Self {
        Penalty::InverseSqrt { c: 1.0 }
    }
}

impl Penalty {
    pub fn eval(&self, layer: usize) -> f64 {
        match self {
            Penalty::InverseSqrt { c } => 1.0 / (c * (layer as f64).sqrt()),
            Penalty::None => 1.0,
        }
    }
}

/// Source of the reward process `γ^(1), …, γ^(𝓛)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProcessSpec {
    /// `γ^(L) = log(L)/√L` for `L = 1..=horizon`.
    LogOverSqrt,
    /// Deterministic losses; `γ^(L) = 𝔤(loss_L)·𝔥(L)`.
    DeterministicLoss { losses: Vec<f64> },
    /// Realized `γ` trajectories, one per row.
    Paths { paths: Vec<Vec<f64>> },
    /// Explicit finite-support law of `γ`.
    FiniteSupport { process: FiniteSupportProcess },
    /// `γ` from MSE losses of nested prefixes of one deep network.
    Network { network: NetworkSpec, y_star: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaSpec {
    pub horizon: usize,
    #[serde(default)]
    pub utility: Utility,
    #[serde(default)]
    pub penalty: Penalty,
    pub process: ProcessSpec,
}

impl GammaSpec {
    pub fn log_over_sqrt(horizon: usize) -> Self {
        GammaSpec {
            horizon,
            utility: Utility::Identity,
            penalty: Penalty::None,
            process: ProcessSpec::LogOverSqrt,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::spec(format!("{path}.horizon"), "need horizon >= 1"));
        }
        if let Penalty::InverseSqrt { c } = self.penalty {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::spec(format!("{path}.penalty.c"), "need c > 0"));
            }
        }
        let p = format!("{path}.process");
        match &self.process {
            ProcessSpec::LogOverSqrt => {}
            ProcessSpec::DeterministicLoss { losses } => {
                if losses.len() != self.horizon {
                    return Err(Error::spec(p, format!("expected {} losses", self.horizon)));
                }
                if losses.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return Err(Error::spec(p, "losses must be finite and nonnegative"));
                }
            }
            ProcessSpec::Paths { paths } => {
                if paths.is_empty() || paths.iter().any(|r| r.len() != self.horizon) {
                    return Err(Error::spec(p, format!("every path needs {} values", self.horizon)));
                }
            }
            ProcessSpec::FiniteSupport { process } => {
                if process.horizon() != self.horizon {
                    return Err(Error::spec(p, format!("process horizon {} != {}", process.horizon(), self.horizon)));
                }
            }
            ProcessSpec::Network { network, y_star } => {
                network.validate(&format!("{p}.network"))?;
                if network.depth() != self.horizon {
                    return Err(Error::spec(p, format!("network depth {} != horizon {}", network.depth(), self.horizon)));
                }
                let width = y_star.len();
                if network.widths[1..].iter().any(|w| *w != width) {
                    return Err(Error::spec(p, format!("hidden widths must all equal len(y_star) = {width}")));
                }
            }
        }
        Ok(())
    }
}

/// `(1/p)·‖ν − y*‖₂²`.
pub fn loss_mse(nu: &[f64], y_star: &[f64]) -> Result<f64> {
    if nu.len() != y_star.len() || nu.is_empty() {
        return Err(Error::DimensionMismatch {
            context: "loss_mse",
            expected: y_star.len(),
            got: nu.len(),
        });
    }
    Ok(nu.iter().zip(y_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / nu.len() as f64)
}

/// `𝔤(loss)·𝔥(L)`.
pub fn gamma_value(utility: Utility, penalty: Penalty, layer: usize, loss: f64) -> Result<f64> {
    if layer == 0 {
        return Err(Error::InvalidArgument("layers are numbered from 1".into()));
    }
    let g = match utility {
        Utility::Reciprocal => {
            if loss == 0.0 {
                return Err(Error::InfiniteUtility { layer });
            }
            if !(loss > 0.0) {
                return Err(Error::InvalidArgument(format!("loss must be positive, got {loss}")));
            }
            1.0 / loss
        }
        Utility::Identity => loss,
    };
    Ok(g * penalty.eval(layer))
}

/// `log(L)/√L` for `L = 1..=horizon`.
pub fn log_over_sqrt(horizon: usize) -> Vec<f64> {
    (1..=horizon).map(|l| (l as f64).ln() / (l as f64).sqrt()).collect()
}
