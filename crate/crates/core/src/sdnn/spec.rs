use serde::{Deserialize, Serialize};

use super::dist::{DistributionSpec, Sampler};
use crate::error::{Error, Result};
use crate::tropical::TropicalValue;

/// Source of a layer's integer weight matrix (𝒫 or a per-layer 𝒫_l).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MatrixSpec {
    /// Every entry drawn independently from `dist`.
    Iid { dist: DistributionSpec },
    Fixed { values: Vec<Vec<i64>> },
}

/// Source of a real vector (𝒬 or 𝒬_l).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VectorSpec {
    Iid { dist: DistributionSpec },
    Fixed { values: Vec<f64> },
}

/// Activation threshold `t` in `σ(x) = max{x, t}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThresholdSpec {
    /// `t = 0`.
    #[default]
    Relu,
    /// `t = bottom`, i.e. `σ(x) = x`.
    Identity,
    Constant { value: f64 },
    /// Each coordinate drawn from 𝒱.
    Random { dist: DistributionSpec },
}

/// Exponent vectors α ∈ ℕ^d of the initial polynomials (𝒯_j).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExponentSpec {
    /// Each entry drawn from `dist` (must be a nonnegative integer law).
    Iid { dist: DistributionSpec },
    /// `α = e_j` for coordinate `j`.
    Unit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInit {
    /// Monomials per coordinate.
    pub r: usize,
    /// Coefficient law 𝒮_j for `F⁰`.
    pub coeffs: DistributionSpec,
    /// Exponent law 𝒯_j for `F⁰`.
    pub exponents: ExponentSpec,
    /// Coefficient law for `G⁰`; defaults to `coeffs`.
    #[serde(default)]
    pub g_coeffs: Option<DistributionSpec>,
    #[serde(default)]
    pub g_exponents: Option<ExponentSpec>,
}

impl RandomInit {
    pub fn g_coeffs(&self) -> &DistributionSpec {
        self.g_coeffs.as_ref().unwrap_or(&self.coeffs)
    }

    pub fn g_exponents(&self) -> &ExponentSpec {
        self.g_exponents.as_ref().unwrap_or(&self.exponents)
    }
}

/// How `F⁰`, `G⁰` are formed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum InitSpec {
    /// `F⁰_j(x) = x_j`, `G⁰_j = 0`, so `ν⁰ = x`.
    #[default]
    Identity,
    /// Random tropical polynomials in `x`.
    Random(RandomInit),
}

/// Law of the network input `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSpec {
    UniformBox { lo: f64, hi: f64 },
    Fixed { x: Vec<f64> },
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec::UniformBox { lo: -1.0, hi: 1.0 }
    }
}

impl InputSpec {
    /// Coordinate-wise bounds for an input of dimension `dim`.
    pub fn bounds(&self, dim: usize) -> Vec<(f64, f64)> {
        match self {
            InputSpec::UniformBox { lo, hi } => vec![(*lo, *hi); dim],
            InputSpec::Fixed { x } => x.iter().map(|v| (*v, *v)).collect(),
        }
    }

    pub fn sample(&self, sampler: &mut Sampler<'_>, dim: usize) -> Vec<f64> {
        match self {
            InputSpec::UniformBox { lo, hi } => {
                let d = DistributionSpec::uniform_real(*lo, *hi);
                (0..dim).map(|_| sampler.draw(&d)).collect()
            }
            InputSpec::Fixed { x } => x.clone(),
        }
    }
}

/// Per-layer overrides (𝒫_l, 𝒬_l, threshold).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerOverride {
    /// 1-based layer index.
    pub layer: usize,
    #[serde(default)]
    pub weights: Option<MatrixSpec>,
    #[serde(default)]
    pub biases: Option<VectorSpec>,
    #[serde(default)]
    pub threshold: Option<ThresholdSpec>,
}

/// A stochastic feedforward network with widths `n_0 … n_L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub widths: Vec<usize>,
    #[serde(default)]
    pub init: InitSpec,
    pub weights: MatrixSpec,
    pub biases: VectorSpec,
    #[serde(default)]
    pub threshold: ThresholdSpec,
    #[serde(default)]
    pub overrides: Vec<LayerOverride>,
    #[serde(default)]
    pub input: InputSpec,
    /// Copula correlation ρ ∈ [0, 1) shared by all draws of a run.
    #[serde(default)]
    pub correlation: f64,
}

impl NetworkSpec {
    /// Fully connected net with iid integer weights in `[-w, w]`, iid real
    /// biases in `[-b, b]`, ReLU everywhere and identity initialization.
    pub fn uniform(widths: Vec<usize>, w: i64, b: f64) -> Self {
        NetworkSpec {
            widths,
            init: InitSpec::Identity,
            weights: MatrixSpec::Iid {
                dist: DistributionSpec::uniform_int(-w, w),
            },
            biases: VectorSpec::Iid {
                dist: DistributionSpec::uniform_real(-b, b),
            },
            threshold: ThresholdSpec::Relu,
            overrides: Vec::new(),
            input: InputSpec::default(),
            correlation: 0.0,
        }
    }

    /// The reference configuration used throughout the test suites:
    /// `d = 2`, three layers of width 4, weights uniform on `{−2,…,2}`,
    /// biases uniform on `[−1, 1]`, inputs uniform on `[−1, 1]²`.
    pub fn reference() -> Self {
        NetworkSpec::uniform(vec![2, 4, 4, 4], 2, 1.0)
    }

    pub fn depth(&self) -> usize {
        self.widths.len().saturating_sub(1)
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("validated widths")
    }

    fn override_for(&self, layer: usize) -> Option<&LayerOverride> {
        self.overrides.iter().rev().find(|o| o.layer == layer)
    }

    pub fn weights_for(&self, layer: usize) -> &MatrixSpec {
        self.override_for(layer)
            .and_then(|o| o.weights.as_ref())
            .unwrap_or(&self.weights)
    }

    pub fn biases_for(&self, layer: usize) -> &VectorSpec {
        self.override_for(layer)
            .and_then(|o| o.biases.as_ref())
            .unwrap_or(&self.biases)
    }

    pub fn threshold_for(&self, layer: usize) -> &ThresholdSpec {
        self.override_for(layer)
            .and_then(|o| o.threshold.as_ref())
            .unwrap_or(&self.threshold)
    }

    /// Sets the threshold of layer `layer` (e.g. identity on the last layer).
    pub fn with_threshold(mut self, layer: usize, threshold: ThresholdSpec) -> Self {
        match self.overrides.iter_mut().find(|o| o.layer == layer) {
            Some(o) => o.threshold = Some(threshold),
            None => self.overrides.push(LayerOverride {
                layer,
                weights: None,
                biases: None,
                threshold: Some(threshold),
            }),
        }
        self
    }

    /// Checks shapes and boundedness. `path` prefixes reported field paths.
    pub fn validate(&self, path: &str) -> Result<()> {
        if self.widths.len() < 2 {
            return Err(Error::spec(format!("{path}.widths"), "need at least n_0 and n_1"));
        }
        for (i, w) in self.widths.iter().enumerate() {
            if *w == 0 {
                return Err(Error::spec(format!("{path}.widths[{i}]"), "widths must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.correlation) {
            return Err(Error::spec(format!("{path}.correlation"), "must lie in [0, 1)"));
        }
        match &self.input {
            InputSpec::UniformBox { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(Error::Unbounded {
                        path: format!("{path}.input"),
                        reason: "box bounds must be finite with lo <= hi".into(),
                    });
                }
            }
            InputSpec::Fixed { x } => {
                if x.len() != self.input_dim() {
                    return Err(Error::spec(
                        format!("{path}.input.x"),
                        format!("length {} != n_0 = {}", x.len(), self.input_dim()),
                    ));
                }
            }
        }
        if let InitSpec::Random(init) = &self.init {
            if init.r == 0 {
                return Err(Error::spec(format!("{path}.init.r"), "need r >= 1"));
            }
            init.coeffs.validate(&format!("{path}.init.coeffs"))?;
            init.g_coeffs().validate(&format!("{path}.init.g_coeffs"))?;
            for (name, e) in [("exponents", &init.exponents), ("g_exponents", init.g_exponents())] {
                if let ExponentSpec::Iid { dist } = e {
                    let p = format!("{path}.init.{name}");
                    dist.validate(&p)?;
                    if !dist.is_integer_valued() || dist.bounds().0 < 0.0 {
                        return Err(Error::spec(p, "exponents must be nonnegative integers"));
                    }
                }
            }
        }
        for (i, o) in self.overrides.iter().enumerate() {
            if o.layer == 0 || o.layer > self.depth() {
                return Err(Error::spec(
                    format!("{path}.overrides[{i}].layer"),
                    format!("layer must be in 1..={}", self.depth()),
                ));
            }
        }
        for l in 1..=self.depth() {
            let (rows, cols) = (self.widths[l], self.widths[l - 1]);
            let wpath = format!("{path}.weights(layer {l})");
            match self.weights_for(l) {
                MatrixSpec::Iid { dist } => {
                    dist.validate(&wpath)?;
                    if !dist.is_integer_valued() {
                        return Err(Error::spec(wpath, "weight law must be integer valued"));
                    }
                }
                MatrixSpec::Fixed { values } => {
                    if values.len() != rows || values.iter().any(|r| r.len() != cols) {
                        return Err(Error::spec(wpath, format!("expected a {rows}x{cols} matrix")));
                    }
                }
            }
            let bpath = format!("{path}.biases(layer {l})");
            match self.biases_for(l) {
                VectorSpec::Iid { dist } => dist.validate(&bpath)?,
                VectorSpec::Fixed { values } => {
                    if values.len() != rows || values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::spec(bpath, format!("expected {rows} finite values")));
                    }
                }
            }
            let tpath = format!("{path}.threshold(layer {l})");
            match self.threshold_for(l) {
                ThresholdSpec::Random { dist } => dist.validate(&tpath)?,
                ThresholdSpec::Constant { value } if !value.is_finite() => {
                    return Err(Error::spec(tpath, "threshold constant must be finite"));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

impl ThresholdSpec {
    /// Interval of a threshold coordinate; `None` for the identity activation.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            ThresholdSpec::Relu => Some((0.0, 0.0)),
            ThresholdSpec::Identity => None,
            ThresholdSpec::Constant { value } => Some((*value, *value)),
            ThresholdSpec::Random { dist } => Some(dist.bounds()),
        }
    }

    pub(crate) fn draw(&self, sampler: &mut Sampler<'_>) -> TropicalValue {
        match self {
            ThresholdSpec::Relu => TropicalValue::Finite(0.0),
            ThresholdSpec::Identity => TropicalValue::Bottom,
            ThresholdSpec::Constant { value } => TropicalValue::Finite(*value),
            ThresholdSpec::Random { dist } => TropicalValue::Finite(sampler.draw(dist)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_spec_is_valid() {
        NetworkSpec::reference().validate("network").unwrap();
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut spec = NetworkSpec::reference();
        spec.widths[2] = 0;
        let err = spec.validate("network").unwrap_err().to_string();
        assert!(err.contains("network.widths[2]"), "{err}");

        let mut spec = NetworkSpec::reference();
        spec.weights = MatrixSpec::Iid {
            dist: DistributionSpec::uniform_real(-1.0, 1.0),
        };
        assert!(spec.validate("network").is_err());

        let mut spec = NetworkSpec::reference();
        spec.biases = VectorSpec::Iid {
            dist: DistributionSpec::uniform_real(-1.0, f64::INFINITY),
        };
        assert!(matches!(spec.validate("network"), Err(Error::Unbounded { .. })));
    }

    #[test]
    fn overrides_take_precedence() {
        let spec = NetworkSpec::reference().with_threshold(3, ThresholdSpec::Identity);
        assert_eq!(spec.threshold_for(3), &ThresholdSpec::Identity);
        assert_eq!(spec.threshold_for(2), &ThresholdSpec::Relu);
    }

    #[test]
    fn json_round_trip() {
        let spec = NetworkSpec::reference().with_threshold(3, ThresholdSpec::Identity);
        let text = serde_json::to_string(&spec).unwrap();
        let back: NetworkSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
