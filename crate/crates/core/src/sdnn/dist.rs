use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use crate::error::{Error, Result};
use crate::rng::Stream;

/// A bounded scalar distribution. Every variant has a finite support
/// interval `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistributionSpec {
    BoundedUniformInteger { lo: i64, hi: i64 },
    BoundedUniformReal { lo: f64, hi: f64 },
    /// Gaussian restricted to `[lo, hi]` by rejection.
    TruncatedGaussian { mean: f64, std: f64, lo: f64, hi: f64 },
    FiniteSupport { values: Vec<f64>, weights: Vec<f64> },
    Constant { value: f64 },
}

/// Smallest acceptance probability allowed for truncated Gaussians.
const MIN_TRUNCATED_MASS: f64 = 1e-3;

impl DistributionSpec {
    pub fn constant(value: f64) -> Self {
        DistributionSpec::Constant { value }
    }

    pub fn uniform_int(lo: i64, hi: i64) -> Self {
        DistributionSpec::BoundedUniformInteger { lo, hi }
    }

    pub fn uniform_real(lo: f64, hi: f64) -> Self {
        DistributionSpec::BoundedUniformReal { lo, hi }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let unbounded = |reason: &str| Error::Unbounded {
            path: path.to_string(),
            reason: reason.to_string(),
        };
        match self {
            DistributionSpec::BoundedUniformInteger { lo, hi } => {
                if lo > hi {
                    return Err(unbounded("lo > hi"));
                }
            }
            DistributionSpec::BoundedUniformReal { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(unbounded("bounds must be finite"));
                }
                if lo > hi {
                    return Err(unbounded("lo > hi"));
                }
            }
            DistributionSpec::TruncatedGaussian { mean, std, lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || !mean.is_finite() || !std.is_finite() {
                    return Err(unbounded("truncation bounds and parameters must be finite"));
                }
                if lo > hi || *std < 0.0 {
                    return Err(unbounded("need lo <= hi and std >= 0"));
                }
                if *std == 0.0 {
                    if mean < lo || mean > hi {
                        return Err(unbounded("degenerate mean outside truncation window"));
                    }
                } else if truncated_mass(*mean, *std, *lo, *hi) < MIN_TRUNCATED_MASS {
                    return Err(unbounded("truncation window carries too little mass"));
                }
            }
            DistributionSpec::FiniteSupport { values, weights } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(unbounded("values and weights must be nonempty and equal length"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(unbounded("support values must be finite"));
                }
                if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
                    return Err(unbounded("weights must be positive"));
                }
            }
            DistributionSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(unbounded("constant must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Support interval.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            DistributionSpec::BoundedUniformInteger { lo, hi } => (*lo as f64, *hi as f64),
            DistributionSpec::BoundedUniformReal { lo, hi } => (*lo, *hi),
            DistributionSpec::TruncatedGaussian { mean, std, lo, hi } => {
                if *std == 0.0 {
                    (*mean, *mean)
                } else {
                    (*lo, *hi)
                }
            }
            DistributionSpec::FiniteSupport { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v))),
            DistributionSpec::Constant { value } => (*value, *value),
        }
    }

    /// Whether every draw is an integer.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            DistributionSpec::BoundedUniformInteger { .. } => true,
            DistributionSpec::BoundedUniformReal { lo, hi } => lo == hi && lo.fract() == 0.0,
            DistributionSpec::TruncatedGaussian { mean, std, .. } => *std == 0.0 && mean.fract() == 0.0,
            DistributionSpec::FiniteSupport { values, .. } => values.iter().all(|v| v.fract() == 0.0),
            DistributionSpec::Constant { value } => value.fract() == 0.0,
        }
    }

    pub fn sample(&self, rng: &mut Stream) -> f64 {
        match self {
            DistributionSpec::BoundedUniformInteger { lo, hi } => rng.random_range(*lo..=*hi) as f64,
            DistributionSpec::BoundedUniformReal { lo, hi } => {
                if lo == hi {
                    *lo
                } else {
                    rng.random_range(*lo..*hi)
                }
            }
            DistributionSpec::TruncatedGaussian { mean, std, lo, hi } => {
                if *std == 0.0 {
                    return *mean;
                }
                let normal = Normal::new(*mean, *std).expect("validated std");
                loop {
                    let v: f64 = normal.sample(rng);
                    if (*lo..=*hi).contains(&v) {
                        return v;
                    }
                }
            }
            DistributionSpec::FiniteSupport { .. } | DistributionSpec::Constant { .. } => {
                let u: f64 = rng.random();
                self.quantile(u)
            }
        }
    }

    /// Inverse CDF at `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            DistributionSpec::BoundedUniformInteger { lo, hi } => {
                let span = (hi - lo + 1) as f64;
                let k = (u * span).floor() as i64;
                (lo + k).min(*hi) as f64
            }
            DistributionSpec::BoundedUniformReal { lo, hi } => lo + u * (hi - lo),
            DistributionSpec::TruncatedGaussian { mean, std, lo, hi } => {
                if *std == 0.0 {
                    return *mean;
                }
                let z = std_normal();
                let pa = z.cdf((lo - mean) / std);
                let pb = z.cdf((hi - mean) / std);
                let p = (pa + u * (pb - pa)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                (mean + std * z.inverse_cdf(p)).clamp(*lo, *hi)
            }
            DistributionSpec::FiniteSupport { values, weights } => {
                let total: f64 = weights.iter().sum();
                let target = u * total;
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w;
                    if target < acc {
                        return *v;
                    }
                }
                *values.last().expect("validated nonempty")
            }
            DistributionSpec::Constant { value } => *value,
        }
    }
}

fn std_normal() -> StatNormal {
    StatNormal::new(0.0, 1.0).expect("standard normal")
}

fn truncated_mass(mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
    let z = std_normal();
    z.cdf((hi - mean) / std) - z.cdf((lo - mean) / std)
}

/// Draws scalars for one network run.
///
/// With `correlation = ρ > 0` every draw goes through a Gaussian copula
/// sharing one standard normal per run: `z = √ρ·Z_run + √(1−ρ)·Z_own`,
/// `u = Φ(z)`, value = quantile(u). With `ρ = 0` draws are independent and
/// use each distribution's native sampler.
pub struct Sampler<'a> {
    rng: &'a mut Stream,
    copula: Option<(f64, f64, f64)>,
}

impl<'a> Sampler<'a> {
    pub fn new(rng: &'a mut Stream, correlation: f64) -> Self {
        let copula = if correlation > 0.0 {
            let shared: f64 = StandardNormal.sample(rng);
            Some((correlation.sqrt(), (1.0 - correlation).sqrt(), shared))
        } else {
            None
        };
        Self { rng, copula }
    }

    pub fn draw(&mut self, dist: &DistributionSpec) -> f64 {
        match self.copula {
            None => dist.sample(self.rng),
            Some((load, own, shared)) => {
                let e: f64 = StandardNormal.sample(self.rng);
                let u = std_normal().cdf(load * shared + own * e);
                dist.quantile(u)
            }
        }
    }

    pub fn rng(&mut self) -> &mut Stream {
        self.rng
    }
}
