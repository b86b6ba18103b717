use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest sample accepted by [`estimate_tail`].
pub const MIN_TAIL_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p: f64,
    /// `sqrt(p̂(1−p̂)/n)`.
    pub se: f64,
    pub n: usize,
}

impl TailEstimate {
    pub fn from_count(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }
}

pub fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Fraction of samples with `‖sample − center‖₂ ≥ t`.
pub fn estimate_tail(samples: &[Vec<f64>], center: &[f64], t: f64) -> Result<TailEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_TAIL_SAMPLES,
            got: samples.len(),
        });
    }
    if let Some(s) = samples.iter().find(|s| s.len() != center.len()) {
        return Err(Error::DimensionMismatch {
            context: "tail sample",
            expected: center.len(),
            got: s.len(),
        });
    }
    let hits = samples.iter().filter(|s| distance(s, center) >= t).count();
    Ok(TailEstimate::from_count(hits, samples.len()))
}

/// Fraction of scalars with `|x − center| ≥ t`; no minimum sample size.
pub fn scalar_tail(samples: &[f64], center: f64, t: f64) -> Result<TailEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let hits = samples.iter().filter(|x| (*x - center).abs() >= t).count();
    Ok(TailEstimate::from_count(hits, samples.len()))
}

/// Coordinate-wise sample mean.
pub fn mean_vector(samples: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = samples.first().ok_or(Error::EmptySample)?;
    let mut acc = vec![0.0; first.len()];
    for s in samples {
        if s.len() != acc.len() {
            return Err(Error::DimensionMismatch {
                context: "mean sample",
                expected: acc.len(),
                got: s.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(s) {
            *a += x;
        }
    }
    let n = samples.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn degenerate_and_zero_threshold() {
        let s = vec![vec![1.0, 2.0]; 1000];
        assert_eq!(estimate_tail(&s, &[1.0, 2.0], 0.5).unwrap().p, 0.0);
        assert_eq!(estimate_tail(&s, &[1.0, 2.0], 0.0).unwrap().p, 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(estimate_tail(&[], &[0.0], 1.0), Err(Error::EmptySample)));
        let few = vec![vec![0.0]; 999];
        assert!(matches!(estimate_tail(&few, &[0.0], 1.0), Err(Error::TooFewSamples { .. })));
        let s = vec![vec![0.0]; 1000];
        assert!(estimate_tail(&s, &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn gaussian_two_sided_five_percent() {
        let mut rng = stream(8, "test.tail", 0);
        let s: Vec<Vec<f64>> = (0..100_000).map(|_| vec![StandardNormal.sample(&mut rng)]).collect();
        let est = estimate_tail(&s, &[0.0], 1.96).unwrap();
        // 2(1 − Φ(1.96)) via erfc.
        let exact = statrs::function::erf::erfc(1.96 / std::f64::consts::SQRT_2);
        assert!((est.p - exact).abs() <= 3.0 * est.se, "{} vs {exact}", est.p);
    }
}
