use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for `S_L = γ^(L)` with exact values.
pub const EPS_EXACT: f64 = 1e-9;
/// Relative tolerance for `S_L = γ^(L)` with regression estimates.
pub const EPS_LSMC: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Deterministic,
    ExactFiniteSupport,
    LeastSquaresMc,
}

/// Result of a layer-count selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingSolution {
    pub method: Method,
    pub horizon: usize,
    /// `E[S_L]` for `L = 1..=𝓛`.
    #[serde(rename = "S")]
    pub envelope: Vec<f64>,
    /// `V₁ = E[γ^(τ₁)]`.
    pub value: f64,
    /// Standard error of `value` when it is a Monte Carlo estimate.
    pub value_se: Option<f64>,
    /// `τ₁` when it is the same on every trajectory.
    pub tau: Option<usize>,
    /// `P(τ₁ = L)` for `L = 1..=𝓛`.
    pub tau_distribution: Vec<f64>,
    pub warnings: Vec<String>,
}

impl StoppingSolution {
    pub(crate) fn tau_from_distribution(dist: &[f64]) -> Option<usize> {
        let support: Vec<usize> = (0..dist.len()).filter(|i| dist[*i] > 0.0).collect();
        (support.len() == 1).then(|| support[0] + 1)
    }

    /// Writes `layer,S` rows.
    pub fn write_envelope_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["layer", "S", "p_tau"])?;
        for (l, (s, p)) in self.envelope.iter().zip(&self.tau_distribution).enumerate() {
            w.write_record([(l + 1).to_string(), s.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `S − γ ≤ eps·max(|γ|, |S|)`.
pub fn attains(s: f64, gamma: f64, eps: f64) -> bool {
    s - gamma <= eps * gamma.abs().max(s.abs())
}

/// Earliest 1-based `L` with `S_L` equal to `γ^(L)` within `eps`.
pub fn stopping_time(gamma: &[f64], s: &[f64], eps: f64) -> usize {
    stopping_time_batched(gamma, s, eps, gamma.len().max(1))
}

/// Same as [`stopping_time`], scanning `batch` layers at a time and stopping
/// at the first batch containing a hit.
pub fn stopping_time_batched(gamma: &[f64], s: &[f64], eps: f64, batch: usize) -> usize {
    let n = gamma.len().min(s.len());
    let batch = batch.max(1);
    let mut start = 0;
    while start < n {
        let end = (start + batch).min(n);
        if let Some(k) = (start..end).find(|&k| attains(s[k], gamma[k], eps)) {
            return k + 1;
        }
        start = end;
    }
    n
}

/// Snell envelope of a deterministic sequence: `S_L = max_{k ≥ L} γ^(k)`.
pub fn deterministic_envelope(gamma: &[f64]) -> Vec<f64> {
    let mut s = gamma.to_vec();
    for l in (0..s.len().saturating_sub(1)).rev() {
        s[l] = s[l].max(s[l + 1]);
    }
    s
}

/// Optimal stopping of a known sequence.
pub fn solve_deterministic(gamma: &[f64], eps: f64) -> Result<StoppingSolution> {
    if gamma.is_empty() {
        return Err(Error::EmptySample);
    }
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(Error::NotIntegrable("non-finite reward".into()));
    }
    let s = deterministic_envelope(gamma);
    let tau = stopping_time(gamma, &s, eps);
    let mut dist = vec![0.0; gamma.len()];
    dist[tau - 1] = 1.0;
    Ok(StoppingSolution {
        method: Method::Deterministic,
        horizon: gamma.len(),
        value: gamma[tau - 1],
        envelope: s,
        value_se: None,
        tau: Some(tau),
        tau_distribution: dist,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer_select::log_over_sqrt;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let g = [1.0, 2.0, 3.0];
        assert_eq!(stopping_time(&g, &g, EPS_EXACT), 1);
        assert_eq!(stopping_time(&g, &[5.0, 5.0, 3.0], EPS_EXACT), 3);
        let s = solve_deterministic(&[1.0, 3.0], EPS_EXACT).unwrap();
        assert_eq!((s.tau, s.value, s.envelope.clone()), (Some(2), 3.0, vec![3.0, 3.0]));
        let s = solve_deterministic(&[5.0, 3.0], EPS_EXACT).unwrap();
        assert_eq!((s.tau, s.value), (Some(1), 5.0));
        assert_eq!(solve_deterministic(&[2.0; 5], EPS_EXACT).unwrap().tau, Some(1));
        let s = solve_deterministic(&log_over_sqrt(1000), EPS_EXACT).unwrap();
        assert_eq!(s.tau, Some(7));
    }

    proptest! {
        #[test]
        fn batched_scan_matches_full_scan(g in prop::collection::vec(-3i32..3, 1..60), batch in 1usize..20) {
            let g: Vec<f64> = g.into_iter().map(f64::from).collect();
            let s = deterministic_envelope(&g);
            prop_assert_eq!(stopping_time(&g, &s, EPS_EXACT), stopping_time_batched(&g, &s, EPS_EXACT, batch));
            prop_assert_eq!(s.last(), g.last());
            prop_assert!(s.iter().zip(&g).all(|(a, b)| a >= b));
        }

        #[test]
        fn positive_scaling_keeps_tau(g in prop::collection::vec(0.01f64..5.0, 1..40), k in 0.01f64..100.0) {
            let scaled: Vec<f64> = g.iter().map(|x| x * k).collect();
            prop_assert_eq!(
                solve_deterministic(&g, EPS_EXACT).unwrap().tau,
                solve_deterministic(&scaled, EPS_EXACT).unwrap().tau
            );
        }
    }
}
