use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{nsg_bound, region_count_bound, BoundKind, BoundReport};
use super::tail::{estimate_tail, mean_vector, scalar_tail};
use super::xi::xi_certificates;
use crate::error::{Error, Result};
use crate::sdnn::{
    sample_network_tagged, simulate_nu, symbolic_layers, ExponentSpec, InitSpec, MatrixSpec,
    NetworkSpec, StreamTags,
};
use crate::rng::tags;
use crate::tropical::{count_linear_regions, RegionMethod};

/// Sample sizes and thresholds for the layer concentration check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcentrationOptions {
    #[serde(default = "default_n")]
    pub n: usize,
    /// Runs used only to estimate `E[ν^(l)]`.
    #[serde(default = "default_n")]
    pub pilot_n: usize,
    /// Thresholds; defaults to `ξ_(l)·k/5` for `k = 1..=10`.
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
}

fn default_n() -> usize {
    100_000
}

impl Default for ConcentrationOptions {
    fn default() -> Self {
        Self {
            n: default_n(),
            pilot_n: default_n(),
            t_grid: None,
        }
    }
}

/// Default threshold grid `ξ·k/5`, `k = 1..=10`.
pub fn default_t_grid(xi: f64) -> Vec<f64> {
    (1..=10).map(|k| xi * k as f64 / 5.0).collect()
}

/// Reports for layer `l`.
pub fn verify_layer_concentration(
    spec: &NetworkSpec,
    l: usize,
    opts: &ConcentrationOptions,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    if l == 0 || l > spec.depth() {
        return Err(Error::InvalidArgument(format!("layer {l} outside 1..={}", spec.depth())));
    }
    Ok(verify_concentration(spec, opts, seed)?
        .into_iter()
        .filter(|r| r.l == Some(l))
        .collect())
}

/// Reports for every layer `1..=L`, sharing one main and one pilot sample.
pub fn verify_concentration(spec: &NetworkSpec, opts: &ConcentrationOptions, seed: u64) -> Result<Vec<BoundReport>> {
    let certs = xi_certificates(spec)?;
    let main = simulate_nu(spec, seed, opts.n, StreamTags::MAIN)?;
    let pilot = simulate_nu(spec, seed, opts.pilot_n, StreamTags::PILOT)?;
    let mut reports = Vec::new();
    for l in 1..=spec.depth() {
        let xi = certs[l].xi;
        let center = mean_vector(&pilot[l])?;
        let grid = opts.t_grid.clone().unwrap_or_else(|| default_t_grid(xi));
        for t in grid {
            let est = estimate_tail(&main[l], &center, t)?;
            // A point mass has ξ = 0 and no deviation at any t > 0.
            let analytic = if xi > 0.0 { nsg_bound(t, xi)? } else if t > 0.0 { 0.0 } else { 2.0 };
            reports.push(BoundReport::new(
                BoundKind::Nsg,
                Some(l),
                t,
                [("xi", xi)],
                analytic,
                est.p,
                est.se,
                est.n,
            ));
        }
    }
    Ok(reports)
}

/// Hoeffding reports for samples of region counts in `[1, b1]`.
pub fn region_count_concentration(counts: &[u64], b1: u64, t_grid: &[f64]) -> Result<Vec<BoundReport>> {
    if b1 < 2 {
        return Err(Error::InvalidArgument(format!("need b1 > 1, got {b1}")));
    }
    if let Some(c) = counts.iter().find(|c| **c < 1 || **c > b1) {
        return Err(Error::InvalidArgument(format!("region count {c} outside [1, {b1}]")));
    }
    if counts.is_empty() {
        return Err(Error::EmptySample);
    }
    let xs: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    t_grid
        .iter()
        .map(|&t| {
            let est = scalar_tail(&xs, mean, t)?;
            Ok(BoundReport::new(
                BoundKind::RegionCount,
                None,
                t,
                [("b1", b1 as f64), ("mean", mean)],
                region_count_bound(t, b1)?,
                est.p,
                est.se,
                est.n,
            ))
        })
        .collect()
}

/// A-priori bound on the number of linear regions of `F^(L)_unit`.
///
/// Exponent vectors of `F` lie in the box `∏_k [0, D_k]` where `D_k` bounds
/// the degree in `x_k`; each region belongs to one monomial, so the count is
/// at most `∏_k (D_k + 1)`.
pub fn lattice_region_bound(spec: &NetworkSpec, unit: usize) -> Result<u64> {
    spec.validate("network")?;
    let d = spec.input_dim();
    if unit >= spec.output_dim() {
        return Err(Error::InvalidArgument(format!("unit {unit} outside output width")));
    }
    let exp_max = |e: &ExponentSpec, j: usize, k: usize| -> u128 {
        match e {
            ExponentSpec::Unit => u128::from(j == k),
            ExponentSpec::Iid { dist } => dist.bounds().1 as u128,
        }
    };
    // deg[j][k]: bound on the degree of coordinate j in x_k.
    let (mut f, mut g): (Vec<Vec<u128>>, Vec<Vec<u128>>) = match &spec.init {
        InitSpec::Identity => (
            (0..d).map(|j| (0..d).map(|k| u128::from(j == k)).collect()).collect(),
            vec![vec![0; d]; d],
        ),
        InitSpec::Random(init) => (
            (0..d).map(|j| (0..d).map(|k| exp_max(&init.exponents, j, k)).collect()).collect(),
            (0..d).map(|j| (0..d).map(|k| exp_max(init.g_exponents(), j, k)).collect()).collect(),
        ),
    };
    for l in 1..=spec.depth() {
        let (rows, cols) = (spec.widths[l], spec.widths[l - 1]);
        let (plus, minus): (Vec<Vec<u128>>, Vec<Vec<u128>>) = match spec.weights_for(l) {
            MatrixSpec::Fixed { values } => (
                values.iter().map(|r| r.iter().map(|a| (*a).max(0) as u128).collect()).collect(),
                values.iter().map(|r| r.iter().map(|a| (-*a).max(0) as u128).collect()).collect(),
            ),
            MatrixSpec::Iid { dist } => {
                let (lo, hi) = dist.bounds();
                (
                    vec![vec![hi.max(0.0) as u128; cols]; rows],
                    vec![vec![(-lo).max(0.0) as u128; cols]; rows],
                )
            }
        };
        let mut f2 = vec![vec![0u128; d]; rows];
        let mut g2 = vec![vec![0u128; d]; rows];
        for i in 0..rows {
            for k in 0..d {
                let mut gd = 0u128;
                let mut hd = 0u128;
                for m in 0..cols {
                    gd = gd.saturating_add(plus[i][m].saturating_mul(g[m][k]));
                    gd = gd.saturating_add(minus[i][m].saturating_mul(f[m][k]));
                    hd = hd.saturating_add(plus[i][m].saturating_mul(f[m][k]));
                    hd = hd.saturating_add(minus[i][m].saturating_mul(g[m][k]));
                }
                g2[i][k] = gd;
                f2[i][k] = hd.max(gd);
            }
        }
        f = f2;
        g = g2;
    }
    let bound = f[unit]
        .iter()
        .fold(1u128, |acc, dk| acc.saturating_mul(dk.saturating_add(1)));
    Ok(u64::try_from(bound).unwrap_or(u64::MAX).max(2))
}

/// Region counts of `F^(L)_unit` for `n` symbolic network draws.
pub fn sample_region_counts(
    spec: &NetworkSpec,
    unit: usize,
    n: usize,
    seed: u64,
    method: RegionMethod,
    cap: usize,
) -> Result<Vec<u64>> {
    spec.validate("network")?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let sample = sample_network_tagged(spec, seed, tags::REGIONS, i)?;
            let layers = symbolic_layers(&sample, spec.input_dim(), cap)?;
            let f = &layers.last().expect("nonempty").f[unit];
            Ok(count_linear_regions(f, method)?.count as u64)
        })
        .collect()
}
