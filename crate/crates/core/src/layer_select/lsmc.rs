use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::stopping::{attains, Method, StoppingSolution, EPS_LSMC};
use crate::error::{Error, Result};

/// Smallest number of trajectories accepted for regression.
pub const MIN_LSMC_PATHS: usize = 1000;

const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsmcOptions {
    /// Highest power of the standardized `γ^(L)`.
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Number of earlier values `γ^(L−1), …` entering linearly.
    #[serde(default)]
    pub history: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_degree() -> usize {
    3
}

fn default_eps() -> f64 {
    EPS_LSMC
}

impl Default for LsmcOptions {
    fn default() -> Self {
        Self {
            degree: default_degree(),
            history: 0,
            eps: default_eps(),
        }
    }
}

/// Fitted continuation value for one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct StageFit {
    degree: usize,
    /// `(mean, sd)` per input column: current value then history.
    scales: Vec<(f64, f64)>,
    coef: Vec<f64>,
}

impl StageFit {
    fn features(&self, path: &[f64], stage: usize, history: usize, out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        let (m, s) = self.scales[0];
        let z = (path[stage] - m) / s;
        let mut p = 1.0;
        for _ in 0..self.degree {
            p *= z;
            out.push(p);
        }
        for h in 1..=history.min(stage) {
            let (m, s) = self.scales[h];
            out.push((path[stage - h] - m) / s);
        }
    }

    fn predict(&self, path: &[f64], stage: usize, history: usize, buf: &mut Vec<f64>) -> f64 {
        self.features(path, stage, history, buf);
        buf.iter().zip(&self.coef).map(|(a, b)| a * b).sum()
    }
}

/// A fitted regression stopping rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsmcRule {
    horizon: usize,
    history: usize,
    eps: f64,
    /// Stage fits for `L = 1..𝓛−1`.
    fits: Vec<StageFit>,
}

impl LsmcRule {
    /// 1-based stopping time on `path`.
    pub fn tau(&self, path: &[f64]) -> usize {
        let mut buf = Vec::new();
        for (k, fit) in self.fits.iter().enumerate() {
            let c = fit.predict(path, k, self.history, &mut buf);
            if attains(c, path[k], self.eps) {
                return k + 1;
            }
        }
        self.horizon
    }

    /// Mean reward and its standard error on `paths`.
    pub fn evaluate(&self, paths: &[Vec<f64>]) -> (f64, f64, Vec<f64>) {
        let mut dist = vec![0.0; self.horizon];
        let rewards: Vec<f64> = paths
            .iter()
            .map(|p| {
                let t = self.tau(p);
                dist[t - 1] += 1.0;
                p[t - 1]
            })
            .collect();
        let n = rewards.len() as f64;
        let mean = rewards.iter().sum::<f64>() / n;
        let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0).max(1.0);
        for d in &mut dist {
            *d /= n;
        }
        (mean, (var / n).sqrt(), dist)
    }
}

fn check_paths(paths: &[Vec<f64>], horizon: usize) -> Result<()> {
    if paths.len() < MIN_LSMC_PATHS {
        return Err(Error::TooFewSamples {
            required: MIN_LSMC_PATHS,
            got: paths.len(),
        });
    }
    if let Some(p) = paths.iter().find(|p| p.len() != horizon) {
        return Err(Error::DimensionMismatch {
            context: "trajectory length",
            expected: horizon,
            got: p.len(),
        });
    }
    if paths.iter().flatten().any(|g| !g.is_finite()) {
        return Err(Error::NotIntegrable("non-finite reward in trajectories".into()));
    }
    Ok(())
}

fn mean_sd(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let m = v.clone().sum::<f64>() / n;
    let var = v.map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Fits the continuation value at `stage` by least squares, lowering the
/// degree until the design has full column rank.
fn fit_stage(paths: &[Vec<f64>], cash: &[f64], stage: usize, opts: &LsmcOptions, warnings: &mut Vec<String>) -> StageFit {
    let mut scales = Vec::new();
    for h in 0..=opts.history.min(stage) {
        let (m, s) = mean_sd(paths.iter().map(move |p| p[stage - h]));
        scales.push((m, if s > 0.0 { s } else { 1.0 }));
    }
    let var0 = mean_sd(paths.iter().map(|p| p[stage])).1;
    let mut degree = if var0 > 0.0 { opts.degree } else { 0 };
    let y = DVector::from_column_slice(cash);
    loop {
        let mut fit = StageFit {
            degree,
            scales: scales.clone(),
            coef: Vec::new(),
        };
        let mut buf = Vec::new();
        fit.features(&paths[0], stage, opts.history, &mut buf);
        let cols = buf.len();
        let mut x = DMatrix::<f64>::zeros(paths.len(), cols);
        for (i, p) in paths.iter().enumerate() {
            fit.features(p, stage, opts.history, &mut buf);
            for (j, v) in buf.iter().enumerate() {
                x[(i, j)] = *v;
            }
        }
        let svd = x.svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|s| **s > RANK_TOLERANCE * smax.max(1.0)).count();
        if rank == cols || degree == 0 {
            let coef = svd.solve(&y, RANK_TOLERANCE * smax.max(1.0)).expect("U and V were computed");
            fit.coef = coef.iter().copied().collect();
            if degree < opts.degree {
                warnings.push(format!(
                    "stage {}: basis degree reduced from {} to {degree}",
                    stage + 1,
                    opts.degree
                ));
            }
            return fit;
        }
        degree -= 1;
    }
}

/// Least-squares Monte Carlo: backward regression of realized continuation
/// rewards on a polynomial basis in `γ^(L)`.
pub fn backward_induction_lsmc(paths: &[Vec<f64>], opts: &LsmcOptions) -> Result<(StoppingSolution, LsmcRule)> {
    let horizon = paths.first().map(Vec::len).ok_or(Error::EmptySample)?;
    check_paths(paths, horizon)?;
    if opts.degree == 0 {
        return Err(Error::InvalidArgument("basis degree must be at least 1".into()));
    }
    let mut warnings = Vec::new();
    let mut cash: Vec<f64> = paths.iter().map(|p| p[horizon - 1]).collect();
    let n = paths.len() as f64;
    let mut envelope = vec![0.0; horizon];
    envelope[horizon - 1] = cash.iter().sum::<f64>() / n;
    let mut fits = Vec::with_capacity(horizon.saturating_sub(1));
    let mut buf = Vec::new();
    for stage in (0..horizon - 1).rev() {
        let fit = fit_stage(paths, &cash, stage, opts, &mut warnings);
        let mut s_sum = 0.0;
        for (p, c) in paths.iter().zip(cash.iter_mut()) {
            let cont = fit.predict(p, stage, opts.history, &mut buf);
            s_sum += p[stage].max(cont);
            if attains(cont, p[stage], opts.eps) {
                *c = p[stage];
            }
        }
        envelope[stage] = s_sum / n;
        fits.push(fit);
    }
    fits.reverse();
    let rule = LsmcRule {
        horizon,
        history: opts.history,
        eps: opts.eps,
        fits,
    };
    let (value, se, dist) = rule.evaluate(paths);
    Ok((
        StoppingSolution {
            method: Method::LeastSquaresMc,
            horizon,
            envelope,
            value,
            value_se: Some(se),
            tau: StoppingSolution::tau_from_distribution(&dist),
            tau_distribution: dist,
            warnings,
        },
        rule,
    ))
}

/// Fits on `train` and reports the value of the fitted rule on `holdout`.
pub fn lsmc_with_holdout(train: &[Vec<f64>], holdout: &[Vec<f64>], opts: &LsmcOptions) -> Result<StoppingSolution> {
    let (mut sol, rule) = backward_induction_lsmc(train, opts)?;
    check_paths(holdout, sol.horizon)?;
    let (value, se, dist) = rule.evaluate(holdout);
    sol.value = value;
    sol.value_se = Some(se);
    sol.tau = StoppingSolution::tau_from_distribution(&dist);
    sol.tau_distribution = dist;
    Ok(sol)
}
