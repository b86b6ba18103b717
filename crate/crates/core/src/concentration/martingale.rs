use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bounds::{mgale_bound, BoundKind, BoundReport};
use super::convex::{convex_order_check, ConvexOptions, ConvexOrderReport, OrderVerdict};
use super::tail::{distance, euclidean, mean_vector, TailEstimate};
use crate::error::{Error, Result};
use crate::rng::{stream, tags};

/// Convex-order result for the pair `(j, l)`, `j < l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub j: usize,
    pub l: usize,
    pub report: ConvexOrderReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeCheck {
    pub verdict: OrderVerdict,
    pub pairs: Vec<PairCheck>,
}

impl GradeCheck {
    fn from_pairs(pairs: Vec<PairCheck>) -> Self {
        let falsified = pairs.iter().any(|p| p.report.falsified());
        Self {
            verdict: if falsified {
                OrderVerdict::Falsified
            } else {
                OrderVerdict::NotFalsified
            },
            pairs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    /// Consecutive pairs only.
    pub very_weak: GradeCheck,
    /// All pairs `j < l`.
    pub weak: GradeCheck,
    /// Largest observed increment norm, a plug-in for `M`.
    pub m_estimate: f64,
    /// `max_l ‖mean of the sample − supplied centre‖₂` when centring was used.
    pub plug_in_error: Option<f64>,
}

/// Checks the very-weak and weak martingale conditions by convex order.
///
/// `trajectories[run][layer]` must share one width. With `centers`, each
/// layer is shifted by `centers[layer]` first (the `Z` sequence).
pub fn martingale_grade_check(
    trajectories: &[Vec<Vec<f64>>],
    centers: Option<&[Vec<f64>]>,
    opts: &ConvexOptions,
) -> Result<MartingaleReport> {
    let first = trajectories.first().ok_or(Error::EmptySample)?;
    let layers = first.len();
    if layers < 2 {
        return Err(Error::InvalidArgument("need at least two layers".into()));
    }
    let width = first[0].len();
    for run in trajectories {
        if run.len() != layers {
            return Err(Error::DimensionMismatch {
                context: "trajectory length",
                expected: layers,
                got: run.len(),
            });
        }
        if let Some(v) = run.iter().find(|v| v.len() != width) {
            return Err(Error::InvalidSpec {
                path: "trajectories".into(),
                reason: format!("width must be constant across layers: {} != {width}", v.len()),
            });
        }
    }
    let mut by_layer: Vec<Vec<Vec<f64>>> = (0..layers)
        .map(|l| trajectories.iter().map(|r| r[l].clone()).collect())
        .collect();
    let mut plug_in_error = None;
    if let Some(c) = centers {
        if c.len() != layers {
            return Err(Error::DimensionMismatch {
                context: "centres",
                expected: layers,
                got: c.len(),
            });
        }
        let mut err: f64 = 0.0;
        for (samples, centre) in by_layer.iter_mut().zip(c) {
            err = err.max(distance(&mean_vector(samples)?, centre));
            for s in samples.iter_mut() {
                for (x, m) in s.iter_mut().zip(centre) {
                    *x -= m;
                }
            }
        }
        plug_in_error = Some(err);
    }
    let mut consecutive = Vec::new();
    let mut all = Vec::new();
    for l in 1..layers {
        for j in 0..l {
            let report = convex_order_check(&by_layer[j], &by_layer[l], opts)?;
            let check = PairCheck { j, l, report };
            if j + 1 == l {
                consecutive.push(check.clone());
            }
            all.push(check);
        }
    }
    let m_estimate = trajectories
        .iter()
        .flat_map(|r| r.windows(2).map(|w| distance(&w[1], &w[0])))
        .fold(0.0, f64::max);
    Ok(MartingaleReport {
        very_weak: GradeCheck::from_pairs(consecutive),
        weak: GradeCheck::from_pairs(all),
        m_estimate,
        plug_in_error,
    })
}

/// `runs` walks of `steps` steps from the origin in `ℝ^dim`, each coordinate
/// moving by ±1 per step. Layout `[run][step]`, step 0 is the origin.
pub fn random_walks(runs: usize, steps: usize, dim: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    (0..runs as u64)
        .map(|i| {
            let mut rng = stream(seed, tags::RANDOM_WALK, i);
            let mut pos = vec![0.0; dim];
            let mut path = Vec::with_capacity(steps + 1);
            path.push(pos.clone());
            for _ in 0..steps {
                for p in pos.iter_mut() {
                    *p += if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
                path.push(pos.clone());
            }
            path
        })
        .collect()
}

/// Martingale-bound reports `P(‖ν^(l)‖₂ ≥ Ma)` for every layer `1..` of the
/// trajectories and every `a` in `a_grid`.
pub fn martingale_bound_reports(trajectories: &[Vec<Vec<f64>>], m: f64, a_grid: &[f64]) -> Result<Vec<BoundReport>> {
    let layers = trajectories.first().ok_or(Error::EmptySample)?.len();
    let n = trajectories.len();
    let mut out = Vec::new();
    for l in 1..layers {
        for &a in a_grid {
            let hits = trajectories.iter().filter(|r| euclidean(&r[l]) >= m * a).count();
            let est = TailEstimate::from_count(hits, n);
            out.push(BoundReport::new(
                BoundKind::Martingale,
                Some(l),
                m * a,
                [("M", m), ("a", a)],
                mgale_bound(a, m, l as u64)?,
                est.p,
                est.se,
                n,
            ));
        }
    }
    Ok(out)
}
