use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::backward_induction_exact;
use super::gamma::{gamma_value, log_over_sqrt, loss_mse, GammaSpec, ProcessSpec};
use super::lsmc::{backward_induction_lsmc, lsmc_with_holdout, LsmcOptions};
use super::process::{FiniteSupportProcess, WeightedPath};
use super::shape::{check_local_monotonicity, ShapeReport};
use super::stopping::{solve_deterministic, Method, StoppingSolution, EPS_EXACT};
use crate::error::{Error, Result};
use crate::rng::{pair_index, stream, tags};
use crate::sdnn::{propagate_nu, sample_input_tagged, sample_network_tagged, NetworkSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectMethod {
    #[default]
    Exact,
    Lsmc,
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectOptions {
    #[serde(default)]
    pub method: SelectMethod,
    #[serde(default)]
    pub seed: u64,
    /// Training trajectories for regression.
    #[serde(default = "default_paths")]
    pub paths: usize,
    /// Held-out trajectories for the reported value.
    #[serde(default = "default_paths")]
    pub holdout: usize,
    #[serde(default)]
    pub lsmc: LsmcOptions,
}

fn default_paths() -> usize {
    10_000
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            method: SelectMethod::default(),
            seed: 0,
            paths: default_paths(),
            holdout: default_paths(),
            lsmc: LsmcOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub solution: StoppingSolution,
    /// Shape of `γ`, or of its mean for random processes.
    pub shape: Option<ShapeReport>,
    /// Fraction of simulated runs whose loss never increases with depth.
    pub deeper_better_rate: Option<f64>,
}

/// Picks the number of layers by optimal stopping of `γ`.
pub fn select_layers(spec: &GammaSpec, opts: &SelectOptions) -> Result<Selection> {
    spec.validate("gamma")?;
    match &spec.process {
        ProcessSpec::LogOverSqrt => deterministic(log_over_sqrt(spec.horizon)),
        ProcessSpec::DeterministicLoss { losses } => {
            let mut gamma = Vec::with_capacity(losses.len());
            for (k, loss) in losses.iter().enumerate() {
                match gamma_value(spec.utility, spec.penalty, k + 1, *loss) {
                    Ok(g) => gamma.push(g),
                    Err(Error::InfiniteUtility { layer }) => return Ok(perfect_fit(spec.horizon, layer)),
                    Err(e) => return Err(e),
                }
            }
            deterministic(gamma)
        }
        ProcessSpec::Paths { paths } => {
            if paths.len() == 1 {
                return deterministic(paths[0].clone());
            }
            let shape = Some(check_local_monotonicity(&column_means(paths)));
            let solution = match opts.method {
                SelectMethod::Lsmc => backward_induction_lsmc(paths, &opts.lsmc)?.0,
                SelectMethod::Exact => {
                    let p = 1.0 / paths.len() as f64;
                    let weighted = paths.iter().map(|g| WeightedPath { gamma: g.clone(), p }).collect();
                    backward_induction_exact(&FiniteSupportProcess::from_paths(weighted)?).solution
                }
                SelectMethod::Deterministic => return Err(needs_single_path()),
            };
            Ok(Selection {
                solution,
                shape,
                deeper_better_rate: None,
            })
        }
        ProcessSpec::FiniteSupport { process } => {
            if !process.sup_abs().is_finite() {
                return Err(Error::NotIntegrable("unbounded reward".into()));
            }
            let mean: Vec<f64> = {
                let mut m = vec![0.0; process.horizon()];
                for n in process.nodes() {
                    m[n.stage - 1] += n.prob * n.gamma;
                }
                m
            };
            let solution = match opts.method {
                SelectMethod::Exact => backward_induction_exact(process).solution,
                SelectMethod::Lsmc => {
                    let draw = |tag: &str, n: usize| -> Vec<Vec<f64>> {
                        (0..n as u64).map(|i| process.sample(&mut stream(opts.seed, tag, i))).collect()
                    };
                    let train = draw(tags::GAMMA_PATHS, opts.paths);
                    let hold = draw(tags::GAMMA_HOLDOUT, opts.holdout);
                    lsmc_with_holdout(&train, &hold, &opts.lsmc)?
                }
                SelectMethod::Deterministic => {
                    if process.leaves().len() != 1 {
                        return Err(needs_single_path());
                    }
                    solve_deterministic(&process.paths()[0].gamma, EPS_EXACT)?
                }
            };
            Ok(Selection {
                solution,
                shape: Some(check_local_monotonicity(&mean)),
                deeper_better_rate: None,
            })
        }
        ProcessSpec::Network { network, y_star } => {
            if opts.method != SelectMethod::Lsmc {
                return Err(Error::InvalidArgument(
                    "network-simulated rewards need the lsmc method".into(),
                ));
            }
            let train = network_gamma(spec, network, y_star, opts.seed, tags::GAMMA_PATHS, opts.paths)?;
            let hold = network_gamma(spec, network, y_star, opts.seed, tags::GAMMA_HOLDOUT, opts.holdout)?;
            let gammas: Vec<Vec<f64>> = train.iter().map(|r| r.gamma.clone()).collect();
            let holds: Vec<Vec<f64>> = hold.iter().map(|r| r.gamma.clone()).collect();
            let solution = lsmc_with_holdout(&gammas, &holds, &opts.lsmc)?;
            let better = train.iter().filter(|r| r.deeper_better).count() as f64 / train.len() as f64;
            Ok(Selection {
                solution,
                shape: Some(check_local_monotonicity(&column_means(&gammas))),
                deeper_better_rate: Some(better),
            })
        }
    }
}

fn needs_single_path() -> Error {
    Error::InvalidArgument("the deterministic method needs a single trajectory".into())
}

fn deterministic(gamma: Vec<f64>) -> Result<Selection> {
    let shape = check_local_monotonicity(&gamma);
    Ok(Selection {
        solution: solve_deterministic(&gamma, EPS_EXACT)?,
        shape: Some(shape),
        deeper_better_rate: None,
    })
}

fn perfect_fit(horizon: usize, layer: usize) -> Selection {
    let mut dist = vec![0.0; horizon];
    dist[layer - 1] = 1.0;
    Selection {
        solution: StoppingSolution {
            method: Method::Deterministic,
            horizon,
            envelope: vec![f64::INFINITY; layer].into_iter().chain(vec![f64::NAN; horizon - layer]).collect(),
            value: f64::INFINITY,
            value_se: None,
            tau: Some(layer),
            tau_distribution: dist,
            warnings: vec![format!("loss is zero at layer {layer}; selection stops there")],
        },
        shape: None,
        deeper_better_rate: None,
    }
}

fn column_means(paths: &[Vec<f64>]) -> Vec<f64> {
    let h = paths[0].len();
    (0..h).map(|k| paths.iter().map(|p| p[k]).sum::<f64>() / paths.len() as f64).collect()
}

/// One simulated reward trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaRun {
    pub losses: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Losses never increase with depth.
    pub deeper_better: bool,
}

/// `γ` trajectories from nested prefixes of one network draw per run, so
/// the `L`-layer net is the first `L` layers of the `𝓛`-layer net.
pub fn network_gamma(
    spec: &GammaSpec,
    network: &NetworkSpec,
    y_star: &[f64],
    seed: u64,
    tag: &str,
    n: usize,
) -> Result<Vec<GammaRun>> {
    spec.validate("gamma")?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_input_tagged(network, seed, tag, pair_index(0, i));
            let sample = sample_network_tagged(network, seed, tag, pair_index(1, i))?;
            let nu = propagate_nu(&sample, &x)?;
            let losses = nu[1..].iter().map(|v| loss_mse(v, y_star)).collect::<Result<Vec<_>>>()?;
            let gamma = losses
                .iter()
                .enumerate()
                .map(|(k, l)| gamma_value(spec.utility, spec.penalty, k + 1, *l))
                .collect::<Result<Vec<_>>>()?;
            if gamma.iter().any(|g| !g.is_finite()) {
                return Err(Error::NotIntegrable(format!("run {i} has a non-finite reward")));
            }
            let deeper_better = losses.windows(2).all(|w| w[1] <= w[0]);
            Ok(GammaRun {
                losses,
                gamma,
                deeper_better,
            })
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer_select::{Penalty, Utility};
    use crate::sdnn::NetworkSpec;

    #[test]
    fn log_over_sqrt_selects_seven() {
        let s = select_layers(&GammaSpec::log_over_sqrt(1000), &SelectOptions::default()).unwrap();
        assert_eq!(s.solution.tau, Some(7));
        assert_eq!(s.shape.unwrap().peak, 7);
    }

    #[test]
    fn constant_gamma_stops_immediately() {
        let spec = GammaSpec {
            horizon: 5,
            utility: Utility::Identity,
            penalty: Penalty::None,
            process: ProcessSpec::DeterministicLoss { losses: vec![2.0; 5] },
        };
        assert_eq!(select_layers(&spec, &SelectOptions::default()).unwrap().solution.tau, Some(1));
    }

    #[test]
    fn zero_loss_short_circuits() {
        let spec = GammaSpec {
            horizon: 4,
            utility: Utility::Reciprocal,
            penalty: Penalty::default(),
            process: ProcessSpec::DeterministicLoss {
                losses: vec![1.0, 0.5, 0.0, 0.2],
            },
        };
        let s = select_layers(&spec, &SelectOptions::default()).unwrap();
        assert_eq!(s.solution.tau, Some(3));
        assert_eq!(s.solution.warnings.len(), 1);
    }

    #[test]
    fn network_rewards() {
        let net = NetworkSpec::uniform(vec![2, 2, 2, 2, 2], 1, 0.5);
        let spec = GammaSpec {
            horizon: 4,
            utility: Utility::Reciprocal,
            penalty: Penalty::default(),
            process: ProcessSpec::Network {
                network: net,
                y_star: vec![0.5, 0.5],
            },
        };
        let opts = SelectOptions {
            method: SelectMethod::Lsmc,
            paths: 2000,
            holdout: 2000,
            ..SelectOptions::default()
        };
        let s = select_layers(&spec, &opts).unwrap();
        let rate = s.deeper_better_rate.unwrap();
        assert!((0.0..=1.0).contains(&rate));
        assert!(s.solution.tau_distribution.iter().sum::<f64>() > 0.999);
        let again = select_layers(&spec, &opts).unwrap();
        assert_eq!(s, again);
        let exact = SelectOptions::default();
        assert!(select_layers(&spec, &exact).is_err());
    }

    #[test]
    fn empirical_paths_exact_and_lsmc() {
        let mut paths = Vec::new();
        for i in 0..2000 {
            paths.push(if i % 2 == 0 { vec![1.0, 2.0, 0.0] } else { vec![0.0, 0.5, 3.0] });
        }
        let spec = GammaSpec {
            horizon: 3,
            utility: Utility::Identity,
            penalty: Penalty::None,
            process: ProcessSpec::Paths { paths },
        };
        let exact = select_layers(&spec, &SelectOptions::default()).unwrap();
        assert!((exact.solution.value - 2.5).abs() < 1e-12);
        let lsmc = select_layers(
            &spec,
            &SelectOptions {
                method: SelectMethod::Lsmc,
                ..SelectOptions::default()
            },
        )
        .unwrap();
        assert!((lsmc.solution.value - 2.5).abs() < 1e-12);
    }
}
