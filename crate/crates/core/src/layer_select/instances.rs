use rand::seq::index::sample;
use rand::Rng;

use super::oracle::rule_count;
use super::process::{FiniteSupportProcess, WeightedPath};

/// Values are drawn from `{0, 0.5, …, 3}`, so ties between stopping and
/// continuing are common.
const GRID: [f64; 7] = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

/// Random Markov chain with horizon in `1..=max_horizon` and `1..=max_support`
/// states per stage. States of one stage carry distinct values, so the
/// chain is Markov in `γ` itself. Instances with more than `rule_limit`
/// stopping rules are redrawn.
pub fn random_markov_instance(
    rng: &mut impl Rng,
    max_horizon: usize,
    max_support: usize,
    rule_limit: u128,
) -> FiniteSupportProcess {
    loop {
        let horizon = rng.random_range(1..=max_horizon);
        let support: Vec<usize> = (0..horizon).map(|_| rng.random_range(1..=max_support.min(GRID.len()))).collect();
        let values: Vec<Vec<f64>> = support
            .iter()
            .map(|s| sample(rng, GRID.len(), *s).into_iter().map(|i| GRID[i]).collect())
            .collect();
        let mut weights = |n: usize| -> Vec<f64> {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(1..=4) as f64).collect();
            let t: f64 = w.iter().sum();
            w.into_iter().map(|x| x / t).collect()
        };
        let init = weights(support[0]);
        let trans: Vec<Vec<Vec<f64>>> = (1..horizon)
            .map(|k| (0..support[k - 1]).map(|_| weights(support[k])).collect())
            .collect();
        let mut paths: Vec<(Vec<usize>, f64)> = (0..support[0]).map(|s| (vec![s], init[s])).collect();
        for k in 1..horizon {
            paths = paths
                .into_iter()
                .flat_map(|(states, p)| {
                    let last = *states.last().expect("nonempty");
                    let row = trans[k - 1][last].clone();
                    row.into_iter().enumerate().map(move |(s, q)| {
                        let mut st = states.clone();
                        st.push(s);
                        (st, p * q)
                    })
                })
                .collect();
        }
        let total: f64 = paths.iter().map(|p| p.1).sum();
        let weighted = paths
            .into_iter()
            .map(|(states, p)| WeightedPath {
                gamma: states.iter().enumerate().map(|(k, s)| values[k][*s]).collect(),
                p: p / total,
            })
            .collect();
        let process = FiniteSupportProcess::from_paths(weighted).expect("generated law is valid");
        if rule_count(&process) <= rule_limit {
            return process;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer_select::DEFAULT_RULE_LIMIT;
    use crate::rng::stream;

    #[test]
    fn instances_respect_limits() {
        let mut rng = stream(0, "test.instances", 0);
        for _ in 0..50 {
            let p = random_markov_instance(&mut rng, 6, 3, DEFAULT_RULE_LIMIT);
            assert!((1..=6).contains(&p.horizon()));
            assert!(rule_count(&p) <= DEFAULT_RULE_LIMIT);
            let total: f64 = p.paths().iter().map(|w| w.p).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
