use super::process::FiniteSupportProcess;
use super::stopping::{attains, Method, StoppingSolution, EPS_EXACT};

/// Exact backward induction with node-level detail.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub solution: StoppingSolution,
    /// `S` at each node.
    pub snell: Vec<f64>,
    /// Whether the rule stops at each node.
    pub stop: Vec<bool>,
    /// `τ₁` on each leaf, in [`FiniteSupportProcess::leaves`] order.
    pub leaf_tau: Vec<usize>,
}

/// `S = max{γ, E[S_next | node]}` on every atom, base case `S = γ` at the
/// horizon; the rule stops at the first atom where `S = γ`.
pub fn backward_induction_exact(process: &FiniteSupportProcess) -> ExactSolution {
    backward_induction_exact_eps(process, EPS_EXACT)
}

pub fn backward_induction_exact_eps(process: &FiniteSupportProcess, eps: f64) -> ExactSolution {
    let nodes = process.nodes();
    let horizon = process.horizon();
    let mut snell = vec![0.0; nodes.len()];
    // Children are created after parents, so reverse id order is bottom-up.
    for id in (0..nodes.len()).rev() {
        let n = &nodes[id];
        snell[id] = if n.children.is_empty() {
            n.gamma
        } else {
            let cont: f64 = n.children.iter().map(|c| nodes[*c].cond_prob * snell[*c]).sum();
            n.gamma.max(cont)
        };
    }
    let stop: Vec<bool> = (0..nodes.len()).map(|i| attains(snell[i], nodes[i].gamma, eps)).collect();
    let leaves = process.leaves();
    let mut tau_distribution = vec![0.0; horizon];
    let mut leaf_tau = Vec::with_capacity(leaves.len());
    for &leaf in &leaves {
        let tau = process
            .path_to(leaf)
            .into_iter()
            .find(|n| stop[*n])
            .map_or(horizon, |n| nodes[n].stage);
        tau_distribution[tau - 1] += nodes[leaf].prob;
        leaf_tau.push(tau);
    }
    let mut envelope = vec![0.0; horizon];
    for (i, n) in nodes.iter().enumerate() {
        envelope[n.stage - 1] += n.prob * snell[i];
    }
    let value = process.roots().iter().map(|r| nodes[*r].prob * snell[*r]).sum();
    ExactSolution {
        solution: StoppingSolution {
            method: Method::ExactFiniteSupport,
            horizon,
            envelope,
            value,
            value_se: None,
            tau: StoppingSolution::tau_from_distribution(&tau_distribution),
            tau_distribution,
            warnings: Vec::new(),
        },
        snell,
        stop,
        leaf_tau,
    }
}

/// `E[S_{k∧τ}]` for `k = 1..=𝓛`; constant in `k` for the optimal rule.
pub fn stopped_envelope_means(process: &FiniteSupportProcess, exact: &ExactSolution) -> Vec<f64> {
    let horizon = process.horizon();
    let mut means = vec![0.0; horizon];
    for (leaf, &tau) in process.leaves().into_iter().zip(&exact.leaf_tau) {
        let path = process.path_to(leaf);
        let p = process.nodes()[leaf].prob;
        for (k, m) in means.iter_mut().enumerate() {
            *m += p * exact.snell[path[k.min(tau - 1)]];
        }
    }
    means
}

/// Expected reward of the rule stopping at `leaf_tau` on each leaf.
pub fn rule_value(process: &FiniteSupportProcess, leaf_tau: &[usize]) -> f64 {
    process
        .leaves()
        .into_iter()
        .zip(leaf_tau)
        .map(|(leaf, &tau)| {
            let path = process.path_to(leaf);
            process.nodes()[leaf].prob * process.nodes()[path[tau - 1]].gamma
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deterministic_examples() {
        let e = backward_induction_exact(&FiniteSupportProcess::deterministic(&[1.0, 3.0]).unwrap());
        assert_eq!(e.solution.envelope, vec![3.0, 3.0]);
        assert_eq!((e.solution.tau, e.solution.value), (Some(2), 3.0));
        let e = backward_induction_exact(&FiniteSupportProcess::deterministic(&[5.0, 3.0]).unwrap());
        assert_eq!((e.solution.tau, e.solution.value), (Some(1), 5.0));
    }

    #[test]
    fn iid_two_point_by_hand() {
        // Stop at the first 1; otherwise take the last draw.
        let p = FiniteSupportProcess::iid(&[(0.0, 0.5), (1.0, 0.5)], 4).unwrap();
        let e = backward_induction_exact(&p);
        assert_relative_eq!(e.solution.value, 1.0 - 0.5f64.powi(4), max_relative = 1e-15);
        assert_eq!(e.solution.tau_distribution, vec![0.5, 0.25, 0.125, 0.125]);
        let means = stopped_envelope_means(&p, &e);
        for m in &means {
            assert_relative_eq!(*m, e.solution.value, max_relative = 1e-12);
        }
        assert_relative_eq!(rule_value(&p, &e.leaf_tau), e.solution.value, max_relative = 1e-12);
    }

    #[test]
    fn envelope_dominates_and_matches_at_horizon() {
        let p = FiniteSupportProcess::iid(&[(0.0, 0.3), (2.0, 0.2), (1.0, 0.5)], 4).unwrap();
        let e = backward_induction_exact(&p);
        for (i, n) in p.nodes().iter().enumerate() {
            assert!(e.snell[i] >= n.gamma);
            if n.stage == 4 {
                assert_eq!(e.snell[i], n.gamma);
            }
        }
    }
}
