use serde::{Deserialize, Serialize};

use super::process::FiniteSupportProcess;
use crate::error::{Error, Result};

/// Default cap on the number of enumerated rules.
pub const DEFAULT_RULE_LIMIT: u128 = 500_000;

/// Tolerance for calling a rule optimal.
const OPTIMAL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    /// Every optimal rule as `τ` per leaf.
    pub optimal_rules: Vec<Vec<usize>>,
    /// Pointwise minimum of the optimal rules.
    pub earliest: Vec<usize>,
    pub rules_enumerated: u128,
}

/// Number of distinct stopping rules: at a leaf one, elsewhere "stop here"
/// plus every combination of rules below.
pub fn rule_count(process: &FiniteSupportProcess) -> u128 {
    let nodes = process.nodes();
    let mut count = vec![1u128; nodes.len()];
    for id in (0..nodes.len()).rev() {
        if !nodes[id].children.is_empty() {
            count[id] = nodes[id]
                .children
                .iter()
                .fold(1u128, |acc, c| acc.saturating_mul(count[*c]))
                .saturating_add(1);
        }
    }
    process.roots().iter().fold(1u128, |acc, r| acc.saturating_mul(count[*r]))
}

/// Enumerates every stopping rule adapted to the prefix filtration and
/// evaluates it exactly.
pub fn exhaustive_stopping_oracle(process: &FiniteSupportProcess, limit: u128) -> Result<OracleResult> {
    let total = rule_count(process);
    if total > limit {
        return Err(Error::StateExplosion { count: total, limit });
    }
    let rules = combine(process, process.roots());
    let value = rules.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let tol = OPTIMAL_TOLERANCE * value.abs().max(1.0);
    let optimal_rules: Vec<Vec<usize>> = rules
        .into_iter()
        .filter(|r| r.0 >= value - tol)
        .map(|r| r.1.into_iter().map(usize::from).collect())
        .collect();
    let mut earliest = optimal_rules[0].clone();
    for r in &optimal_rules[1..] {
        for (e, t) in earliest.iter_mut().zip(r) {
            *e = (*e).min(*t);
        }
    }
    Ok(OracleResult {
        value,
        optimal_rules,
        earliest,
        rules_enumerated: total,
    })
}

type Rule = (f64, Vec<u8>);

/// All rules on the subtrees of `ids`, as (contribution to `E[γ^τ]`, τ per leaf).
fn combine(process: &FiniteSupportProcess, ids: &[usize]) -> Vec<Rule> {
    let mut acc: Vec<Rule> = vec![(0.0, Vec::new())];
    for &id in ids {
        let sub = rules_at(process, id);
        let mut next = Vec::with_capacity(acc.len() * sub.len());
        for (v1, t1) in &acc {
            for (v2, t2) in &sub {
                let mut t = t1.clone();
                t.extend_from_slice(t2);
                next.push((v1 + v2, t));
            }
        }
        acc = next;
    }
    acc
}

fn rules_at(process: &FiniteSupportProcess, id: usize) -> Vec<Rule> {
    let n = &process.nodes()[id];
    let leaves = leaf_count(process, id);
    let stop = (n.prob * n.gamma, vec![n.stage as u8; leaves]);
    if n.children.is_empty() {
        return vec![stop];
    }
    let mut out = combine(process, &n.children);
    out.insert(0, stop);
    out
}

fn leaf_count(process: &FiniteSupportProcess, id: usize) -> usize {
    let n = &process.nodes()[id];
    if n.children.is_empty() {
        1
    } else {
        n.children.iter().map(|c| leaf_count(process, *c)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layer_select::{backward_induction_exact, rule_value};
    use approx::assert_relative_eq;

    #[test]
    fn small_examples() {
        let p = FiniteSupportProcess::from_paths(vec![
            super::super::process::WeightedPath { gamma: vec![1.0], p: 0.25 },
            super::super::process::WeightedPath { gamma: vec![3.0], p: 0.75 },
        ])
        .unwrap();
        let o = exhaustive_stopping_oracle(&p, DEFAULT_RULE_LIMIT).unwrap();
        assert_eq!(o.value, 2.5);
        assert_eq!(o.earliest, vec![1, 1]);
        let p = FiniteSupportProcess::deterministic(&[1.0, 3.0]).unwrap();
        let o = exhaustive_stopping_oracle(&p, DEFAULT_RULE_LIMIT).unwrap();
        assert_eq!((o.value, o.earliest.clone()), (3.0, vec![2]));
        assert_eq!(o.rules_enumerated, 2);
    }

    #[test]
    fn iid_two_point_matches_induction() {
        let p = FiniteSupportProcess::iid(&[(0.0, 0.5), (1.0, 0.5)], 4).unwrap();
        assert_eq!(rule_count(&p), 26 * 26);
        let o = exhaustive_stopping_oracle(&p, DEFAULT_RULE_LIMIT).unwrap();
        let e = backward_induction_exact(&p);
        assert_relative_eq!(o.value, e.solution.value, max_relative = 1e-12);
        assert_eq!(o.earliest, e.leaf_tau);
        assert_relative_eq!(rule_value(&p, &o.earliest), o.value, max_relative = 1e-12);
        let mut dist = vec![0.0; 4];
        for (leaf, t) in p.leaves().into_iter().zip(&o.earliest) {
            dist[t - 1] += p.nodes()[leaf].prob;
        }
        assert_eq!(dist, e.solution.tau_distribution);
    }

    #[test]
    fn guard_trips() {
        let p = FiniteSupportProcess::iid(&[(0.0, 0.5), (1.0, 0.5)], 6).unwrap();
        assert!(matches!(
            exhaustive_stopping_oracle(&p, DEFAULT_RULE_LIMIT),
            Err(Error::StateExplosion { .. })
        ));
    }
}
