use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of history atoms accepted.
pub const MAX_ATOMS: usize = 100_000;

const PROB_TOLERANCE: f64 = 1e-9;

/// One atom of the natural filtration: a realized prefix `γ^(1..=stage)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub stage: usize,
    pub gamma: f64,
    /// `P(node | parent)`.
    pub cond_prob: f64,
    /// `P(node)`.
    pub prob: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPath {
    pub gamma: Vec<f64>,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ProcessJson {
    paths: Vec<WeightedPath>,
}

/// A `γ` process with finitely many trajectories, stored as the tree of
/// distinct prefixes. Paths sharing a prefix share its nodes, so a node is
/// exactly an atom of `σ(γ^(1), …, γ^(L))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessJson", into = "ProcessJson")]
pub struct FiniteSupportProcess {
    horizon: usize,
    nodes: Vec<Node>,
    roots: Vec<usize>,
}

impl TryFrom<ProcessJson> for FiniteSupportProcess {
    type Error = Error;
    fn try_from(j: ProcessJson) -> Result<Self> {
        FiniteSupportProcess::from_paths(j.paths)
    }
}

impl From<FiniteSupportProcess> for ProcessJson {
    fn from(p: FiniteSupportProcess) -> Self {
        ProcessJson { paths: p.paths() }
    }
}

impl FiniteSupportProcess {
    /// Builds the prefix tree. Probabilities must be positive and sum to 1.
    pub fn from_paths(paths: Vec<WeightedPath>) -> Result<Self> {
        let horizon = paths.first().map(|p| p.gamma.len()).ok_or(Error::EmptySample)?;
        if horizon == 0 {
            return Err(Error::spec("process.paths", "paths must be nonempty"));
        }
        let mut total = 0.0;
        for (i, p) in paths.iter().enumerate() {
            if p.gamma.len() != horizon {
                return Err(Error::spec(format!("process.paths[{i}]"), "all paths need the same length"));
            }
            if !(p.p > 0.0) || !p.p.is_finite() {
                return Err(Error::spec(format!("process.paths[{i}].p"), "probabilities must be positive"));
            }
            if p.gamma.iter().any(|g| !g.is_finite()) {
                return Err(Error::NotIntegrable(format!("path {i} has a non-finite value")));
            }
            total += p.p;
        }
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::spec("process.paths", format!("probabilities sum to {total}, not 1")));
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut roots: Vec<usize> = Vec::new();
        for path in &paths {
            let mut parent: Option<usize> = None;
            for (k, &g) in path.gamma.iter().enumerate() {
                let siblings = match parent {
                    None => &roots,
                    Some(p) => &nodes[p].children,
                };
                let found = siblings.iter().copied().find(|&c| nodes[c].gamma == g);
                let id = match found {
                    Some(id) => id,
                    None => {
                        let id = nodes.len();
                        if id >= MAX_ATOMS {
                            return Err(Error::StateExplosion {
                                count: id as u128 + 1,
                                limit: MAX_ATOMS as u128,
                            });
                        }
                        nodes.push(Node {
                            stage: k + 1,
                            gamma: g,
                            cond_prob: 0.0,
                            prob: 0.0,
                            parent,
                            children: Vec::new(),
                        });
                        match parent {
                            None => roots.push(id),
                            Some(p) => nodes[p].children.push(id),
                        }
                        id
                    }
                };
                nodes[id].prob += path.p / total;
                parent = Some(id);
            }
        }
        for i in 0..nodes.len() {
            let base = nodes[i].parent.map_or(1.0, |p| nodes[p].prob);
            nodes[i].cond_prob = nodes[i].prob / base;
        }
        Ok(Self { horizon, nodes, roots })
    }

    /// Iid stages with the given `(value, probability)` law.
    pub fn iid(law: &[(f64, f64)], horizon: usize) -> Result<Self> {
        let mut paths = vec![WeightedPath { gamma: vec![], p: 1.0 }];
        for _ in 0..horizon {
            paths = paths
                .into_iter()
                .flat_map(|wp| {
                    law.iter().map(move |(v, q)| {
                        let mut g = wp.gamma.clone();
                        g.push(*v);
                        WeightedPath { gamma: g, p: wp.p * q }
                    })
                })
                .collect();
        }
        Self::from_paths(paths)
    }

    /// A single trajectory with probability one.
    pub fn deterministic(gamma: &[f64]) -> Result<Self> {
        Self::from_paths(vec![WeightedPath {
            gamma: gamma.to_vec(),
            p: 1.0,
        }])
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.roots.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            if self.nodes[n].children.is_empty() {
                out.push(n);
            } else {
                stack.extend(self.nodes[n].children.iter().rev());
            }
        }
        out
    }

    /// Node ids from the root down to `leaf`.
    pub fn path_to(&self, leaf: usize) -> Vec<usize> {
        let mut path = vec![leaf];
        while let Some(p) = self.nodes[*path.last().expect("nonempty")].parent {
            path.push(p);
        }
        path.reverse();
        path
    }

    /// Distinct trajectories with their probabilities.
    pub fn paths(&self) -> Vec<WeightedPath> {
        self.leaves()
            .into_iter()
            .map(|leaf| WeightedPath {
                gamma: self.path_to(leaf).iter().map(|n| self.nodes[*n].gamma).collect(),
                p: self.nodes[leaf].prob,
            })
            .collect()
    }

    /// Draws one trajectory.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.horizon);
        let mut level = &self.roots;
        loop {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = *level.last().expect("nonempty level");
            for &c in level {
                acc += self.nodes[c].cond_prob;
                if u < acc {
                    pick = c;
                    break;
                }
            }
            out.push(self.nodes[pick].gamma);
            if self.nodes[pick].children.is_empty() {
                return out;
            }
            level = &self.nodes[pick].children;
        }
    }

    /// `sup |γ|` over the support.
    pub fn sup_abs(&self) -> f64 {
        self.nodes.iter().map(|n| n.gamma.abs()).fold(0.0, f64::max)
    }

    /// Multiplies every value by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for n in &mut out.nodes {
            n.gamma *= k;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn prefixes_are_merged() {
        let p = FiniteSupportProcess::from_paths(vec![
            WeightedPath { gamma: vec![1.0, 2.0], p: 0.25 },
            WeightedPath { gamma: vec![1.0, 3.0], p: 0.25 },
            WeightedPath { gamma: vec![0.0, 2.0], p: 0.5 },
        ])
        .unwrap();
        assert_eq!(p.roots().len(), 2);
        assert_eq!(p.nodes().len(), 5);
        let first = &p.nodes()[p.roots()[0]];
        assert_eq!(first.prob, 0.5);
        assert_eq!(p.nodes()[first.children[0]].cond_prob, 0.5);
        let json = serde_json::to_string(&p).unwrap();
        let back: FiniteSupportProcess = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let bad = |p: f64| {
            FiniteSupportProcess::from_paths(vec![
                WeightedPath { gamma: vec![1.0], p },
                WeightedPath { gamma: vec![2.0], p: 1.0 - p },
            ])
        };
        assert!(bad(0.0).is_err());
        assert!(bad(-0.1).is_err());
        assert!(FiniteSupportProcess::from_paths(vec![WeightedPath { gamma: vec![1.0], p: 0.5 }]).is_err());
    }

    #[test]
    fn iid_two_point() {
        let p = FiniteSupportProcess::iid(&[(0.0, 0.5), (1.0, 0.5)], 4).unwrap();
        assert_eq!(p.leaves().len(), 16);
        assert_eq!(p.nodes().len(), 2 + 4 + 8 + 16);
        let mut rng = stream(0, "test.process", 0);
        let mean: f64 = (0..4000).map(|_| p.sample(&mut rng)[3]).sum::<f64>() / 4000.0;
        assert!((mean - 0.5).abs() < 0.05);
    }
}
