use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::tail::distance;
use crate::error::{Error, Result};
use crate::rng::{stream, tags};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexOptions {
    /// Members per randomized sub-family.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Family-wise level; each test runs at `alpha / m`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Seed of the randomized sub-families.
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    8
}

fn default_alpha() -> f64 {
    0.01
}

impl Default for ConvexOptions {
    fn default() -> Self {
        Self {
            k: default_k(),
            alpha: default_alpha(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderVerdict {
    Falsified,
    NotFalsified,
}

/// Outcome for one test function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub mean1: f64,
    pub mean2: f64,
    /// Welch statistic for `E φ(X₁) − E φ(X₂)`.
    pub z: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexOrderReport {
    pub verdict: OrderVerdict,
    /// Test function with the largest statistic.
    pub worst: TestOutcome,
    /// Family size `m`.
    pub tests: usize,
    pub alpha: f64,
    /// Per-test critical value `z_{1−α/m}`.
    pub critical: f64,
}

impl ConvexOrderReport {
    pub fn falsified(&self) -> bool {
        self.verdict == OrderVerdict::Falsified
    }
}

/// A convex test function.
enum Phi {
    Linear(Vec<f64>),
    CoordMax,
    Norm(Vec<f64>),
    /// `exp((w·x − m)/s)`.
    Exp(Vec<f64>, f64, f64),
    /// `(w·x − q)₊`.
    Hinge(Vec<f64>, f64),
}

impl Phi {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Phi::Linear(w) => dot(w, x),
            Phi::CoordMax => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Phi::Norm(v) => distance(x, v),
            Phi::Exp(w, m, s) => ((dot(w, x) - m) / s).exp(),
            Phi::Hinge(w, q) => (dot(w, x) - q).max(0.0),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var)
}

/// Builds the test family from pooled samples.
fn family(s1: &[Vec<f64>], s2: &[Vec<f64>], dim: usize, opts: &ConvexOptions) -> Vec<(String, Phi)> {
    let mut rng = stream(opts.seed, tags::CONVEX_FAMILY, 0);
    let pooled = |i: usize| if i < s1.len() { &s1[i] } else { &s2[i - s1.len()] };
    let total = s1.len() + s2.len();
    let mut fam = Vec::new();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut w = vec![0.0; dim];
            w[i] = sign;
            let name = if sign > 0.0 { format!("+x{i}") } else { format!("-x{i}") };
            fam.push((name, Phi::Linear(w)));
        }
    }
    fam.push(("max-coordinate".into(), Phi::CoordMax));
    for j in 0..opts.k {
        let w = unit_vector(&mut rng, dim);
        fam.push((format!("linear{j}"), Phi::Linear(w.clone())));
        fam.push((format!("-linear{j}"), Phi::Linear(w.iter().map(|x| -x).collect())));

        let anchor = pooled(rng.random_range(0..total)).clone();
        fam.push((format!("norm{j}"), Phi::Norm(anchor)));

        let w = unit_vector(&mut rng, dim);
        let proj: Vec<f64> = (0..total).map(|i| dot(&w, pooled(i))).collect();
        let (m, var) = mean_var(&proj);
        let s = if var > 0.0 { var.sqrt() } else { 1.0 };
        fam.push((format!("exp{j}"), Phi::Exp(w.clone(), m, s)));

        let w = unit_vector(&mut rng, dim);
        let mut proj: Vec<f64> = (0..total).map(|i| dot(&w, pooled(i))).collect();
        proj.sort_by(f64::total_cmp);
        let level: f64 = rng.random_range(0.1..0.9);
        let q = proj[((total - 1) as f64 * level) as usize];
        fam.push((format!("hinge{j}"), Phi::Hinge(w, q)));
    }
    fam
}

/// Tests `E φ(X₁) ≤ E φ(X₂)` over a finite convex family.
///
/// A falsified verdict rejects `X₁ ≤cx X₂`; not-falsified proves nothing.
pub fn convex_order_check(s1: &[Vec<f64>], s2: &[Vec<f64>], opts: &ConvexOptions) -> Result<ConvexOrderReport> {
    if s1.len() < 2 || s2.len() < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: s1.len().min(s2.len()),
        });
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", opts.alpha)));
    }
    let dim = s1[0].len();
    if let Some(s) = s1.iter().chain(s2).find(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch {
            context: "convex order sample",
            expected: dim,
            got: s.len(),
        });
    }
    let fam = family(s1, s2, dim, opts);
    let m = fam.len();
    let normal = Normal::standard();
    let critical = normal.inverse_cdf(1.0 - opts.alpha / m as f64);
    let mut worst: Option<TestOutcome> = None;
    for (name, phi) in fam {
        let v1: Vec<f64> = s1.iter().map(|x| phi.eval(x)).collect();
        let v2: Vec<f64> = s2.iter().map(|x| phi.eval(x)).collect();
        let (m1, var1) = mean_var(&v1);
        let (m2, var2) = mean_var(&v2);
        let se = (var1 / v1.len() as f64 + var2 / v2.len() as f64).sqrt();
        let diff = m1 - m2;
        let z = if se > 0.0 {
            diff / se
        } else if diff > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        let outcome = TestOutcome {
            name,
            mean1: m1,
            mean2: m2,
            z,
            p_value: 1.0 - normal.cdf(z),
        };
        if worst.as_ref().is_none_or(|w| outcome.z > w.z) {
            worst = Some(outcome);
        }
    }
    let worst = worst.expect("family is nonempty");
    Ok(ConvexOrderReport {
        verdict: if worst.z > critical {
            OrderVerdict::Falsified
        } else {
            OrderVerdict::NotFalsified
        },
        worst,
        tests: m,
        alpha: opts.alpha,
        critical,
    })
}
