use serde::{Deserialize, Serialize};

use super::tail::euclidean;
use crate::error::{Error, Result};
use crate::sdnn::{ExponentSpec, InitSpec, MatrixSpec, NetworkSpec, ThresholdSpec, VectorSpec};

/// Relative inflation absorbing floating-point rounding in the propagation.
const ROUNDING_SLACK: f64 = 1e-12;

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl std::ops::Add for Interval {
    type Output = Interval;

    fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }
}

impl std::ops::Sub for Interval {
    type Output = Interval;

    fn sub(self, o: Interval) -> Interval {
        Interval::new(self.lo - o.hi, self.hi - o.lo)
    }
}

impl std::ops::Mul for Interval {
    type Output = Interval;

    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        Interval::new(
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn max(self, o: Interval) -> Interval {
        Interval::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    pub fn intersect(self, o: Interval) -> Option<Interval> {
        let (lo, hi) = (self.lo.max(o.lo), self.hi.min(o.hi));
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn abs_max(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Norm certificate for one layer output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiCertificate {
    pub layer: usize,
    /// `ξ_(l)`: bound on `‖ν^(l)‖₂` for every realization.
    pub xi: f64,
    /// Enclosure of each coordinate of `ν^(l)`.
    pub intervals: Vec<Interval>,
    /// Largest observed `‖ν^(l)‖₂`, once samples are attached.
    pub empirical_max: Option<f64>,
}

impl XiCertificate {
    /// Attaches the empirical maximum norm over `samples` of `ν^(l)`.
    pub fn with_samples(mut self, samples: &[Vec<f64>]) -> Self {
        let m = samples.iter().map(|s| euclidean(s)).fold(0.0, f64::max);
        self.empirical_max = Some(m);
        self
    }

    pub fn dominates(&self) -> bool {
        self.empirical_max.is_none_or(|m| m <= self.xi)
    }
}

/// Certificate for layer `l` (0 is the initialization).
pub fn xi_certificate(spec: &NetworkSpec, l: usize) -> Result<XiCertificate> {
    if l > spec.depth() {
        return Err(Error::InvalidArgument(format!("layer {l} beyond depth {}", spec.depth())));
    }
    Ok(xi_certificates(spec)?.swap_remove(l))
}

/// Certificates for layers `0..=L`.
pub fn xi_certificates(spec: &NetworkSpec) -> Result<Vec<XiCertificate>> {
    spec.validate("network")?;
    let d = spec.input_dim();
    let xs: Vec<Interval> = spec.input.bounds(d).into_iter().map(|(lo, hi)| Interval::new(lo, hi)).collect();
    let (mut f, mut g) = init_intervals(spec, &xs);
    let mut nu: Vec<Interval> = f.iter().zip(&g).map(|(a, b)| *a - *b).collect();
    let mut out = vec![certificate(0, &nu)];
    for l in 1..=spec.depth() {
        let (rows, cols) = (spec.widths[l], spec.widths[l - 1]);
        let a = weight_intervals(spec.weights_for(l), rows, cols);
        let b: Vec<Interval> = match spec.biases_for(l) {
            VectorSpec::Fixed { values } => values.iter().map(|v| Interval::point(*v)).collect(),
            VectorSpec::Iid { dist } => {
                let (lo, hi) = dist.bounds();
                vec![Interval::new(lo, hi); rows]
            }
        };
        let t = match spec.threshold_for(l) {
            ThresholdSpec::Identity => None,
            other => other.bounds().map(|(lo, hi)| Interval::new(lo, hi)),
        };
        let mut f2 = Vec::with_capacity(rows);
        let mut g2 = Vec::with_capacity(rows);
        let mut nu2 = Vec::with_capacity(rows);
        for i in 0..rows {
            let mut gi = Interval::point(0.0);
            let mut hi = b[i];
            let mut zi = b[i];
            for k in 0..cols {
                let (ap, am) = split(a[i][k]);
                gi = gi + ap * g[k] + am * f[k];
                hi = hi + ap * f[k] + am * g[k];
                zi = zi + a[i][k] * nu[k];
            }
            let (fi, direct) = match t {
                None => (hi, zi),
                Some(t) => (hi.max(gi + t), zi.max(t)),
            };
            let via_fg = fi - gi;
            nu2.push(via_fg.intersect(direct).unwrap_or(direct));
            f2.push(fi);
            g2.push(gi);
        }
        f = f2;
        g = g2;
        nu = nu2;
        out.push(certificate(l, &nu));
    }
    Ok(out)
}

fn certificate(layer: usize, nu: &[Interval]) -> XiCertificate {
    let abs: Vec<f64> = nu.iter().map(|i| i.abs_max()).collect();
    XiCertificate {
        layer,
        xi: euclidean(&abs) * (1.0 + ROUNDING_SLACK),
        intervals: nu.to_vec(),
        empirical_max: None,
    }
}

fn split(a: Interval) -> (Interval, Interval) {
    (
        Interval::new(a.lo.max(0.0), a.hi.max(0.0)),
        Interval::new((-a.hi).max(0.0), (-a.lo).max(0.0)),
    )
}

fn weight_intervals(m: &MatrixSpec, rows: usize, cols: usize) -> Vec<Vec<Interval>> {
    match m {
        MatrixSpec::Fixed { values } => values
            .iter()
            .map(|r| r.iter().map(|v| Interval::point(*v as f64)).collect())
            .collect(),
        MatrixSpec::Iid { dist } => {
            let (lo, hi) = dist.bounds();
            vec![vec![Interval::new(lo, hi); cols]; rows]
        }
    }
}

fn init_intervals(spec: &NetworkSpec, xs: &[Interval]) -> (Vec<Interval>, Vec<Interval>) {
    let d = xs.len();
    match &spec.init {
        InitSpec::Identity => (xs.to_vec(), vec![Interval::point(0.0); d]),
        InitSpec::Random(init) => {
            let poly = |coeffs: &crate::sdnn::DistributionSpec, exps: &ExponentSpec, j: usize| {
                let (clo, chi) = coeffs.bounds();
                let mut acc = Interval::new(clo, chi);
                for (k, x) in xs.iter().enumerate() {
                    let alpha = match exps {
                        ExponentSpec::Unit => Interval::point(if k == j { 1.0 } else { 0.0 }),
                        ExponentSpec::Iid { dist } => {
                            let (lo, hi) = dist.bounds();
                            Interval::new(lo, hi)
                        }
                    };
                    acc = acc + alpha * *x;
                }
                acc
            };
            let f = (0..d).map(|j| poly(&init.coeffs, &init.exponents, j)).collect();
            let g = (0..d).map(|j| poly(init.g_coeffs(), init.g_exponents(), j)).collect();
            (f, g)
        }
    }
}
