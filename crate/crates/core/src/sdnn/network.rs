use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{DistributionSpec, Sampler};
use super::spec::{ExponentSpec, InitSpec, MatrixSpec, NetworkSpec, VectorSpec};
use crate::error::{Error, Result};
use crate::rng::{stream, tags};
use crate::tropical::{TropicalMonomial, TropicalPolynomial, TropicalValue};

/// One layer's parameters. `a = a_plus − a_minus` with disjoint supports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSample {
    pub a: Vec<Vec<i64>>,
    pub a_plus: Vec<Vec<i64>>,
    pub a_minus: Vec<Vec<i64>>,
    pub b: Vec<f64>,
    pub t: Vec<TropicalValue>,
}

impl LayerSample {
    /// Builds a layer from `a`, splitting it into positive and negative parts.
    pub fn new(a: Vec<Vec<i64>>, b: Vec<f64>, t: Vec<TropicalValue>) -> Result<Self> {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        if let Some(r) = a.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                context: "layer weight row",
                expected: cols,
                got: r.len(),
            });
        }
        for (context, got) in [("layer bias", b.len()), ("layer threshold", t.len())] {
            if got != rows {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: rows,
                    got,
                });
            }
        }
        let a_plus = a.iter().map(|r| r.iter().map(|v| (*v).max(0)).collect()).collect();
        let a_minus = a.iter().map(|r| r.iter().map(|v| (-*v).max(0)).collect()).collect();
        Ok(Self {
            a,
            a_plus,
            a_minus,
            b,
            t,
        })
    }

    pub fn inputs(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.a.len()
    }
}

/// Initial polynomial vectors `F⁰`, `G⁰`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitSample {
    pub f: Vec<TropicalPolynomial>,
    pub g: Vec<TropicalPolynomial>,
}

impl InitSample {
    pub fn eval(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = self.f.iter().map(|p| p.eval(x)).collect::<Result<Vec<_>>>()?;
        let g = self.g.iter().map(|p| p.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok((f, g))
    }
}

/// All parameters of one network realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSample {
    pub init: InitSample,
    pub layers: Vec<LayerSample>,
}

fn draw_exponent(dist: &DistributionSpec, sampler: &mut Sampler<'_>, path: &str) -> Result<u64> {
    let v = sampler.draw(dist);
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::NonIntegerWeight {
            path: path.to_string(),
            value: v,
        });
    }
    Ok(v as u64)
}

fn draw_poly(
    coeffs: &DistributionSpec,
    exponents: &ExponentSpec,
    r: usize,
    dim: usize,
    j: usize,
    sampler: &mut Sampler<'_>,
) -> Result<TropicalPolynomial> {
    let mut monomials = Vec::with_capacity(r);
    for _ in 0..r {
        let c = sampler.draw(coeffs);
        let alpha = match exponents {
            ExponentSpec::Unit => (0..dim).map(|k| u64::from(k == j)).collect(),
            ExponentSpec::Iid { dist } => (0..dim)
                .map(|_| draw_exponent(dist, sampler, "init.exponents"))
                .collect::<Result<Vec<_>>>()?,
        };
        monomials.push(TropicalMonomial::new(c, alpha));
    }
    TropicalPolynomial::new(dim, monomials)
}

/// Draws `F⁰`, `G⁰`. Coordinate `j` of `F⁰` then of `G⁰` is drawn in turn.
pub fn sample_init(spec: &NetworkSpec, sampler: &mut Sampler<'_>) -> Result<InitSample> {
    let d = spec.input_dim();
    match &spec.init {
        InitSpec::Identity => Ok(InitSample {
            f: (0..d).map(|j| TropicalPolynomial::variable(d, j)).collect(),
            g: (0..d).map(|_| TropicalPolynomial::constant(d, TropicalValue::ONE)).collect(),
        }),
        InitSpec::Random(init) => {
            let mut f = Vec::with_capacity(d);
            let mut g = Vec::with_capacity(d);
            for j in 0..d {
                f.push(draw_poly(&init.coeffs, &init.exponents, init.r, d, j, sampler)?);
                g.push(draw_poly(init.g_coeffs(), init.g_exponents(), init.r, d, j, sampler)?);
            }
            Ok(InitSample { f, g })
        }
    }
}

/// Draws layer `l` (1-based): `A` row-major, then `b`, then `t`.
pub fn sample_layer(spec: &NetworkSpec, l: usize, sampler: &mut Sampler<'_>) -> Result<LayerSample> {
    if l == 0 || l > spec.depth() {
        return Err(Error::InvalidArgument(format!(
            "layer index {l} outside 1..={}",
            spec.depth()
        )));
    }
    let (rows, cols) = (spec.widths[l], spec.widths[l - 1]);
    let a = match spec.weights_for(l) {
        MatrixSpec::Fixed { values } => values.clone(),
        MatrixSpec::Iid { dist } => {
            let mut a = vec![vec![0i64; cols]; rows];
            for (i, row) in a.iter_mut().enumerate() {
                for (k, entry) in row.iter_mut().enumerate() {
                    let v = sampler.draw(dist);
                    if v.fract() != 0.0 {
                        return Err(Error::NonIntegerWeight {
                            path: format!("layer {l} A[{i}][{k}]"),
                            value: v,
                        });
                    }
                    *entry = v as i64;
                }
            }
            a
        }
    };
    let b = match spec.biases_for(l) {
        VectorSpec::Fixed { values } => values.clone(),
        VectorSpec::Iid { dist } => (0..rows).map(|_| sampler.draw(dist)).collect(),
    };
    let threshold = spec.threshold_for(l);
    let t = (0..rows).map(|_| threshold.draw(sampler)).collect();
    LayerSample::new(a, b, t)
}

/// Stream tags used for the input and parameter draws of a batch of runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamTags {
    pub input: &'static str,
    pub network: &'static str,
}

impl StreamTags {
    pub const MAIN: StreamTags = StreamTags {
        input: tags::INPUT,
        network: tags::NETWORK,
    };
    /// Disjoint from `MAIN`; used for pilot estimates of means.
    pub const PILOT: StreamTags = StreamTags {
        input: tags::PILOT_INPUT,
        network: tags::PILOT_NETWORK,
    };
}

/// Draws a complete realization for run `index` under `seed`.
pub fn sample_network(spec: &NetworkSpec, seed: u64, index: u64) -> Result<NetworkSample> {
    sample_network_tagged(spec, seed, tags::NETWORK, index)
}

pub fn sample_network_tagged(spec: &NetworkSpec, seed: u64, tag: &str, index: u64) -> Result<NetworkSample> {
    let mut rng = stream(seed, tag, index);
    let mut sampler = Sampler::new(&mut rng, spec.correlation);
    let init = sample_init(spec, &mut sampler)?;
    let layers = (1..=spec.depth())
        .map(|l| sample_layer(spec, l, &mut sampler))
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkSample { init, layers })
}

/// Draws the input of run `index` from the spec's input law.
pub fn sample_input(spec: &NetworkSpec, seed: u64, index: u64) -> Vec<f64> {
    sample_input_tagged(spec, seed, tags::INPUT, index)
}

pub fn sample_input_tagged(spec: &NetworkSpec, seed: u64, tag: &str, index: u64) -> Vec<f64> {
    let mut rng = stream(seed, tag, index);
    let mut sampler = Sampler::new(&mut rng, 0.0);
    spec.input.sample(&mut sampler, spec.input_dim())
}

fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}

fn dot(row: &[i64], v: &[f64]) -> f64 {
    row.iter().zip(v).map(|(a, x)| *a as f64 * x).sum()
}

/// One step of the max-plus recursion. Returns `(F', G', H')`.
pub fn forward_fg(f: &[f64], g: &[f64], layer: &LayerSample) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_dim("forward_fg F", layer.inputs(), f.len())?;
    check_dim("forward_fg G", layer.inputs(), g.len())?;
    let n = layer.outputs();
    let mut f_next = Vec::with_capacity(n);
    let mut g_next = Vec::with_capacity(n);
    let mut h_next = Vec::with_capacity(n);
    for i in 0..n {
        let (ap, am) = (&layer.a_plus[i], &layer.a_minus[i]);
        let gi = dot(ap, g) + dot(am, f);
        let hi = dot(ap, f) + dot(am, g) + layer.b[i];
        let fi = match layer.t[i] {
            TropicalValue::Bottom => hi,
            TropicalValue::Finite(t) => hi.max(gi + t),
        };
        f_next.push(fi);
        g_next.push(gi);
        h_next.push(hi);
    }
    Ok((f_next, g_next, h_next))
}

/// `max(A ν + b, t)` computed directly.
pub fn forward_relu_direct(nu: &[f64], layer: &LayerSample) -> Result<Vec<f64>> {
    check_dim("forward_relu_direct", layer.inputs(), nu.len())?;
    Ok((0..layer.outputs())
        .map(|i| {
            let z = dot(&layer.a[i], nu) + layer.b[i];
            match layer.t[i] {
                TropicalValue::Bottom => z,
                TropicalValue::Finite(t) => z.max(t),
            }
        })
        .collect())
}

/// Values at one layer. `h` is absent at layer 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Option<Vec<f64>>,
    pub nu: Vec<f64>,
}

/// Trajectory of one run; `layers[0]` holds the initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkRun {
    pub x: Vec<f64>,
    pub seed: u64,
    pub index: u64,
    pub layers: Vec<LayerState>,
}

impl NetworkRun {
    /// Final output `ν^(L)`.
    pub fn output(&self) -> &[f64] {
        &self.layers.last().expect("at least the initial layer").nu
    }
}

fn sub(f: &[f64], g: &[f64]) -> Vec<f64> {
    f.iter().zip(g).map(|(a, b)| a - b).collect()
}

/// Propagates `x` through an already drawn realization.
pub fn propagate(sample: &NetworkSample, x: &[f64], seed: u64, index: u64) -> Result<NetworkRun> {
    let d = sample.init.f.first().map_or(0, TropicalPolynomial::dim);
    check_dim("network input", d, x.len())?;
    let (mut f, mut g) = sample.init.eval(x)?;
    let mut layers = Vec::with_capacity(sample.layers.len() + 1);
    layers.push(LayerState {
        nu: sub(&f, &g),
        f: f.clone(),
        g: g.clone(),
        h: None,
    });
    for layer in &sample.layers {
        let (f2, g2, h2) = forward_fg(&f, &g, layer)?;
        layers.push(LayerState {
            nu: sub(&f2, &g2),
            f: f2.clone(),
            g: g2.clone(),
            h: Some(h2),
        });
        f = f2;
        g = g2;
    }
    Ok(NetworkRun {
        x: x.to_vec(),
        seed,
        index,
        layers,
    })
}

/// Direct ReLU recursion from `ν⁰ = F⁰(x) − G⁰(x)`; one vector per layer.
pub fn propagate_direct(sample: &NetworkSample, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let (f, g) = sample.init.eval(x)?;
    let mut out = vec![sub(&f, &g)];
    for layer in &sample.layers {
        let next = forward_relu_direct(out.last().expect("nonempty"), layer)?;
        out.push(next);
    }
    Ok(out)
}

/// Run 0 of `seed` at input `x`.
pub fn run_network(spec: &NetworkSpec, x: &[f64], seed: u64) -> Result<NetworkRun> {
    run_network_indexed(spec, x, seed, 0)
}

/// Run `index` of `seed` at input `x`.
pub fn run_network_indexed(spec: &NetworkSpec, x: &[f64], seed: u64, index: u64) -> Result<NetworkRun> {
    spec.validate("network")?;
    check_dim("network input", spec.input_dim(), x.len())?;
    let sample = sample_network(spec, seed, index)?;
    propagate(&sample, x, seed, index)
}

/// `n` independent runs, each with its own network draw and input draw.
/// The result is identical for any rayon pool size.
pub fn simulate(spec: &NetworkSpec, seed: u64, n: usize) -> Result<Vec<NetworkRun>> {
    spec.validate("network")?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_input(spec, seed, i);
            let sample = sample_network(spec, seed, i)?;
            propagate(&sample, &x, seed, i)
        })
        .collect()
}

/// `n` runs at a fixed input `x`.
pub fn simulate_at(spec: &NetworkSpec, x: &[f64], seed: u64, n: usize) -> Result<Vec<NetworkRun>> {
    spec.validate("network")?;
    check_dim("network input", spec.input_dim(), x.len())?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| propagate(&sample_network(spec, seed, i)?, x, seed, i))
        .collect()
}

/// `ν^(l)` of `n` runs with random inputs, laid out as `[layer][run]`.
pub fn simulate_nu(spec: &NetworkSpec, seed: u64, n: usize, tags: StreamTags) -> Result<Vec<Vec<Vec<f64>>>> {
    spec.validate("network")?;
    let runs: Vec<Vec<Vec<f64>>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_input_tagged(spec, seed, tags.input, i);
            let sample = sample_network_tagged(spec, seed, tags.network, i)?;
            propagate_nu(&sample, &x)
        })
        .collect::<Result<_>>()?;
    Ok(transpose(runs, spec.depth() + 1))
}

/// Final outputs `ν^(L)(x)` of `n` network draws at a fixed input.
pub fn simulate_outputs_at(spec: &NetworkSpec, x: &[f64], seed: u64, tag: &str, n: usize) -> Result<Vec<Vec<f64>>> {
    spec.validate("network")?;
    check_dim("network input", spec.input_dim(), x.len())?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let sample = sample_network_tagged(spec, seed, tag, i)?;
            Ok(propagate_nu(&sample, x)?.pop().expect("nonempty"))
        })
        .collect()
}

/// `ν` per layer via the max-plus recursion, without keeping `F`, `G`, `H`.
pub fn propagate_nu(sample: &NetworkSample, x: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = sample.init.f.first().map_or(0, TropicalPolynomial::dim);
    check_dim("network input", d, x.len())?;
    let (mut f, mut g) = sample.init.eval(x)?;
    let mut out = Vec::with_capacity(sample.layers.len() + 1);
    out.push(sub(&f, &g));
    for layer in &sample.layers {
        let (f2, g2, _) = forward_fg(&f, &g, layer)?;
        out.push(sub(&f2, &g2));
        f = f2;
        g = g2;
    }
    Ok(out)
}

fn transpose(runs: Vec<Vec<Vec<f64>>>, layers: usize) -> Vec<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Vec<f64>>> = (0..layers).map(|_| Vec::with_capacity(runs.len())).collect();
    for run in runs {
        for (l, nu) in run.into_iter().enumerate() {
            out[l].push(nu);
        }
    }
    out
}
