use serde::{Deserialize, Serialize};

use super::network::{sample_network, NetworkSample};
use super::spec::NetworkSpec;
use crate::error::Result;
use crate::tropical::{
    enforce_cap, poly_weighted_combine, TropicalPolynomial, TropicalRational, TropicalValue,
};

/// Symbolic `F`, `G` at one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicLayer {
    pub f: Vec<TropicalPolynomial>,
    pub g: Vec<TropicalPolynomial>,
}

impl SymbolicLayer {
    /// `ν_i = F_i ⊘ G_i`.
    pub fn nu(&self, i: usize) -> Result<TropicalRational> {
        TropicalRational::new(self.f[i].clone(), self.g[i].clone())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.f
            .iter()
            .zip(&self.g)
            .map(|(f, g)| Ok(f.eval(x)? - g.eval(x)?))
            .collect()
    }
}

/// Symbolic trajectory; `layers[0]` is the initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicRun {
    pub seed: u64,
    pub index: u64,
    pub layers: Vec<SymbolicLayer>,
}

/// Builds the polynomials of run 0 of `seed`; the draws match `run_network`.
pub fn run_symbolic(spec: &NetworkSpec, seed: u64, cap: usize) -> Result<SymbolicRun> {
    run_symbolic_indexed(spec, seed, 0, cap)
}

pub fn run_symbolic_indexed(spec: &NetworkSpec, seed: u64, index: u64, cap: usize) -> Result<SymbolicRun> {
    spec.validate("network")?;
    let sample = sample_network(spec, seed, index)?;
    let layers = symbolic_layers(&sample, spec.input_dim(), cap)?;
    Ok(SymbolicRun { seed, index, layers })
}

/// Symbolic recursion over an already drawn realization.
pub fn symbolic_layers(sample: &NetworkSample, dim: usize, cap: usize) -> Result<Vec<SymbolicLayer>> {
    let mut layers = vec![SymbolicLayer {
        f: sample.init.f.clone(),
        g: sample.init.g.clone(),
    }];
    for layer in &sample.layers {
        let prev = layers.last().expect("nonempty");
        let gf: Vec<&TropicalPolynomial> = prev.g.iter().chain(&prev.f).collect();
        let fg: Vec<&TropicalPolynomial> = prev.f.iter().chain(&prev.g).collect();
        let mut f = Vec::with_capacity(layer.outputs());
        let mut g = Vec::with_capacity(layer.outputs());
        for i in 0..layer.outputs() {
            let w: Vec<i64> = layer.a_plus[i].iter().chain(&layer.a_minus[i]).copied().collect();
            let gi = poly_weighted_combine(&gf, &w, TropicalValue::ONE, dim, cap)?;
            let hi = poly_weighted_combine(&fg, &w, TropicalValue::Finite(layer.b[i]), dim, cap)?;
            let fi = match layer.t[i] {
                TropicalValue::Bottom => hi,
                t => enforce_cap(hi.trop_sum(&gi.shift(t))?, cap)?,
            };
            f.push(fi);
            g.push(gi);
        }
        layers.push(SymbolicLayer { f, g });
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rng::stream;
    use crate::sdnn::network::run_network;
    use crate::sdnn::spec::{MatrixSpec, VectorSpec};
    use crate::tropical::{count_linear_regions, RegionMethod, TropicalMonomial, DEFAULT_MONOMIAL_CAP};
    use rand::Rng;

    fn single_neuron() -> NetworkSpec {
        NetworkSpec {
            weights: MatrixSpec::Fixed { values: vec![vec![1]] },
            biases: VectorSpec::Fixed { values: vec![0.0] },
            ..NetworkSpec::uniform(vec![1, 1], 1, 1.0)
        }
    }

    #[test]
    fn relu_neuron_polynomials() {
        let run = run_symbolic(&single_neuron(), 0, DEFAULT_MONOMIAL_CAP).unwrap();
        let last = &run.layers[1];
        let want_f = TropicalPolynomial::new(
            1,
            vec![TropicalMonomial::new(0.0, vec![1]), TropicalMonomial::new(0.0, vec![0])],
        )
        .unwrap();
        assert_eq!(last.f[0], want_f);
        assert_eq!(last.g[0], TropicalPolynomial::constant(1, 0.0));
        let count = count_linear_regions(&last.f[0], RegionMethod::ExactLp).unwrap();
        assert_eq!(count.count, 2);
    }

    #[test]
    fn symbolic_matches_numeric() {
        let mut rng = stream(1, "test.symbolic", 0);
        for seed in 0..10 {
            let spec = NetworkSpec::uniform(vec![2, 3, 2], 2, 1.0);
            let sym = run_symbolic(&spec, seed, DEFAULT_MONOMIAL_CAP).unwrap();
            for _ in 0..100 {
                let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
                let num = run_network(&spec, &x, seed).unwrap();
                for (s, n) in sym.layers.iter().zip(&num.layers) {
                    for (a, b) in s.eval(&x).unwrap().iter().zip(&n.nu) {
                        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn capacity_error_on_tiny_cap() {
        let spec = NetworkSpec::uniform(vec![2, 4, 4, 4], 3, 1.0);
        let err = (0..20)
            .map(|s| run_symbolic(&spec, s, 2))
            .find(Result::is_err)
            .expect("some draw exceeds a cap of two")
            .unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }
}
