//! Cross-module invariants as property tests.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stochtrop::classify::{expected_classify, Label, ScoreSpec};
use stochtrop::concentration::{euclidean, xi_certificates};
use stochtrop::layer_select::{
    backward_induction_exact, exhaustive_stopping_oracle, random_markov_instance, stopped_envelope_means,
    DEFAULT_RULE_LIMIT,
};
use stochtrop::sdnn::{propagate_nu, sample_input, sample_network, simulate, NetworkSpec};
use stochtrop::tropical::{
    count_linear_regions, RegionMethod, TropicalMonomial, TropicalPolynomial, TropicalRational, TropicalValue,
};

fn polynomial(dim: usize) -> impl Strategy<Value = TropicalPolynomial> {
    prop::collection::vec((-3.0f64..3.0, prop::collection::vec(0u64..4, dim)), 1..=6).prop_map(move |ms| {
        TropicalPolynomial::new(dim, ms.into_iter().map(|(c, e)| TropicalMonomial::new(c, e)).collect()).unwrap()
    })
}

fn small_network() -> impl Strategy<Value = NetworkSpec> {
    (1usize..=3, prop::collection::vec(1usize..=4, 1..=3), 1i64..=3, 0.1f64..2.0).prop_map(|(d, hidden, w, b)| {
        NetworkSpec::uniform(std::iter::once(d).chain(hidden).collect(), w, b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rational_is_pointwise_difference(
        (f, g, x) in (1usize..=3).prop_flat_map(|d| (polynomial(d), polynomial(d), prop::collection::vec(-5.0f64..5.0, d)))
    ) {
        let r = TropicalRational::new(f.clone(), g.clone()).unwrap();
        let diff = f.eval(&x).unwrap() - g.eval(&x).unwrap();
        prop_assert!((r.eval(&x).unwrap() - diff).abs() <= 1e-12);
    }

    #[test]
    fn region_count_bounds_and_invariances(
        (f, c) in (1usize..=2).prop_flat_map(|d| (polynomial(d), -5.0f64..5.0))
    ) {
        let count = count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count;
        prop_assert!(count >= 1 && count <= f.len());
        let shifted = count_linear_regions(&f.shift(TropicalValue::Finite(c)), RegionMethod::ExactLp).unwrap().count;
        prop_assert_eq!(shifted, count);
        let pruned = f.prune_nowhere_maximal().unwrap();
        prop_assert_eq!(pruned.len(), count);
        prop_assert_eq!(count_linear_regions(&pruned, RegionMethod::ExactLp).unwrap().count, count);
    }

    #[test]
    fn weight_decomposition(spec in small_network(), index in 0u64..1000) {
        let sample = sample_network(&spec, 7, index).unwrap();
        for layer in &sample.layers {
            for ((a, p), m) in layer.a.iter().flatten().zip(layer.a_plus.iter().flatten()).zip(layer.a_minus.iter().flatten()) {
                prop_assert_eq!(p - m, *a);
                prop_assert_eq!((*p).min(*m), 0);
            }
        }
    }

    #[test]
    fn xi_dominates_every_sample(spec in small_network(), index in 0u64..1000) {
        let certs = xi_certificates(&spec).unwrap();
        let sample = sample_network(&spec, 8, index).unwrap();
        let nu = propagate_nu(&sample, &sample_input(&spec, 8, index)).unwrap();
        for (cert, v) in certs.iter().zip(&nu) {
            prop_assert!(euclidean(v) <= cert.xi);
        }
    }

    #[test]
    fn expected_label_follows_sign(est in 0.0f64..1.0, se in 0.0f64..0.05, c in 0.05f64..0.95) {
        prop_assume!(est != c);
        let score = ScoreSpec { c, ..ScoreSpec::default() };
        let d = expected_classify(est, se, &score).unwrap();
        prop_assert!(d.bound > 0.0 && d.bound <= 1.0);
        match d.label {
            Label::C1 => prop_assert!(est > c),
            Label::C2 => prop_assert!(est < c),
            Label::Abstain => prop_assert!((est - c).abs() <= 3.0 * se),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snell_envelope_properties(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let process = random_markov_instance(&mut rng, 5, 3, DEFAULT_RULE_LIMIT);
        let exact = backward_induction_exact(&process);
        for (node, s) in process.nodes().iter().zip(&exact.snell) {
            prop_assert!(*s >= node.gamma);
            if node.children.is_empty() {
                prop_assert_eq!(*s, node.gamma);
            }
        }
        let oracle = exhaustive_stopping_oracle(&process, DEFAULT_RULE_LIMIT).unwrap();
        prop_assert!((exact.solution.value - oracle.value).abs() <= 1e-12);
        for rule in &oracle.optimal_rules {
            prop_assert!(exact.leaf_tau.iter().zip(rule).all(|(a, b)| a <= b));
        }
        let means = stopped_envelope_means(&process, &exact);
        for m in &means {
            prop_assert!((m - means[0]).abs() <= 1e-12);
        }
    }
}

#[test]
fn runs_do_not_depend_on_pool_size() {
    let spec = NetworkSpec::reference();
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| simulate(&spec, 3, 500).unwrap());
    let three = pool(3).install(|| simulate(&spec, 3, 500).unwrap());
    assert_eq!(one, three);
}
