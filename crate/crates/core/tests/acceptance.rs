//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line and
//! a row in `acceptance.csv`; the report is regenerated from those rows.
//!
//! Criteria run sequentially in one test so their timings are not skewed
//! by each other.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};

use stochtrop::classify::{disagreement_audit, reference_classifier, AuditVerdict};
use stochtrop::concentration::{
    convex_order_check, lattice_region_bound, martingale_bound_reports, random_walks, region_count_concentration,
    sample_region_counts, verify_concentration, xi_certificates, BoundKind, ConcentrationOptions, ConvexOptions,
    OrderVerdict,
};
use stochtrop::harness::{self, emit_report, write_acceptance_csv, AcceptanceRow, Command, ExperimentConfig, Overrides};
use stochtrop::layer_select::{
    backward_induction_exact, backward_induction_lsmc, exhaustive_stopping_oracle, random_markov_instance, rule_value,
    select_layers, FiniteSupportProcess, GammaSpec, LsmcOptions, Penalty, ProcessSpec, SelectMethod, SelectOptions,
    Utility, DEFAULT_RULE_LIMIT,
};
use stochtrop::rng::{stream, tags};
use stochtrop::sdnn::{propagate, sample_input_tagged, sample_network, NetworkSample, NetworkSpec};
use stochtrop::tropical::{
    count_linear_regions, GridSpec, RegionMethod, TropicalMonomial, TropicalPolynomial, TropicalValue,
    DEFAULT_MONOMIAL_CAP,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

struct Suite {
    rows: Vec<AcceptanceRow>,
}

impl Suite {
    fn run(&mut self, criterion: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let passed = out.passed && in_budget;
        let mut detail = out.detail;
        if !in_budget {
            detail.push_str(&format!("; over budget of {}s", budget.as_secs_f64()));
        }
        println!(
            "criterion {criterion:>2} {} {name}: {detail} [{:.2}s]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        self.rows.push(AcceptanceRow {
            criterion,
            name: name.into(),
            passed,
            detail,
            seconds: (elapsed.as_secs_f64() * 100.0).round() / 100.0,
        });
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

#[test]
fn acceptance() {
    println!();
    let mut suite = Suite { rows: Vec::new() };
    suite.run(1, "tropical-relu-equivalence", secs(60), relu_equivalence);
    suite.run(2, "layer-concentration", secs(120), layer_concentration);
    suite.run(3, "classifier-audit", secs(300), classifier_audit);
    suite.run(4, "martingale-bound", secs(60), martingale_bound);
    let instances = stopping_instances();
    suite.run(5, "stopping-exactness", secs(60), || stopping_exactness(&instances));
    suite.run(6, "lsmc-consistency", secs(120), || lsmc_consistency(&instances));
    suite.run(7, "unimodal-selection", secs(1), unimodal_selection);
    suite.run(8, "region-counting", secs(60), region_counting);
    suite.run(9, "region-count-concentration", secs(180), region_concentration);
    suite.run(10, "convex-order-checker", secs(60), convex_checker);
    suite.run(11, "determinism", secs(600), determinism);

    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = fs::remove_dir_all(&dir);
    write_acceptance_csv(&dir, &suite.rows).unwrap();
    let report = emit_report(&dir).unwrap();
    let rows = report.markdown.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| criterion")).count();
    assert_eq!(rows, suite.rows.len());
    println!("report: {}", dir.join(harness::REPORT_FILE).display());

    let failed: Vec<u32> = suite.rows.iter().filter(|r| !r.passed).map(|r| r.criterion).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

/// `ν' = max(Aν + b, t)` evaluated directly from the sampled parameters.
fn direct_relu(sample: &NetworkSample, x: &[f64]) -> Vec<Vec<f64>> {
    let (f, g) = sample.init.eval(x).unwrap();
    let mut nu: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a - b).collect();
    let mut out = vec![nu.clone()];
    for layer in &sample.layers {
        nu = layer
            .a
            .iter()
            .zip(&layer.b)
            .zip(&layer.t)
            .map(|((row, b), t)| {
                let pre: f64 = row.iter().zip(&nu).map(|(a, v)| *a as f64 * v).sum::<f64>() + b;
                match t {
                    TropicalValue::Finite(t) => pre.max(*t),
                    TropicalValue::Bottom => pre,
                }
            })
            .collect();
        out.push(nu.clone());
    }
    out
}

fn relu_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for net in 0..200u64 {
        let d = rng.random_range(1..=4);
        let depth = rng.random_range(1..=4);
        let widths: Vec<usize> = std::iter::once(d).chain((0..depth).map(|_| rng.random_range(1..=8))).collect();
        let spec = NetworkSpec::uniform(widths, 3, 1.0);
        let sample = sample_network(&spec, 1, net).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
            let run = propagate(&sample, &x, 1, net).unwrap();
            let direct = direct_relu(&sample, &x);
            for (state, nu) in run.layers.iter().zip(&direct) {
                for ((f, g), v) in state.f.iter().zip(&state.g).zip(nu) {
                    worst = worst.max(((f - g) - v).abs());
                    checked += 1;
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("max |(F-G) - nu| = {worst:.3e} over {checked} unit evaluations"))
}

fn layer_concentration() -> Outcome {
    let spec = NetworkSpec::reference();
    let certs = xi_certificates(&spec).unwrap();
    let opts = ConcentrationOptions {
        n: 100_000,
        pilot_n: 100_000,
        t_grid: None,
    };
    let reports = verify_concentration(&spec, &opts, 2).unwrap();
    let layers: std::collections::BTreeSet<usize> = reports.iter().filter_map(|r| r.l).collect();
    let nsg_ok = reports.iter().all(|r| {
        let l = r.l.unwrap();
        let xi = certs[l].xi;
        r.kind == BoundKind::Nsg
            && (r.analytic_raw - 2.0 * (-r.t * r.t / (2.0 * xi * xi)).exp()).abs() <= 1e-12
            && r.empirical <= r.analytic + 3.0 * r.se
    });
    let worst = reports.iter().map(|r| r.empirical - r.analytic).fold(f64::NEG_INFINITY, f64::max);
    let covers = layers.len() == spec.depth() && reports.len() == 10 * spec.depth();
    outcome(
        nsg_ok && covers,
        format!("{} reports over layers {layers:?}, max(empirical - bound) = {worst:.3e}", reports.len()),
    )
}

fn classifier_audit() -> Outcome {
    let (net, score) = reference_classifier();
    let candidates: Vec<Vec<f64>> = (0..40).map(|i| sample_input_tagged(&net, 3, "acceptance.classify", i)).collect();
    let audits = disagreement_audit(&net, &score, &candidates, 100_000, 3).unwrap();
    let resolved: Vec<_> = audits.iter().filter(|a| a.verdict != AuditVerdict::Unresolved).take(20).collect();
    let ok = resolved.iter().all(|a| {
        let w = score.b - score.a;
        let bound = (-2.0 * a.decision.t * a.decision.t / (w * w)).exp();
        (a.decision.bound - bound).abs() <= 1e-12 && a.empirical <= bound + 3.0 * a.empirical_se
    });
    let worst = resolved.iter().map(|a| a.empirical - a.decision.bound).fold(f64::NEG_INFINITY, f64::max);
    outcome(
        resolved.len() == 20 && ok,
        format!(
            "{} resolved of {} candidates, max(empirical - bound) = {worst:.3e}",
            resolved.len(),
            candidates.len()
        ),
    )
}

/// `P(|S_l| ≥ t)` for a simple ±1 walk, by summing binomial weights.
fn binomial_tail(l: usize, t: f64) -> f64 {
    let mut coeff = 1.0f64;
    let mut total = 0.0;
    for k in 0..=l {
        if k > 0 {
            coeff = coeff * (l - k + 1) as f64 / k as f64;
        }
        let s = 2.0 * k as f64 - l as f64;
        if s.abs() >= t {
            total += coeff;
        }
    }
    total / 2f64.powi(l as i32)
}

fn martingale_bound() -> Outcome {
    let n = 100_000;
    let walks = random_walks(n, 20, 1, 4);
    let a_grid: Vec<f64> = (1..=10).map(f64::from).collect();
    let reports = martingale_bound_reports(&walks, 1.0, &a_grid).unwrap();
    let mut bound_ok = true;
    let mut agree = 0usize;
    let mut worst_z = 0.0f64;
    for r in &reports {
        let l = r.l.unwrap();
        let a = r.params["a"];
        let analytic = 2.0 * (1.0 - (a - 1.0) * (a - 1.0) / (2.0 * l as f64)).exp();
        bound_ok &= (r.analytic_raw - analytic).abs() <= 1e-12 && r.empirical <= r.analytic + 3.0 * r.se;
        let exact = binomial_tail(l, a);
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        let diff = (r.empirical - exact).abs();
        if diff <= 3.0 * se {
            agree += 1;
        }
        if se > 0.0 {
            worst_z = worst_z.max(diff / se);
        }
    }
    outcome(
        bound_ok && agree == reports.len() && reports.len() == 200,
        format!(
            "{} cells, bound holds: {bound_ok}, MC within 3 SE of exact: {agree}/{}, max |z| = {worst_z:.2}",
            reports.len(),
            reports.len()
        ),
    )
}

fn stopping_instances() -> Vec<FiniteSupportProcess> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..50).map(|_| random_markov_instance(&mut rng, 6, 3, DEFAULT_RULE_LIMIT)).collect()
}

fn stopping_exactness(instances: &[FiniteSupportProcess]) -> Outcome {
    let mut worst = 0.0f64;
    let mut earliest_ok = true;
    let mut rules = 0u128;
    for p in instances {
        let exact = backward_induction_exact(p);
        let oracle = exhaustive_stopping_oracle(p, DEFAULT_RULE_LIMIT).unwrap();
        worst = worst.max((exact.solution.value - oracle.value).abs());
        earliest_ok &= oracle
            .optimal_rules
            .iter()
            .all(|rule| exact.leaf_tau.iter().zip(rule).all(|(a, b)| a <= b));
        earliest_ok &= exact.leaf_tau == oracle.earliest;
        rules += oracle.rules_enumerated;
    }
    outcome(
        worst <= 1e-12 && earliest_ok,
        format!("max |exact - oracle| = {worst:.3e}, earliest rule: {earliest_ok}, {rules} rules enumerated"),
    )
}

/// The fitted rule is scored exactly on the tree, so the criterion measures
/// the rule rather than holdout noise; the holdout estimate is reported too.
fn lsmc_consistency(instances: &[FiniteSupportProcess]) -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_holdout_z = 0.0f64;
    for (i, p) in instances.iter().enumerate() {
        let exact = backward_induction_exact(p).solution.value;
        let seed = 6 + i as u64;
        let train: Vec<Vec<f64>> = (0..10_000).map(|k| p.sample(&mut stream(seed, tags::GAMMA_PATHS, k))).collect();
        let (_, rule) = backward_induction_lsmc(&train, &LsmcOptions::default()).unwrap();
        let leaf_tau: Vec<usize> = p.paths().iter().map(|w| rule.tau(&w.gamma)).collect();
        let fitted = rule_value(p, &leaf_tau);
        worst = worst.max((fitted - exact).abs() / exact.abs().max(1e-12));

        let spec = GammaSpec {
            horizon: p.horizon(),
            utility: Utility::Identity,
            penalty: Penalty::None,
            process: ProcessSpec::FiniteSupport { process: p.clone() },
        };
        let opts = SelectOptions {
            method: SelectMethod::Lsmc,
            seed,
            paths: 10_000,
            holdout: 10_000,
            ..SelectOptions::default()
        };
        let s = select_layers(&spec, &opts).unwrap().solution;
        if let Some(se) = s.value_se.filter(|se| *se > 0.0) {
            worst_holdout_z = worst_holdout_z.max((s.value - exact).abs() / se);
        }
    }
    outcome(
        worst <= 0.02,
        format!(
            "max relative error of fitted rule = {:.3}%, holdout estimate max |z| = {worst_holdout_z:.2}",
            worst * 100.0
        ),
    )
}

fn unimodal_selection() -> Outcome {
    let opts = SelectOptions {
        method: SelectMethod::Deterministic,
        ..SelectOptions::default()
    };
    let s = select_layers(&GammaSpec::log_over_sqrt(1000), &opts).unwrap();
    outcome(s.solution.tau == Some(7), format!("tau = {:?}", s.solution.tau))
}

fn region_counting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    for _ in 0..100 {
        let dim = rng.random_range(1..=2);
        let r = rng.random_range(1..=6);
        let monomials = (0..r)
            .map(|_| {
                TropicalMonomial::new(
                    rng.random_range(-2.0..2.0),
                    (0..dim).map(|_| rng.random_range(0..4)).collect(),
                )
            })
            .collect();
        let f = TropicalPolynomial::new(dim, monomials).unwrap();
        let exact = count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count;
        let grid = count_linear_regions(&f, RegionMethod::GridOracle(GridSpec::default_for(dim))).unwrap().count;
        if exact != grid {
            mismatches += 1;
        }
    }
    let count = |dim: usize, ms: &[&[u64]]| {
        let f = TropicalPolynomial::new(dim, ms.iter().map(|e| TropicalMonomial::new(0.0, e.to_vec())).collect())
            .unwrap();
        count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count
    };
    let relu = count(1, &[&[1], &[0]]);
    let max3 = count(2, &[&[1, 0], &[0, 1], &[0, 0]]);
    outcome(
        mismatches == 0 && relu == 2 && max3 == 3,
        format!("{mismatches}/100 LP-grid mismatches, max(x,0) -> {relu}, max(x1,x2,0) -> {max3}"),
    )
}

fn region_concentration() -> Outcome {
    let spec = NetworkSpec::uniform(vec![2, 3, 3, 1], 1, 1.0);
    let counts = sample_region_counts(&spec, 0, 200, 9, RegionMethod::ExactLp, DEFAULT_MONOMIAL_CAP).unwrap();
    let b1 = lattice_region_bound(&spec, 0).unwrap();
    let grid: Vec<f64> = (1..=10).map(|k| (b1 - 1) as f64 * k as f64 / 10.0).collect();
    let reports = region_count_concentration(&counts, b1, &grid).unwrap();
    let ok = reports.iter().all(|r| r.empirical <= r.analytic + 3.0 * r.se) && counts.iter().all(|c| *c <= b1);
    let max = counts.iter().max().unwrap();
    outcome(ok, format!("200 networks, counts <= {max}, b1 = {b1}, {} thresholds", reports.len()))
}

/// Draws from one of several base families in `dim` dimensions.
fn base_sample(family: usize, dim: usize, scale: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| match family {
                    0 => scale * rng.sample::<f64, _>(StandardNormal),
                    1 => rng.random_range(-scale..scale),
                    2 => Exp::new(1.0 / scale).unwrap().sample(rng) - scale,
                    _ => {
                        let centre = if rng.random::<bool>() { scale } else { -scale };
                        centre + 0.3 * scale * rng.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect()
        })
        .collect()
}

fn convex_checker() -> Outcome {
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut false_alarms = 0;
    let mut misses = 0;
    for case in 0..20u64 {
        let family = case as usize % 4;
        let dim = rng.random_range(1..=3);
        let scale = rng.random_range(0.5..2.0);
        let x = base_sample(family, dim, scale, n, &mut rng);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let noisy: Vec<Vec<f64>> = base_sample(family, dim, scale, n, &mut rng)
            .into_iter()
            .map(|v| v.into_iter().map(|c| c + noise.sample(&mut rng)).collect())
            .collect();
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|c| *c /= norm);
        let shifted: Vec<Vec<f64>> = base_sample(family, dim, scale, n, &mut rng)
            .into_iter()
            .map(|v| v.iter().zip(&dir).map(|(c, u)| c + u).collect())
            .collect();
        let opts = ConvexOptions {
            seed: case,
            ..ConvexOptions::default()
        };
        if convex_order_check(&x, &noisy, &opts).unwrap().verdict != OrderVerdict::NotFalsified {
            false_alarms += 1;
        }
        if convex_order_check(&x, &shifted, &opts).unwrap().verdict != OrderVerdict::Falsified {
            misses += 1;
        }
    }
    outcome(
        false_alarms == 0 && misses == 0,
        format!("20 bases: {false_alarms} noise pairs falsified, {misses} shifted pairs not falsified"),
    )
}

fn determinism_config() -> ExperimentConfig {
    let reference = NetworkSpec::reference();
    let (classifier, score) = reference_classifier();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let process = random_markov_instance(&mut rng, 5, 3, DEFAULT_RULE_LIMIT);
    let text = serde_json::json!({
        "seed": 11,
        "simulate": {"network": reference, "n": 2000},
        "bounds": {"network": reference, "options": {"n": 10000, "pilot_n": 10000}},
        "classify": {"network": classifier, "score": score, "random_inputs": 4, "n": 5000},
        "select-layers": {
            "gamma": {"horizon": process.horizon(), "utility": "identity", "penalty": {"kind": "none"},
                      "process": {"kind": "finite-support", "process": process}},
            "options": {"method": "lsmc", "paths": 5000, "holdout": 5000}
        },
        "regions": {
            "polynomials": [{"d": 2, "monomials": [{"c": 0, "alpha": [1, 0]}, {"c": 0, "alpha": [0, 1]}, {"c": 0, "alpha": [0, 0]}]}],
            "networks": {"network": NetworkSpec::uniform(vec![2, 3, 1], 1, 1.0), "n": 50}
        },
        "mgale-check": {
            "network": {"network": NetworkSpec::uniform(vec![2, 2, 2, 2], 1, 1.0), "n": 4000, "centered": true, "pilot_n": 4000}
        }
    });
    harness::parse_config(&text.to_string()).unwrap()
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let config = determinism_config();
    let base = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in [1, 4] {
        let dir = base.path().join(format!("w{workers}"));
        for command in Command::ALL {
            let overrides = Overrides {
                workers: Some(workers),
                out: Some(dir.clone()),
                ..Overrides::default()
            };
            harness::run_subcommand(command, &config, &overrides).unwrap();
        }
        outputs.push(artifacts(&dir));
    }
    let identical = outputs[0] == outputs[1];
    outcome(
        identical && outputs[0].len() >= 8,
        format!("{} CSV files byte-identical across 1 and 4 workers: {identical}", outputs[0].len()),
    )
}
