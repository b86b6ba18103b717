//! Linear-region counting for tropical polynomials.
//!
//! A monomial owns a linear region iff its attainment cell
//! `{x : affine_i(x) ≥ affine_j(x) ∀ j}` is full-dimensional. The exact
//! method decides this with the LP
//!
//! ```text
//! maximize δ  s.t.  (α_i − α_j)·x − δ ≥ c_j − c_i   ∀ j ≠ i,   δ ≤ 1
//! ```
//!
//! and declares a region when `δ* > REGION_SLACK`. Attainment cells are
//! convex, so each full-dimensional cell is exactly one connected region.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use super::poly::{TropicalMonomial, TropicalPolynomial};
use super::value::TropicalValue;
use crate::error::{Error, Result};

/// Slack above which an attainment cell counts as full-dimensional.
pub const REGION_SLACK: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    /// `[−10, 10]^d` with step 0.05 for `d ≤ 2`, 0.25 for `d = 3`.
    pub fn default_for(dim: usize) -> Self {
        let step = if dim <= 2 { 0.05 } else { 0.25 };
        GridSpec {
            lo: -10.0,
            hi: 10.0,
            step,
        }
    }

    fn points_per_axis(&self) -> usize {
        ((self.hi - self.lo) / self.step).round() as usize + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum RegionMethod {
    ExactLp,
    /// Distinct strict argmax indices over a grid. Only a lower bound on the
    /// true count: thin or far-away regions can be missed.
    GridOracle(GridSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionCount {
    pub count: usize,
    pub method: RegionMethod,
    pub dim: usize,
}

pub fn count_linear_regions(f: &TropicalPolynomial, method: RegionMethod) -> Result<RegionCount> {
    let dim = f.dim();
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let finite: Vec<(usize, &TropicalMonomial)> = finite_monomials(f);
    if finite.is_empty() {
        return Err(Error::BottomValued);
    }
    let count = match method {
        RegionMethod::ExactLp => {
            let mut count = 0;
            for &(index, _) in &finite {
                if attainment_slack(&finite, index)? > REGION_SLACK {
                    count += 1;
                }
            }
            count
        }
        RegionMethod::GridOracle(grid) => grid_count(&finite, dim, grid),
    };
    Ok(RegionCount { count, method, dim })
}

fn finite_monomials(f: &TropicalPolynomial) -> Vec<(usize, &TropicalMonomial)> {
    f.monomials()
        .iter()
        .enumerate()
        .filter(|(_, m)| !m.coeff.is_bottom())
        .collect()
}

fn coeff(m: &TropicalMonomial) -> f64 {
    m.coeff.finite().unwrap_or(f64::NEG_INFINITY)
}

/// Optimal `δ` for monomial `target` (index into the original polynomial).
fn attainment_slack(finite: &[(usize, &TropicalMonomial)], target: usize) -> Result<f64> {
    let (_, mi) = finite
        .iter()
        .find(|(i, _)| *i == target)
        .copied()
        .expect("target must be a finite monomial");
    let dim = mi.exponent.len();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..dim)
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let delta = problem.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    for &(j, mj) in finite {
        if j == target {
            continue;
        }
        let mut expr: Vec<(minilp::Variable, f64)> = Vec::with_capacity(dim + 1);
        for k in 0..dim {
            let diff = mi.exponent[k] as f64 - mj.exponent[k] as f64;
            if diff != 0.0 {
                expr.push((xs[k], diff));
            }
        }
        expr.push((delta, -1.0));
        problem.add_constraint(&expr[..], ComparisonOp::Ge, coeff(mj) - coeff(mi));
    }
    let solution = problem
        .solve()
        .map_err(|e| Error::NumericalInfeasibility {
            monomial: target,
            reason: e.to_string(),
        })?;
    Ok(solution[delta])
}

fn grid_count(finite: &[(usize, &TropicalMonomial)], dim: usize, grid: GridSpec) -> usize {
    let n = grid.points_per_axis();
    let total = n.pow(dim as u32);
    let mut seen = vec![false; finite.len()];
    let mut x = vec![0.0; dim];
    for flat in 0..total {
        let mut rem = flat;
        for xk in x.iter_mut() {
            *xk = grid.lo + (rem % n) as f64 * grid.step;
            rem /= n;
        }
        if let Some(winner) = strict_argmax(finite, &x, 1e-12) {
            seen[winner] = true;
        }
    }
    seen.into_iter().filter(|s| *s).count()
}

/// Position (in `finite`) of the unique maximizer at `x`, if it wins by more
/// than `margin`.
fn strict_argmax(finite: &[(usize, &TropicalMonomial)], x: &[f64], margin: f64) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    let mut arg = 0;
    for (pos, (_, m)) in finite.iter().enumerate() {
        let v = m.eval(x).finite().unwrap_or(f64::NEG_INFINITY);
        if v > best {
            second = best;
            best = v;
            arg = pos;
        } else if v > second {
            second = v;
        }
    }
    (best - second > margin).then_some(arg)
}

/// Removes monomials without a full-dimensional attainment cell. The pruned
/// polynomial differs from the input by at most `REGION_SLACK` anywhere.
pub(crate) fn prune(f: &TropicalPolynomial) -> Result<TropicalPolynomial> {
    let finite = finite_monomials(f);
    if finite.is_empty() {
        return Ok(f.clone());
    }
    let dim = f.dim();
    // Cheap certificates first: a strict winner at some probe point with
    // margin above the slack already has a full-dimensional cell.
    let mut keep = vec![false; finite.len()];
    let probes = probe_points(dim);
    for x in &probes {
        if let Some(pos) = strict_argmax(&finite, x, REGION_SLACK) {
            keep[pos] = true;
        }
    }
    for (pos, &(index, _)) in finite.iter().enumerate() {
        if !keep[pos] {
            keep[pos] = attainment_slack(&finite, index)? > REGION_SLACK;
        }
    }
    let kept: Vec<TropicalMonomial> = finite
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|((_, m), _)| (*m).clone())
        .collect();
    if kept.is_empty() {
        return Ok(TropicalPolynomial::constant(dim, TropicalValue::Bottom));
    }
    TropicalPolynomial::new(dim, kept)
}

fn probe_points(dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (-4..=4).map(|i| i as f64 * 2.5).collect();
    let n = axis.len();
    let total = n.pow(dim.min(3) as u32);
    (0..total)
        .map(|mut flat| {
            (0..dim)
                .map(|_| {
                    let v = axis[flat % n];
                    flat /= n;
                    v
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(dim: usize, ms: &[(f64, &[u64])]) -> TropicalPolynomial {
        TropicalPolynomial::new(
            dim,
            ms.iter()
                .map(|(c, a)| TropicalMonomial::new(*c, a.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    fn random_poly(rng: &mut ChaCha8Rng, dim: usize) -> TropicalPolynomial {
        let r = rng.random_range(1..=6);
        let ms = (0..r)
            .map(|_| {
                TropicalMonomial::new(
                    rng.random_range(-2.0..2.0),
                    (0..dim).map(|_| rng.random_range(0..4)).collect(),
                )
            })
            .collect();
        TropicalPolynomial::new(dim, ms).unwrap()
    }

    #[test]
    fn relu_has_two_regions() {
        let f = poly(1, &[(0.0, &[1]), (0.0, &[0])]);
        assert_eq!(count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count, 2);
        let grid = RegionMethod::GridOracle(GridSpec::default_for(1));
        assert_eq!(count_linear_regions(&f, grid).unwrap().count, 2);
    }

    #[test]
    fn max_of_two_coordinates_and_zero_has_three_regions() {
        let f = poly(2, &[(0.0, &[1, 0]), (0.0, &[0, 1]), (0.0, &[0, 0])]);
        let grid = RegionMethod::GridOracle(GridSpec::default_for(2));
        assert_eq!(count_linear_regions(&f, grid).unwrap().count, 3);
        assert_eq!(count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count, 3);
    }

    #[test]
    fn nowhere_maximal_monomial_is_not_counted() {
        // 2x dominates? no: x ≤ max(0, 2x) everywhere, touching only at 0.
        let f = poly(1, &[(0.0, &[0]), (0.0, &[1]), (0.0, &[2])]);
        assert_eq!(count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count, 2);
        let pruned = f.prune_nowhere_maximal().unwrap();
        assert_eq!(pruned.len(), 2);
    }

    #[test]
    fn bottom_monomials_are_ignored() {
        let f = TropicalPolynomial::new(
            1,
            vec![
                TropicalMonomial::new(0.0, vec![1]),
                TropicalMonomial::new(TropicalValue::Bottom, vec![0]),
            ],
        )
        .unwrap();
        assert_eq!(count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count, 1);
    }

    #[test]
    fn dimension_guard() {
        let f = TropicalPolynomial::constant(4, 0.0);
        assert!(matches!(
            count_linear_regions(&f, RegionMethod::ExactLp),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn exact_count_matches_grid_on_random_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..30 {
            let dim = rng.random_range(1..=2);
            let f = random_poly(&mut rng, dim);
            let exact = count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count;
            let grid = count_linear_regions(&f, RegionMethod::GridOracle(GridSpec::default_for(dim)))
                .unwrap()
                .count;
            assert_eq!(exact, grid, "{f:?}");
            assert!(exact >= 1 && exact <= f.len());
        }
    }

    #[test]
    fn count_invariant_under_constant_shift_and_pruning() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let f = random_poly(&mut rng, 2);
            let base = count_linear_regions(&f, RegionMethod::ExactLp).unwrap().count;
            let shifted = f.shift(TropicalValue::Finite(rng.random_range(-5.0..5.0)));
            assert_eq!(
                count_linear_regions(&shifted, RegionMethod::ExactLp).unwrap().count,
                base
            );
            let pruned = f.prune_nowhere_maximal().unwrap();
            assert_eq!(pruned.len(), base);
            assert_eq!(
                count_linear_regions(&pruned, RegionMethod::ExactLp).unwrap().count,
                base
            );
            for _ in 0..20 {
                let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
                assert!((pruned.eval(&x).unwrap() - f.eval(&x).unwrap()).abs() <= REGION_SLACK);
            }
        }
    }
}
