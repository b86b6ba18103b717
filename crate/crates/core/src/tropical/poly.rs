use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::regions;
use super::value::{trop_add, trop_div, trop_mul, TropicalValue};
use crate::error::{Error, Result};

/// Default monomial cap before symbolic composition starts pruning.
pub const DEFAULT_MONOMIAL_CAP: usize = 10_000;

/// `coeff ⊙ x^{⊙ exponent}`, i.e. `coeff + Σ_k exponent_k·x_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TropicalMonomial {
    #[serde(rename = "c")]
    pub coeff: TropicalValue,
    #[serde(rename = "alpha")]
    pub exponent: Vec<u64>,
}

impl TropicalMonomial {
    pub fn new(coeff: impl Into<TropicalValue>, exponent: Vec<u64>) -> Self {
        Self {
            coeff: coeff.into(),
            exponent,
        }
    }

    pub fn eval(&self, x: &[f64]) -> TropicalValue {
        match self.coeff {
            TropicalValue::Bottom => TropicalValue::Bottom,
            TropicalValue::Finite(c) => TropicalValue::Finite(
                self.exponent
                    .iter()
                    .zip(x)
                    .fold(c, |acc, (&a, &xi)| acc + a as f64 * xi),
            ),
        }
    }
}

/// Finite max of tropical monomials over a common dimension.
///
/// Exponent vectors are kept distinct and sorted; duplicates supplied at
/// construction are merged by keeping the larger coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialJson", into = "PolynomialJson")]
pub struct TropicalPolynomial {
    dim: usize,
    monomials: Vec<TropicalMonomial>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    d: usize,
    monomials: Vec<TropicalMonomial>,
}

impl TryFrom<PolynomialJson> for TropicalPolynomial {
    type Error = Error;

    fn try_from(raw: PolynomialJson) -> Result<Self> {
        TropicalPolynomial::new(raw.d, raw.monomials)
    }
}

impl From<TropicalPolynomial> for PolynomialJson {
    fn from(p: TropicalPolynomial) -> Self {
        PolynomialJson {
            d: p.dim,
            monomials: p.monomials,
        }
    }
}

impl TropicalPolynomial {
    pub fn new(dim: usize, monomials: Vec<TropicalMonomial>) -> Result<Self> {
        if monomials.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        let mut merged: BTreeMap<Vec<u64>, TropicalValue> = BTreeMap::new();
        for m in monomials {
            if m.exponent.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "monomial exponent",
                    expected: dim,
                    got: m.exponent.len(),
                });
            }
            if let TropicalValue::Finite(c) = m.coeff {
                if !c.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite coefficient {c}; use bottom"
                    )));
                }
            }
            merged
                .entry(m.exponent)
                .and_modify(|c| *c = trop_add(*c, m.coeff))
                .or_insert(m.coeff);
        }
        Ok(Self::from_merged(dim, merged))
    }

    fn from_merged(dim: usize, merged: BTreeMap<Vec<u64>, TropicalValue>) -> Self {
        let monomials = merged
            .into_iter()
            .map(|(exponent, coeff)| TropicalMonomial { coeff, exponent })
            .collect();
        Self { dim, monomials }
    }

    /// Constant polynomial `c` (single monomial with zero exponent).
    pub fn constant(dim: usize, c: impl Into<TropicalValue>) -> Self {
        Self {
            dim,
            monomials: vec![TropicalMonomial::new(c, vec![0; dim])],
        }
    }

    /// The coordinate function `x_k`.
    pub fn variable(dim: usize, k: usize) -> Self {
        let mut exponent = vec![0; dim];
        exponent[k] = 1;
        Self {
            dim,
            monomials: vec![TropicalMonomial::new(0.0, exponent)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[TropicalMonomial] {
        &self.monomials
    }

    /// Max-plus value at `x`; bottom when every coefficient is bottom.
    pub fn eval_tropical(&self, x: &[f64]) -> Result<TropicalValue> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "polynomial evaluation",
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self
            .monomials
            .iter()
            .fold(TropicalValue::Bottom, |acc, m| trop_add(acc, m.eval(x))))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_tropical(x)?.finite().ok_or(Error::BottomValued)
    }

    /// Tropical sum (pointwise max) of two polynomials.
    pub fn trop_sum(&self, other: &TropicalPolynomial) -> Result<TropicalPolynomial> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                context: "tropical sum",
                expected: self.dim,
                got: other.dim,
            });
        }
        TropicalPolynomial::new(
            self.dim,
            self.monomials
                .iter()
                .chain(other.monomials.iter())
                .cloned()
                .collect(),
        )
    }

    /// Tropical product with a scalar: adds `c` to every coefficient.
    pub fn shift(&self, c: TropicalValue) -> TropicalPolynomial {
        Self {
            dim: self.dim,
            monomials: self
                .monomials
                .iter()
                .map(|m| TropicalMonomial {
                    coeff: trop_mul(m.coeff, c),
                    exponent: m.exponent.clone(),
                })
                .collect(),
        }
    }

    /// `f^{⊙w}` for a nonnegative integer `w`, computed as `w·f`.
    pub fn trop_power(&self, w: u64) -> Result<TropicalPolynomial> {
        if w == 0 {
            return Ok(Self::constant(self.dim, TropicalValue::ONE));
        }
        let mut merged = BTreeMap::new();
        for m in self.monomials.iter().filter(|m| !m.coeff.is_bottom()) {
            let exponent = m
                .exponent
                .iter()
                .map(|&a| a.checked_mul(w))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::InvalidArgument("exponent overflow".into()))?;
            let coeff = TropicalValue::Finite(m.coeff.finite().unwrap_or_default() * w as f64);
            merged
                .entry(exponent)
                .and_modify(|c| *c = trop_add(*c, coeff))
                .or_insert(coeff);
        }
        if merged.is_empty() {
            return Ok(Self::constant(self.dim, TropicalValue::Bottom));
        }
        Ok(Self::from_merged(self.dim, merged))
    }

    /// Symbolic tropical product (Minkowski sum of supports).
    pub fn trop_product(&self, other: &TropicalPolynomial) -> Result<TropicalPolynomial> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                context: "tropical product",
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut merged: BTreeMap<Vec<u64>, TropicalValue> = BTreeMap::new();
        for a in self.monomials.iter().filter(|m| !m.coeff.is_bottom()) {
            for b in other.monomials.iter().filter(|m| !m.coeff.is_bottom()) {
                let exponent = a
                    .exponent
                    .iter()
                    .zip(&b.exponent)
                    .map(|(x, y)| x.checked_add(*y))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::InvalidArgument("exponent overflow".into()))?;
                let coeff = trop_mul(a.coeff, b.coeff);
                merged
                    .entry(exponent)
                    .and_modify(|c| *c = trop_add(*c, coeff))
                    .or_insert(coeff);
            }
        }
        if merged.is_empty() {
            return Ok(Self::constant(self.dim, TropicalValue::Bottom));
        }
        Ok(Self::from_merged(self.dim, merged))
    }

    /// Drops monomials whose attainment cell is not full-dimensional.
    pub fn prune_nowhere_maximal(&self) -> Result<TropicalPolynomial> {
        regions::prune(self)
    }
}

/// `⨀_j polys_j^{⊙ weights_j} ⊙ bias`, evaluating to
/// `Σ_j weights_j·polys_j(x) + bias`.
///
/// When the running monomial count exceeds `cap`, monomials that are
/// nowhere maximal are pruned; if that is not enough a capacity error is
/// returned.
pub fn poly_weighted_combine(
    polys: &[&TropicalPolynomial],
    weights: &[i64],
    bias: TropicalValue,
    dim: usize,
    cap: usize,
) -> Result<TropicalPolynomial> {
    if polys.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            context: "weighted combine weights",
            expected: polys.len(),
            got: weights.len(),
        });
    }
    if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| **w < 0) {
        return Err(Error::NegativeWeight { index, weight });
    }
    let mut acc = TropicalPolynomial::constant(dim, bias);
    for (p, &w) in polys.iter().zip(weights) {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                context: "weighted combine polynomial",
                expected: dim,
                got: p.dim(),
            });
        }
        if w == 0 {
            continue;
        }
        acc = acc.trop_product(&p.trop_power(w as u64)?)?;
        acc = enforce_cap(acc, cap)?;
    }
    Ok(acc)
}

pub(crate) fn enforce_cap(p: TropicalPolynomial, cap: usize) -> Result<TropicalPolynomial> {
    if p.len() <= cap {
        return Ok(p);
    }
    let pruned = p.prune_nowhere_maximal()?;
    if pruned.len() > cap {
        return Err(Error::Capacity {
            count: pruned.len(),
            cap,
        });
    }
    Ok(pruned)
}

/// `f ⊘ g`, evaluated as `f(x) − g(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TropicalRational {
    pub numerator: TropicalPolynomial,
    pub denominator: TropicalPolynomial,
}

impl TropicalRational {
    pub fn new(numerator: TropicalPolynomial, denominator: TropicalPolynomial) -> Result<Self> {
        if numerator.dim() != denominator.dim() {
            return Err(Error::DimensionMismatch {
                context: "tropical rational",
                expected: numerator.dim(),
                got: denominator.dim(),
            });
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = trop_div(
            self.numerator.eval_tropical(x)?,
            self.denominator.eval_tropical(x)?,
        )?;
        v.finite().ok_or(Error::BottomValued)
    }
}
