use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ScoreKind {
    /// `1/(1+e^{−v})`; requires `[a, b] = [0, 1]`.
    Sigmoid,
    /// `v` clamped to `[a, b]`.
    ClampedIdentity,
    /// Piecewise-linear interpolation through `(xs[i], ys[i])`, constant
    /// beyond the end points. `xs` and `ys` strictly increasing.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

/// A bounded injective score with range `[a, b]` and threshold `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScoreJson", into = "ScoreJson")]
pub struct ScoreSpec {
    pub kind: ScoreKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum KindName {
    Sigmoid,
    ClampedIdentity,
    Table,
}

/// Flat wire form: `{"kind": ..., "a", "b", "c"}` plus `xs`, `ys` for tables.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreJson {
    kind: KindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ys: Option<Vec<f64>>,
    a: f64,
    b: f64,
    c: f64,
}

impl From<ScoreJson> for ScoreSpec {
    fn from(raw: ScoreJson) -> Self {
        let kind = match raw.kind {
            KindName::Sigmoid => ScoreKind::Sigmoid,
            KindName::ClampedIdentity => ScoreKind::ClampedIdentity,
            // Missing tables fail `validate`.
            KindName::Table => ScoreKind::Table {
                xs: raw.xs.unwrap_or_default(),
                ys: raw.ys.unwrap_or_default(),
            },
        };
        ScoreSpec {
            kind,
            a: raw.a,
            b: raw.b,
            c: raw.c,
        }
    }
}

impl From<ScoreSpec> for ScoreJson {
    fn from(s: ScoreSpec) -> Self {
        let (kind, xs, ys) = match s.kind {
            ScoreKind::Sigmoid => (KindName::Sigmoid, None, None),
            ScoreKind::ClampedIdentity => (KindName::ClampedIdentity, None, None),
            ScoreKind::Table { xs, ys } => (KindName::Table, Some(xs), Some(ys)),
        };
        ScoreJson {
            kind,
            xs,
            ys,
            a: s.a,
            b: s.b,
            c: s.c,
        }
    }
}

impl Default for ScoreSpec {
    fn default() -> Self {
        ScoreSpec {
            kind: ScoreKind::Sigmoid,
            a: 0.0,
            b: 1.0,
            c: 0.5,
        }
    }
}

impl ScoreSpec {
    pub fn clamped_identity(a: f64, b: f64, c: f64) -> Self {
        ScoreSpec {
            kind: ScoreKind::ClampedIdentity,
            a,
            b,
            c,
        }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        let bad = |reason: String| Err(Error::spec(path, reason));
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return bad("a, b, c must be finite".into());
        }
        if !(self.a < self.c && self.c < self.b) {
            return bad(format!("need a < c < b, got a = {}, c = {}, b = {}", self.a, self.c, self.b));
        }
        match &self.kind {
            ScoreKind::Sigmoid => {
                if self.a != 0.0 || self.b != 1.0 {
                    return bad("sigmoid range is [0, 1]".into());
                }
            }
            ScoreKind::ClampedIdentity => {}
            ScoreKind::Table { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return bad("table needs at least two points and matching lengths".into());
                }
                let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]) && v.iter().all(|x| x.is_finite());
                if !increasing(xs) || !increasing(ys) {
                    return bad("table must be strictly increasing (injective)".into());
                }
                if ys[0] < self.a || ys[ys.len() - 1] > self.b {
                    return bad("table values must lie in [a, b]".into());
                }
            }
        }
        Ok(())
    }

    /// `s(v) ∈ [a, b]`.
    pub fn score(&self, v: f64) -> f64 {
        match &self.kind {
            ScoreKind::Sigmoid => 1.0 / (1.0 + (-v).exp()),
            ScoreKind::ClampedIdentity => v.clamp(self.a, self.b),
            ScoreKind::Table { xs, ys } => {
                let n = xs.len();
                if v <= xs[0] {
                    return ys[0];
                }
                if v >= xs[n - 1] {
                    return ys[n - 1];
                }
                let i = xs.partition_point(|x| *x <= v);
                let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
                y0 + (y1 - y0) * (v - x0) / (x1 - x0)
            }
        }
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let table = ScoreSpec {
            kind: ScoreKind::Table {
                xs: vec![-1.0, 1.0],
                ys: vec![0.0, 1.0],
            },
            a: 0.0,
            b: 1.0,
            c: 0.5,
        };
        for s in [ScoreSpec::default(), table] {
            let text = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<ScoreSpec>(&text).unwrap(), s);
        }
        assert!(serde_json::from_str::<ScoreSpec>(r#"{"kind":"sigmoid","a":0,"b":1,"c":0.5,"d":1}"#).is_err());
        let missing: ScoreSpec = serde_json::from_str(r#"{"kind":"table","a":0,"b":1,"c":0.5}"#).unwrap();
        assert!(missing.validate("score").is_err());
    }

    #[test]
    fn examples() {
        let s = ScoreSpec::default();
        s.validate("score").unwrap();
        assert_eq!(s.score(0.0), 0.5);
        let c = ScoreSpec::clamped_identity(-1.0, 1.0, 0.0);
        assert_eq!(c.score(5.0), 1.0);
        assert_eq!(c.score(-0.25), -0.25);
        let t = ScoreSpec {
            kind: ScoreKind::Table {
                xs: vec![-1.0, 0.0, 2.0],
                ys: vec![0.0, 0.5, 1.0],
            },
            ..ScoreSpec::default()
        };
        t.validate("score").unwrap();
        assert_eq!(t.score(1.0), 0.75);
        assert_eq!(t.score(-3.0), 0.0);
    }

    #[test]
    fn invalid_specs() {
        let mut s = ScoreSpec { c: 1.0, ..ScoreSpec::default() };
        assert!(s.validate("score").is_err());
        s = ScoreSpec { a: -1.0, ..ScoreSpec::default() };
        assert!(s.validate("score").is_err());
        let t = ScoreSpec {
            kind: ScoreKind::Table {
                xs: vec![0.0, 1.0],
                ys: vec![0.6, 0.6],
            },
            ..ScoreSpec::default()
        };
        assert!(t.validate("score").is_err());
    }

    proptest! {
        #[test]
        fn sigmoid_is_strictly_monotone(v1 in -30.0f64..30.0, dv in 1e-3f64..10.0) {
            let s = ScoreSpec::default();
            prop_assert!(s.score(v1) < s.score(v1 + dv));
            prop_assert!((0.0..=1.0).contains(&s.score(v1)));
        }
    }
}
