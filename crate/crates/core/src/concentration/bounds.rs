use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of the clamped analytic value.
pub const ANALYTIC_CAP: f64 = 2.0;

/// `2·exp(−t²/(2ξ²))`.
pub fn nsg_bound(t: f64, xi: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::InvalidArgument(format!("xi must be positive, got {xi}")));
    }
    check_threshold(t)?;
    Ok(2.0 * (-t * t / (2.0 * xi * xi)).exp())
}

/// `2·exp(−2t²/(b−a)²)`.
pub fn hoeffding_bound(t: f64, a: f64, b: f64) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("need finite a < b, got [{a}, {b}]")));
    }
    check_threshold(t)?;
    let w = b - a;
    Ok(2.0 * (-2.0 * t * t / (w * w)).exp())
}

/// `2·exp(1 − (Ma−1)²/(2l))`.
pub fn mgale_bound(a: f64, m: f64, l: u64) -> Result<f64> {
    if !(a > 0.0) || !(m > 0.0) || l == 0 || !a.is_finite() || !m.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need a > 0, M > 0, l >= 1; got a = {a}, M = {m}, l = {l}"
        )));
    }
    let s = m * a - 1.0;
    Ok(2.0 * (1.0 - s * s / (2.0 * l as f64)).exp())
}

/// `2·exp(−2t²/(b₁−1)²)` for counts in `[1, b₁]`.
pub fn region_count_bound(t: f64, b1: u64) -> Result<f64> {
    if b1 < 2 {
        return Err(Error::InvalidArgument(format!("need b1 > 1, got {b1}")));
    }
    hoeffding_bound(t, 1.0, b1 as f64)
}

fn check_threshold(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("threshold must be finite and >= 0, got {t}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Nsg,
    Hoeffding,
    Martingale,
    RegionCount,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Nsg => "nsg",
            BoundKind::Hoeffding => "hoeffding",
            BoundKind::Martingale => "martingale",
            BoundKind::RegionCount => "region-count",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Consistent,
    Violated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Consistent => "consistent",
            Verdict::Violated => "violated",
        }
    }
}

/// `violated` iff `empirical − 3·se > analytic`.
pub fn verdict(empirical: f64, se: f64, analytic: f64) -> Verdict {
    if empirical - 3.0 * se > analytic {
        Verdict::Violated
    } else {
        Verdict::Consistent
    }
}

/// One comparison of an empirical tail against an analytic bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// Layer index, when the bound refers to one.
    pub l: Option<usize>,
    /// Threshold `t`, or `Ma` for the martingale bound.
    pub t: f64,
    pub params: BTreeMap<String, f64>,
    /// Bound value clamped to `[0, 2]`.
    pub analytic: f64,
    /// Bound value before clamping.
    pub analytic_raw: f64,
    pub empirical: f64,
    pub se: f64,
    pub n: usize,
    pub verdict: Verdict,
}

impl BoundReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: BoundKind,
        l: Option<usize>,
        t: f64,
        params: impl IntoIterator<Item = (&'static str, f64)>,
        analytic_raw: f64,
        empirical: f64,
        se: f64,
        n: usize,
    ) -> Self {
        let analytic = analytic_raw.clamp(0.0, ANALYTIC_CAP);
        Self {
            kind,
            l,
            t,
            params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            analytic,
            analytic_raw,
            empirical,
            se,
            n,
            verdict: verdict(empirical, se, analytic),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }
}

pub const BOUND_CSV_HEADER: [&str; 8] = ["kind", "l", "t", "analytic", "empirical", "se", "n", "verdict"];

pub fn write_reports_csv<W: Write>(reports: &[BoundReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BOUND_CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.kind.as_str().to_string(),
            r.l.map_or(String::new(), |l| l.to_string()),
            r.t.to_string(),
            r.analytic.to_string(),
            r.empirical.to_string(),
            r.se.to_string(),
            r.n.to_string(),
            r.verdict.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reports_json<W: Write>(reports: &[BoundReport], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, reports)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(nsg_bound(0.0, 1.5).unwrap(), 2.0);
        assert_relative_eq!(nsg_bound(2.0, 2.0).unwrap(), 2.0 * (-0.5f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(nsg_bound(2.0, 2.0).unwrap(), 1.2130613194252668, max_relative = 1e-12);
        assert_relative_eq!(hoeffding_bound(3.0, 1.0, 4.0).unwrap(), 0.2706705664732254, max_relative = 1e-12);
        assert_relative_eq!(hoeffding_bound(1e-9, 0.0, 1.0).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(mgale_bound(1.0, 1.0, 3).unwrap(), 2.0 * std::f64::consts::E, max_relative = 1e-12);
        assert_relative_eq!(mgale_bound(5.0, 1.0, 2).unwrap(), 0.09957413673572789, max_relative = 1e-12);
        assert_relative_eq!(region_count_bound(4.0, 5).unwrap(), 2.0 * (-2.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn invalid_parameters() {
        assert!(nsg_bound(1.0, 0.0).is_err());
        assert!(nsg_bound(-1.0, 1.0).is_err());
        assert!(hoeffding_bound(1.0, 2.0, 2.0).is_err());
        assert!(mgale_bound(0.0, 1.0, 1).is_err());
        assert!(mgale_bound(1.0, -1.0, 1).is_err());
        assert!(mgale_bound(1.0, 1.0, 0).is_err());
        assert!(region_count_bound(1.0, 1).is_err());
    }

    #[test]
    fn two_point_law_is_consistent() {
        // |X − 1/2| = 1/2 for X ∈ {0, 1}, so the tail at 0.4 is exactly 1.
        let tail = [0.0f64, 1.0].iter().filter(|x| (*x - 0.5).abs() >= 0.4).count() as f64 / 2.0;
        let bound = hoeffding_bound(0.4, 0.0, 1.0).unwrap();
        assert_relative_eq!(bound, 2.0 * (-0.32f64).exp(), max_relative = 1e-12);
        let r = BoundReport::new(BoundKind::Hoeffding, None, 0.4, [], bound, tail, 0.0, 2);
        assert_eq!(r.verdict, Verdict::Consistent);
    }

    #[test]
    fn report_clamps_and_decides() {
        let r = BoundReport::new(BoundKind::Martingale, Some(1), 1.0, [("M", 1.0)], 5.4, 0.9, 0.0, 10);
        assert_eq!(r.analytic, 2.0);
        assert_eq!(r.analytic_raw, 5.4);
        assert!(r.is_consistent());
        assert_eq!(verdict(0.5, 0.1, 0.19), Verdict::Violated);
        assert_eq!(verdict(0.5, 0.1, 0.2000001), Verdict::Consistent);
    }

    #[test]
    fn csv_columns() {
        let r = BoundReport::new(BoundKind::Nsg, Some(2), 0.5, [("xi", 1.0)], 1.0, 0.1, 0.01, 1000);
        let mut buf = Vec::new();
        write_reports_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "kind,l,t,analytic,empirical,se,n,verdict\nnsg,2,0.5,1,0.1,0.01,1000,consistent\n");
    }

    proptest! {
        #[test]
        fn bounds_decrease_in_threshold(t1 in 0.0f64..10.0, dt in 0.0f64..10.0, xi in 0.1f64..5.0, w in 0.1f64..5.0) {
            let t2 = t1 + dt;
            prop_assert!(nsg_bound(t2, xi).unwrap() <= nsg_bound(t1, xi).unwrap());
            prop_assert!(hoeffding_bound(t2, 0.0, w).unwrap() <= hoeffding_bound(t1, 0.0, w).unwrap());
            let b = nsg_bound(t1, xi).unwrap();
            prop_assert!((0.0..=2.0).contains(&b));
        }

        #[test]
        fn mgale_decreases_past_one(m in 0.1f64..3.0, a in 0.1f64..10.0, da in 0.0f64..5.0, l in 1u64..50) {
            prop_assume!(m * a >= 1.0);
            prop_assert!(mgale_bound(a + da, m, l).unwrap() <= mgale_bound(a, m, l).unwrap());
        }

        #[test]
        fn verdict_is_pure(e in 0.0f64..1.0, se in 0.0f64..0.1, a in 0.0f64..2.0) {
            prop_assert_eq!(verdict(e, se, a), verdict(e, se, a));
            prop_assert_eq!(verdict(e, se, a) == Verdict::Violated, e - 3.0 * se > a);
        }
    }
}
