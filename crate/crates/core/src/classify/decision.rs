use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::ScoreSpec;
use crate::error::{Error, Result};
use crate::rng::{pair_index, tags};
use crate::sdnn::{propagate_nu, sample_network_tagged, NetworkSpec};

/// Smallest Monte Carlo sample accepted for an expected score.
pub const MIN_SCORE_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreEstimate {
    pub estimate: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    C1,
    C2,
    Abstain,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::C1 => "C1",
            Label::C2 => "C2",
            Label::Abstain => "abstain",
        }
    }
}

/// Expected-classifier decision at one input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedDecision {
    pub estimate: f64,
    pub se: f64,
    pub label: Label,
    /// `|estimate − c|`.
    pub t: f64,
    /// `exp(−2t²/(b−a)²)`.
    pub bound: f64,
}

fn scores_at(net: &NetworkSpec, score: &ScoreSpec, x: &[f64], n: usize, seed: u64, tag: &str, input: u64) -> Result<Vec<f64>> {
    (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let sample = sample_network_tagged(net, seed, tag, pair_index(input, r))?;
            let nu = propagate_nu(&sample, x)?;
            Ok(score.score(nu.last().expect("nonempty")[0]))
        })
        .collect()
}

fn check_inputs(net: &NetworkSpec, score: &ScoreSpec, n: usize) -> Result<()> {
    net.validate("network")?;
    score.validate("score")?;
    if net.output_dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the expected classifier needs n_L = 1, got {}",
            net.output_dim()
        )));
    }
    if n < MIN_SCORE_SAMPLES {
        return Err(Error::TooFewSamples {
            required: MIN_SCORE_SAMPLES,
            got: n,
        });
    }
    Ok(())
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Monte Carlo estimate of `E[s(ν(x))]` over network draws at fixed `x`.
pub fn expected_score(net: &NetworkSpec, score: &ScoreSpec, x: &[f64], n: usize, seed: u64) -> Result<ScoreEstimate> {
    expected_score_indexed(net, score, x, n, seed, 0)
}

fn expected_score_indexed(
    net: &NetworkSpec,
    score: &ScoreSpec,
    x: &[f64],
    n: usize,
    seed: u64,
    input: u64,
) -> Result<ScoreEstimate> {
    check_inputs(net, score, n)?;
    let v = scores_at(net, score, x, n, seed, tags::CLASSIFY_ESTIMATE, input)?;
    let (estimate, se) = mean_se(&v);
    Ok(ScoreEstimate { estimate, se, n })
}

/// Labels an estimate: `C1` above `c`, `C2` below, abstain within `3·se` of `c`.
pub fn expected_classify(estimate: f64, se: f64, score: &ScoreSpec) -> Result<ExpectedDecision> {
    if estimate == score.c {
        return Err(Error::OnDecisionBoundary(score.c));
    }
    if !(score.a..=score.b).contains(&estimate) {
        return Err(Error::InvalidArgument(format!(
            "estimate {estimate} outside the score range [{}, {}]",
            score.a, score.b
        )));
    }
    let t = (estimate - score.c).abs();
    let label = if t <= 3.0 * se {
        Label::Abstain
    } else if estimate > score.c {
        Label::C1
    } else {
        Label::C2
    };
    let w = score.width();
    Ok(ExpectedDecision {
        estimate,
        se,
        label,
        t,
        bound: (-2.0 * t * t / (w * w)).exp(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditVerdict {
    Consistent,
    Violated,
    /// Estimate within `3·se` of `c`; not judged.
    Unresolved,
}

impl AuditVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditVerdict::Consistent => "consistent",
            AuditVerdict::Violated => "violated",
            AuditVerdict::Unresolved => "unresolved",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub input: usize,
    pub x: Vec<f64>,
    pub decision: ExpectedDecision,
    /// Fraction of fresh draws whose own decision disagrees with the label.
    pub empirical: f64,
    pub empirical_se: f64,
    pub n: usize,
    pub verdict: AuditVerdict,
}

/// For each input: estimate `E[s]` on one set of draws, then count how often
/// an independent draw's score falls on the other side of `c` (ties count as
/// disagreement) and compare with the bound.
pub fn disagreement_audit(
    net: &NetworkSpec,
    score: &ScoreSpec,
    inputs: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> Result<Vec<AuditReport>> {
    check_inputs(net, score, n)?;
    inputs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let est = expected_score_indexed(net, score, x, n, seed, i as u64)?;
            let decision = match expected_classify(est.estimate, est.se, score) {
                Ok(d) => d,
                Err(Error::OnDecisionBoundary(_)) => ExpectedDecision {
                    estimate: est.estimate,
                    se: est.se,
                    label: Label::Abstain,
                    t: 0.0,
                    bound: 1.0,
                },
                Err(e) => return Err(e),
            };
            if decision.label == Label::Abstain {
                return Ok(AuditReport {
                    input: i,
                    x: x.clone(),
                    decision,
                    empirical: f64::NAN,
                    empirical_se: f64::NAN,
                    n: 0,
                    verdict: AuditVerdict::Unresolved,
                });
            }
            let audit = scores_at(net, score, x, n, seed, tags::CLASSIFY_AUDIT, i as u64)?;
            let c = score.c;
            let disagree = audit
                .iter()
                .filter(|s| match decision.label {
                    Label::C1 => **s <= c,
                    _ => **s >= c,
                })
                .count();
            let p = disagree as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let verdict = if p - 3.0 * se > decision.bound {
                AuditVerdict::Violated
            } else {
                AuditVerdict::Consistent
            };
            Ok(AuditReport {
                input: i,
                x: x.clone(),
                decision,
                empirical: p,
                empirical_se: se,
                n,
                verdict,
            })
        })
        .collect()
}

pub const AUDIT_CSV_HEADER: [&str; 8] = ["input", "estimate", "se", "label", "t", "bound", "empirical", "verdict"];

pub fn write_audit_csv<W: Write>(reports: &[AuditReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AUDIT_CSV_HEADER)?;
    for r in reports {
        let empirical = if r.empirical.is_nan() {
            String::new()
        } else {
            r.empirical.to_string()
        };
        w.write_record([
            r.input.to_string(),
            r.decision.estimate.to_string(),
            r.decision.se.to_string(),
            r.decision.label.as_str().to_string(),
            r.decision.t.to_string(),
            r.decision.bound.to_string(),
            empirical,
            r.verdict.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
