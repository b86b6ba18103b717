//! Binary classification by thresholding the expected score `E[s(ν(x))]`.

mod decision;
mod score;

pub use decision::{
    disagreement_audit, expected_classify, expected_score, write_audit_csv, AuditReport,
    AuditVerdict, ExpectedDecision, Label, ScoreEstimate, AUDIT_CSV_HEADER, MIN_SCORE_SAMPLES,
};
pub use score::{ScoreKind, ScoreSpec};

use crate::sdnn::{DistributionSpec, MatrixSpec, NetworkSpec, ThresholdSpec};

/// Reference classifier: `d = 2`, widths `2-4-4-1`, weights uniform on
/// `{−1,…,2}`, biases uniform on `[−1, 1]`, identity last layer, sigmoid
/// score with `c = 0.5`. Skewed weights keep `E[s]` away from `c`.
pub fn reference_classifier() -> (NetworkSpec, ScoreSpec) {
    let mut net = NetworkSpec::uniform(vec![2, 4, 4, 1], 1, 1.0).with_threshold(3, ThresholdSpec::Identity);
    net.weights = MatrixSpec::Iid {
        dist: DistributionSpec::uniform_int(-1, 2),
    };
    (net, ScoreSpec::default())
}
