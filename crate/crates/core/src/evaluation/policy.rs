//! Deployment-side decision rules on top of verifier scores: accept,
//! three-way triage, and candidate reranking, with an optional monotone
//! calibration map applied first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear monotone map from raw to calibrated scores. Knot x
/// coordinates strictly increase, y coordinates never decrease; inputs
/// outside the knot range clamp to the end knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub knots: Vec<(f64, f64)>,
}

impl CalibrationTable {
    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::validation("calibration table needs at least one knot"));
        }
        for pair in self.knots.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(Error::validation("calibration knot x coordinates must strictly increase"));
            }
            if pair[1].1 < pair[0].1 {
                return Err(Error::validation("calibration knot y coordinates must not decrease"));
            }
        }
        Ok(())
    }

    pub fn apply(&self, score: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if score <= first.0 {
            return first.1;
        }
        if score >= last.0 {
            return last.1;
        }
        for pair in self.knots.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            if score <= x1 {
                return y0 + (score - x0) / (x1 - x0) * (y1 - y0);
            }
        }
        last.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// Accept iff the calibrated score clears tau_acc.
    Accept { tau_acc: f64 },
    /// Accept at or above tau_high, revise at or above tau_low, escalate
    /// below.
    ThreeWay { tau_low: f64, tau_high: f64 },
    /// Pick the highest-scoring candidate; ties go to the lowest index.
    Rerank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPolicy {
    #[serde(flatten)]
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationTable>,
}

impl DecisionPolicy {
    pub fn validate(&self) -> Result<()> {
        if let PolicyKind::ThreeWay { tau_low, tau_high } = self.kind {
            if tau_low >= tau_high {
                return Err(Error::validation(format!(
                    "three_way needs tau_low < tau_high, got {tau_low} and {tau_high}"
                )));
            }
        }
        if let Some(table) = &self.calibration {
            table.validate()?;
        }
        Ok(())
    }

    fn calibrate(&self, score: f64) -> f64 {
        match &self.calibration {
            Some(table) => table.apply(score),
            None => score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionAction {
    Accept,
    Revise,
    Escalate,
    /// Rerank winner.
    Select,
    /// Rerank non-winner.
    Reject,
}

/// One claim-plus-evidence candidate put before a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCandidate {
    pub claim_text: String,
    pub evidence_ids: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub claim_text: String,
    pub evidence_ids: Vec<String>,
    pub raw_score: f64,
    pub calibrated_score: f64,
    pub action: DecisionAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PolicyOutcome {
    Single { record: DecisionRecord },
    Reranked { selected_index: usize, records: Vec<DecisionRecord> },
}

/// Runs one policy over its candidates. Accept and three-way expect exactly
/// one candidate; rerank takes one or more.
pub fn apply_decision_policy(
    policy: &DecisionPolicy,
    candidates: &[PolicyCandidate],
) -> Result<PolicyOutcome> {
    policy.validate()?;
    match policy.kind {
        PolicyKind::Accept { tau_acc } => {
            let c = single_candidate(candidates, "accept")?;
            let calibrated = policy.calibrate(c.score);
            let action =
                if calibrated >= tau_acc { DecisionAction::Accept } else { DecisionAction::Escalate };
            Ok(PolicyOutcome::Single { record: record_for(c, calibrated, action) })
        }
        PolicyKind::ThreeWay { tau_low, tau_high } => {
            let c = single_candidate(candidates, "three_way")?;
            let calibrated = policy.calibrate(c.score);
            let action = if calibrated >= tau_high {
                DecisionAction::Accept
            } else if calibrated >= tau_low {
                DecisionAction::Revise
            } else {
                DecisionAction::Escalate
            };
            Ok(PolicyOutcome::Single { record: record_for(c, calibrated, action) })
        }
        PolicyKind::Rerank => {
            if candidates.is_empty() {
                return Err(Error::validation("rerank needs at least one candidate"));
            }
            let calibrated: Vec<f64> =
                candidates.iter().map(|c| policy.calibrate(c.score)).collect();
            let mut selected = 0;
            for (i, &v) in calibrated.iter().enumerate() {
                if v > calibrated[selected] {
                    selected = i;
                }
            }
            let records = candidates
                .iter()
                .zip(&calibrated)
                .enumerate()
                .map(|(i, (c, &cal))| {
                    let action =
                        if i == selected { DecisionAction::Select } else { DecisionAction::Reject };
                    record_for(c, cal, action)
                })
                .collect();
            Ok(PolicyOutcome::Reranked { selected_index: selected, records })
        }
    }
}

fn single_candidate<'a>(
    candidates: &'a [PolicyCandidate],
    kind: &str,
) -> Result<&'a PolicyCandidate> {
    match candidates {
        [one] => Ok(one),
        other => Err(Error::validation(format!(
            "{kind} policy takes exactly one candidate, got {}",
            other.len()
        ))),
    }
}

fn record_for(c: &PolicyCandidate, calibrated: f64, action: DecisionAction) -> DecisionRecord {
    DecisionRecord {
        claim_text: c.claim_text.clone(),
        evidence_ids: c.evidence_ids.clone(),
        raw_score: c.score,
        calibrated_score: calibrated,
        action,
    }
}
