//! Metrics, threshold selection, bootstrap resampling, paired comparison,
//! intervention gaps, and decision policies.

pub mod bootstrap;
pub mod policy;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::ScoreRecord;
use crate::supervision::Category;

/// Hard-prediction confusion counts at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn n(&self) -> usize {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }

    pub fn positives(&self) -> usize {
        self.true_pos + self.false_neg
    }

    pub fn negatives(&self) -> usize {
        self.true_neg + self.false_pos
    }
}

fn check_aligned(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::validation(format!(
            "scores ({}) and labels ({}) differ in length",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::validation(format!("labels must be 0 or 1, saw {bad}")));
    }
    Ok(())
}

/// Counts hard predictions at threshold tau. A score exactly at tau predicts
/// positive.
pub fn confusion_at(scores: &[f64], labels: &[u8], tau: f64) -> Result<Confusion> {
    check_aligned(scores, labels)?;
    let mut c = Confusion { true_pos: 0, true_neg: 0, false_pos: 0, false_neg: 0 };
    for (&s, &l) in scores.iter().zip(labels) {
        let pred = s >= tau;
        match (pred, l) {
            (true, 1) => c.true_pos += 1,
            (true, 0) => c.false_pos += 1,
            (false, 1) => c.false_neg += 1,
            (false, 0) => c.true_neg += 1,
            _ => unreachable!(),
        }
    }
    Ok(c)
}

/// Ranking quality as the Mann-Whitney statistic computed by rank summation,
/// with average ranks over tied scores. Requires both classes.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_aligned(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::validation("ranking metrics need both classes present"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("scores must be comparable"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied scores all take the group average rank.
        let avg_rank = ((i + 1 + j) as f64) / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let p = pos as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * neg as f64))
}

/// Average precision over descending-score cut points, with tied scores
/// entering as one group. Requires at least one positive.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_aligned(scores, labels)?;
    let total_pos = labels.iter().filter(|&&l| l == 1).count();
    if total_pos == 0 {
        return Err(Error::validation("average precision needs at least one positive"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("scores must be comparable"));
    let mut ap = 0.0;
    let mut seen = 0usize;
    let mut seen_pos = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut group_pos = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                group_pos += 1;
            }
            j += 1;
        }
        seen += j - i;
        seen_pos += group_pos;
        if group_pos > 0 {
            let precision = seen_pos as f64 / seen as f64;
            let delta_recall = group_pos as f64 / total_pos as f64;
            ap += precision * delta_recall;
        }
        i = j;
    }
    // Accumulation can overshoot the closed unit interval by an ulp when
    // the recall increments sum to exactly one.
    Ok(ap.clamp(0.0, 1.0))
}

/// Mean squared error between probabilities and binary labels.
pub fn brier(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_aligned(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::validation("brier score needs at least one row"));
    }
    let sum: f64 = scores.iter().zip(labels).map(|(&s, &l)| (s - l as f64).powi(2)).sum();
    // For probability scores every squared error is at most one, but the
    // accumulated mean can overshoot by an ulp; keep the declared range.
    Ok((sum / scores.len() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelection {
    pub condition_key: String,
    pub tau_star: f64,
    pub j_value: f64,
}

impl ThresholdSelection {
    pub fn for_condition(mut self, key: &str) -> ThresholdSelection {
        self.condition_key = key.to_string();
        self
    }
}

/// Candidate thresholds for a score set: midpoints between consecutive
/// distinct sorted scores, plus one sentinel below the minimum and one above
/// the maximum.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("scores must be comparable"));
    distinct.dedup();
    if distinct.is_empty() {
        return Vec::new();
    }
    let mut candidates = Vec::with_capacity(distinct.len() + 1);
    candidates.push(distinct[0] - 0.5);
    for pair in distinct.windows(2) {
        candidates.push((pair[0] + pair[1]) / 2.0);
    }
    candidates.push(distinct[distinct.len() - 1] + 0.5);
    candidates
}

/// Picks the threshold maximizing J = sensitivity + specificity - 1 on
/// validation scores, breaking ties toward the smallest candidate.
pub fn select_threshold_youden(val_scores: &[f64], val_labels: &[u8]) -> Result<ThresholdSelection> {
    check_aligned(val_scores, val_labels)?;
    let pos = val_labels.iter().filter(|&&l| l == 1).count();
    let neg = val_labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::validation("threshold selection needs both classes in validation"));
    }
    let mut best: Option<(f64, f64)> = None;
    for tau in threshold_candidates(val_scores) {
        let c = confusion_at(val_scores, val_labels, tau)?;
        let sens = c.true_pos as f64 / pos as f64;
        let spec = c.true_neg as f64 / neg as f64;
        let j = sens + spec - 1.0;
        // Candidates arrive in increasing order, so strict improvement keeps
        // the smallest threshold among ties.
        if best.is_none_or(|(_, bj)| j > bj) {
            best = Some((tau, j));
        }
    }
    let (tau_star, j_value) = best.expect("candidate list is nonempty for nonempty input");
    Ok(ThresholdSelection { condition_key: String::new(), tau_star, j_value })
}

/// Threshold-dependent metrics in percent. Ratios with an empty denominator
/// report 0 and list the metric under `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdedMetrics {
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
    pub degenerate: Vec<String>,
}

fn ratio_or_degenerate(num: f64, den: f64, name: &str, degenerate: &mut Vec<String>) -> f64 {
    if den == 0.0 {
        degenerate.push(name.to_string());
        0.0
    } else {
        num / den
    }
}

pub fn thresholded_metrics(scores: &[f64], labels: &[u8], tau: f64) -> Result<ThresholdedMetrics> {
    let c = confusion_at(scores, labels, tau)?;
    if c.n() == 0 {
        return Err(Error::validation("thresholded metrics need at least one row"));
    }
    let mut degenerate = Vec::new();
    let tp = c.true_pos as f64;
    let tn = c.true_neg as f64;
    let precision =
        ratio_or_degenerate(tp, (c.true_pos + c.false_pos) as f64, "precision", &mut degenerate);
    let sensitivity = ratio_or_degenerate(tp, c.positives() as f64, "sensitivity", &mut degenerate);
    let specificity = ratio_or_degenerate(tn, c.negatives() as f64, "specificity", &mut degenerate);
    let accuracy = (tp + tn) / c.n() as f64;
    let balanced_accuracy = (sensitivity + specificity) / 2.0;
    let f1 = ratio_or_degenerate(
        2.0 * precision * sensitivity,
        precision + sensitivity,
        "f1",
        &mut degenerate,
    );
    Ok(ThresholdedMetrics {
        precision: 100.0 * precision,
        sensitivity: 100.0 * sensitivity,
        specificity: 100.0 * specificity,
        accuracy: 100.0 * accuracy,
        balanced_accuracy: 100.0 * balanced_accuracy,
        f1: 100.0 * f1,
        confusion: c,
        degenerate,
    })
}

/// One condition's full metric panel. Ranking and threshold metrics are in
/// percent; brier stays a probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub condition_key: String,
    pub n: usize,
    pub threshold: f64,
    pub auroc: f64,
    pub auprc: f64,
    pub brier: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub degenerate: Vec<String>,
}

pub fn metric_report(
    scores: &[f64],
    labels: &[u8],
    tau: f64,
    condition_key: &str,
) -> Result<MetricReport> {
    let auroc = roc_auc(scores, labels)?;
    let auprc = pr_auc(scores, labels)?;
    let brier = brier(scores, labels)?;
    let t = thresholded_metrics(scores, labels, tau)?;
    Ok(MetricReport {
        condition_key: condition_key.to_string(),
        n: scores.len(),
        threshold: tau,
        auroc: 100.0 * auroc,
        auprc: 100.0 * auprc,
        brier,
        f1: t.f1,
        accuracy: t.accuracy,
        balanced_accuracy: t.balanced_accuracy,
        sensitivity: t.sensitivity,
        specificity: t.specificity,
        precision: t.precision,
        degenerate: t.degenerate,
    })
}

/// Joins score records to labels by row id, preserving score order. Every
/// score must have a label.
pub fn join_scores_to_labels(
    scores: &[ScoreRecord],
    labels_by_row: &BTreeMap<String, u8>,
) -> Result<(Vec<f64>, Vec<u8>)> {
    let mut s = Vec::with_capacity(scores.len());
    let mut l = Vec::with_capacity(scores.len());
    for rec in scores {
        let label = labels_by_row
            .get(&rec.row_id)
            .ok_or_else(|| Error::validation(format!("no label for row {:?}", rec.row_id)))?;
        s.push(rec.probability);
        l.push(*label);
    }
    Ok((s, l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowGap {
    pub row_id: String,
    pub delta: f64,
}

/// Per-row and aggregate drop in score when evidence is perturbed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionGap {
    pub per_row: Vec<RowGap>,
    pub mean: f64,
    pub per_category_mean: BTreeMap<String, f64>,
}

/// Row-wise difference correct minus perturbed, with overall and
/// per-category means. Both inputs must carry the same row ids in the same
/// order.
pub fn intervention_gap(
    correct: &[ScoreRecord],
    perturbed: &[ScoreRecord],
    category_by_row: &BTreeMap<String, Category>,
) -> Result<InterventionGap> {
    if correct.len() != perturbed.len() {
        return Err(Error::validation(format!(
            "conditions differ in row count: {} vs {}",
            correct.len(),
            perturbed.len()
        )));
    }
    if correct.is_empty() {
        return Err(Error::validation("intervention gap needs at least one row"));
    }
    let mut per_row = Vec::with_capacity(correct.len());
    let mut by_cat: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut total = 0.0;
    for (a, b) in correct.iter().zip(perturbed) {
        if a.row_id != b.row_id {
            return Err(Error::validation(format!(
                "row misalignment: {:?} vs {:?}",
                a.row_id, b.row_id
            )));
        }
        let category = category_by_row
            .get(&a.row_id)
            .ok_or_else(|| Error::validation(format!("no category for row {:?}", a.row_id)))?;
        let delta = a.probability - b.probability;
        total += delta;
        let slot = by_cat.entry(category.as_str().to_string()).or_insert((0.0, 0));
        slot.0 += delta;
        slot.1 += 1;
        per_row.push(RowGap { row_id: a.row_id.clone(), delta });
    }
    let per_category_mean =
        by_cat.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect();
    Ok(InterventionGap { per_row, mean: total / correct.len() as f64, per_category_mean })
}

/// Restricts two score lists to their shared row ids, in the first list's
/// order. Used before gap computation when a perturbed condition dropped
/// rows.
pub fn align_by_row_id<'a>(
    a: &'a [ScoreRecord],
    b: &'a [ScoreRecord],
) -> (Vec<ScoreRecord>, Vec<ScoreRecord>) {
    let b_by_id: BTreeMap<&str, &ScoreRecord> =
        b.iter().map(|r| (r.row_id.as_str(), r)).collect();
    let mut out_a = Vec::new();
    let mut out_b = Vec::new();
    for rec in a {
        if let Some(&other) = b_by_id.get(rec.row_id.as_str()) {
            out_a.push(rec.clone());
            out_b.push(other.clone());
        }
    }
    (out_a, out_b)
}
