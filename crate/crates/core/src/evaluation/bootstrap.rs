//! Nonparametric bootstrap over rows: per-condition metric summaries and
//! paired condition differences sharing one resample stream.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{brier, pr_auc, roc_auc, thresholded_metrics};
use crate::exec;
use crate::hashing::derive_rng;

pub const DEFAULT_REPLICATES: usize = 1000;

/// Metric families the bootstrap tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    Auroc,
    Auprc,
    Brier,
    Accuracy,
    BalancedAccuracy,
    Sensitivity,
    Specificity,
    Precision,
    F1,
}

pub const ALL_METRICS: [MetricId; 9] = [
    MetricId::Auroc,
    MetricId::Auprc,
    MetricId::Brier,
    MetricId::Accuracy,
    MetricId::BalancedAccuracy,
    MetricId::Sensitivity,
    MetricId::Specificity,
    MetricId::Precision,
    MetricId::F1,
];

impl MetricId {
    pub fn key(self) -> &'static str {
        match self {
            MetricId::Auroc => "auroc",
            MetricId::Auprc => "auprc",
            MetricId::Brier => "brier",
            MetricId::Accuracy => "accuracy",
            MetricId::BalancedAccuracy => "balanced_accuracy",
            MetricId::Sensitivity => "sensitivity",
            MetricId::Specificity => "specificity",
            MetricId::Precision => "precision",
            MetricId::F1 => "f1",
        }
    }

    pub fn parse(name: &str) -> Result<MetricId> {
        ALL_METRICS
            .into_iter()
            .find(|m| m.key() == name)
            .ok_or_else(|| Error::validation(format!("unknown metric {name:?}")))
    }

    /// Ranking metrics are undefined on single-class data.
    pub fn is_ranking(self) -> bool {
        matches!(self, MetricId::Auroc | MetricId::Auprc)
    }

    /// Point value on the same scale the reports use: percent for everything
    /// except brier.
    pub fn compute(self, scores: &[f64], labels: &[u8], tau: f64) -> Result<f64> {
        match self {
            MetricId::Auroc => Ok(100.0 * roc_auc(scores, labels)?),
            MetricId::Auprc => Ok(100.0 * pr_auc(scores, labels)?),
            MetricId::Brier => brier(scores, labels),
            other => {
                let t = thresholded_metrics(scores, labels, tau)?;
                Ok(match other {
                    MetricId::Accuracy => t.accuracy,
                    MetricId::BalancedAccuracy => t.balanced_accuracy,
                    MetricId::Sensitivity => t.sensitivity,
                    MetricId::Specificity => t.specificity,
                    MetricId::Precision => t.precision,
                    MetricId::F1 => t.f1,
                    _ => unreachable!(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Replicates that produced this metric.
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub b: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Replicates whose resample held a single class, skipping ranking
    /// metrics.
    pub skipped_ranking: usize,
    pub metrics: BTreeMap<String, MetricSummary>,
}

/// Sample standard deviation; zero when fewer than two values.
fn sample_sd(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile on sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn summarize(values: &[f64]) -> MetricSummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sd = sample_sd(values, mean);
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("metric values must be comparable"));
    MetricSummary {
        mean,
        sd,
        ci_lo: quantile(&sorted, 0.025),
        ci_hi: quantile(&sorted, 0.975),
        replicates: values.len(),
    }
}

/// The index multiset replicate `rep` resamples: n uniform draws with
/// replacement from a stream derived from (seed, rep).
pub fn replicate_indices(seed: u64, rep: usize, n: usize) -> Vec<usize> {
    let mut rng = derive_rng(seed, &["bootstrap", &rep.to_string()]);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

fn resample<T: Copy>(data: &[T], indices: &[usize]) -> Vec<T> {
    indices.iter().map(|&i| data[i]).collect()
}

fn single_class(labels: &[u8]) -> bool {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    pos == 0 || pos == labels.len()
}

/// Resamples rows B times and summarizes every metric with mean, sample sd,
/// and percentile 2.5/97.5 bounds. Single-class resamples skip the ranking
/// metrics and are counted.
pub fn bootstrap_evaluate(
    scores: &[f64],
    labels: &[u8],
    tau: f64,
    b: usize,
    seed: u64,
) -> Result<BootstrapSummary> {
    if scores.len() != labels.len() {
        return Err(Error::validation("scores and labels differ in length"));
    }
    if scores.len() < 2 {
        return Err(Error::validation("bootstrap needs at least two rows"));
    }
    if b == 0 {
        return Err(Error::validation("bootstrap needs at least one replicate"));
    }
    let n = scores.len();
    let per_replicate = exec::ordered_map_range(b, |rep| -> Result<Vec<Option<f64>>> {
        let idx = replicate_indices(seed, rep, n);
        let s = resample(scores, &idx);
        let l = resample(labels, &idx);
        let skip_ranking = single_class(&l);
        let mut out = Vec::with_capacity(ALL_METRICS.len());
        for metric in ALL_METRICS {
            if metric.is_ranking() && skip_ranking {
                out.push(None);
            } else {
                out.push(Some(metric.compute(&s, &l, tau)?));
            }
        }
        Ok(out)
    });
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ALL_METRICS.len()];
    let mut skipped_ranking = 0;
    for row in per_replicate {
        let row = row?;
        if row[0].is_none() {
            skipped_ranking += 1;
        }
        for (col, value) in columns.iter_mut().zip(row) {
            if let Some(v) = value {
                col.push(v);
            }
        }
    }
    let mut metrics = BTreeMap::new();
    for (metric, values) in ALL_METRICS.into_iter().zip(&columns) {
        if !values.is_empty() {
            metrics.insert(metric.key().to_string(), summarize(values));
        }
    }
    Ok(BootstrapSummary { b, seed, threshold: tau, skipped_ranking, metrics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDiff {
    pub metric: String,
    pub b: usize,
    pub seed: u64,
    /// Difference on the unresampled data.
    pub point_diff: f64,
    /// Per-replicate differences, replicate order, skipped replicates
    /// omitted.
    pub diffs: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub skipped: usize,
}

/// Paired bootstrap: each replicate draws ONE index multiset and applies it
/// to both conditions, then differences the metric (first minus second).
/// Streams match bootstrap_evaluate for the same seed.
#[allow(clippy::too_many_arguments)]
pub fn paired_bootstrap_diff(
    scores_a: &[f64],
    scores_b: &[f64],
    labels: &[u8],
    tau_a: f64,
    tau_b: f64,
    b: usize,
    seed: u64,
    metric: MetricId,
) -> Result<PairedDiff> {
    if scores_a.len() != labels.len() || scores_b.len() != labels.len() {
        return Err(Error::validation(
            "paired comparison needs both conditions aligned with the labels",
        ));
    }
    if labels.len() < 2 {
        return Err(Error::validation("bootstrap needs at least two rows"));
    }
    if b == 0 {
        return Err(Error::validation("bootstrap needs at least one replicate"));
    }
    let point_diff =
        metric.compute(scores_a, labels, tau_a)? - metric.compute(scores_b, labels, tau_b)?;
    let n = labels.len();
    let per_replicate = exec::ordered_map_range(b, |rep| -> Result<Option<f64>> {
        let idx = replicate_indices(seed, rep, n);
        let l = resample(labels, &idx);
        if metric.is_ranking() && single_class(&l) {
            return Ok(None);
        }
        let a = metric.compute(&resample(scores_a, &idx), &l, tau_a)?;
        let bb = metric.compute(&resample(scores_b, &idx), &l, tau_b)?;
        Ok(Some(a - bb))
    });
    let mut diffs = Vec::with_capacity(b);
    let mut skipped = 0;
    for d in per_replicate {
        match d? {
            Some(v) => diffs.push(v),
            None => skipped += 1,
        }
    }
    if diffs.is_empty() {
        return Err(Error::validation(format!(
            "every replicate skipped metric {}",
            metric.key()
        )));
    }
    let summary = summarize(&diffs);
    Ok(PairedDiff {
        metric: metric.key().to_string(),
        b,
        seed,
        point_diff,
        diffs,
        mean: summary.mean,
        sd: summary.sd,
        ci_lo: summary.ci_lo,
        ci_hi: summary.ci_hi,
        skipped,
    })
}
