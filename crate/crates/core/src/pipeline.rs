//! End-to-end orchestration: a single config drives ingest, evidence
//! preparation, supervision construction, interventions, scoring, and
//! evaluation, with every stage persisted to disk and resumable from its
//! artifacts. A manifest with per-artifact checksums is written last.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, CaseRecord, RawCase, Split};
use crate::error::{Error, Result};
use crate::evaluation::bootstrap::{
    bootstrap_evaluate, paired_bootstrap_diff, BootstrapSummary, MetricId, PairedDiff,
    ALL_METRICS, DEFAULT_REPLICATES,
};
use crate::evaluation::{
    self, align_by_row_id, intervention_gap, metric_report, InterventionGap, MetricReport,
};
use crate::evidence::{self, Article, EvidenceSplit, EvidenceUnit, PoolAssignment};
use crate::interventions::{
    apply_intervention, EvidenceUniverse, InterventionKind, InterventionSpec, DEFAULT_DELIMITER,
};
use crate::io;
use crate::registry::ConceptRegistry;
use crate::scoring::{
    score_rows, ChannelMask, FormatOptions, ScoreRecord, ScorerSpec, ScoringContext, S1, S2, S3,
};
use crate::supervision::{
    compute_diagnostics, construct_supervision, Category, SamplingPolicy, VerifierRow,
};
use crate::synth::{generate_synthetic_corpus, SynthConfig};

fn default_split_ratios() -> (f64, f64, f64) {
    corpus::DEFAULT_SPLIT_RATIOS
}

fn default_heldout_ratio() -> f64 {
    0.2
}

fn default_token_budget() -> usize {
    1024
}

fn default_delimiter() -> String {
    DEFAULT_DELIMITER.to_string()
}

fn default_metric_keys() -> Vec<String> {
    ALL_METRICS.iter().map(|m| m.key().to_string()).collect()
}

fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}

/// Default condition set: unmodified, evidence removed, evidence swapped,
/// evidence redrawn from held-out articles. Seeds are fixed constants so a
/// config that omits the block is still fully pinned.
pub fn default_interventions() -> Vec<InterventionSpec> {
    vec![
        InterventionSpec::none(),
        InterventionSpec::empty(),
        InterventionSpec::swap(0),
        InterventionSpec::heldout(0),
    ]
}

/// Bootstrap and comparison settings. Every field has a fixed default;
/// nothing is derived from the clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSettings {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Metric keys kept in bootstrap summaries and paired comparisons.
    #[serde(default = "default_metric_keys")]
    pub metrics: Vec<String>,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            replicates: default_replicates(),
            seed: 0,
            metrics: default_metric_keys(),
        }
    }
}

impl EvaluationSettings {
    pub fn metric_ids(&self) -> Result<Vec<MetricId>> {
        if self.metrics.is_empty() {
            return Err(Error::validation("evaluation.metrics must not be empty"));
        }
        self.metrics.iter().map(|k| MetricId::parse(k)).collect()
    }
}

/// Complete description of one run. All seeds are explicit fields with fixed
/// defaults; two runs from equal configs and inputs produce equal artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub cases_path: PathBuf,
    pub articles_path: PathBuf,
    pub output_root: PathBuf,
    /// Concept registry TOML; the bundled registry when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registry_path: Option<PathBuf>,
    #[serde(default)]
    pub policy: SamplingPolicy,
    /// Seed for patient-level split assignment.
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_split_ratios")]
    pub split_ratios: (f64, f64, f64),
    /// Seed for evidence pool enrollment and article-level splitting.
    #[serde(default)]
    pub evidence_seed: u64,
    #[serde(default = "default_heldout_ratio")]
    pub heldout_ratio: f64,
    #[serde(default = "default_interventions")]
    pub interventions: Vec<InterventionSpec>,
    #[serde(default)]
    pub scorer: ScorerSpec,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
    /// Token budget applied when formatting scorer inputs.
    #[serde(default = "default_token_budget")]
    pub token_budget: usize,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
}

impl PipelineConfig {
    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let config: PipelineConfig = toml::from_str(raw)
            .map_err(|e| Error::validation(format!("bad pipeline config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&raw)
    }

    pub fn validate(&self) -> Result<()> {
        if self.token_budget == 0 {
            return Err(Error::validation("token_budget must be at least 1"));
        }
        let (a, b, c) = self.split_ratios;
        if !(a > 0.0 && b > 0.0 && c > 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "split_ratios must be three positive fractions summing to 1",
            ));
        }
        if !(self.heldout_ratio > 0.0 && self.heldout_ratio < 1.0) {
            return Err(Error::validation("heldout_ratio must lie strictly in (0, 1)"));
        }
        if self.interventions.is_empty() {
            return Err(Error::validation("at least one intervention condition is required"));
        }
        let mut keys = BTreeSet::new();
        for spec in &self.interventions {
            spec.validate()?;
            if !keys.insert(spec.condition_key()) {
                return Err(Error::validation(format!(
                    "duplicate condition {:?}",
                    spec.condition_key()
                )));
            }
        }
        self.policy.validate()?;
        self.scorer.validate()?;
        if self.evaluation.replicates == 0 {
            return Err(Error::validation("evaluation.replicates must be at least 1"));
        }
        self.evaluation.metric_ids()?;
        Ok(())
    }

    /// Hex digest of the canonical JSON form; equal configs hash equally.
    pub fn digest(&self) -> Result<String> {
        let canonical = serde_json::to_string(self)
            .map_err(|e| Error::validation(format!("config not serializable: {e}")))?;
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        Ok(format!("{:x}", hasher.finalize()))
    }

    pub fn load_registry(&self) -> Result<ConceptRegistry> {
        match &self.registry_path {
            None => Ok(ConceptRegistry::bundled()),
            Some(path) => {
                let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                ConceptRegistry::from_toml_str(&raw)
            }
        }
    }
}

/// Canonical artifact locations under one output root.
#[derive(Debug, Clone)]
pub struct StagePaths {
    pub root: PathBuf,
}

impl StagePaths {
    pub fn new(root: &Path) -> Self {
        StagePaths { root: root.to_path_buf() }
    }

    pub fn config_digest(&self) -> PathBuf {
        self.root.join("config_digest.txt")
    }

    pub fn cases(&self) -> PathBuf {
        self.root.join("cases.jsonl")
    }

    pub fn rejections(&self) -> PathBuf {
        self.root.join("rejections.jsonl")
    }

    pub fn evidence_units(&self) -> PathBuf {
        self.root.join("evidence_units.jsonl")
    }

    pub fn sentence_drops(&self) -> PathBuf {
        self.root.join("sentence_drops.jsonl")
    }

    pub fn pools(&self) -> PathBuf {
        self.root.join("pools.jsonl")
    }

    pub fn evidence_split(&self) -> PathBuf {
        self.root.join("evidence_split.json")
    }

    pub fn instances(&self) -> PathBuf {
        self.root.join("instances.jsonl")
    }

    pub fn easy_control(&self) -> PathBuf {
        self.root.join("easy_control.jsonl")
    }

    pub fn rows(&self) -> PathBuf {
        self.root.join("rows.jsonl")
    }

    pub fn construction_log(&self) -> PathBuf {
        self.root.join("construction_log.json")
    }

    pub fn diagnostics(&self) -> PathBuf {
        self.root.join("diagnostics.json")
    }

    pub fn condition_rows(&self, key: &str) -> PathBuf {
        self.root.join("conditions").join(key).join("rows.jsonl")
    }

    pub fn condition_manifest(&self, key: &str) -> PathBuf {
        self.root.join("conditions").join(key).join("manifest.json")
    }

    pub fn scores(&self, composite: &str) -> PathBuf {
        self.root.join("scores").join(format!("{composite}.jsonl"))
    }

    pub fn metrics_report(&self, composite: &str) -> PathBuf {
        self.root.join("reports").join(format!("metrics__{composite}.json"))
    }

    pub fn bootstrap_report(&self, composite: &str) -> PathBuf {
        self.root.join("reports").join(format!("bootstrap__{composite}.json"))
    }

    pub fn thresholds(&self) -> PathBuf {
        self.root.join("reports").join("thresholds.json")
    }

    pub fn comparison(&self) -> PathBuf {
        self.root.join("reports").join("comparison.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

/// Scoring target: the unmodified condition is rendered under all three
/// channel masks; modified-evidence conditions only make sense with the
/// evidence channel on.
pub fn masks_for_condition(kind: InterventionKind) -> &'static [ChannelMask] {
    match kind {
        InterventionKind::None => &[S1, S2, S3],
        _ => &[S3],
    }
}

pub fn composite_key(condition_key: &str, mask: ChannelMask) -> String {
    format!("{condition_key}__{}", mask.label())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub tool_version: String,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    /// stage name → artifact path relative to the output root → sha256.
    pub stage_checksums: BTreeMap<String, BTreeMap<String, String>>,
}

/// Threshold selected on the validation split of one scored condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRecord {
    pub key: String,
    pub tau: f64,
    /// Objective value at the selected threshold; absent when the validation
    /// slice was degenerate and the default threshold was used instead.
    pub youden_j: Option<f64>,
    pub n_validation: usize,
    pub fallback_default: bool,
}

/// One modified condition measured against the unmodified one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionComparison {
    pub baseline_key: String,
    pub condition_key: String,
    pub n_aligned_test: usize,
    pub diffs: Vec<PairedDiff>,
    pub gap: InterventionGap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub comparisons: Vec<ConditionComparison>,
}

/// In-memory result of the scoring stage for one condition and mask.
#[derive(Debug, Clone)]
pub struct ScoredSet {
    pub condition_key: String,
    pub mask: ChannelMask,
    pub records: Vec<ScoreRecord>,
}

fn in_stage<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| Error::stage(format!("stage {name}: {e}")))
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Reads, validates, splits, and persists the case corpus. Resumes from
/// `cases.jsonl` when present.
pub fn stage_ingest(
    config: &PipelineConfig,
    paths: &StagePaths,
    force: bool,
) -> Result<Vec<CaseRecord>> {
    let out = paths.cases();
    if !force && out.is_file() && paths.rejections().is_file() {
        log::info!("ingest: resuming from {}", out.display());
        return in_stage("ingest", io::read_jsonl(&out));
    }
    let run = || -> Result<Vec<CaseRecord>> {
        let raws: Vec<RawCase> = io::read_jsonl(&config.cases_path)?;
        let (mut cases, rejections) = corpus::ingest_cases(&raws)?;
        let splits = corpus::assign_patient_splits(&cases, config.split_seed, config.split_ratios)?;
        corpus::apply_splits(&mut cases, &splits)?;
        io::write_jsonl(&out, &cases)?;
        io::write_jsonl(&paths.rejections(), &rejections)?;
        log::info!("ingest: {} cases kept, {} rejected", cases.len(), rejections.len());
        Ok(cases)
    };
    in_stage("ingest", run())
}

/// Segments articles, assigns pool roles, and splits articles into
/// in-protocol and held-out sets. Resumes from persisted artifacts.
pub fn stage_evidence(
    config: &PipelineConfig,
    registry: &ConceptRegistry,
    paths: &StagePaths,
    force: bool,
) -> Result<(Vec<EvidenceUnit>, Vec<PoolAssignment>, EvidenceSplit)> {
    let units_path = paths.evidence_units();
    let pools_path = paths.pools();
    let split_path = paths.evidence_split();
    if !force
        && units_path.is_file()
        && pools_path.is_file()
        && split_path.is_file()
        && paths.sentence_drops().is_file()
    {
        log::info!("evidence: resuming from {}", units_path.display());
        let run = || -> Result<(Vec<EvidenceUnit>, Vec<PoolAssignment>, EvidenceSplit)> {
            Ok((
                io::read_jsonl(&units_path)?,
                io::read_jsonl(&pools_path)?,
                io::read_json(&split_path)?,
            ))
        };
        return in_stage("evidence", run());
    }
    let run = || -> Result<(Vec<EvidenceUnit>, Vec<PoolAssignment>, EvidenceSplit)> {
        let articles: Vec<Article> = io::read_jsonl(&config.articles_path)?;
        let (units, drops) = evidence::build_evidence_units(&articles)?;
        let assignments = evidence::assign_pools(&units, registry, config.evidence_seed);
        let article_ids: Vec<String> = articles.iter().map(|a| a.article_id.clone()).collect();
        let split = evidence::split_articles(
            &units,
            &assignments,
            &article_ids,
            config.evidence_seed,
            1.0 - config.heldout_ratio,
        )?;
        io::write_jsonl(&units_path, &units)?;
        io::write_jsonl(&paths.sentence_drops(), &drops)?;
        io::write_jsonl(&pools_path, &assignments)?;
        io::write_json(&split_path, &split)?;
        log::info!(
            "evidence: {} units from {} articles, {} held out",
            units.len(),
            article_ids.len(),
            split.heldout_article_ids.len()
        );
        Ok((units, assignments, split))
    };
    in_stage("evidence", run())
}

/// Builds case-concept instances and constructs the labeled row set.
/// Resumes from `rows.jsonl`.
pub fn stage_supervision(
    config: &PipelineConfig,
    registry: &ConceptRegistry,
    cases: &[CaseRecord],
    assignments: &[PoolAssignment],
    paths: &StagePaths,
    force: bool,
) -> Result<Vec<VerifierRow>> {
    let rows_path = paths.rows();
    if !force
        && rows_path.is_file()
        && paths.instances().is_file()
        && paths.easy_control().is_file()
        && paths.construction_log().is_file()
        && paths.diagnostics().is_file()
    {
        log::info!("supervision: resuming from {}", rows_path.display());
        return in_stage("supervision", io::read_jsonl(&rows_path));
    }
    let run = || -> Result<Vec<VerifierRow>> {
        let partition = corpus::build_instances(cases, registry)?;
        let (rows, construction_log) =
            construct_supervision(&partition.benchmark, assignments, &config.policy, registry)?;
        let diagnostics = compute_diagnostics(&rows)?;
        io::write_jsonl(&paths.instances(), &partition.benchmark)?;
        io::write_jsonl(&paths.easy_control(), &partition.easy_control)?;
        io::write_jsonl(&rows_path, &rows)?;
        io::write_json(&paths.construction_log(), &construction_log)?;
        io::write_json(&paths.diagnostics(), &diagnostics)?;
        log::info!(
            "supervision: {} rows from {} instances",
            rows.len(),
            partition.benchmark.len()
        );
        Ok(rows)
    };
    in_stage("supervision", run())
}

/// Applies every configured intervention, one row file and manifest per
/// condition. Conditions resume independently.
pub fn stage_interventions(
    config: &PipelineConfig,
    rows: &[VerifierRow],
    assignments: &[PoolAssignment],
    universe: &EvidenceUniverse,
    evidence_split: &EvidenceSplit,
    paths: &StagePaths,
    force: bool,
) -> Result<Vec<(InterventionSpec, Vec<VerifierRow>)>> {
    let mut out = Vec::new();
    for spec in &config.interventions {
        let key = spec.condition_key();
        let rows_path = paths.condition_rows(&key);
        if !force && rows_path.is_file() && paths.condition_manifest(&key).is_file() {
            log::info!("interventions: resuming condition {key}");
            let loaded = in_stage("interventions", io::read_jsonl(&rows_path))?;
            out.push((spec.clone(), loaded));
            continue;
        }
        let run = || -> Result<Vec<VerifierRow>> {
            let (condition_rows, manifest) =
                apply_intervention(rows, spec, assignments, universe, evidence_split)?;
            io::write_jsonl(&rows_path, &condition_rows)?;
            io::write_json(&paths.condition_manifest(&key), &manifest)?;
            if !manifest.dropped.is_empty() {
                log::warn!(
                    "interventions: condition {key} dropped {} rows",
                    manifest.dropped.len()
                );
            }
            Ok(condition_rows)
        };
        let condition_rows = in_stage("interventions", run())?;
        out.push((spec.clone(), condition_rows));
    }
    Ok(out)
}

/// Scores every condition under its mask set. Score files resume
/// independently per condition and mask.
pub fn stage_scoring(
    config: &PipelineConfig,
    registry: &ConceptRegistry,
    cases: &[CaseRecord],
    universe: &EvidenceUniverse,
    conditions: &[(InterventionSpec, Vec<VerifierRow>)],
    paths: &StagePaths,
    force: bool,
) -> Result<Vec<ScoredSet>> {
    let case_text_by_report: BTreeMap<String, String> = cases
        .iter()
        .map(|c| (c.report_id.clone(), c.findings_text.clone()))
        .collect();
    let ctx = ScoringContext {
        case_text_by_report: &case_text_by_report,
        universe,
        registry,
        options: FormatOptions {
            delimiter: config.delimiter.clone(),
            truncation_budget: config.token_budget,
        },
    };
    let mut out = Vec::new();
    for (spec, rows) in conditions {
        let key = spec.condition_key();
        for &mask in masks_for_condition(spec.kind) {
            let composite = composite_key(&key, mask);
            let score_path = paths.scores(&composite);
            if !force && score_path.is_file() {
                log::info!("scoring: resuming {composite}");
                let records = in_stage("scoring", io::read_jsonl(&score_path))?;
                out.push(ScoredSet { condition_key: key.clone(), mask, records });
                continue;
            }
            let run = || -> Result<Vec<ScoreRecord>> {
                let records = score_rows(rows, &config.scorer, mask, &composite, &ctx)?;
                io::write_jsonl(&score_path, &records)?;
                Ok(records)
            };
            let records = in_stage("scoring", run())?;
            out.push(ScoredSet { condition_key: key.clone(), mask, records });
        }
    }
    Ok(out)
}

struct RowFacts {
    label_by_row: BTreeMap<String, u8>,
    split_by_row: BTreeMap<String, Option<Split>>,
    category_by_row: BTreeMap<String, Category>,
}

fn row_facts(rows: &[VerifierRow]) -> RowFacts {
    let mut label_by_row = BTreeMap::new();
    let mut split_by_row = BTreeMap::new();
    let mut category_by_row = BTreeMap::new();
    for row in rows {
        label_by_row.insert(row.row_id.clone(), row.label);
        split_by_row.insert(row.row_id.clone(), row.split);
        category_by_row.insert(row.row_id.clone(), row.category);
    }
    RowFacts { label_by_row, split_by_row, category_by_row }
}

fn subset_by_split(
    records: &[ScoreRecord],
    facts: &RowFacts,
    split: Split,
) -> (Vec<f64>, Vec<u8>) {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for rec in records {
        if facts.split_by_row.get(&rec.row_id) == Some(&Some(split)) {
            if let Some(&label) = facts.label_by_row.get(&rec.row_id) {
                scores.push(rec.probability);
                labels.push(label);
            }
        }
    }
    (scores, labels)
}

/// Selects a threshold on the validation slice, falling back to 0.5 with a
/// warning when that slice cannot rank (too small or single-class).
fn select_condition_threshold(
    composite: &str,
    records: &[ScoreRecord],
    facts: &RowFacts,
) -> ThresholdRecord {
    let (val_scores, val_labels) = subset_by_split(records, facts, Split::Validation);
    match evaluation::select_threshold_youden(&val_scores, &val_labels) {
        Ok(selection) => ThresholdRecord {
            key: composite.to_string(),
            tau: selection.tau_star,
            youden_j: Some(selection.j_value),
            n_validation: val_scores.len(),
            fallback_default: false,
        },
        Err(e) => {
            log::warn!("evaluation: {composite}: validation slice unusable ({e}); using tau=0.5");
            ThresholdRecord {
                key: composite.to_string(),
                tau: 0.5,
                youden_j: None,
                n_validation: val_scores.len(),
                fallback_default: true,
            }
        }
    }
}

/// Thresholds, test-split metric reports, bootstrap summaries, and the
/// against-baseline comparison report. Skipped entirely when every report
/// artifact already exists.
#[allow(clippy::too_many_arguments)]
pub fn stage_evaluation(
    config: &PipelineConfig,
    conditions: &[(InterventionSpec, Vec<VerifierRow>)],
    scored: &[ScoredSet],
    paths: &StagePaths,
    force: bool,
) -> Result<()> {
    let composites: Vec<String> = scored
        .iter()
        .map(|s| composite_key(&s.condition_key, s.mask))
        .collect();
    let all_present = paths.thresholds().is_file()
        && paths.comparison().is_file()
        && composites.iter().all(|c| {
            paths.metrics_report(c).is_file() && paths.bootstrap_report(c).is_file()
        });
    if !force && all_present {
        log::info!("evaluation: resuming; all reports present");
        return Ok(());
    }
    let run = || -> Result<()> {
        let metric_ids = config.evaluation.metric_ids()?;
        let metric_keys: BTreeSet<&str> = metric_ids.iter().map(|m| m.key()).collect();
        let facts_by_condition: BTreeMap<String, RowFacts> = conditions
            .iter()
            .map(|(spec, rows)| (spec.condition_key(), row_facts(rows)))
            .collect();

        let mut thresholds: Vec<ThresholdRecord> = Vec::new();
        let mut tau_by_composite: BTreeMap<String, f64> = BTreeMap::new();
        for set in scored {
            let composite = composite_key(&set.condition_key, set.mask);
            let facts = facts_by_condition
                .get(&set.condition_key)
                .ok_or_else(|| Error::validation(format!("no rows for {:?}", set.condition_key)))?;
            let record = select_condition_threshold(&composite, &set.records, facts);
            tau_by_composite.insert(composite.clone(), record.tau);
            thresholds.push(record);
        }
        io::write_json(&paths.thresholds(), &thresholds)?;

        for set in scored {
            let composite = composite_key(&set.condition_key, set.mask);
            let facts = &facts_by_condition[&set.condition_key];
            let tau = tau_by_composite[&composite];
            let (test_scores, test_labels) = subset_by_split(&set.records, facts, Split::Test);
            let report: MetricReport =
                metric_report(&test_scores, &test_labels, tau, &composite).map_err(|e| {
                    Error::validation(format!("test slice for {composite}: {e}"))
                })?;
            io::write_json(&paths.metrics_report(&composite), &report)?;
            let mut summary: BootstrapSummary = bootstrap_evaluate(
                &test_scores,
                &test_labels,
                tau,
                config.evaluation.replicates,
                config.evaluation.seed,
            )
            .map_err(|e| Error::validation(format!("bootstrap for {composite}: {e}")))?;
            summary.metrics.retain(|k, _| metric_keys.contains(k.as_str()));
            io::write_json(&paths.bootstrap_report(&composite), &summary)?;
        }

        let comparison = build_comparison(
            config,
            conditions,
            scored,
            &facts_by_condition,
            &tau_by_composite,
            &metric_ids,
        )?;
        io::write_json(&paths.comparison(), &comparison)?;
        Ok(())
    };
    in_stage("evaluation", run())
}

/// Pairs the unmodified condition with every modified one at the full mask:
/// per-row gap statistics over all shared rows, paired bootstrap differences
/// over shared test rows.
fn build_comparison(
    config: &PipelineConfig,
    conditions: &[(InterventionSpec, Vec<VerifierRow>)],
    scored: &[ScoredSet],
    facts_by_condition: &BTreeMap<String, RowFacts>,
    tau_by_composite: &BTreeMap<String, f64>,
    metric_ids: &[MetricId],
) -> Result<ComparisonReport> {
    let baseline_condition = InterventionSpec::none().condition_key();
    let baseline_composite = composite_key(&baseline_condition, S3);
    let baseline = scored
        .iter()
        .find(|s| s.condition_key == baseline_condition && s.mask == S3);
    let Some(baseline) = baseline else {
        log::warn!("comparison: unmodified condition not scored; nothing to compare against");
        return Ok(ComparisonReport { comparisons: Vec::new() });
    };
    let baseline_facts = &facts_by_condition[&baseline_condition];
    let mut comparisons = Vec::new();
    for (spec, _) in conditions {
        if spec.kind == InterventionKind::None {
            continue;
        }
        let key = spec.condition_key();
        let composite = composite_key(&key, S3);
        let set = scored
            .iter()
            .find(|s| s.condition_key == key && s.mask == S3)
            .ok_or_else(|| Error::validation(format!("condition {key:?} was not scored")))?;
        let (aligned_base, aligned_cond) = align_by_row_id(&baseline.records, &set.records);
        let gap = intervention_gap(&aligned_base, &aligned_cond, &baseline_facts.category_by_row)?;

        let mut scores_a = Vec::new();
        let mut scores_b = Vec::new();
        let mut labels = Vec::new();
        for (base_rec, cond_rec) in aligned_base.iter().zip(&aligned_cond) {
            if baseline_facts.split_by_row.get(&base_rec.row_id) == Some(&Some(Split::Test)) {
                scores_a.push(base_rec.probability);
                scores_b.push(cond_rec.probability);
                labels.push(baseline_facts.label_by_row[&base_rec.row_id]);
            }
        }
        let mut diffs = Vec::new();
        if labels.len() >= 2 {
            for &metric in metric_ids {
                let diff = paired_bootstrap_diff(
                    &scores_a,
                    &scores_b,
                    &labels,
                    tau_by_composite[&baseline_composite],
                    tau_by_composite[&composite],
                    config.evaluation.replicates,
                    config.evaluation.seed,
                    metric,
                )?;
                diffs.push(diff);
            }
        } else {
            log::warn!("comparison: {composite}: fewer than 2 shared test rows; no paired bootstrap");
        }
        comparisons.push(ConditionComparison {
            baseline_key: baseline_composite.clone(),
            condition_key: composite,
            n_aligned_test: labels.len(),
            diffs,
            gap,
        });
    }
    Ok(ComparisonReport { comparisons })
}

fn checksum_into(
    root: &Path,
    bucket: &mut BTreeMap<String, String>,
    file: &Path,
) -> Result<()> {
    let rel = file.strip_prefix(root).unwrap_or(file);
    let sum = io::file_checksum(file)?;
    bucket.insert(rel.to_string_lossy().into_owned(), sum);
    Ok(())
}

fn collect_checksums(
    config: &PipelineConfig,
    paths: &StagePaths,
) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let root = &paths.root;
    let mut stages: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();

    let mut cases = BTreeMap::new();
    checksum_into(root, &mut cases, &paths.cases())?;
    checksum_into(root, &mut cases, &paths.rejections())?;
    stages.insert("cases".to_string(), cases);

    let mut ev = BTreeMap::new();
    checksum_into(root, &mut ev, &paths.evidence_units())?;
    checksum_into(root, &mut ev, &paths.sentence_drops())?;
    checksum_into(root, &mut ev, &paths.pools())?;
    checksum_into(root, &mut ev, &paths.evidence_split())?;
    stages.insert("evidence".to_string(), ev);

    let mut rows = BTreeMap::new();
    checksum_into(root, &mut rows, &paths.instances())?;
    checksum_into(root, &mut rows, &paths.easy_control())?;
    checksum_into(root, &mut rows, &paths.rows())?;
    checksum_into(root, &mut rows, &paths.construction_log())?;
    checksum_into(root, &mut rows, &paths.diagnostics())?;
    stages.insert("rows".to_string(), rows);

    let mut cond = BTreeMap::new();
    let mut scores = BTreeMap::new();
    let mut reports = BTreeMap::new();
    for spec in &config.interventions {
        let key = spec.condition_key();
        checksum_into(root, &mut cond, &paths.condition_rows(&key))?;
        checksum_into(root, &mut cond, &paths.condition_manifest(&key))?;
        for &mask in masks_for_condition(spec.kind) {
            let composite = composite_key(&key, mask);
            checksum_into(root, &mut scores, &paths.scores(&composite))?;
            checksum_into(root, &mut reports, &paths.metrics_report(&composite))?;
            checksum_into(root, &mut reports, &paths.bootstrap_report(&composite))?;
        }
    }
    checksum_into(root, &mut reports, &paths.thresholds())?;
    checksum_into(root, &mut reports, &paths.comparison())?;
    stages.insert("conditions".to_string(), cond);
    stages.insert("scores".to_string(), scores);
    stages.insert("reports".to_string(), reports);
    Ok(stages)
}

/// How far into the stage chain a partial run should go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StageCut {
    Ingest,
    Evidence,
    Supervision,
    Interventions,
    Scoring,
    Evaluation,
}

/// Runs every stage in order, resuming from persisted artifacts where they
/// exist, and writes the manifest last.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest> {
    run_pipeline_with(config, false)
}

/// As [`run_pipeline`], with `force` recomputing every stage from scratch.
pub fn run_pipeline_with(config: &PipelineConfig, force: bool) -> Result<RunManifest> {
    let started = now_unix();
    run_through(config, StageCut::Evaluation, force)?;
    let paths = StagePaths::new(&config.output_root);
    let stage_checksums = in_stage("manifest", collect_checksums(config, &paths))?;
    let manifest = RunManifest {
        config_digest: config.digest()?,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_s: started,
        finished_unix_s: now_unix(),
        stage_checksums,
    };
    io::write_json(&paths.manifest(), &manifest)?;
    Ok(manifest)
}

/// Executes the stage chain up to and including `cut`, after pre-flight
/// validation. Nothing is written when pre-flight fails; the manifest is not
/// written here.
pub fn run_through(config: &PipelineConfig, cut: StageCut, force: bool) -> Result<()> {
    config.validate()?;
    if !config.cases_path.is_file() {
        return Err(Error::validation(format!(
            "cases path {:?} does not exist",
            config.cases_path
        )));
    }
    if !config.articles_path.is_file() {
        return Err(Error::validation(format!(
            "articles path {:?} does not exist",
            config.articles_path
        )));
    }
    let registry = config.load_registry()?;
    let digest = config.digest()?;
    let paths = StagePaths::new(&config.output_root);
    if paths.config_digest().is_file() {
        let prior = fs::read_to_string(paths.config_digest())
            .map_err(|e| Error::io(&paths.config_digest(), e))?;
        if prior.trim() != digest && !force {
            return Err(Error::validation(
                "output root holds artifacts from a different config; \
                 rerun with force or choose a fresh output root",
            ));
        }
    }
    fs::create_dir_all(&paths.root).map_err(|e| Error::io(&paths.root, e))?;
    fs::write(paths.config_digest(), format!("{digest}\n"))
        .map_err(|e| Error::io(&paths.config_digest(), e))?;

    let cases = stage_ingest(config, &paths, force)?;
    if cut == StageCut::Ingest {
        return Ok(());
    }
    let (units, assignments, evidence_split) = stage_evidence(config, &registry, &paths, force)?;
    if cut == StageCut::Evidence {
        return Ok(());
    }
    let rows = stage_supervision(config, &registry, &cases, &assignments, &paths, force)?;
    if cut == StageCut::Supervision {
        return Ok(());
    }
    let universe = EvidenceUniverse::from_units(&units);
    let conditions =
        stage_interventions(config, &rows, &assignments, &universe, &evidence_split, &paths, force)?;
    if cut == StageCut::Interventions {
        return Ok(());
    }
    let scored =
        stage_scoring(config, &registry, &cases, &universe, &conditions, &paths, force)?;
    if cut == StageCut::Scoring {
        return Ok(());
    }
    stage_evaluation(config, &conditions, &scored, &paths, force)
}

/// Writes a seeded synthetic corpus to the given case and article paths so a
/// pipeline config can point at them.
pub fn write_synthetic_corpus(
    synth: &SynthConfig,
    registry: &ConceptRegistry,
    cases_path: &Path,
    articles_path: &Path,
) -> Result<(usize, usize)> {
    let corpus = generate_synthetic_corpus(synth, registry)?;
    io::write_jsonl(cases_path, &corpus.cases)?;
    io::write_jsonl(articles_path, &corpus.articles)?;
    Ok((corpus.cases.len(), corpus.articles.len()))
}
