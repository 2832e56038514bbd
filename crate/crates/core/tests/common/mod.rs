//! Shared fixtures for integration tests: builds a complete in-memory
//! dataset (cases, evidence, pools, supervision rows) from the synthetic
//! corpus generator, plus a ready-to-use pipeline config writer.
#![allow(dead_code)]

pub mod criteria;

use std::collections::BTreeMap;
use std::path::Path;

use evibench::corpus::{
    apply_splits, assign_patient_splits, build_instances, ingest_cases, CaseConceptInstance,
    CaseRecord, DEFAULT_SPLIT_RATIOS,
};
use evibench::evidence::{
    assign_pools, build_evidence_units, split_articles, EvidenceSplit, EvidenceUnit,
    PoolAssignment,
};
use evibench::interventions::{EvidenceUniverse, InterventionSpec, DEFAULT_DELIMITER};
use evibench::pipeline::{write_synthetic_corpus, EvaluationSettings, PipelineConfig};
use evibench::registry::ConceptRegistry;
use evibench::scoring::ScorerSpec;
use evibench::scoring::{FormatOptions, ScoringContext};
use evibench::supervision::{construct_supervision, SamplingPolicy, VerifierRow};
use evibench::synth::{generate_synthetic_corpus, SynthConfig};

/// Fully materialized dataset for tests that exercise interventions,
/// scoring, and evaluation without touching the filesystem.
pub struct World {
    pub registry: ConceptRegistry,
    pub cases: Vec<CaseRecord>,
    pub instances: Vec<CaseConceptInstance>,
    pub units: Vec<EvidenceUnit>,
    pub assignments: Vec<PoolAssignment>,
    pub evidence_split: EvidenceSplit,
    pub rows: Vec<VerifierRow>,
    pub universe: EvidenceUniverse,
    pub case_text_by_report: BTreeMap<String, String>,
    pub options: FormatOptions,
}

impl World {
    pub fn ctx(&self) -> ScoringContext<'_> {
        ScoringContext {
            case_text_by_report: &self.case_text_by_report,
            universe: &self.universe,
            registry: &self.registry,
            options: self.options.clone(),
        }
    }
}

/// Builds a world from the synthetic generator: `n_cases` reports, patient
/// splits applied, evidence pooled and split, supervision rows constructed
/// with the default sampling policy reseeded to `seed`.
pub fn build_world(n_cases: usize, seed: u64) -> World {
    let registry = ConceptRegistry::bundled();
    let synth = generate_synthetic_corpus(
        &SynthConfig { seed, n_cases, ..SynthConfig::default() },
        &registry,
    )
    .expect("synthetic corpus");

    let (mut cases, _rejections) = ingest_cases(&synth.cases).expect("ingest");
    let split_map =
        assign_patient_splits(&cases, seed, DEFAULT_SPLIT_RATIOS).expect("patient splits");
    apply_splits(&mut cases, &split_map).expect("apply splits");

    let (units, _drops) = build_evidence_units(&synth.articles).expect("evidence units");
    let assignments = assign_pools(&units, &registry, seed);
    let article_ids: Vec<String> = synth.articles.iter().map(|a| a.article_id.clone()).collect();
    let evidence_split =
        split_articles(&units, &assignments, &article_ids, seed, 0.8).expect("article split");

    let partition = build_instances(&cases, &registry).expect("instances");
    let policy = SamplingPolicy { seed, ..SamplingPolicy::default() };
    let (rows, _log) =
        construct_supervision(&partition.benchmark, &assignments, &policy, &registry)
            .expect("supervision");

    let universe = EvidenceUniverse::from_units(&units);
    let case_text_by_report: BTreeMap<String, String> =
        cases.iter().map(|c| (c.report_id.clone(), c.findings_text.clone())).collect();

    World {
        registry,
        cases,
        instances: partition.benchmark,
        units,
        assignments,
        evidence_split,
        rows,
        universe,
        case_text_by_report,
        options: FormatOptions::default(),
    }
}

/// Writes a synthetic corpus under `dir` and returns a pipeline config whose
/// artifacts land in `dir/out`. Bootstrap replicate count is turned down so
/// end-to-end runs stay fast.
pub fn pipeline_config_in(dir: &Path, n_cases: usize, seed: u64) -> PipelineConfig {
    let registry = ConceptRegistry::bundled();
    let synth = SynthConfig { seed, n_cases, ..SynthConfig::default() };
    let cases_path = dir.join("cases.jsonl");
    let articles_path = dir.join("articles.jsonl");
    write_synthetic_corpus(&synth, &registry, &cases_path, &articles_path)
        .expect("write corpus");

    PipelineConfig {
        cases_path,
        articles_path,
        output_root: dir.join("out"),
        registry_path: None,
        policy: SamplingPolicy { seed, ..SamplingPolicy::default() },
        split_seed: seed,
        split_ratios: DEFAULT_SPLIT_RATIOS,
        evidence_seed: seed,
        heldout_ratio: 0.2,
        interventions: vec![
            InterventionSpec::none(),
            InterventionSpec::empty(),
            InterventionSpec::swap(0),
            InterventionSpec::heldout(0),
        ],
        scorer: ScorerSpec::default(),
        evaluation: EvaluationSettings { replicates: 50, seed, ..EvaluationSettings::default() },
        token_budget: 1024,
        delimiter: DEFAULT_DELIMITER.to_string(),
    }
}
