//! Bundled worked-example fixture: one retained chest-radiograph case with
//! one evidence unit per pool role for the pleural-effusion concept. Used as
//! a golden-path check of the whole construction chain and bundled into the
//! synthetic corpus.

use crate::corpus::{build_instances, ingest_case, CaseConceptInstance, RawCase};
use crate::error::{Error, Result};
use crate::evidence::{assign_pools, evidence_id_for, Article, EvidenceUnit, PoolAssignment};
use crate::registry::ConceptRegistry;
use crate::supervision::SamplingPolicy;
use crate::text;

pub const WORKED_EXAMPLE_REPORT_ID: &str = "fixture-case-1";
pub const WORKED_EXAMPLE_PATIENT_ID: &str = "fixture-patient-1";
pub const WORKED_EXAMPLE_CONCEPT_ID: &str = "pleural_effusion";

/// The raw report, de-identification blanks preserved.
pub const WORKED_EXAMPLE_RAW_REPORT: &str = "\
                                 FINAL REPORT
EXAMINATION: CHEST (PORTABLE AP)

INDICATION: ___ year old woman with right chest tube // ? ptx

COMPARISON: Chest x-ray from ___ EM dated ___. Targeted review of chest CTA from ___.

FINDINGS:

A pigtail catheter overlies the lower right chest new compared with ___. No pneumothorax is detected. Minimal blunting of the right costophrenic angle without gross effusion.

Inspiratory volumes are low and the patient is supine. Hazy opacity in the right perihilar region is non-specific but compatible with atelectasis. Mild increased retrocardiac density is also non-specific but compatible with atelectasis. Extreme left costophrenic angle is excluded from the film, but no gross left-sided effusion is detected.

The cardiomediastinal silhouette is grossly unchanged.

Spinal fixation hardware is seen both in the lower cervical and throughout much of the thoracic spine.

IMPRESSION:

Interval placement of right-sided pigtail catheter. No gross effusion. No pneumothorax detected.

Bilateral opacities are non-specific, but compatible with atelectasis.
";

/// Gold-state support: asserts the target can be absent, so it backs the
/// absent claim.
pub const SUPPORT_ABSENT_TEXT: &str = "Classically demonstrated in M-mode, the appearance of which the moniker is derived, it is specific for the identification of a pleural effusion, although insensitive, as it may be absent with dense or heavily septated collections.";

/// Wrong-state support: assertive framing backing the present claim.
pub const SUPPORT_PRESENT_TEXT: &str = "Refer to the article \"pleural effusion volume (ultrasound)\" for more information. CT scanning is excellent at detecting small amounts of fluid and is also often able to identify the underlying intrathoracic causes.";

/// Topically near but non-supportive for the target concept.
pub const NONSUPPORT_HARD_TEXTS: [&str; 2] = [
    "Non-specific changes with ground-glass opacity have been the most commonly reported findings with nodular consolidation described in a lesser number of patients. Involvement can often be bilateral.",
    "Severe cases of optic disc edema may show diffusion restriction. Optical coherence tomography presents an elevation of the optic nerve head because of the peripapillary hyperreflective ovoid mass-like structures.",
];

/// Lexically distant from the target concept.
pub const NONSUPPORT_EASY_TEXTS: [&str; 2] = [
    "On chest radiographs, they are seen to cross normal vascular markings and extend radially from the hilum to the upper lobes.",
    "Shows features of which can progress to alveolar and interstitial infiltrates.",
];

pub fn worked_example_case() -> RawCase {
    RawCase {
        patient_id: WORKED_EXAMPLE_PATIENT_ID.to_string(),
        report_id: WORKED_EXAMPLE_REPORT_ID.to_string(),
        raw_text: Some(WORKED_EXAMPLE_RAW_REPORT.to_string()),
        findings_text: None,
        impression_text: None,
    }
}

fn unit_for(article_id: &str, text: &str) -> EvidenceUnit {
    EvidenceUnit {
        evidence_id: evidence_id_for(article_id, 0),
        article_id: article_id.to_string(),
        sentence_index: 0,
        text: text.to_string(),
        token_len: text::token_len(text),
    }
}

/// Exactly one evidence unit per pool role for the target concept, each
/// standing alone in its source article.
pub fn worked_example_units() -> Vec<EvidenceUnit> {
    vec![
        unit_for("fixture-art-support-absent", SUPPORT_ABSENT_TEXT),
        unit_for("fixture-art-support-present", SUPPORT_PRESENT_TEXT),
        unit_for("fixture-art-nonsupport-hard", NONSUPPORT_HARD_TEXTS[0]),
        unit_for("fixture-art-nonsupport-easy", NONSUPPORT_EASY_TEXTS[0]),
    ]
}

/// Pool assignments for the fixture units under the given registry.
pub fn worked_example_pools(registry: &ConceptRegistry) -> Result<Vec<PoolAssignment>> {
    Ok(assign_pools(&worked_example_units(), registry, 0))
}

/// Full source texts wrapped as articles, for bundling into a synthetic
/// corpus where they pass through ordinary segmentation.
pub fn worked_example_articles() -> Vec<Article> {
    vec![
        Article {
            article_id: "fixture-art-support".to_string(),
            title: "pleural effusion imaging reference".to_string(),
            body_text: format!("{SUPPORT_ABSENT_TEXT}\n\n{SUPPORT_PRESENT_TEXT}"),
        },
        Article {
            article_id: "fixture-art-hard".to_string(),
            title: "adjacent-topic imaging reference".to_string(),
            body_text: NONSUPPORT_HARD_TEXTS.join("\n\n"),
        },
        Article {
            article_id: "fixture-art-easy".to_string(),
            title: "distant-topic imaging reference".to_string(),
            body_text: NONSUPPORT_EASY_TEXTS.join("\n\n"),
        },
    ]
}

/// Sampling policy matching the fixture: one package per row category, one
/// unit per package, hard-only non-support.
pub fn worked_example_policy() -> SamplingPolicy {
    SamplingPolicy {
        n_support: 1,
        n_wrongstate: 1,
        n_nonsupport: 1,
        hard_easy_mix: 1.0,
        evidence_per_row: 1,
        seed: 0,
    }
}

/// Runs the case through ingestion, state extraction, and shortcut
/// filtering, returning the retained benchmark instance for the target
/// concept.
pub fn worked_example_instance(registry: &ConceptRegistry) -> Result<CaseConceptInstance> {
    let record = ingest_case(&worked_example_case()).map_err(|reason| {
        Error::stage(format!("fixture: worked-example report failed ingestion: {reason:?}"))
    })?;
    let partition = build_instances(&[record], registry)?;
    partition
        .benchmark
        .into_iter()
        .find(|i| i.concept_id == WORKED_EXAMPLE_CONCEPT_ID)
        .ok_or_else(|| {
            Error::stage("fixture: worked-example target concept not retained as benchmark")
        })
}
