//! Seeded synthetic corpus generation for desk-scale runs: template reports
//! with controllable concept prevalence, direct-mention rate, and negation
//! usage, plus reference articles that populate all four evidence-pool roles
//! for every concept.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::RawCase;
use crate::error::{Error, Result};
use crate::evidence::Article;
use crate::fixture;
use crate::hashing::derive_rng;
use crate::registry::{CompiledConcept, ConceptRegistry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_cases: usize,
    pub n_articles: usize,
    /// Probability that a report's impression states each concept at all.
    pub prevalence: f64,
    /// Probability that a stated concept is negated (absent) rather than
    /// asserted.
    pub negation_rate: f64,
    /// Probability that a stated concept is also mentioned directly in the
    /// findings, which routes the pair to the easy control set.
    pub direct_mention_rate: f64,
    /// Bundle the worked-example case and its source articles into the
    /// output (the case counts toward n_cases).
    pub include_worked_example: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_cases: 200,
            n_articles: 24,
            prevalence: 0.5,
            negation_rate: 0.45,
            direct_mention_rate: 0.3,
            include_worked_example: true,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cases == 0 {
            return Err(Error::validation("n_cases must be at least 1"));
        }
        for (name, rate) in [
            ("prevalence", self.prevalence),
            ("negation_rate", self.negation_rate),
            ("direct_mention_rate", self.direct_mention_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::validation(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticCorpus {
    pub cases: Vec<RawCase>,
    pub articles: Vec<Article>,
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

const SUPPORT_PRESENT_VARS: [&str; 4] = ["view", "projection", "study", "radiograph"];
const SUPPORT_PERIOD_VARS: [&str; 4] = ["week", "month", "interval", "quarter"];
const SUPPORT_SHAPE_VARS: [&str; 4] = ["distribution", "gradient", "layering", "contour"];
const SUPPORT_COHORT_VARS: [&str; 4] = ["surveyed", "screened", "referred", "admitted"];
const SUPPORT_FILM_VARS: [&str; 4] = ["projections", "views", "studies", "films"];
const SUPPORT_CAUSE_VARS: [&str; 4] = ["drainage", "treatment", "therapy", "recovery"];
const HARD_ADJ_VARS: [&str; 4] = ["adjacent", "regional", "subtle", "developing"];
const HARD_SERIES_VARS: [&str; 4] = ["published", "referral", "archived", "teaching"];

/// Assertive sentence containing the concept's lead pattern and no negation
/// cue anywhere.
fn support_present_sentence(pattern: &str, variant: usize) -> String {
    match variant % 3 {
        0 => format!(
            "Imaging in this condition commonly demonstrates {pattern} on the frontal {}.",
            SUPPORT_PRESENT_VARS[(variant / 3) % 4]
        ),
        1 => format!(
            "Serial radiographs showed progressive {pattern} over the following {}.",
            SUPPORT_PERIOD_VARS[(variant / 3) % 4]
        ),
        _ => format!(
            "The classic appearance of {pattern} includes a dependent {}.",
            SUPPORT_SHAPE_VARS[(variant / 3) % 4]
        ),
    }
}

/// Absence-framed sentence: the pattern appears together with a negation cue
/// somewhere in the sentence.
fn support_absent_sentence(pattern: &str, variant: usize) -> String {
    match variant % 3 {
        0 => format!(
            "Early series reported that {pattern} was absent in most {} cohorts.",
            SUPPORT_COHORT_VARS[(variant / 3) % 4]
        ),
        1 => capitalize(&format!(
            "{pattern} is typically absent on supine {} at this stage.",
            SUPPORT_FILM_VARS[(variant / 3) % 4]
        )),
        _ => format!(
            "Follow-up imaging confirmed the {pattern} had resolved after {}.",
            SUPPORT_CAUSE_VARS[(variant / 3) % 4]
        ),
    }
}

/// Topically near sentence built from the concept's vocabulary without
/// matching any of its patterns.
fn hard_sentence(concept: &CompiledConcept, variant: usize) -> String {
    let terms: Vec<&str> = concept
        .rule
        .related_terms
        .iter()
        .map(String::as_str)
        .filter(|t| concept.vocab().contains(&t.to_lowercase()) || t.contains(' '))
        .collect();
    let terms = if terms.is_empty() {
        vec![concept.rule.related_terms.first().map(String::as_str).unwrap_or("findings")]
    } else {
        terms
    };
    let t0 = terms[(2 * variant) % terms.len()];
    let t1 = terms[(2 * variant + 1) % terms.len()];
    match variant % 2 {
        0 => format!(
            "Reported findings often include {t0} together with {} {t1}.",
            HARD_ADJ_VARS[(variant / 2) % 4]
        ),
        _ => format!(
            "Ancillary signs such as {t0} and {t1} appear in many {} series.",
            HARD_SERIES_VARS[(variant / 2) % 4]
        ),
    }
}

/// Lexically distant filler with no overlap with any bundled concept
/// vocabulary.
const EASY_SENTENCES: [&str; 15] = [
    "The committee approved the revised travel budget after a short discussion.",
    "Registration opens on Monday and closes at the end of the month.",
    "The library extended its weekend hours during the reading period.",
    "Attendees should bring a printed copy of the updated agenda.",
    "The orchestra rehearsed the second movement twice before the intermission.",
    "Ticket sales increased steadily throughout the autumn season.",
    "The museum cafe serves lunch between eleven and three.",
    "Delegates voted to postpone the plenary session until spring.",
    "The newsletter highlights alumni achievements from the past year.",
    "Groundskeepers reseeded the north lawn after the festival.",
    "The archive catalogs correspondence from the early founding decades.",
    "Parking permits must be renewed before the first of September.",
    "The bakery introduced a seasonal menu featuring quince and walnut.",
    "Committee minutes are circulated within five working days.",
    "The bridge club meets in the annex on alternate Thursdays.",
];

const FINDINGS_FILLERS: [&str; 4] = [
    "Monitoring leads overlie the chest wall.",
    "The endotracheal tube tip sits above the carina.",
    "Surgical clips project over the upper abdomen.",
    "Degenerative changes are seen along the imaged spine.",
];

const IMPRESSION_FILLER: &str = "Stable radiographic appearance of the chest.";

fn impression_sentence(pattern: &str, absent: bool, variant: usize) -> String {
    if absent {
        match variant % 3 {
            0 => format!("There is no {pattern}."),
            1 => capitalize(&format!("no {pattern} is seen.")),
            _ => format!("No definite {pattern} is identified."),
        }
    } else {
        match variant % 3 {
            0 => format!("There is {pattern}."),
            1 => format!("Findings are compatible with {pattern}."),
            _ => capitalize(&format!("{pattern} has increased in the interval.")),
        }
    }
}

/// Findings sentence that states the concept directly: an un-negated pattern
/// match regardless of the impression state.
fn direct_findings_sentence(pattern: &str, absent: bool) -> String {
    if absent {
        capitalize(&format!("{pattern} cannot be excluded on this projection."))
    } else {
        capitalize(&format!("{pattern} is again demonstrated in the right base."))
    }
}

fn concepts_with_patterns(registry: &ConceptRegistry) -> Vec<&CompiledConcept> {
    registry.concepts().iter().filter(|c| !c.rule.present_patterns.is_empty()).collect()
}

fn generate_article(concept: &CompiledConcept, ordinal: usize, article_index: usize) -> Article {
    let pattern = concept.rule.present_patterns[0].as_str();
    let mut present = Vec::new();
    let mut absent = Vec::new();
    for v in 0..3 {
        present.push(capitalize(&support_present_sentence(pattern, ordinal * 3 + v)));
        absent.push(capitalize(&support_absent_sentence(pattern, ordinal * 3 + v)));
    }
    let hard = [
        hard_sentence(concept, 2 * ordinal),
        hard_sentence(concept, 2 * ordinal + 1),
    ];
    let easy: Vec<String> = (0..3)
        .map(|v| EASY_SENTENCES[(article_index * 3 + v) % EASY_SENTENCES.len()].to_string())
        .collect();
    Article {
        article_id: format!("synth-art-{article_index:03}"),
        title: format!("{} reference {}", concept.rule.display_name, ordinal + 1),
        body_text: [present.join(" "), absent.join(" "), hard.join(" "), easy.join(" ")]
            .join("\n\n"),
    }
}

fn generate_case(
    seed: u64,
    case_index: usize,
    config: &SynthConfig,
    concepts: &[&CompiledConcept],
) -> RawCase {
    let report_id = format!("synth-r{case_index:05}");
    let patient_id = format!("synth-p{:05}", case_index / 2);
    let mut findings = Vec::new();
    let mut impression = Vec::new();
    for concept in concepts {
        let mut rng = derive_rng(seed, &["synth-case", &report_id, concept.concept_id()]);
        if rng.random::<f64>() >= config.prevalence {
            continue;
        }
        let absent = rng.random::<f64>() < config.negation_rate;
        let direct = rng.random::<f64>() < config.direct_mention_rate;
        let variant = rng.random_range(0..3usize);
        let pattern = concept.rule.present_patterns[0].as_str();
        impression.push(impression_sentence(pattern, absent, variant));
        if direct {
            findings.push(direct_findings_sentence(pattern, absent));
        } else {
            findings.push(hard_sentence(concept, variant));
        }
    }
    let mut filler_rng = derive_rng(seed, &["synth-filler", &report_id]);
    findings.push(FINDINGS_FILLERS[filler_rng.random_range(0..FINDINGS_FILLERS.len())].to_string());
    if impression.is_empty() {
        impression.push(IMPRESSION_FILLER.to_string());
    }
    let raw_text = format!(
        "EXAMINATION: CHEST (PA AND LAT)\n\nINDICATION: ___ with dyspnea.\n\nCOMPARISON: ___.\n\nFINDINGS:\n\n{}\n\nIMPRESSION:\n\n{}\n",
        findings.join(" "),
        impression.join(" ")
    );
    RawCase {
        patient_id,
        report_id,
        raw_text: Some(raw_text),
        findings_text: None,
        impression_text: None,
    }
}

/// Deterministic corpus: everything is derived from the config seed and
/// stable identifiers, so regeneration and appends never disturb existing
/// records.
pub fn generate_synthetic_corpus(
    config: &SynthConfig,
    registry: &ConceptRegistry,
) -> Result<SyntheticCorpus> {
    config.validate()?;
    let concepts = concepts_with_patterns(registry);
    if concepts.len() < 2 {
        return Err(Error::validation(
            "synthetic generation needs a registry with at least two concepts with patterns",
        ));
    }
    let mut cases = Vec::new();
    let mut articles = Vec::new();
    let mut generated_cases = config.n_cases;
    if config.include_worked_example {
        cases.push(fixture::worked_example_case());
        articles.extend(fixture::worked_example_articles());
        generated_cases = generated_cases.saturating_sub(1);
    }
    for i in 0..generated_cases {
        cases.push(generate_case(config.seed, i, config, &concepts));
    }
    for j in 0..config.n_articles {
        let concept = concepts[j % concepts.len()];
        let ordinal = j / concepts.len();
        articles.push(generate_article(concept, ordinal, j));
    }
    Ok(SyntheticCorpus { cases, articles })
}
