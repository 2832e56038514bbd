//! Case ingestion: report section parsing, concept-state extraction, claim
//! construction, shortcut filtering, and patient-wise splitting.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evidence::segment_text;
use crate::exec;
use crate::hashing;
use crate::registry::{CompiledConcept, ConceptRegistry};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRecord {
    pub patient_id: String,
    pub report_id: String,
    pub findings_text: String,
    pub impression_text: String,
    #[serde(default)]
    pub split: Option<Split>,
}

/// External input schema: either a raw report or pre-split sections.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawCase {
    pub patient_id: String,
    pub report_id: String,
    #[serde(default)]
    pub raw_text: Option<String>,
    #[serde(default)]
    pub findings_text: Option<String>,
    #[serde(default)]
    pub impression_text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    MissingFindings,
    MissingImpression,
    Malformed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseRejection {
    pub report_id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome {
    Sections { findings: String, impression: String },
    Rejected(RejectReason),
}

/// All-caps prefix ending in a colon, e.g. "FINDINGS:" or "EXAMINATION:".
fn section_header(line: &str) -> Option<(String, &str)> {
    let idx = line.find(':')?;
    let head = line[..idx].trim();
    if head.is_empty() || !head.chars().any(|c| c.is_ascii_uppercase()) {
        return None;
    }
    let all_caps = head
        .chars()
        .all(|c| c.is_ascii_uppercase() || c.is_whitespace() || matches!(c, '(' | ')' | '/'));
    if all_caps {
        Some((head.to_string(), &line[idx + 1..]))
    } else {
        None
    }
}

fn is_banner(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && t.chars().all(|c| c.is_ascii_uppercase() || c.is_whitespace())
}

/// Splits a raw report into normalized findings and impression sections.
/// Administrative banners and headed blocks other than the two target
/// sections are dropped. Rejection is a value; batches never abort on it.
pub fn parse_report(raw_text: &str) -> ParseOutcome {
    if raw_text.trim().is_empty() {
        return ParseOutcome::Rejected(RejectReason::Malformed);
    }
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Findings,
        Impression,
        Other,
    }
    let mut section = Section::None;
    let mut saw_findings = false;
    let mut saw_impression = false;
    let mut findings: Vec<&str> = Vec::new();
    let mut impression: Vec<&str> = Vec::new();
    for line in raw_text.lines() {
        if let Some((header, rest)) = section_header(line) {
            section = match header.as_str() {
                "FINDINGS" => {
                    saw_findings = true;
                    Section::Findings
                }
                "IMPRESSION" => {
                    saw_impression = true;
                    Section::Impression
                }
                _ => Section::Other,
            };
            match section {
                Section::Findings => findings.push(rest),
                Section::Impression => impression.push(rest),
                _ => {}
            }
            continue;
        }
        if matches!(section, Section::None | Section::Other) && is_banner(line) {
            continue;
        }
        match section {
            Section::Findings => findings.push(line),
            Section::Impression => impression.push(line),
            _ => {}
        }
    }
    let findings = text::normalize_whitespace(&findings.join(" "));
    let impression = text::normalize_whitespace(&impression.join(" "));
    if !saw_findings && !saw_impression {
        return ParseOutcome::Rejected(RejectReason::Malformed);
    }
    if findings.is_empty() {
        return ParseOutcome::Rejected(RejectReason::MissingFindings);
    }
    if impression.is_empty() {
        return ParseOutcome::Rejected(RejectReason::MissingImpression);
    }
    ParseOutcome::Sections { findings, impression }
}

/// One raw case to one retained record, or a rejection reason.
pub fn ingest_case(raw: &RawCase) -> std::result::Result<CaseRecord, RejectReason> {
    let (findings, impression) = match (&raw.findings_text, &raw.impression_text) {
        (Some(f), Some(i)) => (text::normalize_whitespace(f), text::normalize_whitespace(i)),
        _ => match raw.raw_text.as_deref() {
            Some(rt) => match parse_report(rt) {
                ParseOutcome::Sections { findings, impression } => (findings, impression),
                ParseOutcome::Rejected(reason) => return Err(reason),
            },
            None => return Err(RejectReason::Malformed),
        },
    };
    if findings.is_empty() {
        return Err(RejectReason::MissingFindings);
    }
    if impression.is_empty() {
        return Err(RejectReason::MissingImpression);
    }
    Ok(CaseRecord {
        patient_id: raw.patient_id.clone(),
        report_id: raw.report_id.clone(),
        findings_text: findings,
        impression_text: impression,
        split: None,
    })
}

/// Batch ingestion in canonical report_id order. Duplicate report_ids are a
/// validation error; per-record rejections are returned, not raised.
pub fn ingest_cases(raws: &[RawCase]) -> Result<(Vec<CaseRecord>, Vec<CaseRejection>)> {
    let mut ids = BTreeSet::new();
    for raw in raws {
        if raw.report_id.is_empty() {
            return Err(Error::validation("empty report_id"));
        }
        if !ids.insert(&raw.report_id) {
            return Err(Error::validation(format!("duplicate report_id {:?}", raw.report_id)));
        }
    }
    let mut sorted: Vec<&RawCase> = raws.iter().collect();
    sorted.sort_by(|a, b| a.report_id.cmp(&b.report_id));
    let outcomes = exec::ordered_map(&sorted, |raw| (raw.report_id.clone(), ingest_case(raw)));
    let mut retained = Vec::new();
    let mut rejected = Vec::new();
    for (report_id, outcome) in outcomes {
        match outcome {
            Ok(case) => retained.push(case),
            Err(reason) => rejected.push(CaseRejection { report_id, reason }),
        }
    }
    Ok((retained, rejected))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptState {
    Present,
    Absent,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimState {
    Present,
    Absent,
}

impl ClaimState {
    pub fn as_str(self) -> &'static str {
        match self {
            ClaimState::Present => "present",
            ClaimState::Absent => "absent",
        }
    }

    pub fn opposite(self) -> ClaimState {
        match self {
            ClaimState::Present => ClaimState::Absent,
            ClaimState::Absent => ClaimState::Present,
        }
    }
}

/// Per-sentence signals for one concept: an absence signal is an
/// absent-pattern match or a present match with a cue earlier in the same
/// sentence; a presence signal is an un-negated present match.
fn sentence_signals(concept: &CompiledConcept, tokens: &[String]) -> (bool, bool) {
    let mut absent = concept.has_absent_pattern(tokens);
    let mut present = false;
    let matches = concept.present_positions(tokens);
    if !matches.is_empty() {
        let cues = concept.cue_positions(tokens);
        for &m in &matches {
            if cues.iter().any(|&c| c < m) {
                absent = true;
            } else {
                present = true;
            }
        }
    }
    (present, absent)
}

/// Gold-state extraction from the impression text. Absence signals take
/// precedence over presence signals across the whole impression.
pub fn extract_concept_states(
    impression: &str,
    registry: &ConceptRegistry,
) -> BTreeMap<String, ConceptState> {
    let sentences = segment_text(impression);
    let tokenized: Vec<Vec<String>> = sentences.iter().map(|s| text::tokenize(s)).collect();
    let mut out = BTreeMap::new();
    for concept in registry.concepts() {
        let mut any_present = false;
        let mut any_absent = false;
        for tokens in &tokenized {
            let (p, a) = sentence_signals(concept, tokens);
            any_present |= p;
            any_absent |= a;
        }
        let state = if any_absent {
            ConceptState::Absent
        } else if any_present {
            ConceptState::Present
        } else {
            ConceptState::Undetermined
        };
        out.insert(concept.concept_id().to_string(), state);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub concept_id: String,
    pub state: ClaimState,
    pub claim_text: String,
}

pub fn build_claim_family(concept_id: &str, registry: &ConceptRegistry) -> Result<(Claim, Claim)> {
    let concept = registry.require(concept_id)?;
    let make = |state: ClaimState| Claim {
        concept_id: concept_id.to_string(),
        state,
        claim_text: concept.claim_text(state == ClaimState::Present).to_string(),
    };
    Ok((make(ClaimState::Present), make(ClaimState::Absent)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorConfidence {
    High,
    Medium,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardnessReason {
    IndirectFindings,
    DirectMentionExcluded,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShortcutDecision {
    pub is_direct_mention: bool,
    pub anchor_sentence: Option<String>,
    pub anchor_confidence: AnchorConfidence,
}

/// Direct-mention check plus anchor extraction over findings sentences.
/// The anchor is the sentence with the highest concept-vocabulary overlap,
/// earliest sentence winning ties; confidence reflects that overlap count.
pub fn shortcut_filter(
    findings: &str,
    concept_id: &str,
    registry: &ConceptRegistry,
) -> Result<ShortcutDecision> {
    let concept = registry.require(concept_id)?;
    let sentences = segment_text(findings);
    let mut is_direct = false;
    let mut best: Option<(usize, usize)> = None;
    for (i, sentence) in sentences.iter().enumerate() {
        let tokens = text::tokenize(sentence);
        let (present, _) = sentence_signals(concept, &tokens);
        is_direct |= present;
        let overlap = concept.vocab_overlap(&tokens);
        if overlap > 0 && best.is_none_or(|(_, b)| overlap > b) {
            best = Some((i, overlap));
        }
    }
    let (anchor_sentence, anchor_confidence) = match best {
        Some((i, overlap)) => {
            let conf = if overlap >= 3 {
                AnchorConfidence::High
            } else if overlap == 2 {
                AnchorConfidence::Medium
            } else {
                AnchorConfidence::Low
            };
            (Some(sentences[i].clone()), conf)
        }
        None => (None, AnchorConfidence::Low),
    };
    Ok(ShortcutDecision {
        is_direct_mention: is_direct,
        anchor_sentence,
        anchor_confidence,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseConceptInstance {
    pub report_id: String,
    pub concept_id: String,
    pub gold_state: ClaimState,
    pub is_direct_mention: bool,
    pub hardness_reason: HardnessReason,
    pub anchor_sentence: Option<String>,
    pub anchor_confidence: AnchorConfidence,
    #[serde(default)]
    pub split: Option<Split>,
}

/// Instances from the benchmark partition (indirect mentions) and the easy
/// control partition (direct mentions); the two sum to all determined states.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InstancePartition {
    pub benchmark: Vec<CaseConceptInstance>,
    pub easy_control: Vec<CaseConceptInstance>,
}

/// Builds instances for every concept whose impression-derived state is
/// determined, and routes each by its shortcut-filter outcome.
pub fn build_instances(cases: &[CaseRecord], registry: &ConceptRegistry) -> Result<InstancePartition> {
    let per_case = exec::ordered_map(cases, |case| -> Result<Vec<CaseConceptInstance>> {
        let states = extract_concept_states(&case.impression_text, registry);
        let mut out = Vec::new();
        for concept in registry.concepts() {
            let gold_state = match states[concept.concept_id()] {
                ConceptState::Present => ClaimState::Present,
                ConceptState::Absent => ClaimState::Absent,
                ConceptState::Undetermined => continue,
            };
            let decision = shortcut_filter(&case.findings_text, concept.concept_id(), registry)?;
            let hardness_reason = if decision.is_direct_mention {
                HardnessReason::DirectMentionExcluded
            } else {
                HardnessReason::IndirectFindings
            };
            out.push(CaseConceptInstance {
                report_id: case.report_id.clone(),
                concept_id: concept.concept_id().to_string(),
                gold_state,
                is_direct_mention: decision.is_direct_mention,
                hardness_reason,
                anchor_sentence: decision.anchor_sentence,
                anchor_confidence: decision.anchor_confidence,
                split: case.split,
            });
        }
        Ok(out)
    });
    let mut partition = InstancePartition::default();
    for result in per_case {
        for instance in result? {
            if instance.is_direct_mention {
                partition.easy_control.push(instance);
            } else {
                partition.benchmark.push(instance);
            }
        }
    }
    let key = |i: &CaseConceptInstance| (i.report_id.clone(), i.concept_id.clone());
    partition.benchmark.sort_by_key(key);
    partition.easy_control.sort_by_key(key);
    Ok(partition)
}

pub const DEFAULT_SPLIT_RATIOS: (f64, f64, f64) = (0.75, 0.10, 0.15);

/// Patient-wise split by seeded hash threshold. Adding cases never moves an
/// existing patient because each assignment depends only on (seed, patient).
pub fn assign_patient_splits(
    cases: &[CaseRecord],
    seed: u64,
    ratios: (f64, f64, f64),
) -> Result<BTreeMap<String, Split>> {
    let (r_train, r_val, r_test) = ratios;
    if r_train < 0.0 || r_val < 0.0 || r_test < 0.0 {
        return Err(Error::validation("split ratios must be nonnegative"));
    }
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::validation("split ratios must sum to 1"));
    }
    let seed_str = seed.to_string();
    let mut out = BTreeMap::new();
    for case in cases {
        out.entry(case.patient_id.clone()).or_insert_with(|| {
            let f = hashing::unit_fraction(&[&seed_str, "patient-split", &case.patient_id]);
            if f < r_train {
                Split::Train
            } else if f < r_train + r_val {
                Split::Validation
            } else {
                Split::Test
            }
        });
    }
    Ok(out)
}

pub fn apply_splits(cases: &mut [CaseRecord], splits: &BTreeMap<String, Split>) -> Result<()> {
    for case in cases.iter_mut() {
        let split = splits
            .get(&case.patient_id)
            .ok_or_else(|| Error::validation(format!("no split for patient {:?}", case.patient_id)))?;
        case.split = Some(*split);
    }
    Ok(())
}

/// Difference in per-concept state frequency between two instance sets:
/// frequency in `b` minus frequency in `a`, each over that corpus's retained
/// instances of the concept (0 when the concept is absent from one side).
pub fn prevalence_shift(
    instances_a: &[CaseConceptInstance],
    instances_b: &[CaseConceptInstance],
    concept_id: &str,
    state: ClaimState,
) -> Result<f64> {
    let freq = |instances: &[CaseConceptInstance]| -> Option<f64> {
        let of_concept: Vec<_> = instances.iter().filter(|i| i.concept_id == concept_id).collect();
        if of_concept.is_empty() {
            return None;
        }
        let hits = of_concept.iter().filter(|i| i.gold_state == state).count();
        Some(hits as f64 / of_concept.len() as f64)
    };
    let fa = freq(instances_a);
    let fb = freq(instances_b);
    if fa.is_none() && fb.is_none() {
        return Err(Error::validation(format!(
            "concept {concept_id:?} absent from both corpora"
        )));
    }
    Ok(fb.unwrap_or(0.0) - fa.unwrap_or(0.0))
}
