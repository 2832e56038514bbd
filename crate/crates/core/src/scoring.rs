//! Scorer boundary: channel masking for the three systems, a deterministic
//! lexical baseline for desk-scale runs, and ingestion of external score
//! files produced by real verifiers.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::ClaimState;
use crate::error::{Error, Result};
use crate::evidence::{classify_unit, PoolRole};
use crate::exec;
use crate::interventions::{
    format_input, materialize_evidence, truncate_input, EvidenceUniverse, FormattedInput,
    DEFAULT_DELIMITER,
};
use crate::registry::{CompiledConcept, ConceptRegistry};
use crate::supervision::VerifierRow;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMask {
    pub use_case: bool,
    pub use_evidence: bool,
}

/// Case and claim only.
pub const S1: ChannelMask = ChannelMask { use_case: true, use_evidence: false };
/// Evidence and claim only.
pub const S2: ChannelMask = ChannelMask { use_case: false, use_evidence: true };
/// All three channels.
pub const S3: ChannelMask = ChannelMask { use_case: true, use_evidence: true };

impl ChannelMask {
    pub fn label(self) -> &'static str {
        match (self.use_case, self.use_evidence) {
            (true, false) => "S1",
            (false, true) => "S2",
            (true, true) => "S3",
            (false, false) => "claim_only",
        }
    }

    pub fn from_label(label: &str) -> Result<ChannelMask> {
        match label {
            "S1" => Ok(S1),
            "S2" => Ok(S2),
            "S3" => Ok(S3),
            other => Err(Error::validation(format!("unknown system label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub row_id: String,
    pub condition_key: String,
    pub probability: f64,
}

pub fn default_overlap_weight() -> f64 {
    0.2
}

pub fn default_agreement_weight() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerSpec {
    ExternalFile { path: PathBuf },
    BaselineLexical {
        #[serde(default = "default_overlap_weight")]
        overlap_weight: f64,
        #[serde(default = "default_agreement_weight")]
        agreement_weight: f64,
    },
}

impl Default for ScorerSpec {
    fn default() -> Self {
        ScorerSpec::BaselineLexical {
            overlap_weight: default_overlap_weight(),
            agreement_weight: default_agreement_weight(),
        }
    }
}

impl ScorerSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScorerSpec::ExternalFile { path } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::validation("external_file needs a path"));
                }
            }
            ScorerSpec::BaselineLexical { overlap_weight, agreement_weight } => {
                for (name, w) in [("overlap_weight", overlap_weight), ("agreement_weight", agreement_weight)] {
                    if !(0.0..=1.0).contains(w) {
                        return Err(Error::validation(format!("{name} must be in [0, 1]")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rendering knobs shared by every scoring path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormatOptions {
    pub delimiter: String,
    pub truncation_budget: usize,
}

impl Default for FormatOptions {
    fn default() -> Self {
        FormatOptions { delimiter: DEFAULT_DELIMITER.to_string(), truncation_budget: 1024 }
    }
}

/// Everything needed to turn a row into scorer input.
pub struct ScoringContext<'a> {
    pub case_text_by_report: &'a BTreeMap<String, String>,
    pub universe: &'a EvidenceUniverse,
    pub registry: &'a ConceptRegistry,
    pub options: FormatOptions,
}

impl ScoringContext<'_> {
    fn case_text(&self, report_id: &str) -> Result<&str> {
        self.case_text_by_report
            .get(report_id)
            .map(String::as_str)
            .ok_or_else(|| Error::validation(format!("no case text for report {report_id:?}")))
    }
}

/// Masked, formatted, truncated input for one row. Masked-off channels render
/// as empty fields; the claim always survives masking.
pub fn mask_channels(row: &VerifierRow, mask: ChannelMask, ctx: &ScoringContext) -> Result<FormattedInput> {
    let case_text = if mask.use_case { ctx.case_text(&row.report_id)? } else { "" };
    let evidence_text = if mask.use_evidence {
        materialize_evidence(&row.evidence_ids, ctx.universe, &ctx.options.delimiter)?
    } else {
        String::new()
    };
    let formatted = format_input(case_text, &row.claim.claim_text, &evidence_text);
    Ok(truncate_input(&formatted, ctx.options.truncation_budget))
}

const EVIDENCE_LABEL: &str = "\nEvidence: ";

/// The evidence field of a rendered input: everything after the last
/// evidence label. Truncation can cut into or remove the field; a missing
/// label reads as empty evidence.
pub fn evidence_field(formatted_text: &str) -> &str {
    match formatted_text.rfind(EVIDENCE_LABEL) {
        Some(i) => &formatted_text[i + EVIDENCE_LABEL.len()..],
        None => "",
    }
}

/// Deterministic stand-in scorer. Combines normalized content-token overlap
/// between the evidence field and the claim concept's vocabulary with a
/// polarity-agreement term, clipped to [0, 1]. Empty evidence scores exactly
/// 0.5.
pub fn baseline_lexical_score(
    formatted: &FormattedInput,
    concept: &CompiledConcept,
    claim_state: ClaimState,
    overlap_weight: f64,
    agreement_weight: f64,
) -> f64 {
    let evidence = evidence_field(&formatted.text);
    if evidence.is_empty() {
        return 0.5;
    }
    let tokens = text::tokenize(evidence);
    let content = text::content_tokens(&tokens);
    let overlap = if content.is_empty() {
        0.0
    } else {
        let hits = content.iter().filter(|t| concept.vocab().contains(t.as_str())).count();
        hits as f64 / content.len() as f64
    };
    let agreement = match classify_unit(concept, &tokens) {
        Some(PoolRole::SupportAbsent) => match claim_state {
            ClaimState::Absent => 1.0,
            ClaimState::Present => -1.0,
        },
        Some(PoolRole::SupportPresent) => match claim_state {
            ClaimState::Present => 1.0,
            ClaimState::Absent => -1.0,
        },
        _ => 0.0,
    };
    (0.5 + overlap_weight * overlap + agreement_weight * agreement).clamp(0.0, 1.0)
}

/// Scores every row under one mask and condition, in row order. External
/// files are joined by row_id with full-coverage verification.
pub fn score_rows(
    rows: &[VerifierRow],
    scorer: &ScorerSpec,
    mask: ChannelMask,
    condition_key: &str,
    ctx: &ScoringContext,
) -> Result<Vec<ScoreRecord>> {
    scorer.validate()?;
    match scorer {
        ScorerSpec::BaselineLexical { overlap_weight, agreement_weight } => {
            let outputs = exec::ordered_map(rows, |row| -> Result<ScoreRecord> {
                let formatted = mask_channels(row, mask, ctx)?;
                let concept = ctx.registry.require(&row.concept_id)?;
                let probability = baseline_lexical_score(
                    &formatted,
                    concept,
                    row.claim.state,
                    *overlap_weight,
                    *agreement_weight,
                );
                Ok(ScoreRecord {
                    row_id: row.row_id.clone(),
                    condition_key: condition_key.to_string(),
                    probability,
                })
            });
            outputs.into_iter().collect()
        }
        ScorerSpec::ExternalFile { path } => {
            let expected: BTreeSet<String> = rows.iter().map(|r| r.row_id.clone()).collect();
            let loaded = load_external_scores(path, &expected)?;
            let by_id: BTreeMap<&str, f64> =
                loaded.iter().map(|r| (r.row_id.as_str(), r.probability)).collect();
            Ok(rows
                .iter()
                .map(|row| ScoreRecord {
                    row_id: row.row_id.clone(),
                    condition_key: condition_key.to_string(),
                    probability: by_id[row.row_id.as_str()],
                })
                .collect())
        }
    }
}

#[derive(Debug, Deserialize)]
struct ExternalScoreLine {
    row_id: String,
    #[serde(default)]
    #[allow(dead_code)]
    condition_key: Option<String>,
    probability: f64,
}

/// Loads and validates an external score file (one JSON object per line with
/// row_id and probability). Extra ids warn; missing ids, malformed lines,
/// duplicates, and out-of-range probabilities are errors.
pub fn load_external_scores(path: &Path, expected_row_ids: &BTreeSet<String>) -> Result<Vec<ScoreRecord>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ExternalScoreLine = serde_json::from_str(line).map_err(|e| {
            Error::validation(format!("{}:{}: malformed score line: {e}", path.display(), lineno + 1))
        })?;
        if !(0.0..=1.0).contains(&parsed.probability) {
            return Err(Error::validation(format!(
                "{}:{}: probability {} outside [0, 1]",
                path.display(),
                lineno + 1,
                parsed.probability
            )));
        }
        if !seen.insert(parsed.row_id.clone()) {
            return Err(Error::validation(format!(
                "{}:{}: duplicate row_id {:?}",
                path.display(),
                lineno + 1,
                parsed.row_id
            )));
        }
        if !expected_row_ids.contains(&parsed.row_id) {
            log::warn!("score file {} has extra row_id {:?}", path.display(), parsed.row_id);
            continue;
        }
        records.push(ScoreRecord {
            row_id: parsed.row_id,
            condition_key: String::new(),
            probability: parsed.probability,
        });
    }
    let missing: Vec<&String> = expected_row_ids.iter().filter(|id| !seen.contains(*id)).collect();
    if !missing.is_empty() {
        let shown: Vec<String> = missing.iter().take(5).map(|s| (*s).clone()).collect();
        return Err(Error::validation(format!(
            "score file {} is missing {} row_ids (first: {})",
            path.display(),
            missing.len(),
            shown.join(", ")
        )));
    }
    Ok(records)
}
