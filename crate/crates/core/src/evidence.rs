//! Frozen evidence universe: article segmentation, sentence filtering,
//! concept-specific pool assignment, and the stratified article-level split.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::hashing;
use crate::registry::{CompiledConcept, ConceptRegistry};
use crate::text;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Article {
    pub article_id: String,
    #[serde(default)]
    pub title: String,
    pub body_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceUnit {
    pub evidence_id: String,
    pub article_id: String,
    pub sentence_index: usize,
    pub text: String,
    pub token_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolRole {
    SupportPresent,
    SupportAbsent,
    NonsupportHard,
    NonsupportEasy,
}

impl PoolRole {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolRole::SupportPresent => "support_present",
            PoolRole::SupportAbsent => "support_absent",
            PoolRole::NonsupportHard => "nonsupport_hard",
            PoolRole::NonsupportEasy => "nonsupport_easy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolAssignment {
    pub concept_id: String,
    pub evidence_id: String,
    pub role: PoolRole,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvidenceSplit {
    pub trainval_article_ids: BTreeSet<String>,
    pub heldout_article_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    MetadataLike,
    DefinitionLike,
    FragmentLike,
    OverBudget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceDrop {
    pub article_id: String,
    pub sentence_index: usize,
    pub reason: DropReason,
}

/// Words whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "vs", "etc", "cf", "al", "dr", "mr", "mrs", "ms", "st", "fig", "eq", "approx",
];

fn ends_with_abbreviation(chunk: &str) -> bool {
    let trimmed = chunk.trim_end();
    let lower = trimmed.to_lowercase();
    ABBREVIATIONS.iter().any(|abbr| {
        lower.ends_with(abbr)
            && lower[..lower.len() - abbr.len()]
                .chars()
                .next_back()
                .is_none_or(|c| !c.is_alphanumeric())
    })
}

/// Splits one paragraph (no internal blank lines) into sentences.
fn segment_paragraph(paragraph: &str) -> Vec<String> {
    let chars: Vec<char> = paragraph.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        if c == '.' || c == '?' || c == '!' {
            // Consume a run of closing punctuation after the terminator.
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j], '.' | '?' | '!' | ')' | ']' | '"' | '\'') {
                j += 1;
            }
            let mut k = j;
            while k < chars.len() && chars[k].is_whitespace() {
                k += 1;
            }
            let boundary = k > j
                && k < chars.len()
                && (chars[k].is_uppercase() || chars[k].is_ascii_digit())
                && !(c == '.' && ends_with_abbreviation(&chars[start..i].iter().collect::<String>()));
            if boundary {
                let sentence: String = chars[start..j].iter().collect();
                let sentence = text::normalize_whitespace(&sentence);
                if !sentence.is_empty() {
                    sentences.push(sentence);
                }
                start = k;
                i = k;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if start < chars.len() {
        let tail: String = chars[start..].iter().collect();
        let tail = text::normalize_whitespace(&tail);
        if !tail.is_empty() {
            sentences.push(tail);
        }
    }
    sentences
}

/// Deterministic sentence segmentation: paragraphs are rejoined across single
/// line breaks, then split on sentence-final punctuation followed by
/// whitespace and an uppercase letter or digit, protected by a fixed
/// abbreviation list.
pub fn segment_text(article_text: &str) -> Vec<String> {
    let normalized = article_text.replace("\r\n", "\n");
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current = String::new();
    for line in normalized.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(std::mem::take(&mut current));
            }
        } else {
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(line.trim());
        }
    }
    if !current.is_empty() {
        paragraphs.push(current);
    }
    paragraphs.iter().flat_map(|p| segment_paragraph(p)).collect()
}

/// Candidate sentences with their stable per-article indices.
pub fn segment_article(article_id: &str, article_text: &str) -> Vec<(usize, String)> {
    let _ = article_id;
    segment_text(article_text).into_iter().enumerate().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterOutcome {
    Keep,
    Drop(DropReason),
}

fn is_list_marker_start(sentence: &str) -> bool {
    let trimmed = sentence.trim_start();
    if trimmed.starts_with(['-', '*', '•', '·']) {
        return true;
    }
    let digits: String = trimmed.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return false;
    }
    matches!(trimmed[digits.len()..].chars().next(), Some('.') | Some(')'))
}

fn is_all_title_case(sentence: &str) -> bool {
    let tokens = text::token_spans(sentence);
    let mut saw_alpha = false;
    for (a, b) in tokens {
        let tok = &sentence[a..b];
        let mut chars = tok.chars();
        let first = match chars.next() {
            Some(c) => c,
            None => continue,
        };
        if !first.is_alphabetic() {
            continue;
        }
        saw_alpha = true;
        if !first.is_uppercase() {
            return false;
        }
    }
    saw_alpha
}

fn is_definition_opening(tokens: &[String]) -> bool {
    tokens.len() >= 4
        && (tokens[1] == "is" || tokens[1] == "are")
        && tokens[2] == "defined"
        && tokens[3] == "as"
}

/// Filter checks run in a fixed order so each drop has one canonical reason:
/// metadata, then definition, then fragment, then length budget.
pub fn filter_sentence(sentence: &str) -> FilterOutcome {
    let tokens = text::tokenize(sentence);
    if is_list_marker_start(sentence)
        || (sentence.trim_end().ends_with(':') && tokens.len() <= 6)
        || is_all_title_case(sentence)
    {
        return FilterOutcome::Drop(DropReason::MetadataLike);
    }
    if is_definition_opening(&tokens) {
        return FilterOutcome::Drop(DropReason::DefinitionLike);
    }
    if tokens.len() < 5 {
        return FilterOutcome::Drop(DropReason::FragmentLike);
    }
    if tokens.len() > 50 {
        return FilterOutcome::Drop(DropReason::OverBudget);
    }
    FilterOutcome::Keep
}

pub fn evidence_id_for(article_id: &str, sentence_index: usize) -> String {
    format!("ev-{}", hashing::stable_hex(&[article_id, &sentence_index.to_string()]))
}

/// Segments and filters all articles. Unit order is canonical
/// (article_id, sentence_index) regardless of input order.
pub fn build_evidence_units(articles: &[Article]) -> Result<(Vec<EvidenceUnit>, Vec<SentenceDrop>)> {
    let mut ids = BTreeSet::new();
    for a in articles {
        if a.article_id.is_empty() {
            return Err(Error::validation("empty article_id"));
        }
        if !ids.insert(&a.article_id) {
            return Err(Error::validation(format!("duplicate article_id {:?}", a.article_id)));
        }
    }
    let mut sorted: Vec<&Article> = articles.iter().collect();
    sorted.sort_by(|a, b| a.article_id.cmp(&b.article_id));
    let per_article = exec::ordered_map(&sorted, |article| {
        let mut units = Vec::new();
        let mut drops = Vec::new();
        for (sentence_index, sentence) in segment_article(&article.article_id, &article.body_text) {
            match filter_sentence(&sentence) {
                FilterOutcome::Keep => {
                    let token_len = text::token_len(&sentence);
                    units.push(EvidenceUnit {
                        evidence_id: evidence_id_for(&article.article_id, sentence_index),
                        article_id: article.article_id.clone(),
                        sentence_index,
                        text: sentence,
                        token_len,
                    });
                }
                FilterOutcome::Drop(reason) => drops.push(SentenceDrop {
                    article_id: article.article_id.clone(),
                    sentence_index,
                    reason,
                }),
            }
        }
        (units, drops)
    });
    let mut units = Vec::new();
    let mut drops = Vec::new();
    for (u, d) in per_article {
        units.extend(u);
        drops.extend(d);
    }
    Ok((units, drops))
}

/// Support-framing classification for one sentence against one concept.
/// A negation cue or absence phrasing anywhere in the sentence flips a
/// pattern match to the absence side. Easy membership is not decided here;
/// `None` means the sentence is a zero-overlap easy candidate.
pub fn classify_unit(concept: &CompiledConcept, tokens: &[String]) -> Option<PoolRole> {
    let present = !concept.present_positions(tokens).is_empty();
    let absent_phrase = concept.has_absent_pattern(tokens);
    let negated = !concept.cue_positions(tokens).is_empty();
    if present || absent_phrase {
        if absent_phrase || negated {
            return Some(PoolRole::SupportAbsent);
        }
        return Some(PoolRole::SupportPresent);
    }
    if concept.vocab_overlap(tokens) >= 1 {
        return Some(PoolRole::NonsupportHard);
    }
    None
}

/// Classifies one unit for one concept; easy membership additionally requires
/// enrollment, which `assign_pools` handles.
pub fn assign_pool(unit: &EvidenceUnit, concept: &CompiledConcept) -> Option<PoolAssignment> {
    let tokens = text::tokenize(&unit.text);
    classify_unit(concept, &tokens).map(|role| PoolAssignment {
        concept_id: concept.concept_id().to_string(),
        evidence_id: unit.evidence_id.clone(),
        role,
    })
}

/// Full pool-assignment table. For each concept the support and hard roles
/// come from framing, and the easy role is a seeded hash-rank sample of
/// zero-overlap sentences, sized by the registry's pool rules.
pub fn assign_pools(
    units: &[EvidenceUnit],
    registry: &ConceptRegistry,
    seed: u64,
) -> Vec<PoolAssignment> {
    let tokenized: Vec<Vec<String>> = exec::ordered_map(units, |u| text::tokenize(&u.text));
    let mut out = Vec::new();
    for concept in registry.concepts() {
        let mut assigned = Vec::new();
        let mut easy_candidates = Vec::new();
        for (unit, tokens) in units.iter().zip(tokenized.iter()) {
            match classify_unit(concept, tokens) {
                Some(role) => assigned.push(PoolAssignment {
                    concept_id: concept.concept_id().to_string(),
                    evidence_id: unit.evidence_id.clone(),
                    role,
                }),
                None => easy_candidates.push(unit.evidence_id.clone()),
            }
        }
        let quota = registry.pool_rules.easy_pool_size.min(easy_candidates.len());
        easy_candidates.sort_by_key(|eid| {
            hashing::stable_hash64(&[&seed.to_string(), "easy-pool", concept.concept_id(), eid])
        });
        for eid in easy_candidates.into_iter().take(quota) {
            assigned.push(PoolAssignment {
                concept_id: concept.concept_id().to_string(),
                evidence_id: eid,
                role: PoolRole::NonsupportEasy,
            });
        }
        out.extend(assigned);
    }
    let index: BTreeMap<&str, usize> =
        units.iter().enumerate().map(|(i, u)| (u.evidence_id.as_str(), i)).collect();
    out.sort_by(|a, b| {
        (a.concept_id.as_str(), index[a.evidence_id.as_str()])
            .cmp(&(b.concept_id.as_str(), index[b.evidence_id.as_str()]))
    });
    out
}

/// Distinct evidence units assigned to the concept across all four roles.
pub fn concept_coverage(concept_id: &str, assignments: &[PoolAssignment]) -> usize {
    assignments
        .iter()
        .filter(|a| a.concept_id == concept_id)
        .map(|a| a.evidence_id.as_str())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Article-level split stratified by dominant covered concept. Within each
/// bucket a seeded hash ranking sends round(ratio * n) articles to trainval,
/// so the global fraction tracks the ratio for any seed.
pub fn split_articles(
    units: &[EvidenceUnit],
    assignments: &[PoolAssignment],
    article_ids: &[String],
    seed: u64,
    trainval_ratio: f64,
) -> Result<EvidenceSplit> {
    if !(0.0..=1.0).contains(&trainval_ratio) {
        return Err(Error::validation("trainval_ratio must be in [0, 1]"));
    }
    let unit_article: BTreeMap<&str, &str> = units
        .iter()
        .map(|u| (u.evidence_id.as_str(), u.article_id.as_str()))
        .collect();
    let mut per_article: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for a in assignments {
        if let Some(&article) = unit_article.get(a.evidence_id.as_str()) {
            *per_article
                .entry(article)
                .or_default()
                .entry(a.concept_id.as_str())
                .or_insert(0) += 1;
        }
    }
    // Dominant concept per article; ties go to the smallest concept_id.
    let mut dominant: BTreeMap<&str, &str> = BTreeMap::new();
    for (article, concept_counts) in &per_article {
        let mut best: Option<(&str, usize)> = None;
        for (concept, n) in concept_counts {
            if best.is_none_or(|(_, bn)| *n > bn) {
                best = Some((concept, *n));
            }
        }
        if let Some((concept, _)) = best {
            dominant.insert(article, concept);
        }
    }
    let mut buckets: BTreeMap<&str, Vec<&String>> = BTreeMap::new();
    for id in article_ids {
        let concept = dominant.get(id.as_str()).copied().unwrap_or("");
        buckets.entry(concept).or_default().push(id);
    }
    let mut split = EvidenceSplit::default();
    for (_, mut members) in buckets {
        members.sort_by_key(|id| {
            hashing::stable_hash64(&[&seed.to_string(), "article-split", id])
        });
        let take = ((trainval_ratio * members.len() as f64).round() as usize).min(members.len());
        for (i, id) in members.into_iter().enumerate() {
            if i < take {
                split.trainval_article_ids.insert(id.clone());
            } else {
                split.heldout_article_ids.insert(id.clone());
            }
        }
    }
    Ok(split)
}
