//! Evidence-channel interventions (identity, empty, swap, held-out redraw,
//! top-p prefix), evidence materialization, input formatting, and truncation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimState, Split};
use crate::error::{Error, Result};
use crate::evidence::{EvidenceSplit, EvidenceUnit, PoolAssignment, PoolRole};
use crate::hashing;
use crate::supervision::{Category, VerifierRow};
use crate::text;

pub const DEFAULT_DELIMITER: &str = " | ";

/// Resolves evidence ids to sentence text and owning article.
#[derive(Debug, Clone, Default)]
pub struct EvidenceUniverse {
    text_by_id: BTreeMap<String, String>,
    article_by_id: BTreeMap<String, String>,
}

impl EvidenceUniverse {
    pub fn from_units(units: &[EvidenceUnit]) -> Self {
        let mut u = EvidenceUniverse::default();
        for unit in units {
            u.text_by_id.insert(unit.evidence_id.clone(), unit.text.clone());
            u.article_by_id.insert(unit.evidence_id.clone(), unit.article_id.clone());
        }
        u
    }

    pub fn text(&self, evidence_id: &str) -> Result<&str> {
        self.text_by_id
            .get(evidence_id)
            .map(String::as_str)
            .ok_or_else(|| Error::validation(format!("unresolvable evidence_id {evidence_id:?}")))
    }

    pub fn article(&self, evidence_id: &str) -> Option<&str> {
        self.article_by_id.get(evidence_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.text_by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text_by_id.is_empty()
    }
}

/// Ordered concatenation of evidence sentences; empty list renders as "".
pub fn materialize_evidence(
    evidence_ids: &[String],
    universe: &EvidenceUniverse,
    delimiter: &str,
) -> Result<String> {
    let mut parts = Vec::with_capacity(evidence_ids.len());
    for id in evidence_ids {
        parts.push(universe.text(id)?);
    }
    Ok(parts.join(delimiter))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormattedInput {
    pub text: String,
    pub token_len: usize,
    pub truncated: bool,
}

/// Fixed template with deterministic field order; field labels are part of
/// the rendered text even when a field is empty.
pub fn format_input(case_text: &str, claim_text: &str, evidence_text: &str) -> FormattedInput {
    let rendered = format!("Case: {case_text}\nClaim: {claim_text}\nEvidence: {evidence_text}");
    let token_len = text::token_len(&rendered);
    FormattedInput {
        text: rendered,
        token_len,
        truncated: false,
    }
}

/// Pure tail-cut: keeps the byte prefix covering the first `budget` tokens,
/// so surviving text is bit-identical to the original prefix.
pub fn truncate_input(formatted: &FormattedInput, budget: usize) -> FormattedInput {
    let spans = text::token_spans(&formatted.text);
    if spans.len() <= budget {
        return FormattedInput {
            text: formatted.text.clone(),
            token_len: spans.len(),
            truncated: false,
        };
    }
    let end = if budget == 0 { 0 } else { spans[budget - 1].1 };
    FormattedInput {
        text: formatted.text[..end].to_string(),
        token_len: budget,
        truncated: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionKind {
    None,
    Empty,
    Swap,
    Heldout,
    TopP,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionSpec {
    pub kind: InterventionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InterventionSpec {
    pub fn none() -> Self {
        InterventionSpec { kind: InterventionKind::None, p: None, seed: None }
    }

    pub fn empty() -> Self {
        InterventionSpec { kind: InterventionKind::Empty, p: None, seed: None }
    }

    pub fn swap(seed: u64) -> Self {
        InterventionSpec { kind: InterventionKind::Swap, p: None, seed: Some(seed) }
    }

    pub fn heldout(seed: u64) -> Self {
        InterventionSpec { kind: InterventionKind::Heldout, p: None, seed: Some(seed) }
    }

    pub fn top_p(p: usize) -> Self {
        InterventionSpec { kind: InterventionKind::TopP, p: Some(p), seed: None }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            InterventionKind::TopP => {
                match self.p {
                    Some(p) if p >= 1 => {}
                    Some(_) => return Err(Error::validation("top_p needs p >= 1")),
                    None => return Err(Error::validation("top_p needs p")),
                }
                if self.seed.is_some() {
                    return Err(Error::validation("top_p takes no seed"));
                }
            }
            InterventionKind::Swap | InterventionKind::Heldout => {
                if self.seed.is_none() {
                    return Err(Error::validation("swap and heldout need a seed"));
                }
                if self.p.is_some() {
                    return Err(Error::validation("only top_p takes p"));
                }
            }
            InterventionKind::None | InterventionKind::Empty => {
                if self.p.is_some() || self.seed.is_some() {
                    return Err(Error::validation("none and empty take no parameters"));
                }
            }
        }
        Ok(())
    }

    /// Stable key used for condition files and score joins.
    pub fn condition_key(&self) -> String {
        match self.kind {
            InterventionKind::None => "none".to_string(),
            InterventionKind::Empty => "empty".to_string(),
            InterventionKind::Swap => format!("swap-{}", self.seed.unwrap_or(0)),
            InterventionKind::Heldout => format!("heldout-{}", self.seed.unwrap_or(0)),
            InterventionKind::TopP => format!("top{}", self.p.unwrap_or(0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapPlan {
    pub permutation: Vec<usize>,
}

/// Seeded uniform derangement by rejection sampling.
pub fn make_swap_plan(n: usize, seed: u64) -> Result<SwapPlan> {
    if n < 2 {
        return Err(Error::validation("swap needs at least 2 rows"));
    }
    let mut rng = hashing::derive_rng(seed, &["swap-plan", &n.to_string()]);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().all(|(i, &p)| i != p) {
            return Ok(SwapPlan { permutation: perm });
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DroppedRow {
    pub row_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionManifest {
    pub condition_key: String,
    pub spec: InterventionSpec,
    pub input_rows: usize,
    pub output_rows: usize,
    pub dropped: Vec<DroppedRow>,
}

fn support_role_for_claim(state: ClaimState) -> PoolRole {
    match state {
        ClaimState::Present => PoolRole::SupportPresent,
        ClaimState::Absent => PoolRole::SupportAbsent,
    }
}

/// Applies one intervention to a row set. Case, claim, label, and row_id are
/// untouched; only evidence_ids change. Held-out redraw can drop rows, and
/// every drop is reported in the manifest.
pub fn apply_intervention(
    rows: &[VerifierRow],
    spec: &InterventionSpec,
    assignments: &[PoolAssignment],
    universe: &EvidenceUniverse,
    evidence_split: &EvidenceSplit,
) -> Result<(Vec<VerifierRow>, ConditionManifest)> {
    spec.validate()?;
    let mut dropped = Vec::new();
    let out: Vec<VerifierRow> = match spec.kind {
        InterventionKind::None => rows.to_vec(),
        InterventionKind::Empty => rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.evidence_ids.clear();
                r
            })
            .collect(),
        InterventionKind::TopP => {
            let p = spec.p.expect("validated");
            rows.iter()
                .map(|r| {
                    let mut r = r.clone();
                    r.evidence_ids.truncate(p);
                    r
                })
                .collect()
        }
        InterventionKind::Swap => apply_swap(rows, spec.seed.expect("validated"))?,
        InterventionKind::Heldout => apply_heldout(
            rows,
            spec.seed.expect("validated"),
            assignments,
            universe,
            evidence_split,
            &mut dropped,
        )?,
    };
    let manifest = ConditionManifest {
        condition_key: spec.condition_key(),
        spec: spec.clone(),
        input_rows: rows.len(),
        output_rows: out.len(),
        dropped,
    };
    Ok((out, manifest))
}

/// Swap runs within each split so every evaluation slice stays
/// self-contained; rows without a split form their own group.
fn apply_swap(rows: &[VerifierRow], seed: u64) -> Result<Vec<VerifierRow>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        let key = row.split.map_or("unassigned", Split::as_str);
        groups.entry(key).or_default().push(i);
    }
    let mut out = rows.to_vec();
    for (key, members) in groups {
        if members.len() < 2 {
            return Err(Error::validation(format!(
                "swap needs at least 2 rows in split {key:?}, found {}",
                members.len()
            )));
        }
        let mut rng = hashing::derive_rng(seed, &["swap-plan", key, &members.len().to_string()]);
        let mut perm: Vec<usize> = (0..members.len()).collect();
        loop {
            perm.shuffle(&mut rng);
            if perm.iter().enumerate().all(|(i, &p)| i != p) {
                break;
            }
        }
        for (slot, &src) in perm.iter().enumerate() {
            out[members[slot]].evidence_ids = rows[members[src]].evidence_ids.clone();
        }
    }
    Ok(out)
}

fn apply_heldout(
    rows: &[VerifierRow],
    seed: u64,
    assignments: &[PoolAssignment],
    universe: &EvidenceUniverse,
    evidence_split: &EvidenceSplit,
    dropped: &mut Vec<DroppedRow>,
) -> Result<Vec<VerifierRow>> {
    // Held-out pools per (concept, role), in assignment-table order.
    let mut pools: BTreeMap<(&str, PoolRole), Vec<&str>> = BTreeMap::new();
    let mut role_of: BTreeMap<(&str, &str), PoolRole> = BTreeMap::new();
    for a in assignments {
        role_of.insert((a.concept_id.as_str(), a.evidence_id.as_str()), a.role);
        let heldout = universe
            .article(&a.evidence_id)
            .is_some_and(|art| evidence_split.heldout_article_ids.contains(art));
        if heldout {
            pools
                .entry((a.concept_id.as_str(), a.role))
                .or_default()
                .push(a.evidence_id.as_str());
        }
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        if row.evidence_ids.is_empty() {
            out.push(row.clone());
            continue;
        }
        let role = match row.category {
            Category::C | Category::D => support_role_for_claim(row.claim.state),
            Category::A | Category::B => {
                match role_of.get(&(row.concept_id.as_str(), row.evidence_ids[0].as_str())) {
                    Some(role) => *role,
                    None => {
                        dropped.push(DroppedRow {
                            row_id: row.row_id.clone(),
                            reason: "evidence role unknown".to_string(),
                        });
                        continue;
                    }
                }
            }
        };
        let pool = pools.get(&(row.concept_id.as_str(), role));
        let pool = match pool {
            Some(p) if !p.is_empty() => p,
            _ => {
                dropped.push(DroppedRow {
                    row_id: row.row_id.clone(),
                    reason: format!("empty held-out pool for role {}", role.as_str()),
                });
                continue;
            }
        };
        let mut rng = hashing::derive_rng(seed, &["heldout", &row.row_id]);
        let mut candidates: Vec<&str> = pool.clone();
        candidates.shuffle(&mut rng);
        let take = row.evidence_ids.len().min(candidates.len());
        let mut r = row.clone();
        r.evidence_ids = candidates[..take].iter().map(|s| s.to_string()).collect();
        out.push(r);
    }
    Ok(out)
}
