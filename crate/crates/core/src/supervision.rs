//! Supervision construction: turns case-concept instances and evidence pools
//! into labeled verifier rows across the four categories, plus construction
//! diagnostics.
//!
//! Category semantics: C pairs the gold-state claim with gold-state support
//! evidence (label 1); D pairs the opposite claim with opposite-state support
//! evidence (label 0); each non-support package yields both an A row (claim
//! present) and a B row (claim absent), both label 0.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{CaseConceptInstance, Claim, ClaimState};
use crate::error::{Error, Result};
use crate::evidence::{PoolAssignment, PoolRole};
use crate::exec;
use crate::hashing;
use crate::registry::ConceptRegistry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
    D,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::A => "A",
            Category::B => "B",
            Category::C => "C",
            Category::D => "D",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifierRow {
    pub row_id: String,
    pub report_id: String,
    pub concept_id: String,
    pub claim: Claim,
    pub evidence_ids: Vec<String>,
    pub label: u8,
    pub category: Category,
    #[serde(default)]
    pub split: Option<crate::corpus::Split>,
}

fn default_evidence_per_row() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    /// Max gold-state support packages per case-concept (category C).
    pub n_support: usize,
    /// Max opposite-state support packages (category D).
    pub n_wrongstate: usize,
    /// Max non-support packages; each yields two rows, one per claim polarity.
    pub n_nonsupport: usize,
    /// Fraction of non-support packages drawn from the hard pool.
    pub hard_easy_mix: f64,
    /// Evidence units per package.
    #[serde(default = "default_evidence_per_row")]
    pub evidence_per_row: usize,
    pub seed: u64,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        SamplingPolicy {
            n_support: 1,
            n_wrongstate: 1,
            n_nonsupport: 2,
            hard_easy_mix: 0.5,
            evidence_per_row: default_evidence_per_row(),
            seed: 0,
        }
    }
}

impl SamplingPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.hard_easy_mix) {
            return Err(Error::validation("hard_easy_mix must be in [0, 1]"));
        }
        if self.evidence_per_row < 1 {
            return Err(Error::validation("evidence_per_row must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkipEvent {
    pub report_id: String,
    pub concept_id: String,
    pub role: PoolRole,
    pub requested: usize,
    pub drawn: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConstructionLog {
    pub skips: Vec<SkipEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupervisionDiagnostics {
    pub total_rows: usize,
    pub positive_fraction: f64,
    pub wrong_state_fraction: f64,
    pub concept_distribution: BTreeMap<String, f64>,
    pub mean_rows_per_case: f64,
    pub claim_polarity_fractions: BTreeMap<String, f64>,
    pub category_counts: BTreeMap<String, usize>,
    pub split_counts: BTreeMap<String, usize>,
}

pub fn expected_row_count(n_s: usize, n_sbar: usize, n_0: usize) -> usize {
    n_s + n_sbar + 2 * n_0
}

/// Evidence pools for one concept, in assignment-table order.
#[derive(Debug, Clone, Default)]
pub struct ConceptPools {
    pub by_role: BTreeMap<PoolRole, Vec<String>>,
}

pub fn index_pools(assignments: &[PoolAssignment]) -> BTreeMap<String, ConceptPools> {
    let mut out: BTreeMap<String, ConceptPools> = BTreeMap::new();
    for a in assignments {
        out.entry(a.concept_id.clone())
            .or_default()
            .by_role
            .entry(a.role)
            .or_default()
            .push(a.evidence_id.clone());
    }
    out
}

pub fn row_id_for(
    report_id: &str,
    concept_id: &str,
    category: Category,
    claim_state: ClaimState,
    evidence_ids: &[String],
) -> String {
    let mut parts: Vec<&str> = vec!["row", report_id, concept_id, category.as_str(), claim_state.as_str()];
    for eid in evidence_ids {
        parts.push(eid);
    }
    format!("row-{}", hashing::stable_hex(&parts))
}

/// Seeded ordered packages from one pool, without replacement: the pool is
/// shuffled once, then cut into consecutive chunks. A final short chunk is
/// still a package.
fn draw_packages(
    pool: &[String],
    count: usize,
    evidence_per_row: usize,
    seed: u64,
    report_id: &str,
    concept_id: &str,
    role: PoolRole,
) -> Vec<Vec<String>> {
    if count == 0 || pool.is_empty() {
        return Vec::new();
    }
    let mut rng = hashing::derive_rng(seed, &["draw", report_id, concept_id, role.as_str()]);
    let mut shuffled = pool.to_vec();
    shuffled.shuffle(&mut rng);
    shuffled
        .chunks(evidence_per_row)
        .take(count)
        .map(|c| c.to_vec())
        .collect()
}

struct PairOutput {
    rows: Vec<VerifierRow>,
    skips: Vec<SkipEvent>,
}

fn construct_for_pair(
    instance: &CaseConceptInstance,
    pools: &ConceptPools,
    policy: &SamplingPolicy,
    registry: &ConceptRegistry,
) -> Result<PairOutput> {
    let concept = registry.require(&instance.concept_id)?;
    let empty = Vec::new();
    let pool = |role: PoolRole| pools.by_role.get(&role).unwrap_or(&empty);
    let gold_role = match instance.gold_state {
        ClaimState::Present => PoolRole::SupportPresent,
        ClaimState::Absent => PoolRole::SupportAbsent,
    };
    let wrong_role = match instance.gold_state {
        ClaimState::Present => PoolRole::SupportAbsent,
        ClaimState::Absent => PoolRole::SupportPresent,
    };
    let claim_for = |state: ClaimState| Claim {
        concept_id: instance.concept_id.clone(),
        state,
        claim_text: concept.claim_text(state == ClaimState::Present).to_string(),
    };

    let mut rows = Vec::new();
    let mut skips = Vec::new();
    let mut record_skip = |role: PoolRole, requested: usize, drawn: usize| {
        if drawn < requested {
            skips.push(SkipEvent {
                report_id: instance.report_id.clone(),
                concept_id: instance.concept_id.clone(),
                role,
                requested,
                drawn,
            });
        }
    };
    let draw = |role: PoolRole, count: usize| {
        draw_packages(
            pool(role),
            count,
            policy.evidence_per_row,
            policy.seed,
            &instance.report_id,
            &instance.concept_id,
            role,
        )
    };

    let support = draw(gold_role, policy.n_support);
    record_skip(gold_role, policy.n_support, support.len());
    for package in support {
        let claim = claim_for(instance.gold_state);
        rows.push(VerifierRow {
            row_id: row_id_for(&instance.report_id, &instance.concept_id, Category::C, claim.state, &package),
            report_id: instance.report_id.clone(),
            concept_id: instance.concept_id.clone(),
            claim,
            evidence_ids: package,
            label: 1,
            category: Category::C,
            split: instance.split,
        });
    }

    let wrong = draw(wrong_role, policy.n_wrongstate);
    record_skip(wrong_role, policy.n_wrongstate, wrong.len());
    for package in wrong {
        let claim = claim_for(instance.gold_state.opposite());
        rows.push(VerifierRow {
            row_id: row_id_for(&instance.report_id, &instance.concept_id, Category::D, claim.state, &package),
            report_id: instance.report_id.clone(),
            concept_id: instance.concept_id.clone(),
            claim,
            evidence_ids: package,
            label: 0,
            category: Category::D,
            split: instance.split,
        });
    }

    // Non-support allocation: the hard pool gets round(mix * n) draws, the
    // easy pool the rest; shortfalls top up from the other pool.
    let n0 = policy.n_nonsupport;
    let hard_target = (policy.hard_easy_mix * n0 as f64).round() as usize;
    let hard_avail = draw(PoolRole::NonsupportHard, n0);
    let easy_avail = draw(PoolRole::NonsupportEasy, n0);
    let mut hard_take = hard_target.min(hard_avail.len());
    let easy_take = (n0 - hard_take).min(easy_avail.len());
    hard_take = (n0 - easy_take).min(hard_avail.len());
    record_skip(PoolRole::NonsupportHard, hard_target.min(n0), hard_take.min(hard_target));
    record_skip(
        PoolRole::NonsupportEasy,
        n0 - hard_target.min(n0),
        easy_take.min(n0 - hard_target.min(n0)),
    );
    let packages = hard_avail
        .into_iter()
        .take(hard_take)
        .chain(easy_avail.into_iter().take(easy_take));
    for package in packages {
        for (category, state) in [(Category::A, ClaimState::Present), (Category::B, ClaimState::Absent)] {
            let claim = claim_for(state);
            rows.push(VerifierRow {
                row_id: row_id_for(&instance.report_id, &instance.concept_id, category, state, &package),
                report_id: instance.report_id.clone(),
                concept_id: instance.concept_id.clone(),
                claim,
                evidence_ids: package.clone(),
                label: 0,
                category,
                split: instance.split,
            });
        }
    }

    Ok(PairOutput { rows, skips })
}

/// Builds the verifier dataset. Rows come out in canonical
/// (report_id, concept_id, category, draw-index) order; an empty pool for a
/// needed role yields zero rows of that category for the pair, logged, never
/// an abort.
pub fn construct_supervision(
    instances: &[CaseConceptInstance],
    assignments: &[PoolAssignment],
    policy: &SamplingPolicy,
    registry: &ConceptRegistry,
) -> Result<(Vec<VerifierRow>, ConstructionLog)> {
    policy.validate()?;
    let pools = index_pools(assignments);
    let empty_pools = ConceptPools::default();
    let mut ordered: Vec<&CaseConceptInstance> = instances.iter().collect();
    ordered.sort_by_key(|i| (i.report_id.clone(), i.concept_id.clone()));
    let outputs = exec::ordered_map(&ordered, |instance| {
        let concept_pools = pools.get(&instance.concept_id).unwrap_or(&empty_pools);
        construct_for_pair(instance, concept_pools, policy, registry)
    });
    let mut rows = Vec::new();
    let mut log = ConstructionLog::default();
    for output in outputs {
        let output = output?;
        let mut pair_rows = output.rows;
        pair_rows.sort_by_key(|r| r.category);
        rows.extend(pair_rows);
        log.skips.extend(output.skips);
    }
    let mut seen = BTreeSet::new();
    for row in &rows {
        if !seen.insert(row.row_id.clone()) {
            return Err(Error::stage(format!("duplicate row_id {:?}", row.row_id)));
        }
    }
    Ok((rows, log))
}

/// Construction diagnostics over a non-empty row set.
pub fn compute_diagnostics(rows: &[VerifierRow]) -> Result<SupervisionDiagnostics> {
    if rows.is_empty() {
        return Err(Error::validation("diagnostics undefined on an empty row set"));
    }
    let total = rows.len();
    let count_cat =
        |c: Category| rows.iter().filter(|r| r.category == c).count();
    let n_a = count_cat(Category::A);
    let n_b = count_cat(Category::B);
    let n_c = count_cat(Category::C);
    let n_d = count_cat(Category::D);
    let negatives = n_a + n_b + n_d;
    let mut concept_distribution = BTreeMap::new();
    let mut split_counts = BTreeMap::new();
    let mut reports = BTreeSet::new();
    let mut present = 0usize;
    for row in rows {
        *concept_distribution.entry(row.concept_id.clone()).or_insert(0.0) += 1.0;
        let split_key = row.split.map_or("unassigned", |s| s.as_str());
        *split_counts.entry(split_key.to_string()).or_insert(0) += 1;
        reports.insert(row.report_id.as_str());
        if row.claim.state == ClaimState::Present {
            present += 1;
        }
    }
    for v in concept_distribution.values_mut() {
        *v /= total as f64;
    }
    let mut claim_polarity_fractions = BTreeMap::new();
    claim_polarity_fractions.insert("present".to_string(), present as f64 / total as f64);
    claim_polarity_fractions.insert("absent".to_string(), (total - present) as f64 / total as f64);
    let mut category_counts = BTreeMap::new();
    for (c, n) in [(Category::A, n_a), (Category::B, n_b), (Category::C, n_c), (Category::D, n_d)] {
        category_counts.insert(c.as_str().to_string(), n);
    }
    Ok(SupervisionDiagnostics {
        total_rows: total,
        positive_fraction: n_c as f64 / total as f64,
        wrong_state_fraction: if negatives == 0 { 0.0 } else { n_d as f64 / negatives as f64 },
        concept_distribution,
        mean_rows_per_case: total as f64 / reports.len() as f64,
        claim_polarity_fractions,
        category_counts,
        split_counts,
    })
}
