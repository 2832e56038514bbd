//! Concept registry: per-concept lexical patterns, negation cues, claim
//! templates, related-topic vocabulary, and the pool rules that ride in the
//! same config file.
//!
//! Matching is token-sequence based on the shared tokenizer, so patterns are
//! case-insensitive and word-bounded. The rules are a declared, auditable
//! stand-in; registry authors list the exact surface forms they want matched
//! (including plurals).

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimTemplates {
    pub present: String,
    pub absent: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptRule {
    pub concept_id: String,
    /// Human-readable noun phrase used in rendered claims and questions.
    pub display_name: String,
    #[serde(default)]
    pub present_patterns: Vec<String>,
    #[serde(default)]
    pub absent_patterns: Vec<String>,
    #[serde(default)]
    pub negation_cues: Vec<String>,
    pub claim_templates: ClaimTemplates,
    /// Extra topical vocabulary: counts toward anchor overlap and the hard
    /// non-support pool, never toward direct pattern matches.
    #[serde(default)]
    pub related_terms: Vec<String>,
    /// Permits empty pattern lists (concept exists for claim rendering only).
    #[serde(default)]
    pub evaluation_only: bool,
}

fn default_easy_pool_size() -> usize {
    12
}

/// Pool construction knobs kept alongside the concept rules.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolRules {
    /// Per-concept size of the seeded easy non-support sample.
    #[serde(default = "default_easy_pool_size")]
    pub easy_pool_size: usize,
}

impl Default for PoolRules {
    fn default() -> Self {
        PoolRules {
            easy_pool_size: default_easy_pool_size(),
        }
    }
}

/// On-disk registry document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegistryConfig {
    pub concepts: Vec<ConceptRule>,
    #[serde(default)]
    pub pool_rules: PoolRules,
}

/// One concept's rules with patterns pre-tokenized.
#[derive(Debug, Clone)]
pub struct CompiledConcept {
    pub rule: ConceptRule,
    present: Vec<Vec<String>>,
    absent: Vec<Vec<String>>,
    cues: Vec<Vec<String>>,
    /// Content tokens drawn from all patterns plus related_terms.
    vocab: BTreeSet<String>,
}

impl CompiledConcept {
    fn compile(rule: ConceptRule) -> Self {
        let tok_all = |ps: &[String]| -> Vec<Vec<String>> {
            ps.iter().map(|p| text::tokenize(p)).filter(|t| !t.is_empty()).collect()
        };
        let present = tok_all(&rule.present_patterns);
        let absent = tok_all(&rule.absent_patterns);
        let cues = tok_all(&rule.negation_cues);
        // Vocabulary from assertive patterns and related terms only. Absence
        // phrasings and cue tokens are excluded so that framing words like
        // "no" never count as topical overlap.
        let cue_tokens: BTreeSet<&String> = cues.iter().flatten().collect();
        let mut vocab = BTreeSet::new();
        for seq in &present {
            for t in text::content_tokens(seq) {
                if !cue_tokens.contains(&t) {
                    vocab.insert(t);
                }
            }
        }
        for term in &rule.related_terms {
            for t in text::content_tokens(&text::tokenize(term)) {
                if !cue_tokens.contains(&t) {
                    vocab.insert(t);
                }
            }
        }
        CompiledConcept {
            rule,
            present,
            absent,
            cues,
            vocab,
        }
    }

    pub fn concept_id(&self) -> &str {
        &self.rule.concept_id
    }

    /// Start positions of every present-pattern match in the token list.
    pub fn present_positions(&self, tokens: &[String]) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .present
            .iter()
            .flat_map(|seq| text::find_all_token_seq(tokens, seq))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn has_absent_pattern(&self, tokens: &[String]) -> bool {
        self.absent.iter().any(|seq| text::find_token_seq(tokens, seq).is_some())
    }

    /// Start positions of every negation-cue match in the token list.
    pub fn cue_positions(&self, tokens: &[String]) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .cues
            .iter()
            .flat_map(|seq| text::find_all_token_seq(tokens, seq))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Number of distinct vocabulary tokens present in the token list.
    pub fn vocab_overlap(&self, tokens: &[String]) -> usize {
        let distinct: BTreeSet<&String> = tokens.iter().collect();
        distinct.iter().filter(|t| self.vocab.contains(t.as_str())).count()
    }

    pub fn vocab(&self) -> &BTreeSet<String> {
        &self.vocab
    }

    pub fn claim_text(&self, present: bool) -> &str {
        if present {
            &self.rule.claim_templates.present
        } else {
            &self.rule.claim_templates.absent
        }
    }
}

/// Validated, compiled registry. Concept order follows the config file.
#[derive(Debug, Clone)]
pub struct ConceptRegistry {
    concepts: Vec<CompiledConcept>,
    index: BTreeMap<String, usize>,
    pub pool_rules: PoolRules,
}

impl ConceptRegistry {
    pub fn from_config(config: RegistryConfig) -> Result<Self> {
        if config.concepts.is_empty() {
            return Err(Error::validation("registry has no concepts"));
        }
        let mut index = BTreeMap::new();
        for (i, rule) in config.concepts.iter().enumerate() {
            if rule.concept_id.is_empty() {
                return Err(Error::validation("empty concept_id"));
            }
            if index.insert(rule.concept_id.clone(), i).is_some() {
                return Err(Error::validation(format!(
                    "duplicate concept_id {:?}",
                    rule.concept_id
                )));
            }
            if rule.display_name.is_empty() {
                return Err(Error::validation(format!(
                    "concept {:?} has an empty display_name",
                    rule.concept_id
                )));
            }
            if rule.claim_templates.present.is_empty() || rule.claim_templates.absent.is_empty() {
                return Err(Error::validation(format!(
                    "concept {:?} has an empty claim template",
                    rule.concept_id
                )));
            }
            if rule.present_patterns.is_empty() && !rule.evaluation_only {
                return Err(Error::validation(format!(
                    "concept {:?} has no present_patterns and is not evaluation_only",
                    rule.concept_id
                )));
            }
        }
        let concepts = config.concepts.into_iter().map(CompiledConcept::compile).collect();
        Ok(ConceptRegistry {
            concepts,
            index,
            pool_rules: config.pool_rules,
        })
    }

    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let config: RegistryConfig = toml::from_str(raw)
            .map_err(|e| Error::validation(format!("registry parse error: {e}")))?;
        Self::from_config(config)
    }

    /// The bundled chest-radiology registry used by the synthetic corpus.
    pub fn bundled() -> Self {
        Self::from_toml_str(BUNDLED_REGISTRY_TOML).expect("bundled registry is valid")
    }

    pub fn get(&self, concept_id: &str) -> Option<&CompiledConcept> {
        self.index.get(concept_id).map(|&i| &self.concepts[i])
    }

    pub fn require(&self, concept_id: &str) -> Result<&CompiledConcept> {
        self.get(concept_id)
            .ok_or_else(|| Error::validation(format!("unknown concept_id {concept_id:?}")))
    }

    /// Concepts in config order.
    pub fn concepts(&self) -> &[CompiledConcept] {
        &self.concepts
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }
}

/// Registry shipped with the crate; see `assets/default_registry.toml`.
pub const BUNDLED_REGISTRY_TOML: &str = include_str!("../assets/default_registry.toml");
