//! Shared text primitives: the stand-in tokenizer, whitespace normalization,
//! and token-sequence matching.
//!
//! The tokenizer lowercases, splits on whitespace, and detaches every
//! non-alphanumeric character as its own token. It is a deterministic stand-in
//! for a model tokenizer, so absolute counts are structural, not comparable to
//! any model's.

/// Byte spans of tokens in the original text, in order.
///
/// A token is either a maximal alphanumeric run or a single non-alphanumeric,
/// non-whitespace character.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = run_start.take() {
                spans.push((s, i));
            }
        } else if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(i);
            }
        } else {
            if let Some(s) = run_start.take() {
                spans.push((s, i));
            }
            spans.push((i, i + ch.len_utf8()));
        }
    }
    if let Some(s) = run_start {
        spans.push((s, text.len()));
    }
    spans
}

/// Lowercased token list.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(a, b)| text[a..b].to_lowercase())
        .collect()
}

pub fn token_len(text: &str) -> usize {
    token_spans(text).len()
}

/// Collapses all whitespace runs (including newlines) to single spaces.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// First start index of `needle` as a contiguous token subsequence.
pub fn find_token_seq(haystack: &[String], needle: &[String]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    (0..=haystack.len() - needle.len()).find(|&i| haystack[i..i + needle.len()] == *needle)
}

/// All start indices of `needle` as a contiguous token subsequence.
pub fn find_all_token_seq(haystack: &[String], needle: &[String]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| haystack[i..i + needle.len()] == *needle)
        .collect()
}

/// Function words excluded from content-token vocabularies.
pub const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "for", "from", "in",
    "is", "it", "its", "may", "of", "often", "on", "or", "the", "that", "this", "these", "those",
    "to", "was", "were", "which", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

/// Alphabetic non-stopword tokens, deduplicated, order-preserving.
pub fn content_tokens(tokens: &[String]) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for t in tokens {
        if t.chars().all(|c| c.is_alphabetic()) && !is_stopword(t) && seen.insert(t.clone()) {
            out.push(t.clone());
        }
    }
    out
}
