//! Parsers from raw completion text back to typed results. Title matching
//! is normalized-exact (case-fold, collapsed whitespace), never fuzzy.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use super::LlmError;
use crate::corpus::ItemId;

fn normalize(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn unparseable(reason: impl Into<String>) -> LlmError {
    LlmError::Unparseable {
        reason: reason.into(),
    }
}

/// Parse a listwise ranking: split on `;`, match each token to a candidate
/// title by normalized exact equality. Unmatched tokens drop, duplicate
/// matches keep their first occurrence, and candidates the response never
/// mentions are appended in their conventional order, so the result is
/// always a permutation of the candidate set. Zero matched tokens is an
/// error.
pub fn parse_ranked_list(
    response: &str,
    candidates: &[(ItemId, String)],
) -> Result<Vec<ItemId>, LlmError> {
    if candidates.is_empty() {
        return Err(unparseable("empty candidate set"));
    }
    let normalized: Vec<(ItemId, String)> = candidates
        .iter()
        .map(|(id, title)| (*id, normalize(title)))
        .collect();

    let mut matched: Vec<ItemId> = Vec::new();
    for token in response.split(';') {
        let token = normalize(token);
        if token.is_empty() {
            continue;
        }
        if let Some((id, _)) = normalized.iter().find(|(_, title)| *title == token) {
            if !matched.contains(id) {
                matched.push(*id);
            }
        }
    }
    if matched.is_empty() {
        return Err(unparseable(format!(
            "no candidate title found in response {response:?}"
        )));
    }
    for (id, _) in candidates {
        if !matched.contains(id) {
            matched.push(*id);
        }
    }
    Ok(matched)
}

/// First numeric token in the response, clipped to the rating scale.
pub fn parse_rating(response: &str, scale: (f64, f64)) -> Result<f64, LlmError> {
    static NUMBER: OnceLock<Regex> = OnceLock::new();
    let number = NUMBER.get_or_init(|| Regex::new(r"-?\d+(?:\.\d+)?").unwrap());
    let token = number
        .find(response)
        .ok_or_else(|| unparseable(format!("no numeric token in response {response:?}")))?;
    let value: f64 = token
        .as_str()
        .parse()
        .map_err(|_| unparseable(format!("bad numeric token {:?}", token.as_str())))?;
    Ok(value.clamp(scale.0, scale.1))
}

/// Decide which of the two titles the response prefers: whichever appears
/// first (normalized substring search). When both match at the same spot
/// (one title is a prefix of the other) the longer title wins.
pub fn parse_pair_preference(
    response: &str,
    first: (ItemId, &str),
    second: (ItemId, &str),
) -> Result<(ItemId, ItemId), LlmError> {
    let haystack = normalize(response);
    let a_title = normalize(first.1);
    let b_title = normalize(second.1);
    let a_pos = haystack.find(&a_title);
    let b_pos = haystack.find(&b_title);
    match (a_pos, b_pos) {
        (None, None) => Err(unparseable(format!(
            "response {response:?} names neither candidate"
        ))),
        (Some(_), None) => Ok((first.0, second.0)),
        (None, Some(_)) => Ok((second.0, first.0)),
        (Some(a), Some(b)) => {
            if a < b || (a == b && a_title.len() >= b_title.len()) {
                Ok((first.0, second.0))
            } else {
                Ok((second.0, first.0))
            }
        }
    }
}

/// Parse `Name: value` lines, keeping only the expected attribute names
/// (exact, case-sensitive). At least one expected key must appear.
pub fn parse_attributes(
    response: &str,
    expected_keys: &[String],
) -> Result<BTreeMap<String, String>, LlmError> {
    if expected_keys.is_empty() {
        return Err(unparseable("no expected attribute keys"));
    }
    let mut found = BTreeMap::new();
    for line in response.lines() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            continue;
        }
        if expected_keys.iter().any(|k| k == key) && !found.contains_key(key) {
            found.insert(key.to_string(), value.to_string());
        }
    }
    if found.is_empty() {
        return Err(unparseable(format!(
            "no expected attribute line in response {response:?}"
        )));
    }
    Ok(found)
}
