//! Unigram language model: relative corpus frequency with a fixed floor for
//! unseen words.

use std::collections::BTreeMap;

use crate::hypothesis::HypothesisList;
use crate::{Error, Result};

pub const DEFAULT_OOV_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct UnigramModel {
    counts: BTreeMap<String, u64>,
    total_tokens: u64,
    oov_floor: f64,
}

impl UnigramModel {
    /// `count(w) / total_tokens` for known words, the OOV floor otherwise.
    pub fn prob(&self, word: &str) -> f64 {
        match self.counts.get(word) {
            Some(&n) => n as f64 / self.total_tokens as f64,
            None => self.oov_floor,
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.counts.contains_key(word)
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn oov_floor(&self) -> f64 {
        self.oov_floor
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }
}

/// Builds a unigram model from word counts.
///
/// Counts from several corpora should be merged (summed) beforehand. The
/// floor must lie strictly between zero and the smallest in-vocabulary
/// probability, so that any seen word outranks any unseen one.
pub fn build_ulm(counts: BTreeMap<String, u64>, oov_floor: f64) -> Result<UnigramModel> {
    if counts.is_empty() {
        return Err(Error::Model("unigram counts are empty".into()));
    }
    if let Some((w, _)) = counts.iter().find(|(_, &n)| n == 0) {
        return Err(Error::Model(format!("word {w:?} has count 0")));
    }
    let total_tokens = counts
        .values()
        .try_fold(0u64, |acc, &n| acc.checked_add(n))
        .ok_or_else(|| Error::Model("total token count overflows u64".into()))?;
    let min_count = *counts.values().min().expect("non-empty");
    let min_prob = min_count as f64 / total_tokens as f64;
    if !(oov_floor > 0.0 && oov_floor < min_prob) {
        return Err(Error::Model(format!(
            "OOV floor {oov_floor} must lie in (0, {min_prob}), the smallest in-vocabulary probability"
        )));
    }
    Ok(UnigramModel {
        counts,
        total_tokens,
        oov_floor,
    })
}

/// Sums several count maps.
pub fn merge_counts<I>(sources: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = BTreeMap<String, u64>>,
{
    let mut merged = BTreeMap::new();
    for source in sources {
        for (w, n) in source {
            let slot: &mut u64 = merged.entry(w).or_default();
            *slot = slot.saturating_add(n);
        }
    }
    merged
}

/// Multiplies every hypothesis score by its word's unigram probability and
/// re-sorts. The previous score is kept in `original_score`.
pub fn ulm_rerank(hyps: &HypothesisList, model: &UnigramModel) -> HypothesisList {
    let mut out = hyps.clone();
    for h in &mut out.hypotheses {
        h.original_score.get_or_insert(h.score);
        h.score *= model.prob(&h.word);
    }
    out.sort();
    out
}
