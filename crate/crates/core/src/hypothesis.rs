use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

/// One candidate transcription and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub word: String,
    pub score: f64,
    /// Score before the most recent rescoring stage. `None` for lists
    /// straight from the recognizer.
    #[serde(skip)]
    pub original_score: Option<f64>,
}

impl Hypothesis {
    pub fn new(word: impl Into<String>, score: f64) -> Self {
        Hypothesis {
            word: word.into(),
            score,
            original_score: None,
        }
    }
}

/// The k-best output of a recognizer for one cropped word image.
///
/// `hypotheses` is kept sorted by score, highest first. Equal scores keep
/// their relative input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisList {
    pub image_id: String,
    #[serde(default)]
    pub gold: Option<String>,
    pub hypotheses: Vec<Hypothesis>,
}

impl HypothesisList {
    pub fn top(&self) -> Option<&Hypothesis> {
        self.hypotheses.first()
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    /// True when scores are non-increasing.
    pub fn is_sorted(&self) -> bool {
        self.hypotheses.windows(2).all(|w| w[0].score >= w[1].score)
    }

    /// Stable sort by score, descending.
    pub fn sort(&mut self) {
        sort_desc(&mut self.hypotheses, |h| h.score);
    }

    /// Keeps the `k` best hypotheses.
    pub fn truncate(&mut self, k: usize) {
        self.hypotheses.truncate(k);
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.hypotheses.iter().any(|h| h.word == word)
    }
}

pub(crate) fn sort_desc<T>(items: &mut [T], score: impl Fn(&T) -> f64) {
    items.sort_by(|a, b| score(b).partial_cmp(&score(a)).unwrap_or(Ordering::Equal));
}
