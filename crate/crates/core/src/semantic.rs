//! Relatedness between a candidate word and the detected object, and its
//! conversion to probabilities (or scores) usable in a product of factors.

use std::collections::BTreeMap;

use crate::context::VisualContext;
use crate::{Error, Result};

/// Default floor returned by [`tdp_prob`] for unseen (word, object) pairs.
pub const DEFAULT_TDP_EPSILON: f64 = 1e-6;

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::domain(format!(
            "cosine of vectors with dimensions {} and {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::domain("cosine of a zero-norm vector"));
    }
    let sim = dot / (uu * vv).sqrt();
    if sim.is_nan() {
        return Err(Error::domain("cosine is not a number"));
    }
    Ok(sim.clamp(-1.0, 1.0))
}

/// Probability of word `w` given object `c` from embedding similarity:
/// `p_w ^ alpha` with `alpha = ((1 - sim) / (1 + sim)) ^ (1 - p_c)`.
///
/// `p_w` is the word's unigram probability and `p_c` the classifier's
/// confidence in the object. The result is at least `p_w` for `sim >= 0` and
/// at most `p_w` for `sim <= 0`.
pub fn swe_prob(sim: f64, p_w: f64, p_c: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&sim) {
        return Err(Error::domain(format!("similarity {sim} outside [-1, 1]")));
    }
    if sim == -1.0 {
        return Err(Error::domain("similarity -1 makes the exponent unbounded"));
    }
    if !(p_w > 0.0 && p_w <= 1.0) {
        return Err(Error::domain(format!(
            "word probability {p_w} outside (0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&p_c) {
        return Err(Error::domain(format!(
            "object confidence {p_c} outside [0, 1]"
        )));
    }
    // ln((1 - s) / (1 + s)) without cancellation near s = 0.
    let log_ratio = (-sim).ln_1p() - sim.ln_1p();
    let alpha = ((1.0 - p_c) * log_ratio).exp();
    Ok((alpha * p_w.ln()).exp())
}

/// Score of word `w` given object `c` from task-trained embeddings:
/// `(tanh(sim) + 1) / (2 p_c)`.
///
/// This is not a probability: it exceeds 1 whenever `tanh(sim) + 1 > 2 p_c`.
pub fn twe_prob(sim: f64, p_c: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&sim) {
        return Err(Error::domain(format!("similarity {sim} outside [-1, 1]")));
    }
    if !(p_c > 0.0 && p_c <= 1.0) {
        return Err(Error::domain(format!(
            "object confidence {p_c} outside (0, 1]"
        )));
    }
    Ok((sim.tanh() + 1.0) / (2.0 * p_c))
}

/// Word/object co-occurrence counts over annotated training images.
///
/// `pair_counts[(w, c)]` counts images whose gold word is `w` and whose most
/// likely object is `c`; `ctx_counts[c]` counts images whose most likely
/// object is `c`. For every object the pair counts sum to at most its
/// context count.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceTable {
    pair_counts: BTreeMap<(String, String), u64>,
    ctx_counts: BTreeMap<String, u64>,
    smoothing_epsilon: f64,
}

impl Default for CooccurrenceTable {
    fn default() -> Self {
        CooccurrenceTable {
            pair_counts: BTreeMap::new(),
            ctx_counts: BTreeMap::new(),
            smoothing_epsilon: DEFAULT_TDP_EPSILON,
        }
    }
}

impl CooccurrenceTable {
    /// Builds a table from explicit counts, checking its invariants.
    pub fn from_counts(
        pair_counts: BTreeMap<(String, String), u64>,
        ctx_counts: BTreeMap<String, u64>,
        smoothing_epsilon: f64,
    ) -> Result<Self> {
        check_epsilon(smoothing_epsilon)?;
        let mut per_ctx: BTreeMap<&str, u64> = BTreeMap::new();
        for ((_, c), &n) in &pair_counts {
            *per_ctx.entry(c.as_str()).or_default() += n;
        }
        for (c, total) in per_ctx {
            let available = ctx_counts.get(c).copied().unwrap_or(0);
            if total > available {
                return Err(Error::Model(format!(
                    "pair counts for object {c:?} sum to {total} but the object was seen {available} times"
                )));
            }
        }
        Ok(CooccurrenceTable {
            pair_counts,
            ctx_counts,
            smoothing_epsilon,
        })
    }

    pub fn pair_count(&self, word: &str, object: &str) -> u64 {
        // BTreeMap<(String, String)> cannot be probed with borrowed strs.
        self.pair_counts
            .get(&(word.to_owned(), object.to_owned()))
            .copied()
            .unwrap_or(0)
    }

    pub fn ctx_count(&self, object: &str) -> u64 {
        self.ctx_counts.get(object).copied().unwrap_or(0)
    }

    pub fn pair_counts(&self) -> &BTreeMap<(String, String), u64> {
        &self.pair_counts
    }

    pub fn ctx_counts(&self) -> &BTreeMap<String, u64> {
        &self.ctx_counts
    }

    pub fn smoothing_epsilon(&self) -> f64 {
        self.smoothing_epsilon
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        self.smoothing_epsilon = epsilon;
        Ok(self)
    }

    pub fn is_empty(&self) -> bool {
        self.pair_counts.is_empty() && self.ctx_counts.is_empty()
    }

    /// `count(w, c) / count(c)`, or `epsilon` when either count is zero.
    pub fn prob_with_epsilon(&self, word: &str, object: &str, epsilon: f64) -> f64 {
        let ctx = self.ctx_count(object);
        let pair = self.pair_count(word, object);
        if ctx == 0 || pair == 0 {
            epsilon
        } else {
            pair as f64 / ctx as f64
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "smoothing epsilon {epsilon} outside [0, 1]"
        )))
    }
}

/// Conditional probability of `word` given `object` from co-occurrence
/// counts, floored at the table's smoothing epsilon.
pub fn tdp_prob(table: &CooccurrenceTable, word: &str, object: &str) -> f64 {
    table.prob_with_epsilon(word, object, table.smoothing_epsilon)
}

/// Counts (gold word, top object) pairs over annotated images.
///
/// Records whose context has no objects are skipped; the number skipped is
/// returned alongside the table.
pub fn build_cooccurrence<'a, I>(annotations: I) -> (CooccurrenceTable, usize)
where
    I: IntoIterator<Item = (&'a str, &'a VisualContext)>,
{
    let mut table = CooccurrenceTable::default();
    let mut skipped = 0;
    for (gold, ctx) in annotations {
        let Some(top) = ctx.top() else {
            skipped += 1;
            continue;
        };
        let word = crate::text::normalize(gold);
        let object = crate::text::normalize(&top.label);
        *table.ctx_counts.entry(object.clone()).or_default() += 1;
        *table.pair_counts.entry((word, object)).or_default() += 1;
    }
    (table, skipped)
}
