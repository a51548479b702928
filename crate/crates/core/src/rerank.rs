//! Combination of baseline, language-model and visual-relatedness factors.
//!
//! Every scheme scores a candidate as a product of factors:
//!
//! | scheme        | factors                                  |
//! |---------------|------------------------------------------|
//! | `BL`          | baseline                                 |
//! | `ULM`         | baseline · ulm                           |
//! | `SWE`         | baseline · [ulm] · swe                   |
//! | `SWE+TDP`     | baseline · [ulm] · swe · tdp             |
//! | `TDP+TWE`     | baseline · [ulm] · twe · tdp             |
//! | `SWE+TDP+TWE` | baseline · [ulm] · swe · tdp · twe       |
//!
//! `[ulm]` is present when the language-model stage is enabled. Visual
//! factors use only the most likely object and are skipped entirely when
//! the image has no context, the object is below the confidence threshold,
//! or the object has no usable embedding.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::context::VisualContext;
use crate::embedding::EmbeddingSpace;
use crate::hypothesis::{sort_desc, HypothesisList};
use crate::lm::UnigramModel;
use crate::semantic::{swe_prob, twe_prob, CooccurrenceTable};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Baseline,
    Ulm,
    Swe,
    SweTdp,
    TdpTwe,
    SweTdpTwe,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Baseline,
        Scheme::Ulm,
        Scheme::Swe,
        Scheme::SweTdp,
        Scheme::TdpTwe,
        Scheme::SweTdpTwe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Baseline => "BL",
            Scheme::Ulm => "ULM",
            Scheme::Swe => "SWE",
            Scheme::SweTdp => "SWE+TDP",
            Scheme::TdpTwe => "TDP+TWE",
            Scheme::SweTdpTwe => "SWE+TDP+TWE",
        }
    }

    pub fn uses_swe(self) -> bool {
        matches!(self, Scheme::Swe | Scheme::SweTdp | Scheme::SweTdpTwe)
    }

    pub fn uses_tdp(self) -> bool {
        matches!(self, Scheme::SweTdp | Scheme::TdpTwe | Scheme::SweTdpTwe)
    }

    pub fn uses_twe(self) -> bool {
        matches!(self, Scheme::TdpTwe | Scheme::SweTdpTwe)
    }

    pub fn is_visual(self) -> bool {
        self.uses_swe() || self.uses_tdp() || self.uses_twe()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown scheme {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerankConfig {
    pub scheme: Scheme,
    /// Top-object confidence below which visual factors are skipped.
    /// Values above 1 disable visual re-ranking altogether.
    pub object_threshold: f64,
    /// Multiply baseline scores by the unigram probability before any
    /// visual factor. Ignored by `BL`; always on for `ULM`.
    pub apply_ulm_stage: bool,
    /// Overrides the co-occurrence table's own floor when set.
    pub tdp_epsilon: Option<f64>,
}

impl Default for RerankConfig {
    fn default() -> Self {
        RerankConfig {
            scheme: Scheme::Swe,
            object_threshold: 0.2,
            apply_ulm_stage: true,
            tdp_epsilon: None,
        }
    }
}

impl RerankConfig {
    pub fn new(scheme: Scheme) -> Self {
        RerankConfig {
            scheme,
            ..RerankConfig::default()
        }
    }

    fn uses_ulm_stage(&self) -> bool {
        match self.scheme {
            Scheme::Baseline => false,
            Scheme::Ulm => true,
            _ => self.apply_ulm_stage,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.object_threshold.is_finite() && self.object_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "object threshold {} must be a nonnegative number",
                self.object_threshold
            )));
        }
        if let Some(e) = self.tdp_epsilon {
            if !(e.is_finite() && (0.0..=1.0).contains(&e)) {
                return Err(Error::Config(format!("TDP epsilon {e} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Read-only models a scheme may draw on.
#[derive(Debug, Clone, Copy, Default)]
pub struct Models<'a> {
    pub ulm: Option<&'a UnigramModel>,
    /// General-purpose embeddings.
    pub swe: Option<&'a EmbeddingSpace>,
    /// Task-trained embeddings.
    pub twe: Option<&'a EmbeddingSpace>,
    pub tdp: Option<&'a CooccurrenceTable>,
}

impl Models<'_> {
    /// Errors when `config` needs a model that is absent.
    pub fn check(&self, config: &RerankConfig) -> Result<()> {
        let scheme = config.scheme;
        let mut missing = Vec::new();
        if (config.uses_ulm_stage() || scheme.uses_swe()) && self.ulm.is_none() {
            missing.push("unigram model");
        }
        if scheme.uses_swe() && self.swe.is_none() {
            missing.push("general embeddings");
        }
        if scheme.uses_twe() && self.twe.is_none() {
            missing.push("trained embeddings");
        }
        if scheme.uses_tdp() && self.tdp.is_none() {
            missing.push("co-occurrence table");
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "scheme {scheme} needs: {}",
                missing.join(", ")
            )))
        }
    }
}

/// One multiplicative component of a final score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Baseline,
    Ulm,
    Swe,
    Tdp,
    Twe,
}

/// Why visual factors were skipped for a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    NoContext,
    BelowThreshold,
    ObjectOov,
}

impl fmt::Display for Fallback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fallback::NoContext => "no-context",
            Fallback::BelowThreshold => "below-threshold",
            Fallback::ObjectOov => "object-oov",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub word: String,
    pub score: f64,
    pub factors: BTreeMap<Factor, f64>,
    /// Embedding factors computed with similarity 0 because the candidate
    /// has no usable vector.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub neutral: Vec<Factor>,
}

impl RankedEntry {
    /// Product of the factors in canonical order. Equals `score` exactly for
    /// entries produced by [`rerank`].
    pub fn factor_product(&self) -> f64 {
        self.factors.values().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOutput {
    pub image_id: String,
    pub ranked: Vec<RankedEntry>,
    pub fallback: Option<Fallback>,
}

impl RankedOutput {
    pub fn top(&self) -> Option<&RankedEntry> {
        self.ranked.first()
    }
}

struct VisualInputs<'a> {
    object: &'a str,
    p_c: f64,
}

/// Re-ranks one hypothesis list under `config.scheme`.
pub fn rerank(
    hyps: &HypothesisList,
    ctx: Option<&VisualContext>,
    models: &Models<'_>,
    config: &RerankConfig,
) -> Result<RankedOutput> {
    config.validate()?;
    models.check(config)?;
    rerank_checked(hyps, ctx, models, config)
}

fn rerank_checked(
    hyps: &HypothesisList,
    ctx: Option<&VisualContext>,
    models: &Models<'_>,
    config: &RerankConfig,
) -> Result<RankedOutput> {
    let scheme = config.scheme;
    let (visual, fallback) = if scheme.is_visual() {
        match gate(ctx, models, config) {
            Ok(v) => (Some(v), None),
            Err(reason) => (None, Some(reason)),
        }
    } else {
        (None, None)
    };

    let mut ranked = Vec::with_capacity(hyps.len());
    for h in &hyps.hypotheses {
        let mut factors = BTreeMap::new();
        let mut neutral = Vec::new();
        factors.insert(Factor::Baseline, h.score);
        if config.uses_ulm_stage() {
            let ulm = models.ulm.expect("checked");
            factors.insert(Factor::Ulm, ulm.prob(&h.word));
        }
        if let Some(v) = &visual {
            if scheme.uses_swe() {
                let space = models.swe.expect("checked");
                let sim = word_similarity(space, &h.word, v.object).unwrap_or_else(|| {
                    neutral.push(Factor::Swe);
                    0.0
                });
                let p_w = models.ulm.expect("checked").prob(&h.word);
                factors.insert(Factor::Swe, swe_prob(sim, p_w, v.p_c)?);
            }
            if scheme.uses_tdp() {
                let table = models.tdp.expect("checked");
                let eps = config.tdp_epsilon.unwrap_or(table.smoothing_epsilon());
                factors.insert(Factor::Tdp, table.prob_with_epsilon(&h.word, v.object, eps));
            }
            if scheme.uses_twe() {
                let space = models.twe.expect("checked");
                let sim = word_similarity(space, &h.word, v.object).unwrap_or_else(|| {
                    neutral.push(Factor::Twe);
                    0.0
                });
                factors.insert(Factor::Twe, twe_prob(sim, v.p_c)?);
            }
        }
        let score = factors.values().product();
        ranked.push(RankedEntry {
            word: h.word.clone(),
            score,
            factors,
            neutral,
        });
    }
    sort_desc(&mut ranked, |e| e.score);
    Ok(RankedOutput {
        image_id: hyps.image_id.clone(),
        ranked,
        fallback,
    })
}

fn gate<'a>(
    ctx: Option<&'a VisualContext>,
    models: &Models<'_>,
    config: &RerankConfig,
) -> std::result::Result<VisualInputs<'a>, Fallback> {
    let top = ctx
        .and_then(VisualContext::top)
        .ok_or(Fallback::NoContext)?;
    if top.confidence < config.object_threshold {
        return Err(Fallback::BelowThreshold);
    }
    let scheme = config.scheme;
    let embedded = |space: Option<&EmbeddingSpace>| space.is_some_and(|s| s.has_usable(&top.label));
    if (scheme.uses_swe() && !embedded(models.swe)) || (scheme.uses_twe() && !embedded(models.twe))
    {
        return Err(Fallback::ObjectOov);
    }
    Ok(VisualInputs {
        object: &top.label,
        p_c: top.confidence,
    })
}

fn word_similarity(space: &EmbeddingSpace, word: &str, object: &str) -> Option<f64> {
    space.similarity(word, object)
}

/// Re-ranks every record independently, preserving input order.
///
/// Model or configuration problems abort the batch; a bad record only
/// produces an error entry in its slot.
pub fn rerank_batch<I>(
    records: I,
    contexts: &HashMap<String, VisualContext>,
    models: &Models<'_>,
    config: &RerankConfig,
) -> Result<Vec<Result<RankedOutput>>>
where
    I: IntoIterator<Item = Result<HypothesisList>>,
{
    config.validate()?;
    models.check(config)?;
    Ok(records
        .into_iter()
        .map(|rec| {
            let hyps = rec?;
            rerank_checked(&hyps, contexts.get(&hyps.image_id), models, config)
        })
        .collect())
}
