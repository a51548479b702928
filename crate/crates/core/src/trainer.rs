//! Skip-gram with negative sampling over two-token (word, object) sentences.
//!
//! With a window of one, every training pair yields exactly two events:
//! the word predicting the object and the object predicting the word.
//! Training is single-threaded and fully determined by the seed.

use std::collections::HashMap;

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingSpace;
use crate::{Error, Result};

/// Exponent applied to corpus frequencies for the negative-sampling
/// distribution.
pub const NEGATIVE_SAMPLING_POWER: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub dimension: usize,
    pub epochs: usize,
    /// Starting learning rate; decays linearly to `min_learning_rate`.
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub negatives: usize,
    pub seed: u64,
    /// Warm-start vectors for the input matrix.
    pub init: Option<EmbeddingSpace>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dimension: 300,
            epochs: 50,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            negatives: 5,
            seed: 1,
            init: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("negatives must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(self.min_learning_rate >= 0.0 && self.min_learning_rate < self.learning_rate) {
            return Err(Error::Config(format!(
                "final learning rate {} must be below the starting rate {}",
                self.min_learning_rate, self.learning_rate
            )));
        }
        if let Some(init) = &self.init {
            if init.dimension() != self.dimension {
                return Err(Error::Config(format!(
                    "warm-start embeddings have dimension {}, training dimension is {}",
                    init.dimension(),
                    self.dimension
                )));
            }
        }
        Ok(())
    }
}

/// Training sentences and the vocabulary they induce. Tokens keep the order
/// of their first appearance; nothing is filtered out.
#[derive(Debug, Clone)]
pub struct TrainCorpus {
    pairs: Vec<(usize, usize)>,
    vocab: Vec<String>,
    counts: Vec<u64>,
}

impl TrainCorpus {
    pub fn new<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut vocab = Vec::new();
        let mut counts = Vec::new();
        let mut intern = |tok: &str| {
            let tok = crate::text::normalize(tok);
            let id = *index.entry(tok.clone()).or_insert_with(|| {
                vocab.push(tok);
                counts.push(0);
                vocab.len() - 1
            });
            counts[id] += 1;
            id
        };
        let pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(w, c)| (intern(w.as_ref()), intern(c.as_ref())))
            .collect();
        if pairs.is_empty() {
            return Err(Error::Model("training corpus has no pairs".into()));
        }
        if vocab.iter().any(String::is_empty) {
            return Err(Error::Model(
                "training corpus contains an empty token".into(),
            ));
        }
        Ok(TrainCorpus {
            pairs,
            vocab,
            counts,
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub embeddings: EmbeddingSpace,
    /// Mean SGNS loss per event for each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

/// Trains input-side vectors for every corpus token.
pub fn train_twe(corpus: &TrainCorpus, config: &TrainConfig) -> Result<EmbeddingSpace> {
    train_twe_with_losses(corpus, config).map(|o| o.embeddings)
}

pub fn train_twe_with_losses(corpus: &TrainCorpus, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let dim = config.dimension;
    let n_vocab = corpus.vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // A random row is drawn for every token, warm-started or not.
    let half = 0.5 / dim as f64;
    let uniform = Uniform::new_inclusive(-half, half);
    let mut input = vec![0.0; n_vocab * dim];
    for (i, tok) in corpus.vocab.iter().enumerate() {
        let row = &mut input[i * dim..(i + 1) * dim];
        row.iter_mut().for_each(|x| *x = uniform.sample(&mut rng));
        if let Some(v) = config.init.as_ref().and_then(|s| s.get(tok)) {
            row.copy_from_slice(v);
        }
    }
    let mut output = vec![0.0; n_vocab * dim];

    let weights: Vec<f64> = corpus
        .counts
        .iter()
        .map(|&n| (n as f64).powf(NEGATIVE_SAMPLING_POWER))
        .collect();
    let noise = WeightedIndex::new(&weights).map_err(|e| Error::Model(e.to_string()))?;

    let mut events: Vec<(usize, usize)> = corpus
        .pairs
        .iter()
        .flat_map(|&(w, c)| [(w, c), (c, w)])
        .collect();
    let total_steps = (config.epochs * events.len()) as f64;
    let lr_span = config.learning_rate - config.min_learning_rate;

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut grad = vec![0.0; dim];
    let mut step = 0usize;
    for _ in 0..config.epochs {
        events.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &(center, target) in &events {
            let lr = (config.learning_rate - lr_span * step as f64 / total_steps)
                .max(config.min_learning_rate);
            step += 1;
            grad.iter_mut().for_each(|g| *g = 0.0);
            let c_off = center * dim;
            for k in 0..=config.negatives {
                let (other, label) = if k == 0 {
                    (target, 1.0)
                } else {
                    let n = noise.sample(&mut rng);
                    // In a two-token sentence the center is also the
                    // context's only neighbour; never use either as noise.
                    if n == target || n == center {
                        continue;
                    }
                    (n, 0.0)
                };
                let o_off = other * dim;
                let dot = dot(&input[c_off..c_off + dim], &output[o_off..o_off + dim]);
                loss_sum += if label == 1.0 {
                    softplus(-dot)
                } else {
                    softplus(dot)
                };
                let g = (label - sigmoid(dot)) * lr;
                for j in 0..dim {
                    grad[j] += g * output[o_off + j];
                    output[o_off + j] += g * input[c_off + j];
                }
            }
            for j in 0..dim {
                input[c_off + j] += grad[j];
            }
        }
        epoch_losses.push(loss_sum / events.len() as f64);
    }

    let mut space = EmbeddingSpace::new(dim)?;
    for (i, tok) in corpus.vocab.iter().enumerate() {
        space.insert(tok.clone(), &input[i * dim..(i + 1) * dim])?;
    }
    Ok(TrainOutcome {
        embeddings: space,
        epoch_losses,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`, i.e. `-ln σ(-x)`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn check_dims(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<()> {
    let d = center.len();
    if context.len() != d || negatives.iter().any(|n| n.len() != d) {
        return Err(Error::domain("SGNS vectors must share one dimension"));
    }
    Ok(())
}

/// `-ln σ(center·context) - Σ ln σ(-center·neg)`.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<f64> {
    check_dims(center, context, negatives)?;
    let pos = softplus(-dot(center, context));
    let neg: f64 = negatives.iter().map(|n| softplus(dot(center, n))).sum();
    Ok(pos + neg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`] with respect to every argument.
pub fn sgns_gradient(
    center: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> Result<SgnsGradient> {
    check_dims(center, context, negatives)?;
    let pos_coef = sigmoid(dot(center, context)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|x| pos_coef * x).collect();
    let g_context: Vec<f64> = center.iter().map(|x| pos_coef * x).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let coef = sigmoid(dot(center, n));
        for (g, x) in g_center.iter_mut().zip(n.iter()) {
            *g += coef * x;
        }
        g_negs.push(center.iter().map(|x| coef * x).collect());
    }
    Ok(SgnsGradient {
        center: g_center,
        context: g_context,
        negatives: g_negs,
    })
}
