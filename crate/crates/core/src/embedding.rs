use std::collections::HashMap;

use crate::{Error, Result};

/// Dense word vectors of a fixed dimension.
///
/// Words are stored in insertion order, which is also the order used when
/// the space is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    norms: Vec<f64>,
}

impl EmbeddingSpace {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Model("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingSpace {
            dimension,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            norms: Vec::new(),
        })
    }

    /// Adds a vector. Returns `Ok(false)` and keeps the existing vector when
    /// `word` is already present.
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f64]) -> Result<bool> {
        let word = word.into();
        if vector.len() != self.dimension {
            return Err(Error::domain(format!(
                "vector for {word:?} has {} components, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(Error::domain(format!(
                "vector for {word:?} has non-finite component {bad}"
            )));
        }
        if self.index.contains_key(&word) {
            return Ok(false);
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        self.norms.push(norm(vector));
        Ok(true)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), self.row(i)))
    }

    /// Words whose vector is all zeros. Cosine similarity is undefined for
    /// these.
    pub fn zero_norm_words(&self) -> Vec<&str> {
        self.words
            .iter()
            .zip(&self.norms)
            .filter(|(_, &n)| n == 0.0)
            .map(|(w, _)| w.as_str())
            .collect()
    }

    /// True when `word` is present with a nonzero vector.
    pub fn has_usable(&self, word: &str) -> bool {
        self.index.get(word).is_some_and(|&i| self.norms[i] > 0.0)
    }

    /// Cosine similarity between two stored words, or `None` when either is
    /// missing or has a zero vector.
    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        if !self.has_usable(a) || !self.has_usable(b) {
            return None;
        }
        crate::semantic::cosine(self.get(a)?, self.get(b)?).ok()
    }

    /// Errors unless at least one vector has nonzero norm.
    pub fn validate(&self) -> Result<()> {
        if self.norms.iter().any(|&n| n > 0.0) {
            Ok(())
        } else {
            Err(Error::Model(
                "embedding space has no vector with nonzero norm".into(),
            ))
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
