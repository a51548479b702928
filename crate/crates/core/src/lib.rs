//! Re-ranking of k-best text-spotting hypotheses with visual context.
//!
//! A recognizer proposes the k most likely transcriptions of a cropped word
//! image. This crate rescores those candidates with a unigram language model
//! and with the relatedness between each candidate and the most likely object
//! an image classifier found in the surrounding scene. Relatedness comes from
//! three sources:
//!
//! * general-purpose word embeddings ([`semantic::swe_prob`]),
//! * word/object co-occurrence counts from annotated images ([`semantic::tdp_prob`]),
//! * embeddings trained on (word, object) pairs ([`trainer`], [`semantic::twe_prob`]).
//!
//! [`rerank`] combines them per scheme, and [`eval`] scores the result with
//! full / dict / list top-1 accuracy.

pub mod context;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod hypothesis;
pub mod io;
pub mod lm;
pub mod rerank;
pub mod semantic;
pub mod text;
pub mod trainer;

pub use context::{DetectedObject, VisualContext};
pub use embedding::EmbeddingSpace;
pub use error::{Error, Result};
pub use eval::{
    evaluate, format_report, format_tsv, Dictionary, EvalReport, MatchMode, ResultsTable,
};
pub use hypothesis::{Hypothesis, HypothesisList};
pub use lm::{build_ulm, ulm_rerank, UnigramModel};
pub use rerank::{
    rerank, rerank_batch, Factor, Fallback, Models, RankedEntry, RankedOutput, RerankConfig, Scheme,
};
pub use semantic::{cosine, swe_prob, tdp_prob, twe_prob, CooccurrenceTable};
pub use trainer::{sgns_gradient, sgns_loss, train_twe, TrainConfig, TrainCorpus};
