//! Semantic language models over frame and discourse sequences.
//!
//! The pipeline turns annotated documents into two kinds of semantic
//! sequences and trains language models over them:
//!
//! 1. [`annotations`] loads documents (tokens, predicate frames, explicit
//!    discourse connectives, coreference chains) from JSON Lines.
//! 2. [`unitgen`] converts predicate frames into vocabulary-ready frame
//!    symbols: FrameNet mapping, predicate augmentation, verb compounding,
//!    and mention-to-argument alignment.
//! 3. [`seqbuild`] assembles frame-chain and entity-centered sequences,
//!    interleaving frame-related discourse markers (and, for frame chains,
//!    sentence periods).
//! 4. [`vocab`] builds a frequency-filtered vocabulary and encodes
//!    sequences to dense integer ids.
//! 5. [`ngram`] and [`neural`] train the language models: Kneser-Ney
//!    smoothed n-grams (orders 1-3), skip-gram, CBOW, and a log-bilinear
//!    model trained with noise-contrastive estimation.
//! 6. [`evalx`] evaluates via perplexity and the narrative cloze test
//!    (MRR, Recall@k), with an ordered-PMI baseline.
//! 7. [`features`] exports conditional-probability and embedding features
//!    for downstream coreference and discourse-sense classifiers.

pub mod annotations;
pub mod evalx;
pub mod features;
pub mod model;
pub mod neural;
pub mod ngram;
pub mod seqbuild;
pub mod synth;
pub mod unitgen;
pub mod vocab;

mod error;

pub use error::{Error, Result};
pub use model::{AnyModel, ConditionalModel, GapScoringModel, LanguageModel, SemLanguageModel};
pub use vocab::{TokenId, TokenKind, Vocabulary};
