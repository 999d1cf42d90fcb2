//! Shared language-model interfaces and the on-disk model container.
//!
//! All trained models expose their vocabulary and raw unigram counts (the
//! cloze tie-break signal). Conditional models answer causal
//! `p(token | history)` queries; gap-scoring models rank candidates for a
//! removed position. The n-gram, CBOW and log-bilinear models implement
//! both; skip-gram implements both but its conditional is a normalized
//! ranking score rather than a chain-rule probability; ordered PMI only
//! scores gaps.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::evalx::OrderedPmiModel;
use crate::neural::{EmbeddingFlavor, EmbeddingModel, LogBilinearModel};
use crate::ngram::NGramModel;
use crate::vocab::{TokenId, Vocabulary};
use crate::{Error, Result};

/// Base interface of every trained model.
pub trait LanguageModel {
    fn vocab(&self) -> &Vocabulary;

    /// Raw training-corpus frequency of a token; breaks ranking ties.
    fn unigram_count(&self, token: TokenId) -> u64;
}

/// Causal conditional probabilities `p(token | history)`.
pub trait ConditionalModel: LanguageModel {
    fn cond_prob(&self, history: &[TokenId], token: TokenId) -> f64;

    /// False when the conditional is a normalized score rather than a
    /// chain-rule probability (skip-gram).
    fn is_probabilistic(&self) -> bool {
        true
    }

    /// Token embedding for feature export, when the model has one.
    fn token_embedding(&self, token: TokenId) -> Option<Vec<f64>> {
        let _ = token;
        None
    }
}

/// Scoring a candidate substituted into a gap of a sequence.
pub trait GapScoringModel: LanguageModel {
    /// Score `candidate` at `tokens[gap]`; the stored value at the gap is
    /// ignored. Higher is better. Only relative values across candidates
    /// matter.
    fn gap_score(&self, tokens: &[TokenId], gap: usize, candidate: TokenId) -> f64;
}

/// Models usable for feature export: both interfaces at once.
pub trait SemLanguageModel: ConditionalModel + GapScoringModel {}

impl<T: ConditionalModel + GapScoringModel> SemLanguageModel for T {}

/// Corpus perplexity over non-EOS prediction events: EOS may condition
/// histories but is never a predicted event.
pub fn perplexity_of<M: ConditionalModel + ?Sized>(
    model: &M,
    corpus: &[Vec<TokenId>],
) -> Result<f64> {
    let eos = model.vocab().eos_id();
    let mut log_sum = 0.0;
    let mut events = 0usize;
    for seq in corpus {
        for t in 0..seq.len() {
            if seq[t] == eos {
                continue;
            }
            log_sum += model.cond_prob(&seq[..t], seq[t]).ln();
            events += 1;
        }
    }
    if events == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok((-log_sum / events as f64).exp())
}

/// Linear interpolation `λ·p_primary + (1−λ)·p_backoff` of two
/// conditional models over the same vocabulary.
pub struct InterpolatedModel<'a> {
    pub primary: &'a dyn ConditionalModel,
    pub backoff: &'a dyn ConditionalModel,
    pub lambda: f64,
}

impl LanguageModel for InterpolatedModel<'_> {
    fn vocab(&self) -> &Vocabulary {
        self.primary.vocab()
    }

    fn unigram_count(&self, token: TokenId) -> u64 {
        self.primary.unigram_count(token)
    }
}

impl ConditionalModel for InterpolatedModel<'_> {
    fn cond_prob(&self, history: &[TokenId], token: TokenId) -> f64 {
        self.lambda * self.primary.cond_prob(history, token)
            + (1.0 - self.lambda) * self.backoff.cond_prob(history, token)
    }

    fn is_probabilistic(&self) -> bool {
        self.primary.is_probabilistic() && self.backoff.is_probabilistic()
    }
}

// ---------------------------------------------------------------------------
// On-disk container

const BINARY_MAGIC: &[u8] = b"SEMLM1\n";

/// Any trained model, as stored in a model file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum AnyModel {
    NGram(NGramModel),
    Embedding(EmbeddingModel),
    LogBilinear(LogBilinearModel),
    OrderedPmi(OrderedPmiModel),
}

impl AnyModel {
    /// Canonical short name: uni, bg, tri, sg, cbow, lb, op.
    pub fn name(&self) -> &'static str {
        match self {
            AnyModel::NGram(m) => match m.order() {
                1 => "uni",
                2 => "bg",
                _ => "tri",
            },
            AnyModel::Embedding(m) => match m.flavor() {
                EmbeddingFlavor::SkipGram => "sg",
                EmbeddingFlavor::Cbow => "cbow",
            },
            AnyModel::LogBilinear(_) => "lb",
            AnyModel::OrderedPmi(_) => "op",
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        match self {
            AnyModel::NGram(m) => m.vocabulary(),
            AnyModel::Embedding(m) => m.vocabulary(),
            AnyModel::LogBilinear(m) => m.vocabulary(),
            AnyModel::OrderedPmi(m) => m.vocabulary(),
        }
    }

    /// The conditional interface, absent for ordered PMI.
    pub fn as_conditional(&self) -> Option<&dyn ConditionalModel> {
        match self {
            AnyModel::NGram(m) => Some(m),
            AnyModel::Embedding(m) => Some(m),
            AnyModel::LogBilinear(m) => Some(m),
            AnyModel::OrderedPmi(_) => None,
        }
    }

    pub fn as_gap_scorer(&self) -> &dyn GapScoringModel {
        match self {
            AnyModel::NGram(m) => m,
            AnyModel::Embedding(m) => m,
            AnyModel::LogBilinear(m) => m,
            AnyModel::OrderedPmi(m) => m,
        }
    }

    /// Both interfaces at once, for feature export; absent for ordered PMI.
    pub fn as_sem_lm(&self) -> Option<&dyn SemLanguageModel> {
        match self {
            AnyModel::NGram(m) => Some(m),
            AnyModel::Embedding(m) => Some(m),
            AnyModel::LogBilinear(m) => Some(m),
            AnyModel::OrderedPmi(_) => None,
        }
    }

    /// Versioned binary serialization (magic header + bincode body).
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = BINARY_MAGIC.to_vec();
        bincode::serialize_into(&mut bytes, self)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let body = bytes
            .strip_prefix(BINARY_MAGIC)
            .ok_or_else(|| Error::ModelFormat("missing SEMLM1 header".into()))?;
        bincode::deserialize(body).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    /// Load a model file, accepting both the binary container and the
    /// n-gram text dump (sniffed from the leading bytes).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = std::fs::File::open(path.as_ref())?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        if bytes.starts_with(BINARY_MAGIC) {
            return Self::from_bytes(&bytes);
        }
        if bytes.starts_with(b"\\semlm-ngram") {
            let model = NGramModel::read_text(std::io::BufReader::new(&bytes[..]))?;
            return Ok(AnyModel::NGram(model));
        }
        Err(Error::ModelFormat(
            "unrecognized model file header".into(),
        ))
    }
}
