//! Neural semantic language models: skip-gram and CBOW with negative
//! sampling, and a log-bilinear model trained with noise-contrastive
//! estimation. Training is single-threaded and fully determined by the
//! seed; scoring normalizes exactly over the vocabulary (sampling is a
//! training-time device only).

mod embedding;
mod logbilinear;

pub use embedding::{
    cbow_event_gradient, cbow_event_loss, sg_event_gradient, sg_event_loss, train_cbow, train_sg,
    CbowGradient, EmbeddingFlavor, EmbeddingModel, SgGradient,
};
pub use logbilinear::{
    lb_event_gradient, lb_event_loss, train_lb, LbGradient, LbParams, LogBilinearModel,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::vocab::TokenId;
use crate::{Error, Result};

/// Training knobs shared by all three neural models. The seed fixes both
/// parameter initialization and noise sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub dim: usize,
    pub window: usize,
    /// Negative samples (SG/CBOW) or NCE noise samples (LB) per event.
    pub negative_samples: usize,
    pub initial_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn skip_gram() -> Self {
        TrainConfig {
            epochs: 5,
            dim: 300,
            window: 10,
            negative_samples: 5,
            initial_lr: 0.025,
            final_lr: 1e-4,
            seed: 1,
        }
    }

    pub fn cbow() -> Self {
        TrainConfig {
            window: 5,
            ..TrainConfig::skip_gram()
        }
    }

    pub fn log_bilinear() -> Self {
        TrainConfig {
            epochs: 5,
            dim: 150,
            window: 5,
            negative_samples: 25,
            initial_lr: 0.05,
            final_lr: 1e-4,
            seed: 1,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let positive = self.epochs > 0
            && self.dim > 0
            && self.window > 0
            && self.negative_samples > 0
            && self.initial_lr > 0.0
            && self.final_lr > 0.0;
        if positive {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "every TrainConfig field must be positive".into(),
            ))
        }
    }

    /// Linear decay from `initial_lr` to `final_lr` over training.
    pub(crate) fn lr_at(&self, processed: usize, total: usize) -> f64 {
        let frac = if total == 0 {
            0.0
        } else {
            processed as f64 / total as f64
        };
        self.initial_lr + (self.final_lr - self.initial_lr) * frac
    }
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// ln(1 + e^x) without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// ln σ(x), numerically stable.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub(crate) fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity between two vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

pub(crate) fn row(matrix: &[f64], dim: usize, id: TokenId) -> &[f64] {
    &matrix[id * dim..(id + 1) * dim]
}

/// Per-token unigram counts of an encoded corpus (EOS included).
pub(crate) fn corpus_counts(corpus: &[Vec<TokenId>], vocab_len: usize) -> Vec<u64> {
    let mut counts = vec![0u64; vocab_len];
    for seq in corpus {
        for &id in seq {
            counts[id] += 1;
        }
    }
    counts
}

/// Cumulative-weight noise sampler.
pub(crate) struct NoiseTable {
    cumulative: Vec<f64>,
    total: f64,
    ids: Vec<TokenId>,
}

impl NoiseTable {
    /// Build from per-token weights; zero-weight tokens are never drawn.
    pub(crate) fn new(weights: impl Iterator<Item = (TokenId, f64)>) -> Result<Self> {
        let mut cumulative = Vec::new();
        let mut ids = Vec::new();
        let mut total = 0.0;
        for (id, w) in weights {
            if w > 0.0 {
                total += w;
                cumulative.push(total);
                ids.push(id);
            }
        }
        if ids.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(NoiseTable {
            cumulative,
            total,
            ids,
        })
    }

    pub(crate) fn unigram_pow(counts: &[u64], power: f64) -> Result<Self> {
        Self::new(
            counts
                .iter()
                .enumerate()
                .map(|(id, &c)| (id, (c as f64).powf(power))),
        )
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> TokenId {
        let x: f64 = rng.gen::<f64>() * self.total;
        let idx = self.cumulative.partition_point(|&c| c <= x);
        self.ids[idx.min(self.ids.len() - 1)]
    }

    pub(crate) fn draw_many(&self, rng: &mut ChaCha8Rng, k: usize) -> Vec<TokenId> {
        (0..k).map(|_| self.draw(rng)).collect()
    }
}

/// Uniform init in `[−0.5/dim, +0.5/dim]`, the word2vec convention.
pub(crate) fn init_uniform(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<f64> {
    let scale = 0.5 / dim as f64;
    (0..len).map(|_| rng.gen_range(-scale..scale)).collect()
}

pub(crate) fn corpus_positions(corpus: &[Vec<TokenId>]) -> usize {
    corpus.iter().map(Vec::len).sum()
}

/// Write the standard word-vector text block: `V d` then one
/// `token v1 … vd` row per type.
pub(crate) fn write_vector_block<W: std::io::Write>(
    w: &mut W,
    vocab: &crate::vocab::Vocabulary,
    matrix: &[f64],
    dim: usize,
) -> std::io::Result<()> {
    for id in 0..vocab.len() {
        let comps: Vec<String> = row(matrix, dim, id).iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{} {}", vocab.token(id), comps.join(" "))?;
    }
    Ok(())
}
