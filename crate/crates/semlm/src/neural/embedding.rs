//! Skip-gram and CBOW with negative sampling.
//!
//! Both models keep an input and an output embedding matrix. Training
//! draws negative samples from the unigram distribution raised to 0.75.
//! CBOW averages the input vectors of the context window; its exact
//! conditional is a softmax of the output embeddings against that average.
//! Skip-gram scores a candidate by the summed log-softmax of its context
//! under the candidate's input vector; that score ranks cloze candidates
//! but is not a chain-rule probability.

use serde::{Deserialize, Serialize};

use super::{
    corpus_counts, corpus_positions, dot, init_uniform, log_sigmoid, log_sum_exp, row, seeded_rng,
    sigmoid, write_vector_block, NoiseTable, TrainConfig,
};
use crate::model::{ConditionalModel, GapScoringModel, LanguageModel};
use crate::vocab::{TokenId, Vocabulary};
use crate::{Error, Result};

/// Which of the two word2vec-style objectives trained the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbeddingFlavor {
    SkipGram,
    Cbow,
}

/// A trained skip-gram or CBOW model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    flavor: EmbeddingFlavor,
    dim: usize,
    window: usize,
    input: Vec<f64>,
    output: Vec<f64>,
    unigram_counts: Vec<u64>,
    vocab: Vocabulary,
    epoch_loss: Vec<f64>,
}

impl EmbeddingModel {
    /// Assemble a model from explicit parameters (loading, tests).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        flavor: EmbeddingFlavor,
        dim: usize,
        window: usize,
        input: Vec<f64>,
        output: Vec<f64>,
        unigram_counts: Vec<u64>,
        vocab: Vocabulary,
    ) -> Self {
        assert_eq!(input.len(), vocab.len() * dim);
        assert_eq!(output.len(), vocab.len() * dim);
        EmbeddingModel {
            flavor,
            dim,
            window,
            input,
            output,
            unigram_counts,
            vocab,
            epoch_loss: Vec::new(),
        }
    }

    pub fn flavor(&self) -> EmbeddingFlavor {
        self.flavor
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn input_vector(&self, id: TokenId) -> &[f64] {
        row(&self.input, self.dim, id)
    }

    pub fn output_vector(&self, id: TokenId) -> &[f64] {
        row(&self.output, self.dim, id)
    }

    /// Mean per-event training loss, one entry per epoch.
    pub fn epoch_loss(&self) -> &[f64] {
        &self.epoch_loss
    }

    /// Exact CBOW conditional: softmax of the output embeddings against
    /// the averaged input vectors of `context` (preceding tokens when used
    /// causally). An empty context scores from the zero vector.
    pub fn cbow_cond_prob(&self, context: &[TokenId], token: TokenId) -> f64 {
        let h = self.context_mean(context);
        let scores: Vec<f64> = (0..self.vocab.len())
            .map(|w| dot(row(&self.output, self.dim, w), &h))
            .collect();
        (scores[token] - log_sum_exp(&scores)).exp()
    }

    fn context_mean(&self, context: &[TokenId]) -> Vec<f64> {
        let mut h = vec![0.0; self.dim];
        if context.is_empty() {
            return h;
        }
        for &c in context {
            for (hj, vj) in h.iter_mut().zip(self.input_vector(c)) {
                *hj += vj;
            }
        }
        let inv = 1.0 / context.len() as f64;
        for hj in &mut h {
            *hj *= inv;
        }
        h
    }

    /// Skip-gram ranking score: Σ over context tokens of
    /// `ln p(c | candidate)` under the exact output softmax. Empty
    /// contexts score 0.
    pub fn sg_score(&self, candidate: TokenId, context: &[TokenId]) -> f64 {
        if context.is_empty() {
            return 0.0;
        }
        let v = self.input_vector(candidate);
        let scores: Vec<f64> = (0..self.vocab.len())
            .map(|w| dot(row(&self.output, self.dim, w), v))
            .collect();
        let lse = log_sum_exp(&scores);
        context.iter().map(|&c| scores[c] - lse).sum()
    }

    /// Skip-gram "conditional": `sg_score` normalized over all candidates.
    /// Not a chain-rule probability; reported only behind explicit flags.
    pub fn sg_causal_cond_prob(&self, context: &[TokenId], token: TokenId) -> f64 {
        let scores: Vec<f64> = (0..self.vocab.len())
            .map(|w| self.sg_score(w, context))
            .collect();
        (scores[token] - log_sum_exp(&scores)).exp()
    }

    /// Standard word-vector text dump of the input embeddings:
    /// `V d` then `token v1 … vd` per line.
    pub fn write_embeddings_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.vocab.len(), self.dim)?;
        write_vector_block(&mut w, &self.vocab, &self.input, self.dim)
    }
}

// ---------------------------------------------------------------------------
// Event losses and gradients (negative log-likelihood; shared by training
// and the finite-difference checks)

/// Skip-gram loss for one (center, context) pair with fixed noise draws:
/// `−ln σ(u_c·v_w) − Σ_n ln σ(−u_n·v_w)`.
pub fn sg_event_loss(
    input: &[f64],
    output: &[f64],
    dim: usize,
    center: TokenId,
    context: TokenId,
    noise: &[TokenId],
) -> f64 {
    let v = row(input, dim, center);
    let mut loss = -log_sigmoid(dot(row(output, dim, context), v));
    for &n in noise {
        loss -= log_sigmoid(-dot(row(output, dim, n), v));
    }
    loss
}

/// Sparse gradient of [`sg_event_loss`] with respect to the touched rows.
#[derive(Debug, Clone)]
pub struct SgGradient {
    pub input_row: (TokenId, Vec<f64>),
    pub output_rows: Vec<(TokenId, Vec<f64>)>,
}

pub fn sg_event_gradient(
    input: &[f64],
    output: &[f64],
    dim: usize,
    center: TokenId,
    context: TokenId,
    noise: &[TokenId],
) -> SgGradient {
    let v = row(input, dim, center);
    let mut dv = vec![0.0; dim];
    let mut output_rows = Vec::with_capacity(noise.len() + 1);

    let mut push = |word: TokenId, label: f64, dv: &mut Vec<f64>| {
        let u = row(output, dim, word);
        // d/ds of −ln σ(s) is σ(s)−1 for positives; for negatives the loss
        // is −ln σ(−s), derivative σ(s).
        let g = sigmoid(dot(u, v)) - label;
        let du: Vec<f64> = v.iter().map(|vj| g * vj).collect();
        for (dvj, uj) in dv.iter_mut().zip(u) {
            *dvj += g * uj;
        }
        output_rows.push((word, du));
    };

    push(context, 1.0, &mut dv);
    for &n in noise {
        push(n, 0.0, &mut dv);
    }

    SgGradient {
        input_row: (center, dv),
        output_rows,
    }
}

/// CBOW loss for one position: context-averaged hidden vector against the
/// target and the noise draws.
pub fn cbow_event_loss(
    input: &[f64],
    output: &[f64],
    dim: usize,
    context: &[TokenId],
    target: TokenId,
    noise: &[TokenId],
) -> f64 {
    debug_assert!(!context.is_empty());
    let mut h = vec![0.0; dim];
    for &c in context {
        for (hj, vj) in h.iter_mut().zip(row(input, dim, c)) {
            *hj += vj;
        }
    }
    let inv = 1.0 / context.len() as f64;
    for hj in &mut h {
        *hj *= inv;
    }
    let mut loss = -log_sigmoid(dot(row(output, dim, target), &h));
    for &n in noise {
        loss -= log_sigmoid(-dot(row(output, dim, n), &h));
    }
    loss
}

/// Sparse gradient of [`cbow_event_loss`]; each context row receives
/// `1/|context|` of the hidden-vector gradient.
#[derive(Debug, Clone)]
pub struct CbowGradient {
    pub input_rows: Vec<(TokenId, Vec<f64>)>,
    pub output_rows: Vec<(TokenId, Vec<f64>)>,
}

pub fn cbow_event_gradient(
    input: &[f64],
    output: &[f64],
    dim: usize,
    context: &[TokenId],
    target: TokenId,
    noise: &[TokenId],
) -> CbowGradient {
    let mut h = vec![0.0; dim];
    for &c in context {
        for (hj, vj) in h.iter_mut().zip(row(input, dim, c)) {
            *hj += vj;
        }
    }
    let inv = 1.0 / context.len() as f64;
    for hj in &mut h {
        *hj *= inv;
    }

    let mut dh = vec![0.0; dim];
    let mut output_rows = Vec::with_capacity(noise.len() + 1);
    let mut push = |word: TokenId, label: f64, dh: &mut Vec<f64>| {
        let u = row(output, dim, word);
        let g = sigmoid(dot(u, &h)) - label;
        output_rows.push((word, h.iter().map(|hj| g * hj).collect()));
        for (dhj, uj) in dh.iter_mut().zip(u) {
            *dhj += g * uj;
        }
    };
    push(target, 1.0, &mut dh);
    for &n in noise {
        push(n, 0.0, &mut dh);
    }

    let input_rows = context
        .iter()
        .map(|&c| (c, dh.iter().map(|d| d * inv).collect()))
        .collect();
    CbowGradient {
        input_rows,
        output_rows,
    }
}

// ---------------------------------------------------------------------------
// Training

fn apply_rows(matrix: &mut [f64], dim: usize, rows: &[(TokenId, Vec<f64>)], lr: f64) {
    for (id, grad) in rows {
        let slot = &mut matrix[id * dim..(id + 1) * dim];
        for (mj, gj) in slot.iter_mut().zip(grad) {
            *mj -= lr * gj;
        }
    }
}

fn symmetric_context(seq: &[TokenId], t: usize, window: usize) -> Vec<TokenId> {
    let lo = t.saturating_sub(window);
    let hi = (t + window).min(seq.len() - 1);
    (lo..=hi).filter(|&i| i != t).map(|i| seq[i]).collect()
}

fn train_embedding(
    corpus: &[Vec<TokenId>],
    vocab: &Vocabulary,
    config: TrainConfig,
    flavor: EmbeddingFlavor,
) -> Result<EmbeddingModel> {
    config.validate()?;
    let positions = corpus_positions(corpus);
    if positions == 0 {
        return Err(Error::EmptyCorpus);
    }
    let counts = corpus_counts(corpus, vocab.len());
    let noise = NoiseTable::unigram_pow(&counts, 0.75)?;

    let mut rng = seeded_rng(config.seed);
    let dim = config.dim;
    let mut input = init_uniform(&mut rng, vocab.len() * dim, dim);
    let mut output = vec![0.0; vocab.len() * dim];

    let total = config.epochs * positions;
    let mut processed = 0usize;
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut loss_events = 0usize;
        for seq in corpus {
            for t in 0..seq.len() {
                let lr = config.lr_at(processed, total);
                processed += 1;
                let context = symmetric_context(seq, t, config.window);
                if context.is_empty() {
                    continue;
                }
                match flavor {
                    EmbeddingFlavor::SkipGram => {
                        for &c in &context {
                            let draws = noise.draw_many(&mut rng, config.negative_samples);
                            loss_sum += sg_event_loss(&input, &output, dim, seq[t], c, &draws);
                            loss_events += 1;
                            let grad =
                                sg_event_gradient(&input, &output, dim, seq[t], c, &draws);
                            apply_rows(&mut input, dim, &[grad.input_row], lr);
                            apply_rows(&mut output, dim, &grad.output_rows, lr);
                        }
                    }
                    EmbeddingFlavor::Cbow => {
                        let draws = noise.draw_many(&mut rng, config.negative_samples);
                        loss_sum +=
                            cbow_event_loss(&input, &output, dim, &context, seq[t], &draws);
                        loss_events += 1;
                        let grad =
                            cbow_event_gradient(&input, &output, dim, &context, seq[t], &draws);
                        apply_rows(&mut input, dim, &grad.input_rows, lr);
                        apply_rows(&mut output, dim, &grad.output_rows, lr);
                    }
                }
            }
        }
        epoch_loss.push(loss_sum / loss_events.max(1) as f64);
    }

    Ok(EmbeddingModel {
        flavor,
        dim,
        window: config.window,
        input,
        output,
        unigram_counts: counts,
        vocab: vocab.clone(),
        epoch_loss,
    })
}

/// Train a skip-gram model with negative sampling.
pub fn train_sg(
    corpus: &[Vec<TokenId>],
    vocab: &Vocabulary,
    config: TrainConfig,
) -> Result<EmbeddingModel> {
    train_embedding(corpus, vocab, config, EmbeddingFlavor::SkipGram)
}

/// Train a CBOW model with negative sampling.
pub fn train_cbow(
    corpus: &[Vec<TokenId>],
    vocab: &Vocabulary,
    config: TrainConfig,
) -> Result<EmbeddingModel> {
    train_embedding(corpus, vocab, config, EmbeddingFlavor::Cbow)
}

// ---------------------------------------------------------------------------
// Model interfaces

impl LanguageModel for EmbeddingModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn unigram_count(&self, token: TokenId) -> u64 {
        self.unigram_counts[token]
    }
}

impl ConditionalModel for EmbeddingModel {
    /// CBOW: exact softmax against the averaged window of preceding
    /// tokens. Skip-gram: the normalized ranking score, flagged
    /// non-probabilistic.
    fn cond_prob(&self, history: &[TokenId], token: TokenId) -> f64 {
        let start = history.len().saturating_sub(self.window);
        let context = &history[start..];
        match self.flavor {
            EmbeddingFlavor::Cbow => self.cbow_cond_prob(context, token),
            EmbeddingFlavor::SkipGram => self.sg_causal_cond_prob(context, token),
        }
    }

    fn is_probabilistic(&self) -> bool {
        self.flavor == EmbeddingFlavor::Cbow
    }

    fn token_embedding(&self, token: TokenId) -> Option<Vec<f64>> {
        Some(self.input_vector(token).to_vec())
    }
}

impl GapScoringModel for EmbeddingModel {
    /// CBOW: the causal conditional at the gap plus every conditional
    /// whose context window covers the gap. Skip-gram: `sg_score` against
    /// the observed symmetric window.
    fn gap_score(&self, tokens: &[TokenId], gap: usize, candidate: TokenId) -> f64 {
        match self.flavor {
            EmbeddingFlavor::SkipGram => {
                let context = symmetric_context(tokens, gap, self.window);
                self.sg_score(candidate, &context)
            }
            EmbeddingFlavor::Cbow => {
                let mut filled = tokens.to_vec();
                filled[gap] = candidate;
                let upper = (gap + self.window).min(filled.len() - 1);
                (gap..=upper)
                    .map(|t| {
                        let start = t.saturating_sub(self.window);
                        self.cbow_cond_prob(&filled[start..t], filled[t]).ln()
                    })
                    .sum()
            }
        }
    }
}
