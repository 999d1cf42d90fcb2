//! Log-bilinear language model trained with noise-contrastive estimation.
//!
//! Every token carries a target vector `v(w)`, a context vector `v'(w)`
//! and a bias `b(w)`; each context slot `i` (distance from the predicted
//! position) carries a position vector `q_i`. The context representation
//! is `u(c) = Σ_i q_i ⊙ v'(c_i)` over the preceding window, and the score
//! of a token is `v(w)·u(c) + b(w)`. NCE discriminates data tokens from
//! empirical-unigram noise with the normalization constant pinned to 1
//! during training; evaluation computes the exact softmax.

use serde::{Deserialize, Serialize};

use super::{
    corpus_counts, corpus_positions, dot, init_uniform, log_sigmoid, log_sum_exp, row, seeded_rng,
    sigmoid, write_vector_block, NoiseTable, TrainConfig,
};
use crate::model::{ConditionalModel, GapScoringModel, LanguageModel};
use crate::vocab::{TokenId, Vocabulary};
use crate::{Error, Result};

/// Raw log-bilinear parameters; `target` and `context` are V×d row-major,
/// `position` is window×d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbParams {
    pub dim: usize,
    pub window: usize,
    pub target: Vec<f64>,
    pub context: Vec<f64>,
    pub bias: Vec<f64>,
    pub position: Vec<f64>,
}

impl LbParams {
    /// Context representation `u(c) = Σ_j q_j ⊙ v'(c_j)` where `c_j` is
    /// the token at distance `j` before the predicted position. `context`
    /// is in textual order (rightmost token is distance 1); only the last
    /// `window` entries are used.
    pub fn context_repr(&self, context: &[TokenId]) -> Vec<f64> {
        let mut u = vec![0.0; self.dim];
        let take = context.len().min(self.window);
        for distance in 1..=take {
            let token = context[context.len() - distance];
            let q = row(&self.position, self.dim, distance - 1);
            let v = row(&self.context, self.dim, token);
            for ((uj, qj), vj) in u.iter_mut().zip(q).zip(v) {
                *uj += qj * vj;
            }
        }
        u
    }

    /// Unnormalized score `v(w)·u + b(w)`.
    pub fn score(&self, u: &[f64], token: TokenId) -> f64 {
        dot(row(&self.target, self.dim, token), u) + self.bias[token]
    }

    fn all_scores(&self, context: &[TokenId]) -> Vec<f64> {
        let u = self.context_repr(context);
        (0..self.bias.len()).map(|w| self.score(&u, w)).collect()
    }
}

/// A trained log-bilinear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBilinearModel {
    params: LbParams,
    unigram_counts: Vec<u64>,
    vocab: Vocabulary,
    epoch_loss: Vec<f64>,
}

impl LogBilinearModel {
    pub fn from_parts(params: LbParams, unigram_counts: Vec<u64>, vocab: Vocabulary) -> Self {
        assert_eq!(params.target.len(), vocab.len() * params.dim);
        assert_eq!(params.context.len(), vocab.len() * params.dim);
        assert_eq!(params.bias.len(), vocab.len());
        assert_eq!(params.position.len(), params.window * params.dim);
        LogBilinearModel {
            params,
            unigram_counts,
            vocab,
            epoch_loss: Vec::new(),
        }
    }

    pub fn params(&self) -> &LbParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn window(&self) -> usize {
        self.params.window
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn target_vector(&self, id: TokenId) -> &[f64] {
        row(&self.params.target, self.params.dim, id)
    }

    /// Mean per-event training loss, one entry per epoch.
    pub fn epoch_loss(&self) -> &[f64] {
        &self.epoch_loss
    }

    /// Exact softmax conditional over the full vocabulary; `context` is in
    /// textual order and may be shorter than the window (the remaining
    /// position vectors are unused).
    pub fn lb_cond_prob(&self, context: &[TokenId], token: TokenId) -> f64 {
        let scores = self.params.all_scores(context);
        (scores[token] - log_sum_exp(&scores)).exp()
    }

    /// Text dump: the `V d` header and target vectors in the standard
    /// word-vector layout, then `\context\`, `\bias\` and `\position\`
    /// sections completing the parameter set.
    pub fn write_embeddings_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let dim = self.params.dim;
        writeln!(w, "{} {}", self.vocab.len(), dim)?;
        write_vector_block(&mut w, &self.vocab, &self.params.target, dim)?;
        writeln!(w, "\\context\\")?;
        write_vector_block(&mut w, &self.vocab, &self.params.context, dim)?;
        writeln!(w, "\\bias\\")?;
        for id in 0..self.vocab.len() {
            writeln!(w, "{} {}", self.vocab.token(id), self.params.bias[id])?;
        }
        writeln!(w, "\\position\\")?;
        for i in 0..self.params.window {
            let comps: Vec<String> = row(&self.params.position, dim, i)
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            writeln!(w, "{} {}", i + 1, comps.join(" "))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// NCE event loss and gradient

/// NCE loss of one event: `−ln σ(Δ(w)) − Σ_j ln σ(−Δ(n_j))` where
/// `Δ(x) = score(x) − ln(k·q(x))` and `ln_kq[x] = ln(k·q(x))` is
/// precomputed from the noise distribution.
pub fn lb_event_loss(
    params: &LbParams,
    context: &[TokenId],
    target: TokenId,
    noise: &[TokenId],
    ln_kq: &[f64],
) -> f64 {
    let u = params.context_repr(context);
    let mut loss = -log_sigmoid(params.score(&u, target) - ln_kq[target]);
    for &n in noise {
        loss -= log_sigmoid(-(params.score(&u, n) - ln_kq[n]));
    }
    loss
}

/// Sparse gradient of [`lb_event_loss`].
#[derive(Debug, Clone)]
pub struct LbGradient {
    pub target_rows: Vec<(TokenId, Vec<f64>)>,
    pub bias_rows: Vec<(TokenId, f64)>,
    pub context_rows: Vec<(TokenId, Vec<f64>)>,
    pub position_rows: Vec<(usize, Vec<f64>)>,
}

pub fn lb_event_gradient(
    params: &LbParams,
    context: &[TokenId],
    target: TokenId,
    noise: &[TokenId],
    ln_kq: &[f64],
) -> LbGradient {
    let dim = params.dim;
    let u = params.context_repr(context);

    let mut target_rows = Vec::with_capacity(noise.len() + 1);
    let mut bias_rows = Vec::with_capacity(noise.len() + 1);
    let mut du = vec![0.0; dim];
    let mut push = |word: TokenId, label: f64, du: &mut Vec<f64>| {
        let delta = params.score(&u, word) - ln_kq[word];
        let g = sigmoid(delta) - label;
        target_rows.push((word, u.iter().map(|uj| g * uj).collect()));
        bias_rows.push((word, g));
        for (duj, vj) in du.iter_mut().zip(row(&params.target, dim, word)) {
            *duj += g * vj;
        }
    };
    push(target, 1.0, &mut du);
    for &n in noise {
        push(n, 0.0, &mut du);
    }

    let take = context.len().min(params.window);
    let mut context_rows = Vec::with_capacity(take);
    let mut position_rows = Vec::with_capacity(take);
    for distance in 1..=take {
        let token = context[context.len() - distance];
        let q = row(&params.position, dim, distance - 1);
        let v = row(&params.context, dim, token);
        context_rows.push((
            token,
            du.iter().zip(q).map(|(duj, qj)| duj * qj).collect(),
        ));
        position_rows.push((
            distance - 1,
            du.iter().zip(v).map(|(duj, vj)| duj * vj).collect(),
        ));
    }

    LbGradient {
        target_rows,
        bias_rows,
        context_rows,
        position_rows,
    }
}

// ---------------------------------------------------------------------------
// Training

/// Train a log-bilinear model with NCE over the preceding-window events of
/// every corpus position.
pub fn train_lb(
    corpus: &[Vec<TokenId>],
    vocab: &Vocabulary,
    config: TrainConfig,
) -> Result<LogBilinearModel> {
    config.validate()?;
    let positions = corpus_positions(corpus);
    if positions == 0 {
        return Err(Error::EmptyCorpus);
    }
    let counts = corpus_counts(corpus, vocab.len());
    let noise = NoiseTable::unigram_pow(&counts, 1.0)?;
    let total_count: u64 = counts.iter().sum();
    let k = config.negative_samples as f64;
    let ln_kq: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                f64::NEG_INFINITY // never drawn and never a training target
            } else {
                (k * c as f64 / total_count as f64).ln()
            }
        })
        .collect();

    let mut rng = seeded_rng(config.seed);
    let dim = config.dim;
    let mut params = LbParams {
        dim,
        window: config.window,
        target: vec![0.0; vocab.len() * dim],
        context: init_uniform(&mut rng, vocab.len() * dim, dim),
        bias: vec![0.0; vocab.len()],
        position: vec![1.0; config.window * dim],
    };

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
                let start = t.saturating_sub(config.window);
                let context = &seq[start..t];
                let draws = noise.draw_many(&mut rng, config.negative_samples);
                loss_sum += lb_event_loss(&params, context, seq[t], &draws, &ln_kq);
                loss_events += 1;
                let grad = lb_event_gradient(&params, context, seq[t], &draws, &ln_kq);
                apply(&mut params, &grad, lr);
            }
        }
        epoch_loss.push(loss_sum / loss_events.max(1) as f64);
    }

    Ok(LogBilinearModel {
        params,
        unigram_counts: counts,
        vocab: vocab.clone(),
        epoch_loss,
    })
}

fn apply(params: &mut LbParams, grad: &LbGradient, lr: f64) {
    let dim = params.dim;
    for (id, g) in &grad.target_rows {
        let slot = &mut params.target[id * dim..(id + 1) * dim];
        for (pj, gj) in slot.iter_mut().zip(g) {
            *pj -= lr * gj;
        }
    }
    for (id, g) in &grad.bias_rows {
        params.bias[*id] -= lr * g;
    }
    for (id, g) in &grad.context_rows {
        let slot = &mut params.context[id * dim..(id + 1) * dim];
        for (pj, gj) in slot.iter_mut().zip(g) {
            *pj -= lr * gj;
        }
    }
    for (slot_idx, g) in &grad.position_rows {
        let slot = &mut params.position[slot_idx * dim..(slot_idx + 1) * dim];
        for (pj, gj) in slot.iter_mut().zip(g) {
            *pj -= lr * gj;
        }
    }
}

// ---------------------------------------------------------------------------
// Model interfaces

impl LanguageModel for LogBilinearModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn unigram_count(&self, token: TokenId) -> u64 {
        self.unigram_counts[token]
    }
}

impl ConditionalModel for LogBilinearModel {
    fn cond_prob(&self, history: &[TokenId], token: TokenId) -> f64 {
        self.lb_cond_prob(history, token)
    }

    fn token_embedding(&self, token: TokenId) -> Option<Vec<f64>> {
        Some(self.target_vector(token).to_vec())
    }
}

impl GapScoringModel for LogBilinearModel {
    /// Causal conditional at the gap plus every conditional whose
    /// preceding window covers the gap.
    fn gap_score(&self, tokens: &[TokenId], gap: usize, candidate: TokenId) -> f64 {
        let mut filled = tokens.to_vec();
        filled[gap] = candidate;
        let window = self.params.window;
        let upper = (gap + window).min(filled.len() - 1);
        (gap..=upper)
            .map(|t| {
                let start = t.saturating_sub(window);
                self.lb_cond_prob(&filled[start..t], filled[t]).ln()
            })
            .sum()
    }
}
