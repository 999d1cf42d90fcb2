//! Evaluation: the narrative cloze test with MRR and Recall@k, an ordered
//! PMI baseline, and perplexity report grids.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{perplexity_of, ConditionalModel, GapScoringModel, LanguageModel};
use crate::vocab::{TokenId, Vocabulary};
use crate::{Error, Result};

/// One cloze instance: a sequence with one token removed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeInstance {
    pub sequence_index: usize,
    /// The full encoded sequence (EOS included); the value at
    /// `removed_position` is the gold token.
    pub tokens: Vec<TokenId>,
    pub removed_position: usize,
    pub gold: TokenId,
}

/// Remove one uniformly-chosen non-EOS token from every sequence;
/// deterministic under the seed.
pub fn make_cloze_set(
    corpus: &[Vec<TokenId>],
    vocab: &Vocabulary,
    seed: u64,
) -> Result<Vec<ClozeInstance>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let eos = vocab.eos_id();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::with_capacity(corpus.len());
    for (sequence_index, seq) in corpus.iter().enumerate() {
        let removable: Vec<usize> = (0..seq.len()).filter(|&t| seq[t] != eos).collect();
        if removable.is_empty() {
            return Err(Error::InvalidInput(format!(
                "sequence {sequence_index} has no removable (non-EOS) token"
            )));
        }
        let removed_position = removable[rng.gen_range(0..removable.len())];
        instances.push(ClozeInstance {
            sequence_index,
            tokens: seq.clone(),
            removed_position,
            gold: seq[removed_position],
        });
    }
    Ok(instances)
}

/// Frames-only variant: removal positions restricted to frame tokens
/// (F-Sen or F-Arg kinds); sequences with no frame token are skipped.
pub fn make_cloze_set_frames_only(
    corpus: &[Vec<TokenId>],
    vocab: &Vocabulary,
    seed: u64,
) -> Result<Vec<ClozeInstance>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::new();
    for (sequence_index, seq) in corpus.iter().enumerate() {
        let removable: Vec<usize> = (0..seq.len())
            .filter(|&t| {
                matches!(
                    vocab.kind(seq[t]),
                    crate::vocab::TokenKind::FrameSen | crate::vocab::TokenKind::FrameArg
                )
            })
            .collect();
        if removable.is_empty() {
            continue;
        }
        let removed_position = removable[rng.gen_range(0..removable.len())];
        instances.push(ClozeInstance {
            sequence_index,
            tokens: seq.clone(),
            removed_position,
            gold: seq[removed_position],
        });
    }
    Ok(instances)
}

/// Rank the whole vocabulary for an instance's gap: by gap score, then by
/// raw unigram count, then by token id. Returns a permutation of all ids.
pub fn rank_candidates<M: GapScoringModel + ?Sized>(
    model: &M,
    instance: &ClozeInstance,
) -> Vec<TokenId> {
    let v = model.vocab().len();
    let mut scored: Vec<(f64, u64, TokenId)> = (0..v)
        .map(|w| {
            (
                model.gap_score(&instance.tokens, instance.removed_position, w),
                model.unigram_count(w),
                w,
            )
        })
        .collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    scored.into_iter().map(|(_, _, w)| w).collect()
}

/// Cloze metrics over a batch of ranked instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClozeReport {
    pub mrr: f64,
    pub recall_at_k: f64,
    pub k: usize,
    pub instances: usize,
    pub seed: Option<u64>,
    pub model_id: Option<String>,
    pub corpus_checksum: Option<String>,
}

impl ClozeReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "instances  {}", self.instances).unwrap();
        writeln!(out, "MRR        {:.6}", self.mrr).unwrap();
        writeln!(out, "Recall@{:<3} {:.6}", self.k, self.recall_at_k).unwrap();
        if let Some(seed) = self.seed {
            writeln!(out, "seed       {seed}").unwrap();
        }
        if let Some(model) = &self.model_id {
            writeln!(out, "model      {model}").unwrap();
        }
        out
    }
}

/// MRR and Recall@k from full rankings and gold tokens.
pub fn score_cloze(rankings: &[Vec<TokenId>], golds: &[TokenId], k: usize) -> Result<ClozeReport> {
    if rankings.is_empty() || rankings.len() != golds.len() {
        return Err(Error::InvalidInput(
            "need one gold per ranking and at least one instance".into(),
        ));
    }
    let mut reciprocal_sum = 0.0;
    let mut hits = 0usize;
    for (ranking, &gold) in rankings.iter().zip(golds) {
        let rank = ranking
            .iter()
            .position(|&w| w == gold)
            .ok_or_else(|| Error::InvalidInput("gold token missing from ranking".into()))?
            + 1;
        reciprocal_sum += 1.0 / rank as f64;
        if rank <= k {
            hits += 1;
        }
    }
    Ok(ClozeReport {
        mrr: reciprocal_sum / rankings.len() as f64,
        recall_at_k: hits as f64 / rankings.len() as f64,
        k,
        instances: rankings.len(),
        seed: None,
        model_id: None,
        corpus_checksum: None,
    })
}

/// Rank every instance under one model and score the batch.
pub fn evaluate_cloze<M: GapScoringModel + ?Sized>(
    model: &M,
    instances: &[ClozeInstance],
    k: usize,
) -> Result<ClozeReport> {
    let rankings: Vec<Vec<TokenId>> = instances
        .iter()
        .map(|inst| rank_candidates(model, inst))
        .collect();
    let golds: Vec<TokenId> = instances.iter().map(|i| i.gold).collect();
    score_cloze(&rankings, &golds, k)
}

// ---------------------------------------------------------------------------
// Ordered PMI baseline

/// Directional PMI model: `C(a→b)` counts a before b within a sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "OrderedPmiWire", into = "OrderedPmiWire")]
pub struct OrderedPmiModel {
    pair_counts: HashMap<(TokenId, TokenId), u64>,
    marginal: Vec<u64>,
    total: u64,
    alpha: f64,
    vocab: Vocabulary,
}

#[derive(Serialize, Deserialize)]
struct OrderedPmiWire {
    pairs: Vec<(TokenId, TokenId, u64)>,
    marginal: Vec<u64>,
    total: u64,
    alpha: f64,
    vocab: Vocabulary,
}

impl From<OrderedPmiWire> for OrderedPmiModel {
    fn from(w: OrderedPmiWire) -> Self {
        OrderedPmiModel {
            pair_counts: w.pairs.into_iter().map(|(a, b, c)| ((a, b), c)).collect(),
            marginal: w.marginal,
            total: w.total,
            alpha: w.alpha,
            vocab: w.vocab,
        }
    }
}

impl From<OrderedPmiModel> for OrderedPmiWire {
    fn from(m: OrderedPmiModel) -> Self {
        let mut pairs: Vec<(TokenId, TokenId, u64)> = m
            .pair_counts
            .into_iter()
            .map(|((a, b), c)| (a, b, c))
            .collect();
        pairs.sort();
        OrderedPmiWire {
            pairs,
            marginal: m.marginal,
            total: m.total,
            alpha: m.alpha,
            vocab: m.vocab,
        }
    }
}

/// Default additive smoothing for ordered PMI counts.
pub const ORDERED_PMI_ALPHA: f64 = 0.5;

/// Count directional co-occurrences over whole sequences (unbounded
/// within-sequence window).
pub fn train_ordered_pmi(corpus: &[Vec<TokenId>], vocab: &Vocabulary) -> Result<OrderedPmiModel> {
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let mut pair_counts: HashMap<(TokenId, TokenId), u64> = HashMap::new();
    let mut marginal = vec![0u64; vocab.len()];
    let mut total = 0u64;
    for seq in corpus {
        for (i, &a) in seq.iter().enumerate() {
            marginal[a] += 1;
            total += 1;
            for &b in &seq[i + 1..] {
                *pair_counts.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    Ok(OrderedPmiModel {
        pair_counts,
        marginal,
        total,
        alpha: ORDERED_PMI_ALPHA,
        vocab: vocab.clone(),
    })
}

impl OrderedPmiModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn pair_count(&self, a: TokenId, b: TokenId) -> u64 {
        self.pair_counts.get(&(a, b)).copied().unwrap_or(0)
    }

    /// `OP(a,b) = ln[(C(a→b)+α)·T / ((C(a)+α)·(C(b)+α))]`.
    pub fn op(&self, a: TokenId, b: TokenId) -> f64 {
        let pair = self.pair_count(a, b) as f64 + self.alpha;
        let ca = self.marginal[a] as f64 + self.alpha;
        let cb = self.marginal[b] as f64 + self.alpha;
        (pair * self.total as f64 / (ca * cb)).ln()
    }
}

impl LanguageModel for OrderedPmiModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn unigram_count(&self, token: TokenId) -> u64 {
        self.marginal[token]
    }
}

impl GapScoringModel for OrderedPmiModel {
    /// Total PMI with every observed token: `OP(t, w)` for tokens before
    /// the gap, `OP(w, t)` for tokens after it.
    fn gap_score(&self, tokens: &[TokenId], gap: usize, candidate: TokenId) -> f64 {
        let before: f64 = tokens[..gap].iter().map(|&t| self.op(t, candidate)).sum();
        let after: f64 = tokens[gap + 1..]
            .iter()
            .map(|&t| self.op(candidate, t))
            .sum();
        before + after
    }
}

/// Rank a cloze instance under the ordered PMI model.
pub fn op_predict(model: &OrderedPmiModel, instance: &ClozeInstance) -> Vec<TokenId> {
    rank_candidates(model, instance)
}

// ---------------------------------------------------------------------------
// Perplexity report

/// Perplexity grid: rows are corpora, columns are models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub corpus_labels: Vec<String>,
    pub corpus_checksums: Vec<String>,
    pub model_ids: Vec<String>,
    /// `cells[row][col]`, row per corpus, column per model.
    pub cells: Vec<Vec<f64>>,
    pub seed: Option<u64>,
}

impl PerplexityReport {
    /// Aligned-text rendering of the grid.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let label_width = self
            .corpus_labels
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(6)
            .max(6);
        write!(out, "{:label_width$}", "corpus").unwrap();
        for model in &self.model_ids {
            write!(out, " {model:>12}").unwrap();
        }
        writeln!(out).unwrap();
        for (row, label) in self.corpus_labels.iter().enumerate() {
            write!(out, "{label:label_width$}").unwrap();
            for cell in &self.cells[row] {
                write!(out, " {cell:>12.4}").unwrap();
            }
            writeln!(out).unwrap();
        }
        out
    }
}

/// Evaluate every (corpus, model) pair into the report grid.
pub fn perplexity_report(
    models: &[(&str, &dyn ConditionalModel)],
    corpora: &[(&str, &[Vec<TokenId>])],
) -> Result<PerplexityReport> {
    let mut cells = Vec::with_capacity(corpora.len());
    let mut checksums = Vec::with_capacity(corpora.len());
    for (_, corpus) in corpora {
        let mut row = Vec::with_capacity(models.len());
        for (_, model) in models {
            row.push(perplexity_of(*model, corpus)?);
        }
        cells.push(row);
        checksums.push(id_corpus_checksum(corpus));
    }
    Ok(PerplexityReport {
        corpus_labels: corpora.iter().map(|(l, _)| l.to_string()).collect(),
        corpus_checksums: checksums,
        model_ids: models.iter().map(|(l, _)| l.to_string()).collect(),
        cells,
        seed: None,
    })
}

/// SHA-256 over the id rows of an encoded corpus.
pub fn id_corpus_checksum(corpus: &[Vec<TokenId>]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for seq in corpus {
        for &id in seq {
            hasher.update((id as u64).to_le_bytes());
        }
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut s = String::with_capacity(digest.len() * 2);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
