//! N-gram language models with interpolated Kneser-Ney smoothing.
//!
//! Orders 1 to 3. The top level keeps raw counts; every lower level keeps
//! continuation counts derived from the raw counts one order up
//! (`cc(g) = |{u : c(u·g) > 0}|`). One discount per level, estimated from
//! count-of-counts as `D = n1 / (n1 + 2·n2)`. The unigram level discounts
//! absolutely and puts the leftover mass on the uniform distribution over
//! the vocabulary, so every in-vocabulary token has strictly positive
//! probability. Histories shorter than `order − 1` are scored by the
//! matching lower level directly; no artificial begin-of-sequence tokens.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{perplexity_of, ConditionalModel, GapScoringModel, LanguageModel};
use crate::vocab::{TokenId, Vocabulary};
use crate::{Error, Result};

/// Maximum supported order.
pub const MAX_ORDER: usize = 3;

/// Training knobs beyond the order.
#[derive(Debug, Clone, Copy, Default)]
pub struct NGramOptions {
    /// Use this discount at every level instead of estimating from
    /// count-of-counts. Must lie in `[0, 1)`.
    pub discount_override: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct HistStats {
    total: u64,
    types: u64,
}

/// Counts for one level of the hierarchy: raw at the top, continuation
/// below, plus per-history aggregates.
#[derive(Debug, Clone, Default)]
struct LevelCounts {
    grams: HashMap<Vec<TokenId>, u64>,
    hist: HashMap<Vec<TokenId>, HistStats>,
}

impl LevelCounts {
    fn from_grams(grams: HashMap<Vec<TokenId>, u64>) -> Self {
        let mut hist: HashMap<Vec<TokenId>, HistStats> = HashMap::new();
        for (gram, &count) in &grams {
            let h = hist.entry(gram[..gram.len() - 1].to_vec()).or_default();
            h.total += count;
            h.types += 1;
        }
        LevelCounts { grams, hist }
    }

    fn count(&self, gram: &[TokenId]) -> u64 {
        self.grams.get(gram).copied().unwrap_or(0)
    }

    fn history(&self, hist: &[TokenId]) -> Option<&HistStats> {
        self.hist.get(hist)
    }
}

/// A trained Kneser-Ney n-gram model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "NGramWire", into = "NGramWire")]
pub struct NGramModel {
    order: usize,
    levels: Vec<LevelCounts>,
    discounts: Vec<f64>,
    raw_unigram: Vec<u64>,
    vocab: Vocabulary,
}

#[derive(Serialize, Deserialize)]
struct NGramWire {
    order: usize,
    // Sorted (gram, count) rows per level, for deterministic bytes.
    levels: Vec<Vec<(Vec<TokenId>, u64)>>,
    discounts: Vec<f64>,
    raw_unigram: Vec<u64>,
    vocab: Vocabulary,
}

impl From<NGramWire> for NGramModel {
    fn from(w: NGramWire) -> Self {
        NGramModel {
            order: w.order,
            levels: w
                .levels
                .into_iter()
                .map(|rows| LevelCounts::from_grams(rows.into_iter().collect()))
                .collect(),
            discounts: w.discounts,
            raw_unigram: w.raw_unigram,
            vocab: w.vocab,
        }
    }
}

impl From<NGramModel> for NGramWire {
    fn from(m: NGramModel) -> Self {
        NGramWire {
            order: m.order,
            levels: m
                .levels
                .into_iter()
                .map(|level| {
                    let mut rows: Vec<(Vec<TokenId>, u64)> = level.grams.into_iter().collect();
                    rows.sort();
                    rows
                })
                .collect(),
            discounts: m.discounts,
            raw_unigram: m.raw_unigram,
            vocab: m.vocab,
        }
    }
}

fn raw_counts(corpus: &[Vec<TokenId>], k: usize) -> HashMap<Vec<TokenId>, u64> {
    let mut counts = HashMap::new();
    for seq in corpus {
        for window in seq.windows(k) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

fn continuation_counts(raw_next: &HashMap<Vec<TokenId>, u64>) -> HashMap<Vec<TokenId>, u64> {
    let mut counts = HashMap::new();
    for gram in raw_next.keys() {
        *counts.entry(gram[1..].to_vec()).or_insert(0) += 1;
    }
    counts
}

/// `D = n1 / (n1 + 2·n2)` over this level's count-of-counts, clamped away
/// from 0 and 1 so interpolation mass never vanishes.
fn estimate_discount(grams: &HashMap<Vec<TokenId>, u64>) -> f64 {
    let n1 = grams.values().filter(|&&c| c == 1).count() as f64;
    let n2 = grams.values().filter(|&&c| c == 2).count() as f64;
    let d = if n1 + 2.0 * n2 > 0.0 {
        n1 / (n1 + 2.0 * n2)
    } else {
        0.1
    };
    d.clamp(1e-4, 0.9999)
}

/// Train a Kneser-Ney model of the given order over encoded sequences.
pub fn train_ngram(
    corpus: &[Vec<TokenId>],
    order: usize,
    vocab: &Vocabulary,
) -> Result<NGramModel> {
    train_ngram_with(corpus, order, vocab, NGramOptions::default())
}

pub fn train_ngram_with(
    corpus: &[Vec<TokenId>],
    order: usize,
    vocab: &Vocabulary,
    options: NGramOptions,
) -> Result<NGramModel> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    if let Some(d) = options.discount_override {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::InvalidInput(format!(
                "discount override {d} outside [0, 1)"
            )));
        }
    }
    for seq in corpus {
        for &id in seq {
            if id >= vocab.len() {
                return Err(Error::InvalidInput(format!(
                    "token id {id} outside vocabulary of {}",
                    vocab.len()
                )));
            }
        }
    }

    let raw: Vec<HashMap<Vec<TokenId>, u64>> =
        (1..=order).map(|k| raw_counts(corpus, k)).collect();

    let mut raw_unigram = vec![0u64; vocab.len()];
    for (gram, &count) in &raw[0] {
        raw_unigram[gram[0]] = count;
    }

    let mut levels = Vec::with_capacity(order);
    for level in 1..=order {
        let grams = if level == order {
            raw[level - 1].clone()
        } else {
            continuation_counts(&raw[level])
        };
        levels.push(LevelCounts::from_grams(grams));
    }

    let discounts = levels
        .iter()
        .map(|l| options.discount_override.unwrap_or_else(|| estimate_discount(&l.grams)))
        .collect();

    Ok(NGramModel {
        order,
        levels,
        discounts,
        raw_unigram,
        vocab: vocab.clone(),
    })
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn discounts(&self) -> &[f64] {
        &self.discounts
    }

    /// Raw count of a gram at the given level (continuation counts below
    /// the top level).
    pub fn level_count(&self, level: usize, gram: &[TokenId]) -> u64 {
        self.levels[level - 1].count(gram)
    }

    /// Raw corpus frequency of one token.
    pub fn raw_unigram_count(&self, id: TokenId) -> u64 {
        self.raw_unigram[id]
    }

    fn prob_level(&self, level: usize, history: &[TokenId], token: TokenId) -> f64 {
        debug_assert_eq!(history.len(), level - 1);
        let counts = &self.levels[level - 1];
        let discount = self.discounts[level - 1];
        if level == 1 {
            let stats = match counts.history(&[]) {
                Some(s) if s.total > 0 => s,
                // No observed mass at all: fall back to uniform.
                _ => return 1.0 / self.vocab.len() as f64,
            };
            let total = stats.total as f64;
            let c = counts.count(&[token]) as f64;
            let leftover = discount * stats.types as f64 / total;
            return (c - discount).max(0.0) / total + leftover / self.vocab.len() as f64;
        }
        match counts.history(history) {
            Some(stats) if stats.total > 0 => {
                let total = stats.total as f64;
                let mut gram = history.to_vec();
                gram.push(token);
                let c = counts.count(&gram) as f64;
                let gamma = discount * stats.types as f64 / total;
                (c - discount).max(0.0) / total
                    + gamma * self.prob_level(level - 1, &history[1..], token)
            }
            // Unseen history: the lower-order distribution directly.
            _ => self.prob_level(level - 1, &history[1..], token),
        }
    }

    /// Interpolated Kneser-Ney conditional probability. Histories longer
    /// than `order − 1` are truncated to their suffix; shorter histories
    /// are scored by the matching lower level.
    pub fn cond_prob(&self, history: &[TokenId], token: TokenId) -> f64 {
        let level = (history.len() + 1).min(self.order);
        let hist = &history[history.len() - (level - 1)..];
        self.prob_level(level, hist, token)
    }

    /// Log-probability of a sequence under the chain decomposition,
    /// including the final (EOS) term.
    pub fn sequence_logprob(&self, seq: &[TokenId]) -> f64 {
        seq.iter()
            .enumerate()
            .map(|(t, &w)| self.cond_prob(&seq[..t], w).ln())
            .sum()
    }
}

/// Corpus perplexity over non-EOS prediction events.
pub fn perplexity(model: &NGramModel, corpus: &[Vec<TokenId>]) -> Result<f64> {
    perplexity_of(model, corpus)
}

impl LanguageModel for NGramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn unigram_count(&self, token: TokenId) -> u64 {
        self.raw_unigram[token]
    }
}

impl ConditionalModel for NGramModel {
    fn cond_prob(&self, history: &[TokenId], token: TokenId) -> f64 {
        NGramModel::cond_prob(self, history, token)
    }
}

impl GapScoringModel for NGramModel {
    /// Sum of the log-probabilities of the n-gram events overlapping the
    /// gap; factors not touching the gap are constant across candidates
    /// and omitted.
    fn gap_score(&self, tokens: &[TokenId], gap: usize, candidate: TokenId) -> f64 {
        let mut filled = tokens.to_vec();
        filled[gap] = candidate;
        let upper = (gap + self.order).min(filled.len());
        (gap..upper)
            .map(|t| NGramModel::cond_prob(self, &filled[..t], filled[t]).ln())
            .sum()
    }
}

// ---------------------------------------------------------------------------
// ARPA-style sectioned text dump

const TEXT_MAGIC: &str = "\\semlm-ngram v1\\";

impl NGramModel {
    /// Sectioned text dump of the count tables: discounts, the embedded
    /// vocabulary, raw unigram counts, then one `\k-grams\` section per
    /// level (`count<TAB>token ...` rows; levels below the top hold
    /// continuation counts). Round-trips every probability bit-exactly.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{TEXT_MAGIC}")?;
        writeln!(w, "order\t{}", self.order)?;
        let discounts: Vec<String> = self.discounts.iter().map(|d| format!("{d}")).collect();
        writeln!(w, "discounts\t{}", discounts.join("\t"))?;
        writeln!(w, "\\vocab\\")?;
        self.vocab.write_tsv(&mut w)?;
        writeln!(w, "\\raw-unigram\\")?;
        for (id, &count) in self.raw_unigram.iter().enumerate() {
            if count > 0 {
                writeln!(w, "{count}\t{}", self.vocab.token(id))?;
            }
        }
        for (i, level) in self.levels.iter().enumerate() {
            writeln!(w, "\\{}-grams\\", i + 1)?;
            let mut rows: Vec<(&Vec<TokenId>, &u64)> = level.grams.iter().collect();
            rows.sort();
            for (gram, count) in rows {
                let toks: Vec<&str> = gram.iter().map(|&id| self.vocab.token(id)).collect();
                writeln!(w, "{count}\t{}", toks.join(" "))?;
            }
        }
        writeln!(w, "\\end\\")?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let bad = |line: usize, message: &str| Error::ModelFormat(format!("line {line}: {message}"));

        let (_, first) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
        if first?.trim_end() != TEXT_MAGIC {
            return Err(bad(1, "not a semlm-ngram text dump"));
        }

        let mut order = 0usize;
        let mut discounts = Vec::new();
        let mut vocab_lines: Vec<String> = Vec::new();
        let mut raw_unigram_rows: Vec<(String, u64)> = Vec::new();
        let mut level_rows: Vec<Vec<(Vec<String>, u64)>> = Vec::new();
        let mut section = String::new();

        for (i, line) in lines {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('\\') && line.ends_with('\\') {
                section = line.to_string();
                if section == "\\end\\" {
                    break;
                }
                if section.ends_with("-grams\\") {
                    level_rows.push(Vec::new());
                }
                continue;
            }
            if section.is_empty() {
                let mut parts = line.split('\t');
                match parts.next() {
                    Some("order") => {
                        order = parts
                            .next()
                            .and_then(|v| v.parse().ok())
                            .ok_or_else(|| bad(line_no, "bad order"))?;
                    }
                    Some("discounts") => {
                        discounts = parts
                            .map(|v| v.parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| bad(line_no, "bad discount"))?;
                    }
                    _ => return Err(bad(line_no, "unknown preamble row")),
                }
            } else if section == "\\vocab\\" {
                vocab_lines.push(line.to_string());
            } else if section == "\\raw-unigram\\" {
                let (count, token) = line
                    .split_once('\t')
                    .ok_or_else(|| bad(line_no, "bad raw-unigram row"))?;
                raw_unigram_rows.push((
                    token.to_string(),
                    count.parse().map_err(|_| bad(line_no, "bad count"))?,
                ));
            } else if section.ends_with("-grams\\") {
                let (count, toks) = line
                    .split_once('\t')
                    .ok_or_else(|| bad(line_no, "bad gram row"))?;
                let gram: Vec<String> = toks.split(' ').map(str::to_string).collect();
                level_rows
                    .last_mut()
                    .expect("section opened")
                    .push((gram, count.parse().map_err(|_| bad(line_no, "bad count"))?));
            } else {
                return Err(bad(line_no, "row outside any known section"));
            }
        }

        if !(1..=MAX_ORDER).contains(&order) || discounts.len() != order || level_rows.len() != order
        {
            return Err(Error::ModelFormat("inconsistent order metadata".into()));
        }
        let vocab = Vocabulary::read_tsv(std::io::Cursor::new(vocab_lines.join("\n")))?;
        let resolve = |token: &str| {
            vocab
                .id_of(token)
                .ok_or_else(|| Error::ModelFormat(format!("unknown token {token}")))
        };
        let mut raw_unigram = vec![0u64; vocab.len()];
        for (token, count) in raw_unigram_rows {
            raw_unigram[resolve(&token)?] = count;
        }
        let mut levels = Vec::with_capacity(order);
        for rows in level_rows {
            let mut grams = HashMap::new();
            for (gram, count) in rows {
                let ids = gram
                    .iter()
                    .map(|t| resolve(t))
                    .collect::<Result<Vec<TokenId>>>()?;
                grams.insert(ids, count);
            }
            levels.push(LevelCounts::from_grams(grams));
        }
        Ok(NGramModel {
            order,
            levels,
            discounts,
            raw_unigram,
            vocab,
        })
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_text(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_text(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_text(std::io::BufReader::new(file))
    }
}
