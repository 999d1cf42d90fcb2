//! Shared corpus builders for the criterion targets.

use semlm::synth::{markov2_corpus, Markov2Corpus};
use semlm::vocab::TokenId;

/// Mid-size synthetic corpus the model benchmarks train on.
pub fn bench_corpus() -> Markov2Corpus {
    markov2_corpus(99, 40, 800, 80, 24)
}

/// (history, token) pairs sampled deterministically from a corpus for
/// scoring loops.
pub fn sample_bigrams(corpus: &[Vec<TokenId>], n: usize) -> Vec<(TokenId, TokenId)> {
    corpus
        .iter()
        .flat_map(|seq| seq.windows(2).map(|w| (w[0], w[1])))
        .step_by(7)
        .take(n)
        .collect()
}
