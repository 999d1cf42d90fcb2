//! Brute-force cloze ranking: substitute every candidate into the gap and
//! score the entire sequence, instead of the windowed events the library
//! ranks with. Tie-breaks mirror the declared rule (unigram count, then
//! token id).

use semlm::evalx::ClozeInstance;
use semlm::ngram::NGramModel;
use semlm::vocab::TokenId;
use semlm::LanguageModel;

pub fn brute_force_ranking(model: &NGramModel, instance: &ClozeInstance) -> Vec<TokenId> {
    let v = model.vocabulary().len();
    let mut scored: Vec<(f64, u64, TokenId)> = (0..v)
        .map(|w| {
            let mut filled = instance.tokens.clone();
            filled[instance.removed_position] = w;
            (
                model.sequence_logprob(&filled),
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
