//! Brute-force interpolated Kneser-Ney reference, written directly from
//! the smoothing definition and independent of the library's count
//! tables. Every count is recomputed by scanning the corpus; results are
//! memoized but never shared with the implementation under test.
//!
//! Definitions (model order n):
//!   level n uses raw counts c(g);
//!   level k < n uses continuation counts cc(g) = |{u : c(u·g) > 0}|
//!   computed against the raw counts of order k+1;
//!   D_k = n1/(n1 + 2·n2) over level-k count-of-counts, clamped to
//!   [1e-4, 0.9999] (0.1 when no mass);
//!   p_1(w) = max(c1(w)−D,0)/T + D·N1/T · 1/V  (uniform leftover);
//!   p_k(w|h) = [max(c(h·w)−D,0) + D·types(h)·p_{k−1}(w|h')] / total(h),
//!   with total(h)=0 falling through to p_{k−1} directly.

use std::cell::RefCell;
use std::collections::HashMap;

pub struct KnOracle<'a> {
    corpus: &'a [Vec<usize>],
    order: usize,
    vocab_size: usize,
    discounts: Vec<f64>,
    raw_cache: RefCell<HashMap<Vec<usize>, u64>>,
}

impl<'a> KnOracle<'a> {
    pub fn new(corpus: &'a [Vec<usize>], order: usize, vocab_size: usize) -> Self {
        let mut oracle = KnOracle {
            corpus,
            order,
            vocab_size,
            discounts: Vec::new(),
            raw_cache: RefCell::new(HashMap::new()),
        };
        oracle.discounts = (1..=order).map(|k| oracle.estimate_discount(k)).collect();
        oracle
    }

    fn raw_count(&self, gram: &[usize]) -> u64 {
        if let Some(&c) = self.raw_cache.borrow().get(gram) {
            return c;
        }
        let c = self
            .corpus
            .iter()
            .map(|seq| seq.windows(gram.len()).filter(|w| *w == gram).count() as u64)
            .sum();
        self.raw_cache.borrow_mut().insert(gram.to_vec(), c);
        c
    }

    /// Level-k count of a k-gram: raw at the top, continuation below.
    fn level_count(&self, level: usize, gram: &[usize]) -> u64 {
        if level == self.order {
            self.raw_count(gram)
        } else {
            (0..self.vocab_size)
                .filter(|&u| {
                    let mut extended = Vec::with_capacity(gram.len() + 1);
                    extended.push(u);
                    extended.extend_from_slice(gram);
                    self.raw_count(&extended) > 0
                })
                .count() as u64
        }
    }

    /// Enumerate all k-grams over the vocabulary (toy scale only).
    fn all_grams(&self, k: usize) -> Vec<Vec<usize>> {
        let mut grams: Vec<Vec<usize>> = vec![Vec::new()];
        for _ in 0..k {
            grams = grams
                .into_iter()
                .flat_map(|g| {
                    (0..self.vocab_size).map(move |w| {
                        let mut next = g.clone();
                        next.push(w);
                        next
                    })
                })
                .collect();
        }
        grams
    }

    fn estimate_discount(&self, level: usize) -> f64 {
        let mut n1 = 0u64;
        let mut n2 = 0u64;
        for gram in self.all_grams(level) {
            match self.level_count(level, &gram) {
                1 => n1 += 1,
                2 => n2 += 1,
                _ => {}
            }
        }
        let denom = n1 as f64 + 2.0 * n2 as f64;
        let d = if denom > 0.0 { n1 as f64 / denom } else { 0.1 };
        d.clamp(1e-4, 0.9999)
    }

    fn prob_level(&self, level: usize, history: &[usize], token: usize) -> f64 {
        assert_eq!(history.len(), level - 1);
        let discount = self.discounts[level - 1];
        if level == 1 {
            let total: u64 = (0..self.vocab_size)
                .map(|w| self.level_count(1, &[w]))
                .sum();
            if total == 0 {
                return 1.0 / self.vocab_size as f64;
            }
            let observed_types = (0..self.vocab_size)
                .filter(|&w| self.level_count(1, &[w]) > 0)
                .count() as f64;
            let c = self.level_count(1, &[token]) as f64;
            return (c - discount).max(0.0) / total as f64
                + discount * observed_types / total as f64 / self.vocab_size as f64;
        }
        let mut total = 0u64;
        let mut types = 0u64;
        for w in 0..self.vocab_size {
            let mut gram = history.to_vec();
            gram.push(w);
            let c = self.level_count(level, &gram);
            total += c;
            types += u64::from(c > 0);
        }
        if total == 0 {
            return self.prob_level(level - 1, &history[1..], token);
        }
        let mut gram = history.to_vec();
        gram.push(token);
        let c = self.level_count(level, &gram) as f64;
        ((c - discount).max(0.0) + discount * types as f64 * self.prob_level(level - 1, &history[1..], token))
            / total as f64
    }

    /// Interpolated Kneser-Ney conditional for any history length.
    pub fn cond_prob(&self, history: &[usize], token: usize) -> f64 {
        let level = (history.len() + 1).min(self.order);
        let hist = &history[history.len() - (level - 1)..];
        self.prob_level(level, hist, token)
    }

    /// Chain-rule sequence log-probability, EOS term included.
    #[allow(dead_code)] // used by the core equivalence test, not acceptance
    pub fn sequence_logprob(&self, seq: &[usize]) -> f64 {
        (0..seq.len())
            .map(|t| self.cond_prob(&seq[..t], seq[t]).ln())
            .sum()
    }
}
