//! Deterministic synthetic corpora for tests, benchmarks and the bundled
//! mini dataset. Everything here is a pure function of its seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::annotations::{
    AnnotatedDocument, ArgumentSpan, Connective, Mention, PredicateFrame, Token, TokenRange,
};
use crate::vocab::{TokenId, Vocabulary};

/// An id-level corpus drawn from a hidden order-2 Markov chain, split into
/// train and held-out parts. Sequences are EOS-terminated against the
/// returned vocabulary.
pub struct Markov2Corpus {
    pub vocab: Vocabulary,
    pub train: Vec<Vec<TokenId>>,
    pub heldout: Vec<Vec<TokenId>>,
}

/// Generate from a random chain whose next-token distribution genuinely
/// depends on both preceding tokens, so a trigram model has signal a
/// bigram model cannot see.
pub fn markov2_corpus(
    seed: u64,
    n_types: usize,
    train_seqs: usize,
    heldout_seqs: usize,
    seq_len: usize,
) -> Markov2Corpus {
    assert!(n_types >= 4);
    let vocab = Vocabulary::synthetic(n_types);
    let eos = vocab.eos_id();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Four preferred continuations per (a, b) history.
    let weights = [0.5, 0.25, 0.15, 0.10];
    let mut table: Vec<[TokenId; 4]> = Vec::with_capacity(n_types * n_types);
    for _ in 0..n_types * n_types {
        let mut prefs = [0; 4];
        for slot in &mut prefs {
            *slot = rng.gen_range(0..n_types);
        }
        table.push(prefs);
    }

    let draw_seq = |rng: &mut ChaCha8Rng| {
        let mut seq = Vec::with_capacity(seq_len + 1);
        seq.push(rng.gen_range(0..n_types));
        seq.push(rng.gen_range(0..n_types));
        while seq.len() < seq_len {
            let (a, b) = (seq[seq.len() - 2], seq[seq.len() - 1]);
            let prefs = &table[a * n_types + b];
            let x: f64 = rng.gen();
            let mut acc = 0.0;
            let mut next = prefs[3];
            for (slot, w) in prefs.iter().zip(weights) {
                acc += w;
                if x < acc {
                    next = *slot;
                    break;
                }
            }
            seq.push(next);
        }
        seq.push(eos);
        seq
    };

    let train = (0..train_seqs).map(|_| draw_seq(&mut rng)).collect();
    let heldout = (0..heldout_seqs).map(|_| draw_seq(&mut rng)).collect();
    Markov2Corpus {
        vocab,
        train,
        heldout,
    }
}

// ---------------------------------------------------------------------------
// Annotated mini corpus

/// Verbs available to the generator: lemma, PropBank sense suffix, and the
/// VerbNet sense key when one exists in the bundled mapping table.
const VERBS: &[(&str, &str, Option<&str>)] = &[
    ("place", "01", Some("9.1-2")),
    ("put", "01", Some("9.1-2")),
    ("give", "01", Some("13.1")),
    ("say", "01", Some("37.7")),
    ("tell", "01", Some("37.2")),
    ("buy", "01", Some("13.5.1")),
    ("get", "01", Some("13.5.1")),
    ("see", "01", Some("30.1")),
    ("want", "01", Some("32.1-1-1")),
    ("know", "01", Some("29.5-1")),
    ("eat", "01", Some("39.1-1")),
    ("drink", "01", Some("39.1-2")),
    ("take", "01", Some("11.3")),
    ("make", "02", Some("26.1-1")),
    ("pay", "01", Some("68")),
    ("work", "01", None),
    ("sleep", "01", None),
    ("decide", "01", None),
    ("try", "01", None),
    ("agree", "01", None),
    ("wait", "01", None),
    ("comment", "01", None),
    ("rest", "01", None),
    ("smile", "01", None),
];

const SUBJECTS: &[&str] = &[
    "analyst", "mayor", "company", "investor", "reporter", "team", "director", "banker",
    "manager", "senator",
];

const OBJECTS: &[&str] = &[
    "report", "market", "plan", "deal", "letter", "offer", "contract", "project", "budget",
    "proposal",
];

const PARTICLES: &[(&str, &str)] = &[("up", "RP"), ("over", "RP"), ("out", "RP"), ("in", "IN")];

const MARKERS: &[&str] = &[
    "but", "because", "and", "however", "so", "while", "although", "meanwhile",
];

struct DocBuilder {
    doc_id: String,
    tokens: Vec<Token>,
    frames: Vec<PredicateFrame>,
    connectives: Vec<Connective>,
    /// entity slot → mentions collected so far
    chains: Vec<Vec<Mention>>,
    sentence: usize,
}

impl DocBuilder {
    fn new(doc_id: String, entities: usize) -> Self {
        DocBuilder {
            doc_id,
            tokens: Vec::new(),
            frames: Vec::new(),
            connectives: Vec::new(),
            chains: vec![Vec::new(); entities],
            sentence: 0,
        }
    }

    fn push_token(&mut self, surface: &str, lemma: &str, pos: &str) -> usize {
        let index = self.tokens.len();
        self.tokens.push(Token {
            index,
            surface: surface.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            sentence_index: self.sentence,
        });
        index
    }

    fn push_verb(&mut self, verb: (&str, &str, Option<&str>)) -> usize {
        let (lemma, sense, _) = verb;
        let surface = format!("{lemma}ed");
        let idx = self.push_token(&surface, lemma, "VBD");
        self.frames.push(PredicateFrame {
            predicate_index: idx,
            lemma: lemma.to_string(),
            pb_sense: format!("{lemma}.{sense}"),
            vn_sense: verb.2.map(str::to_string),
            args: Vec::new(),
        });
        idx
    }

    fn frame_at_mut(&mut self, predicate_index: usize) -> &mut PredicateFrame {
        self.frames
            .iter_mut()
            .find(|f| f.predicate_index == predicate_index)
            .expect("frame exists")
    }

    fn mention(&mut self, entity: usize, start: usize, end: usize, head: usize) {
        self.chains[entity].push(Mention {
            start,
            end,
            head,
            chain_id: entity,
        });
    }

    fn end_sentence(&mut self) {
        self.push_token(".", ".", ".");
        self.sentence += 1;
    }

    fn finish(mut self) -> AnnotatedDocument {
        self.connectives.sort_by_key(|c| c.span.start);
        // Drop entity slots that collected no mentions, renumbering ids.
        let mut chains: Vec<Vec<Mention>> = Vec::new();
        for mentions in self.chains.into_iter().filter(|m| !m.is_empty()) {
            let chain_id = chains.len();
            chains.push(
                mentions
                    .into_iter()
                    .map(|m| Mention { chain_id, ..m })
                    .collect(),
            );
        }
        AnnotatedDocument {
            doc_id: self.doc_id,
            tokens: self.tokens,
            frames: self.frames,
            connectives: self.connectives,
            chains,
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.gen_range(0..items.len())]
}

/// Subject noun phrase; returns the subject token index.
fn subject(b: &mut DocBuilder, rng: &mut ChaCha8Rng, entity: Option<usize>) -> usize {
    b.push_token("the", "the", "DT");
    let noun = pick(rng, SUBJECTS);
    let idx = b.push_token(noun, noun, "NN");
    if let Some(e) = entity {
        b.mention(e, idx - 1, idx, idx);
    }
    idx
}

/// One clause: subject, verb (with optional particle / negation /
/// secondary predicate / compound), object. Fills argument spans and
/// mentions. Returns (first verb index, clause start, clause end).
fn clause(
    b: &mut DocBuilder,
    rng: &mut ChaCha8Rng,
    subject_entity: Option<usize>,
    object_entity: Option<usize>,
) -> (usize, usize, usize) {
    let clause_start = b.tokens.len();
    let subj = subject(b, rng, subject_entity);

    let negated = rng.gen_bool(0.12);
    if negated {
        b.push_token("not", "not", "RB");
    }
    let not_idx = negated.then(|| b.tokens.len() - 1);

    let verb = *pick(rng, VERBS);
    let verb_idx = b.push_verb(verb);

    // Compound pattern: "decided to buy"-style second predicate.
    if rng.gen_bool(0.25) {
        b.push_token("to", "to", "TO");
        let second = *pick(rng, VERBS);
        let second_idx = b.push_verb(second);
        let span = ArgumentSpan {
            label: "A0".into(),
            start: subj - 1,
            end: subj,
        };
        b.frame_at_mut(second_idx).args.push(span);
    } else if rng.gen_bool(0.2) {
        let (particle, pos) = *pick(rng, PARTICLES);
        b.push_token(particle, particle, pos);
    }

    b.push_token("the", "the", "DT");
    let obj_noun = pick(rng, OBJECTS);
    let obj = b.push_token(obj_noun, obj_noun, "NN");
    if let Some(e) = object_entity {
        b.mention(e, obj - 1, obj, obj);
    }

    if rng.gen_bool(0.12) {
        let adj = if rng.gen_bool(0.5) { "happy" } else { "ready" };
        let adj_idx = b.push_token(adj, adj, "JJ");
        b.frame_at_mut(verb_idx).args.push(ArgumentSpan {
            label: "AM-PRD".into(),
            start: adj_idx,
            end: adj_idx,
        });
    }

    let clause_end = b.tokens.len() - 1;
    let frame = b.frame_at_mut(verb_idx);
    frame.args.push(ArgumentSpan {
        label: "A0".into(),
        start: subj - 1,
        end: subj,
    });
    frame.args.push(ArgumentSpan {
        label: "A1".into(),
        start: obj - 1,
        end: obj,
    });
    if let Some(n) = not_idx {
        frame.args.push(ArgumentSpan {
            label: "AM-NEG".into(),
            start: n,
            end: n,
        });
    }
    (verb_idx, clause_start, clause_end)
}

/// One synthetic document with 3-6 sentences over two recurring entities.
fn build_document(doc_id: String, rng: &mut ChaCha8Rng) -> AnnotatedDocument {
    let mut b = DocBuilder::new(doc_id, 3);
    let sentences = rng.gen_range(3..=6);
    for _ in 0..sentences {
        let subject_entity = match rng.gen_range(0..4) {
            0 => Some(0),
            1 => Some(1),
            _ => None,
        };
        if rng.gen_bool(0.45) {
            // Two clauses joined by an explicit connective.
            let (_, start1, end1) = clause(&mut b, rng, subject_entity, None);
            let marker = *pick(rng, MARKERS);
            let mut span_start = None;
            for word in marker.split(' ') {
                let idx = b.push_token(word, word, "IN");
                span_start.get_or_insert(idx);
            }
            let span_start = span_start.expect("marker has at least one word");
            let span_end = b.tokens.len() - 1;
            let object_entity = rng.gen_bool(0.5).then_some(2);
            let (_, start2, _) = clause(&mut b, rng, None, object_entity);
            let end2 = b.tokens.len() - 1;
            b.connectives.push(Connective {
                marker: marker.to_string(),
                span: TokenRange {
                    start: span_start,
                    end: span_end,
                },
                arg1: TokenRange {
                    start: start1,
                    end: end1,
                },
                arg2: TokenRange {
                    start: start2,
                    end: end2,
                },
            });
        } else {
            let object_entity = rng.gen_bool(0.3).then_some(2);
            clause(&mut b, rng, subject_entity, object_entity);
        }
        b.end_sentence();
    }
    b.finish()
}

/// The bundled ~100-document synthetic corpus, as a function of the seed.
pub fn mini_corpus(seed: u64, documents: usize) -> Vec<AnnotatedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..documents)
        .map(|i| build_document(format!("mini-{i:03}"), &mut rng))
        .collect()
}

/// Seed and size of the corpus shipped in `data/mini_corpus.jsonl`.
pub const MINI_CORPUS_SEED: u64 = 6151;
pub const MINI_CORPUS_DOCS: usize = 100;

/// JSON Lines serialization of a document set.
pub fn to_jsonl(documents: &[AnnotatedDocument]) -> String {
    let mut out = String::new();
    for doc in documents {
        out.push_str(&doc.to_json_line());
        out.push('\n');
    }
    out
}
