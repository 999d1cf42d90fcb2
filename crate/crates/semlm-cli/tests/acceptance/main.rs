//! Acceptance suite: one test per criterion, each printing a pass line
//! with its runtime (visible with `cargo test --test acceptance --
//! --nocapture`). Criteria are property-based plus trend reproduction on
//! synthetic corpora; headline corpus-scale numbers are out of reach at
//! desk scale by design.

#[path = "../../../semlm/tests/support/gradcheck.rs"]
mod gradcheck;
#[path = "../../../semlm/tests/support/kn_oracle.rs"]
mod kn_oracle;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semlm::annotations::{
    AnnotatedDocument, ArgumentSpan, Connective, Mention, PredicateFrame, Token, TokenRange,
};
use semlm::evalx::{make_cloze_set, rank_candidates, score_cloze};
use semlm::features::{discourse_features, marker_distribution, FeatureRecord};
use semlm::model::perplexity_of;
use semlm::neural::{train_cbow, train_lb, TrainConfig};
use semlm::ngram::train_ngram;
use semlm::seqbuild::{
    document_sequences, BuildOptions, SemSequence, SemToken, SequenceKind,
};
use semlm::synth::markov2_corpus;
use semlm::unitgen::{map_to_framenet, MappingTable, UnitOptions};
use semlm::vocab::{build_vocabulary, encode_corpus, TokenId, Vocabulary};
use semlm::LanguageModel;

fn finish(criterion: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= budget,
        "{criterion}: runtime {elapsed:?} exceeds budget {budget:?}"
    );
    println!("acceptance: {criterion}: PASS ({elapsed:.2?})");
}

// ---------------------------------------------------------------------------

#[test]
fn kn_oracle_equivalence() {
    let started = Instant::now();
    let vocab = Vocabulary::synthetic(8); // 10 types with UNK/EOS
    let v = vocab.len();
    let eos = vocab.eos_id();
    let mut corpus = vec![
        vec![0, 1, 2, 3],
        vec![0, 1, 2, 0],
        vec![1, 2, 3, 4],
        vec![4, 3, 2, 1],
        vec![0, 1, 0, 1],
        vec![2, 2, 2],
        vec![5, 0, 1],
        vec![3, 4, 5],
    ];
    for seq in &mut corpus {
        seq.push(eos);
    }

    for order in 1..=3 {
        let model = train_ngram(&corpus, order, &vocab).unwrap();
        let oracle = kn_oracle::KnOracle::new(&corpus, order, v);
        let mut histories: Vec<Vec<usize>> = vec![Vec::new()];
        histories.extend((0..v).map(|a| vec![a]));
        for a in 0..v {
            for b in 0..v {
                histories.push(vec![a, b]);
            }
        }
        for history in &histories {
            for token in 0..v {
                let got = model.cond_prob(history, token);
                let want = oracle.cond_prob(history, token);
                assert!(
                    (got - want).abs() < 1e-9,
                    "order {order}, history {history:?}, token {token}: {got} vs {want}"
                );
            }
        }
    }
    finish("KN oracle equivalence", started, Duration::from_secs(1));
}

// ---------------------------------------------------------------------------

#[test]
fn normalization_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);

    // Tri-gram over a ≤50-token vocabulary, 100 random histories.
    let vocab = Vocabulary::synthetic(48); // V = 50
    let v = vocab.len();
    let eos = vocab.eos_id();
    let corpus: Vec<Vec<TokenId>> = (0..200)
        .map(|_| {
            let mut seq: Vec<TokenId> = (0..12).map(|_| rng.gen_range(0..48)).collect();
            seq.push(eos);
            seq
        })
        .collect();
    let tri = train_ngram(&corpus, 3, &vocab).unwrap();
    for _ in 0..100 {
        let history = [rng.gen_range(0..v), rng.gen_range(0..v)];
        let sum: f64 = (0..v).map(|w| tri.cond_prob(&history, w)).sum();
        assert!((sum - 1.0).abs() < 1e-6, "tri history {history:?}: {sum}");
    }

    // CBOW and LB exact softmax, 50 random contexts each.
    let small_vocab = Vocabulary::synthetic(12);
    let small_eos = small_vocab.eos_id();
    let small_corpus: Vec<Vec<TokenId>> = (0..60)
        .map(|_| {
            let mut seq: Vec<TokenId> = (0..8).map(|_| rng.gen_range(0..12)).collect();
            seq.push(small_eos);
            seq
        })
        .collect();
    let config = TrainConfig {
        epochs: 2,
        dim: 16,
        window: 4,
        negative_samples: 5,
        initial_lr: 0.05,
        final_lr: 1e-4,
        seed: 5,
    };
    let cbow = train_cbow(&small_corpus, &small_vocab, config).unwrap();
    let lb = train_lb(
        &small_corpus,
        &small_vocab,
        TrainConfig {
            negative_samples: 10,
            ..config
        },
    )
    .unwrap();
    let sv = small_vocab.len();
    for _ in 0..50 {
        let len = rng.gen_range(0..=4usize);
        let context: Vec<TokenId> = (0..len).map(|_| rng.gen_range(0..sv)).collect();
        let cbow_sum: f64 = (0..sv).map(|w| cbow.cbow_cond_prob(&context, w)).sum();
        assert!(
            (cbow_sum - 1.0).abs() < 1e-9,
            "cbow context {context:?}: {cbow_sum}"
        );
        let lb_sum: f64 = (0..sv).map(|w| lb.lb_cond_prob(&context, w)).sum();
        assert!(
            (lb_sum - 1.0).abs() < 1e-9,
            "lb context {context:?}: {lb_sum}"
        );
    }
    finish("normalization suite", started, Duration::from_secs(10));
}

// ---------------------------------------------------------------------------

#[test]
fn gradient_checks() {
    let started = Instant::now();
    let sg = gradcheck::sg_gradient_error(17);
    let cbow = gradcheck::cbow_gradient_error(23);
    let lb = gradcheck::lb_gradient_error(31);
    assert!(sg < 1e-4, "skip-gram max relative error {sg}");
    assert!(cbow < 1e-4, "cbow max relative error {cbow}");
    assert!(lb < 1e-4, "log-bilinear NCE max relative error {lb}");
    finish("gradient checks", started, Duration::from_secs(10));
}

// ---------------------------------------------------------------------------

#[test]
fn perplexity_trend() {
    let started = Instant::now();
    // ≥50k train tokens from an order-2 chain over V≈40.
    let data = markov2_corpus(2024, 40, 2400, 240, 24);
    let train_tokens: usize = data.train.iter().map(Vec::len).sum();
    assert!(train_tokens >= 50_000, "only {train_tokens} train tokens");

    let uni = train_ngram(&data.train, 1, &data.vocab).unwrap();
    let bg = train_ngram(&data.train, 2, &data.vocab).unwrap();
    let tri = train_ngram(&data.train, 3, &data.vocab).unwrap();
    let p_uni = perplexity_of(&uni, &data.heldout).unwrap();
    let p_bg = perplexity_of(&bg, &data.heldout).unwrap();
    let p_tri = perplexity_of(&tri, &data.heldout).unwrap();
    assert!(
        p_uni > p_bg && p_bg > p_tri,
        "expected UNI > BG > TRI, got {p_uni:.3} / {p_bg:.3} / {p_tri:.3}"
    );
    println!("  held-out perplexity: UNI {p_uni:.2} > BG {p_bg:.2} > TRI {p_tri:.2}");
    finish("perplexity trend", started, Duration::from_secs(30));
}

// ---------------------------------------------------------------------------

#[test]
fn cloze_metric_identities() {
    let started = Instant::now();
    let v = 100usize;

    // Perfect ranker: MRR and Recall@30 exactly 1.
    let perfect: Vec<Vec<TokenId>> = (0..50).map(|g| {
        let mut ranking = vec![g % v];
        ranking.extend((0..v).filter(|&w| w != g % v));
        ranking
    }).collect();
    let golds: Vec<TokenId> = (0..50).map(|g| g % v).collect();
    let report = score_cloze(&perfect, &golds, 30).unwrap();
    assert_eq!(report.mrr, 1.0);
    assert_eq!(report.recall_at_k, 1.0);

    // Uniform-random ranker over V=100: empirical MRR within three
    // standard errors of H_100/100 across 10k instances.
    let harmonic: f64 = (1..=v).map(|r| 1.0 / r as f64).sum();
    let expected = harmonic / v as f64;
    let second_moment: f64 = (1..=v).map(|r| 1.0 / (r * r) as f64).sum::<f64>() / v as f64;
    let variance = second_moment - expected * expected;
    let standard_error = (variance / 10_000.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(8128);
    let mut rankings = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let mut ranking: Vec<TokenId> = (0..v).collect();
        ranking.shuffle(&mut rng);
        rankings.push(ranking);
    }
    let golds = vec![0usize; 10_000];
    let report = score_cloze(&rankings, &golds, 30).unwrap();
    let deviation = (report.mrr - expected).abs();
    assert!(
        deviation < 3.0 * standard_error,
        "uniform MRR {:.6} vs H_V/V {:.6}: |Δ| {:.6} ≥ 3·SE {:.6}",
        report.mrr,
        expected,
        deviation,
        3.0 * standard_error
    );
    finish("cloze metric identities", started, Duration::from_secs(30));
}

// ---------------------------------------------------------------------------

#[test]
fn trigram_cloze_matches_brute_force_oracle() {
    let started = Instant::now();
    let vocab = Vocabulary::synthetic(18); // V = 20
    let eos = vocab.eos_id();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let corpus: Vec<Vec<TokenId>> = (0..60)
        .map(|_| {
            let len = rng.gen_range(4..9);
            let mut seq: Vec<TokenId> = (0..len).map(|_| rng.gen_range(0..18)).collect();
            seq.push(eos);
            seq
        })
        .collect();
    let model = train_ngram(&corpus, 3, &vocab).unwrap();
    let instances = make_cloze_set(&corpus, &vocab, 99).unwrap();

    let brute_force = |instance: &semlm::evalx::ClozeInstance| -> Vec<TokenId> {
        let mut scored: Vec<(f64, u64, TokenId)> = (0..vocab.len())
            .map(|w| {
                let mut filled = instance.tokens.clone();
                filled[instance.removed_position] = w;
                (model.sequence_logprob(&filled), model.unigram_count(w), w)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| b.1.cmp(&a.1))
                .then_with(|| a.2.cmp(&b.2))
        });
        scored.into_iter().map(|(_, _, w)| w).collect()
    };

    let mut agreements = 0usize;
    for instance in &instances {
        if rank_candidates(&model, instance) == brute_force(instance) {
            agreements += 1;
        }
    }
    assert_eq!(
        agreements,
        instances.len(),
        "windowed ranking disagreed with the oracle on {} of {} instances",
        instances.len() - agreements,
        instances.len()
    );
    finish(
        "tri-gram cloze vs brute-force oracle",
        started,
        Duration::from_secs(30),
    );
}

// ---------------------------------------------------------------------------

fn tok(index: usize, lemma: &str, pos: &str, sentence: usize) -> Token {
    Token {
        index,
        surface: lemma.to_string(),
        lemma: lemma.to_string(),
        pos: pos.to_string(),
        sentence_index: sentence,
    }
}

fn verb_frame(pred: usize, lemma: &str, args: Vec<ArgumentSpan>) -> PredicateFrame {
    PredicateFrame {
        predicate_index: pred,
        lemma: lemma.to_string(),
        pb_sense: format!("{lemma}.01"),
        vn_sense: None,
        args,
    }
}

fn rendered(seq: &SemSequence) -> Vec<String> {
    seq.tokens.iter().map(SemToken::rendered).collect()
}

#[test]
fn sequence_shape_conformance() {
    let started = Instant::now();

    // Frame chain: sentence 0 holds f1, a related marker, f2; sentence 1
    // holds f3. A second, unrelated connective must be gated out.
    let fc_doc = AnnotatedDocument {
        doc_id: "shape-fc".into(),
        tokens: vec![
            tok(0, "mary", "NNP", 0),
            tok(1, "sleep", "VBD", 0),
            tok(2, "but", "CC", 0),
            tok(3, "john", "NNP", 0),
            tok(4, "work", "VBD", 0),
            tok(5, ".", ".", 0),
            tok(6, "so", "CC", 1),
            tok(7, "they", "PRP", 1),
            tok(8, "rest", "VBD", 1),
            tok(9, ".", ".", 1),
        ],
        frames: vec![
            verb_frame(1, "sleep", vec![]),
            verb_frame(4, "work", vec![]),
            verb_frame(8, "rest", vec![]),
        ],
        connectives: vec![
            Connective {
                marker: "but".into(),
                span: TokenRange { start: 2, end: 2 },
                arg1: TokenRange { start: 0, end: 1 },
                arg2: TokenRange { start: 3, end: 5 },
            },
            // arg2 covers no frame: not frame-related, must not appear.
            Connective {
                marker: "so".into(),
                span: TokenRange { start: 6, end: 6 },
                arg1: TokenRange { start: 0, end: 5 },
                arg2: TokenRange { start: 7, end: 7 },
            },
        ],
        chains: vec![],
    };
    let built = document_sequences(
        &fc_doc,
        &MappingTable::new(),
        UnitOptions::default(),
        BuildOptions::default(),
    );
    let fc = built.frame_chain.expect("frame chain built");
    assert_eq!(
        rendered(&fc),
        vec!["sleep.01", "dis:but", "work.01", "o", "rest.01", "o"],
        "frame-chain schematic [f1, dis1, f2, o, f3, o]"
    );
    assert!(built.entity_chains.is_empty());

    // Entity-centered: three mentions of one entity across three frames,
    // a related marker between the first two, a singleton second chain.
    let ec_doc = AnnotatedDocument {
        doc_id: "shape-ec".into(),
        tokens: vec![
            tok(0, "mary", "NNP", 0),
            tok(1, "sleep", "VBD", 0),
            tok(2, "because", "CC", 0),
            tok(3, "she", "PRP", 0),
            tok(4, "work", "VBD", 0),
            tok(5, "alone", "RB", 0),
            tok(6, ".", ".", 0),
            tok(7, "she", "PRP", 1),
            tok(8, "rest", "VBD", 1),
            tok(9, "today", "NN", 1),
            tok(10, ".", ".", 1),
        ],
        frames: vec![
            verb_frame(
                1,
                "sleep",
                vec![ArgumentSpan {
                    label: "A0".into(),
                    start: 0,
                    end: 0,
                }],
            ),
            verb_frame(
                4,
                "work",
                vec![ArgumentSpan {
                    label: "A1".into(),
                    start: 3,
                    end: 3,
                }],
            ),
            verb_frame(
                8,
                "rest",
                vec![
                    ArgumentSpan {
                        label: "A0".into(),
                        start: 7,
                        end: 7,
                    },
                    ArgumentSpan {
                        label: "A1".into(),
                        start: 9,
                        end: 9,
                    },
                ],
            ),
        ],
        connectives: vec![Connective {
            marker: "because".into(),
            span: TokenRange { start: 2, end: 2 },
            arg1: TokenRange { start: 0, end: 1 },
            arg2: TokenRange { start: 3, end: 6 },
        }],
        chains: vec![
            vec![
                Mention {
                    start: 0,
                    end: 0,
                    head: 0,
                    chain_id: 0,
                },
                Mention {
                    start: 3,
                    end: 3,
                    head: 3,
                    chain_id: 0,
                },
                Mention {
                    start: 7,
                    end: 7,
                    head: 7,
                    chain_id: 0,
                },
            ],
            // Singleton chain: excluded from the output.
            vec![Mention {
                start: 9,
                end: 9,
                head: 9,
                chain_id: 1,
            }],
        ],
    };
    let built = document_sequences(
        &ec_doc,
        &MappingTable::new(),
        UnitOptions::default(),
        BuildOptions::default(),
    );
    assert_eq!(built.entity_chains.len(), 1, "singleton chain excluded");
    assert_eq!(
        rendered(&built.entity_chains[0]),
        vec!["sleep.01#A0", "dis:because", "work.01#A1", "rest.01#A0"],
        "entity-centered schematic [fa1, dis1, fa2, fa3]"
    );
    assert_eq!(built.entity_chains[0].kind, SequenceKind::EntityCentered);

    finish("sequence-shape conformance", started, Duration::from_secs(10));
}

// ---------------------------------------------------------------------------

#[test]
fn vocabulary_boundary() {
    let started = Instant::now();
    let seq = |token: &str| SemSequence {
        doc_id: "v".into(),
        kind: SequenceKind::FrameChain,
        chain_id: None,
        tokens: vec![SemToken::parse(token)],
    };
    let mut corpus: Vec<SemSequence> = Vec::new();
    corpus.extend(std::iter::repeat_with(|| seq("nineteen.01")).take(19));
    corpus.extend(std::iter::repeat_with(|| seq("twenty.01")).take(20));
    let vocab = build_vocabulary(&corpus, 20).unwrap();
    assert!(
        vocab.id_of("nineteen.01").is_none(),
        "frequency 19 must fall below the threshold"
    );
    assert_eq!(vocab.id_or_unk("nineteen.01"), vocab.unk_id());
    assert!(
        vocab.id_of("twenty.01").is_some(),
        "frequency 20 must be retained"
    );
    finish("vocabulary boundary", started, Duration::from_secs(5));
}

// ---------------------------------------------------------------------------

#[test]
fn framenet_mapping() {
    let started = Instant::now();
    let table = MappingTable::bundled();
    assert_eq!(
        map_to_framenet("place", "place.01", Some("9.1-2"), table),
        "Placing"
    );
    assert_eq!(
        map_to_framenet("put", "put.01", Some("9.1-2"), table),
        "Placing"
    );
    assert_eq!(
        map_to_framenet("sneeze", "sneeze.01", Some("40.1"), table),
        "sneeze.01"
    );
    assert_eq!(map_to_framenet("mumble", "mumble.01", None, table), "mumble.01");
    finish("FrameNet mapping", started, Duration::from_secs(5));
}

// ---------------------------------------------------------------------------

#[test]
fn feature_consistency() {
    let started = Instant::now();
    let seq = |tokens: &[&str]| SemSequence {
        doc_id: "f".into(),
        kind: SequenceKind::FrameChain,
        chain_id: None,
        tokens: tokens.iter().map(|t| SemToken::parse(t)).collect(),
    };
    let mut sequences = Vec::new();
    for marker in ["but", "because", "and"] {
        let dis = format!("dis:{marker}");
        for _ in 0..4 {
            sequences.push(seq(&["x.01", dis.as_str(), "y.01", "o"]));
            sequences.push(seq(&["y.01", "z.01", "o"]));
        }
    }
    let vocab = build_vocabulary(&sequences, 1).unwrap();
    let ids = encode_corpus(&sequences, &vocab);
    let model = train_ngram(&ids, 3, &vocab).unwrap();

    // Transform consistency to 1e-12.
    let record = discourse_features(&model, "fc-tri", "x.01", "y.01", "but").unwrap();
    check_transforms(&record);

    // q_c normalized over the marker set to 1e-9.
    let distribution = marker_distribution(&model, "x.01", "y.01").unwrap();
    let total: f64 = distribution.iter().map(|(_, q)| q).sum();
    assert!((total - 1.0).abs() < 1e-9, "marker mass {total}");

    // Tri-gram q_c against the brute-force oracle: substitute every
    // marker into [f1, d, f2], score the whole virtual sequence, and
    // normalize.
    let f1 = vocab.id_of("x.01").unwrap();
    let f2 = vocab.id_of("y.01").unwrap();
    let weights: Vec<(String, f64)> = ["but", "because", "and"]
        .iter()
        .map(|marker| {
            let d = vocab.id_of(&format!("dis:{marker}")).unwrap();
            let logp = model.sequence_logprob(&[f1, d, f2]);
            (marker.to_string(), logp.exp())
        })
        .collect();
    let z: f64 = weights.iter().map(|(_, w)| w).sum();
    for (marker, weight) in &weights {
        let record = discourse_features(&model, "fc-tri", "x.01", "y.01", marker).unwrap();
        let oracle = weight / z;
        assert!(
            (record.p - oracle).abs() < 1e-9,
            "{marker}: q_c {} vs oracle {oracle}",
            record.p
        );
    }
    finish("feature consistency", started, Duration::from_secs(10));
}

fn check_transforms(record: &FeatureRecord) {
    assert!(record.p > 0.0 && record.p <= 1.0);
    assert!((record.p_squared - record.p * record.p).abs() < 1e-12);
    assert!((record.p_sqrt * record.p_sqrt - record.p).abs() < 1e-12);
    assert!((record.p_inverse * record.p - 1.0).abs() < 1e-9 || record.p_inverse == 1e6);
}

// ---------------------------------------------------------------------------

#[test]
fn end_to_end_smoke() {
    let started = Instant::now();
    let corpus_path = Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/mini_corpus.jsonl"
    ));
    assert!(corpus_path.exists(), "bundled mini corpus present");

    let run_pipeline = |dir: &Path| {
        std::fs::copy(corpus_path, dir.join("corpus.jsonl")).unwrap();
        std::fs::write(
            dir.join("queries.jsonl"),
            "{\"f1\":\"Placing\",\"f2\":\"Ingestion\",\"dis\":\"but\"}\n",
        )
        .unwrap();
        let run = |args: &[&str]| {
            let out = Command::new(env!("CARGO_BIN_EXE_semlm"))
                .current_dir(dir)
                .args(args)
                .output()
                .expect("binary runs");
            assert!(
                out.status.success(),
                "semlm {args:?} failed:\n{}",
                String::from_utf8_lossy(&out.stderr)
            );
        };
        run(&["sequences", "--input", "corpus.jsonl", "--kind", "fc", "--out", "run"]);
        run(&["vocab", "--input", "run/sequences-fc.txt", "--min-count", "5", "--out", "run"]);
        run(&["train", "--input", "run/sequences-fc.txt", "--model", "tri", "--min-count", "5", "--out", "run"]);
        run(&[
            "train", "--input", "run/sequences-fc.txt", "--model", "lb", "--min-count", "5",
            "--epochs", "3", "--out", "run",
        ]);
        run(&[
            "perplexity", "--input", "run/sequences-fc.txt", "--model", "tri", "--model", "lb",
            "--out", "run",
        ]);
        run(&[
            "cloze", "--input", "run/sequences-fc.txt", "--model", "tri", "--seed", "7", "--out",
            "run",
        ]);
        run(&[
            "features", "--input", "queries.jsonl", "--model", "lb", "--kind", "fc", "--out",
            "run",
        ]);
    };

    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    run_pipeline(first.path());
    run_pipeline(second.path());

    let artifacts = [
        "sequences-fc.txt",
        "vocab-fc.tsv",
        "model-fc-tri.lm",
        "model-fc-lb.lm",
        "embeddings-fc-lb.txt",
        "perplexity-fc.json",
        "perplexity-fc.txt",
        "cloze-fc-tri.json",
        "cloze-fc-tri.txt",
        "features-fc-lb.jsonl",
        "sequences-fc.manifest.json",
        "vocab-fc.manifest.json",
        "train-fc-tri.manifest.json",
        "train-fc-lb.manifest.json",
        "perplexity-fc.manifest.json",
        "cloze-fc-tri.manifest.json",
        "features-fc-lb.manifest.json",
    ];
    for name in artifacts {
        let a = std::fs::read(first.path().join("run").join(name))
            .unwrap_or_else(|_| panic!("{name} missing"));
        let b = std::fs::read(second.path().join("run").join(name)).unwrap();
        assert_eq!(a, b, "{name} is not byte-reproducible");
    }
    finish("end-to-end smoke", started, Duration::from_secs(60));
}
