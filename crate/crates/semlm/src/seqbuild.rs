//! Semantic sequence construction.
//!
//! A frame-chain (FC) sequence covers one whole document: every frame
//! symbol in textual order, frame-related discourse markers interleaved at
//! their positions, and a period token after the last frame of every
//! sentence that contains frames. Entity-centered (EC) sequences cover one
//! coreference chain each: every aligned mention rendered as its
//! frame#argument-label token, with frame-related markers interleaved and
//! no period tokens.

use std::fmt;
use std::io::{BufRead, Write};

use crate::annotations::{AnnotatedDocument, Connective};
use crate::unitgen::{
    align_mention_to_argument, generate_units, FrameSymbol, MappingTable, MentionAlignment,
    PlacedSymbol, UnitOptions,
};
use crate::vocab::TokenKind;
use crate::{Error, Result};

/// One token of a semantic sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemToken {
    /// A (possibly compound) frame symbol; frame-chain sequences only.
    Frame(FrameSymbol),
    /// A frame symbol plus the argument label a mention fills;
    /// entity-centered sequences only.
    FrameArg(FrameSymbol, String),
    /// A frame-related discourse marker.
    Disc(String),
    /// Sentence period; frame-chain sequences only.
    Period,
    /// Unknown-token special (vocabulary artifact, never built from text).
    Unk,
    /// End-of-sequence special (appended at encoding time).
    Eos,
}

impl SemToken {
    /// Canonical dump form: `Frame`, `Frame#Arg`, `dis:<marker>`, `o`.
    /// Spaces inside multiword markers become underscores.
    pub fn rendered(&self) -> String {
        match self {
            SemToken::Frame(sym) => sym.rendered().to_string(),
            SemToken::FrameArg(sym, label) => format!("{}#{}", sym.rendered(), label),
            SemToken::Disc(marker) => format!("dis:{}", marker.replace(' ', "_")),
            SemToken::Period => "o".to_string(),
            SemToken::Unk => "UNK".to_string(),
            SemToken::Eos => "EOS".to_string(),
        }
    }

    pub fn kind(&self) -> TokenKind {
        match self {
            SemToken::Frame(_) => TokenKind::FrameSen,
            SemToken::FrameArg(..) => TokenKind::FrameArg,
            SemToken::Disc(_) => TokenKind::Conn,
            SemToken::Period => TokenKind::Per,
            SemToken::Unk => TokenKind::Unk,
            SemToken::Eos => TokenKind::Eos,
        }
    }

    /// Inverse of [`SemToken::rendered`]. File-parsed frame symbols are
    /// opaque (component structure is not recovered).
    pub fn parse(s: &str) -> SemToken {
        match s {
            "o" => SemToken::Period,
            "UNK" => SemToken::Unk,
            "EOS" => SemToken::Eos,
            _ => {
                if let Some(marker) = s.strip_prefix("dis:") {
                    SemToken::Disc(marker.replace('_', " "))
                } else if let Some(pos) = s.rfind('#') {
                    SemToken::FrameArg(
                        FrameSymbol::from_rendered(&s[..pos]),
                        s[pos + 1..].to_string(),
                    )
                } else {
                    SemToken::Frame(FrameSymbol::from_rendered(s))
                }
            }
        }
    }
}

impl fmt::Display for SemToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered())
    }
}

/// Which of the two sequence models a sequence belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SequenceKind {
    #[serde(rename = "fc")]
    FrameChain,
    #[serde(rename = "ec")]
    EntityCentered,
}

impl SequenceKind {
    pub fn label(self) -> &'static str {
        match self {
            SequenceKind::FrameChain => "fc",
            SequenceKind::EntityCentered => "ec",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fc" => Some(SequenceKind::FrameChain),
            "ec" => Some(SequenceKind::EntityCentered),
            _ => None,
        }
    }
}

/// One ordered semantic token chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemSequence {
    pub doc_id: String,
    pub kind: SequenceKind,
    /// Chain id for entity-centered sequences.
    pub chain_id: Option<usize>,
    pub tokens: Vec<SemToken>,
}

impl SemSequence {
    /// Space-joined rendered tokens, the dump line format.
    pub fn render_line(&self) -> String {
        self.tokens
            .iter()
            .map(SemToken::rendered)
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Header comment line carrying doc id, kind and chain id.
    pub fn header_line(&self) -> String {
        match self.chain_id {
            Some(chain) => format!("# doc={} kind={} chain={}", self.doc_id, self.kind.label(), chain),
            None => format!("# doc={} kind={}", self.doc_id, self.kind.label()),
        }
    }
}

/// A connective is frame-related when both of its arguments contain the
/// predicate index of at least one frame placed in the current sequence.
pub fn is_frame_related(conn: &Connective, placed_predicate_indices: &[usize]) -> bool {
    let hit = |range: crate::annotations::TokenRange| {
        placed_predicate_indices.iter().any(|&p| range.contains(p))
    };
    hit(conn.arg1) && hit(conn.arg2)
}

/// Sequence-construction switches; `include_discourse: false` is the
/// `w/o DIS` ablation that drops every marker token.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub include_discourse: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            include_discourse: true,
        }
    }
}

/// Positioned item used while interleaving markers with the base chain.
enum ChainItem {
    Frame(FrameSymbol),
    FrameArg(FrameSymbol, String),
    Period,
}

/// Emit the base chain with each marker placed directly before its target
/// item; markers queued on one target keep their textual order.
fn interleave(base: Vec<ChainItem>, markers: Vec<(usize, String)>) -> Vec<SemToken> {
    let mut queued: Vec<Vec<String>> = vec![Vec::new(); base.len()];
    for (target, marker) in markers {
        queued[target].push(marker);
    }
    let mut tokens = Vec::with_capacity(base.len());
    for (item, pending) in base.into_iter().zip(queued) {
        for marker in pending {
            tokens.push(SemToken::Disc(marker));
        }
        tokens.push(match item {
            ChainItem::Frame(sym) => SemToken::Frame(sym),
            ChainItem::FrameArg(sym, label) => SemToken::FrameArg(sym, label),
            ChainItem::Period => SemToken::Period,
        });
    }
    tokens
}

/// Build the document's single frame-chain sequence; `None` when the
/// document has no frames.
pub fn build_frame_chain(
    doc: &AnnotatedDocument,
    placed: &[PlacedSymbol],
    options: BuildOptions,
) -> Option<SemSequence> {
    if placed.is_empty() {
        return None;
    }

    // Base chain: frames in textual order, a period after the last frame
    // of every sentence that contains frames.
    let mut base: Vec<ChainItem> = Vec::new();
    let mut period_of_sentence: Vec<(usize, usize)> = Vec::new(); // (sentence, base index)
    let mut frame_positions: Vec<(usize, usize)> = Vec::new(); // (anchor, base index)
    for (i, symbol) in placed.iter().enumerate() {
        if i > 0 && placed[i - 1].sentence_index != symbol.sentence_index {
            period_of_sentence.push((placed[i - 1].sentence_index, base.len()));
            base.push(ChainItem::Period);
        }
        frame_positions.push((symbol.anchor(), base.len()));
        base.push(ChainItem::Frame(symbol.symbol.clone()));
    }
    period_of_sentence.push((placed[placed.len() - 1].sentence_index, base.len()));
    base.push(ChainItem::Period);

    let mut markers: Vec<(usize, String)> = Vec::new();
    if options.include_discourse {
        let all_predicates: Vec<usize> = placed
            .iter()
            .flat_map(|p| p.predicate_indices.iter().copied())
            .collect();
        for conn in &doc.connectives {
            if !is_frame_related(conn, &all_predicates) {
                continue;
            }
            let start = conn.span.start;
            let own_sentence = doc.sentence_of(start);
            let last_anchor_in_sentence = placed
                .iter()
                .filter(|p| p.sentence_index == own_sentence)
                .map(PlacedSymbol::anchor)
                .max();
            let target = match last_anchor_in_sentence {
                // The marker trails its own sentence's frames: it belongs
                // before that sentence's period.
                Some(last) if start > last => {
                    period_of_sentence
                        .iter()
                        .find(|(s, _)| *s == own_sentence)
                        .map(|&(_, idx)| idx)
                }
                _ => None,
            }
            .or_else(|| {
                // Otherwise it precedes the first frame placed after it.
                frame_positions
                    .iter()
                    .find(|&&(anchor, _)| anchor > start)
                    .map(|&(_, idx)| idx)
            })
            // No following frame at all: keep it inside the final sentence.
            .unwrap_or(base.len() - 1);
            markers.push((target, conn.marker.clone()));
        }
    }

    Some(SemSequence {
        doc_id: doc.doc_id.clone(),
        kind: SequenceKind::FrameChain,
        chain_id: None,
        tokens: interleave(base, markers),
    })
}

/// Build one entity-centered sequence per coreference chain with at least
/// two aligned mentions. `alignments` mirrors `doc.chains` and carries one
/// entry per mention, as produced by
/// [`align_mention_to_argument`](crate::unitgen::align_mention_to_argument).
pub fn build_entity_chains(
    doc: &AnnotatedDocument,
    frame_symbols: &[FrameSymbol],
    alignments: &[Vec<Option<MentionAlignment>>],
    options: BuildOptions,
) -> Vec<SemSequence> {
    let mut sequences = Vec::new();
    for (chain_id, (chain, chain_alignments)) in doc.chains.iter().zip(alignments).enumerate() {
        let aligned: Vec<(usize, &MentionAlignment)> = chain
            .iter()
            .zip(chain_alignments)
            .filter_map(|(mention, alignment)| {
                alignment.as_ref().map(|a| (mention.start, a))
            })
            .collect();
        if aligned.len() < 2 {
            continue; // singleton (or unalignable) chains are excluded
        }

        let mut base: Vec<ChainItem> = Vec::new();
        for (_, alignment) in &aligned {
            base.push(ChainItem::FrameArg(
                frame_symbols[alignment.frame_index].clone(),
                alignment.label.clone(),
            ));
        }

        let mut markers: Vec<(usize, String)> = Vec::new();
        if options.include_discourse {
            // Relatedness is judged against the chain's own hosting frames.
            let hosts: Vec<usize> = {
                let mut h: Vec<usize> = aligned
                    .iter()
                    .map(|(_, a)| doc.frames[a.frame_index].predicate_index)
                    .collect();
                h.sort_unstable();
                h.dedup();
                h
            };
            for conn in &doc.connectives {
                if !is_frame_related(conn, &hosts) {
                    continue;
                }
                let target = aligned
                    .iter()
                    .position(|(start, _)| *start > conn.span.start);
                // Markers past the last mention are dropped rather than
                // dangling after the final fa token.
                if let Some(idx) = target {
                    markers.push((idx, conn.marker.clone()));
                }
            }
        }

        sequences.push(SemSequence {
            doc_id: doc.doc_id.clone(),
            kind: SequenceKind::EntityCentered,
            chain_id: Some(chain_id),
            tokens: interleave(base, markers),
        });
    }
    sequences
}

/// Frame-chain plus entity-centered sequences for one document.
#[derive(Debug, Clone, Default)]
pub struct DocumentSequences {
    pub frame_chain: Option<SemSequence>,
    pub entity_chains: Vec<SemSequence>,
}

/// Full per-document pipeline: unit generation, then both sequence models.
pub fn document_sequences(
    doc: &AnnotatedDocument,
    table: &MappingTable,
    unit_options: UnitOptions,
    build_options: BuildOptions,
) -> DocumentSequences {
    let units = generate_units(doc, table, unit_options);
    let alignments: Vec<Vec<Option<MentionAlignment>>> = doc
        .chains
        .iter()
        .map(|chain| {
            chain
                .iter()
                .map(|m| align_mention_to_argument(m, &doc.frames))
                .collect()
        })
        .collect();
    DocumentSequences {
        frame_chain: build_frame_chain(doc, &units.placed, build_options),
        entity_chains: build_entity_chains(doc, &units.frame_symbols, &alignments, build_options),
    }
}

// ---------------------------------------------------------------------------
// Dump format

/// Write sequences in the dump format: a `#` header line then the
/// space-joined tokens, per sequence.
pub fn dump_sequences<W: Write>(sequences: &[SemSequence], mut w: W) -> std::io::Result<()> {
    for seq in sequences {
        writeln!(w, "{}", seq.header_line())?;
        writeln!(w, "{}", seq.render_line())?;
    }
    Ok(())
}

/// Dump to an in-memory string (also the checksum base for vocabularies).
pub fn dump_sequences_to_string(sequences: &[SemSequence]) -> String {
    let mut buf = Vec::new();
    dump_sequences(sequences, &mut buf).expect("in-memory write cannot fail");
    String::from_utf8(buf).expect("dump is valid UTF-8")
}

/// Parse a sequence dump back into sequences.
pub fn parse_sequences<R: BufRead>(reader: R) -> Result<Vec<SemSequence>> {
    let mut sequences = Vec::new();
    let mut header: Option<(String, SequenceKind, Option<usize>)> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let mut doc_id = None;
            let mut kind = None;
            let mut chain = None;
            for field in rest.split_whitespace() {
                if let Some(v) = field.strip_prefix("doc=") {
                    doc_id = Some(v.to_string());
                } else if let Some(v) = field.strip_prefix("kind=") {
                    kind = SequenceKind::parse(v);
                } else if let Some(v) = field.strip_prefix("chain=") {
                    chain = v.parse::<usize>().ok();
                }
            }
            match (doc_id, kind) {
                (Some(d), Some(k)) => header = Some((d, k, chain)),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "header needs doc= and kind= fields".into(),
                    })
                }
            }
            continue;
        }
        let (doc_id, kind, chain_id) = header.clone().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "sequence line without a preceding # header".into(),
        })?;
        let tokens: Vec<SemToken> = line.split_whitespace().map(SemToken::parse).collect();
        if tokens.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty sequence".into(),
            });
        }
        sequences.push(SemSequence {
            doc_id,
            kind,
            chain_id,
            tokens,
        });
        header = None;
    }
    Ok(sequences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotations::{ArgumentSpan, Mention, PredicateFrame, Token, TokenRange};
    use crate::unitgen::FrameComponent;

    fn tok(i: usize, lemma: &str, pos: &str, sentence: usize) -> Token {
        Token {
            index: i,
            surface: lemma.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            sentence_index: sentence,
        }
    }

    fn frame(pred: usize, lemma: &str) -> PredicateFrame {
        PredicateFrame {
            predicate_index: pred,
            lemma: lemma.into(),
            pb_sense: format!("{lemma}.01"),
            vn_sense: None,
            args: vec![],
        }
    }

    fn symbol(base: &str, pred: usize, sentence: usize) -> PlacedSymbol {
        PlacedSymbol {
            symbol: FrameSymbol::single(FrameComponent::plain(base)),
            predicate_indices: vec![pred],
            sentence_index: sentence,
        }
    }

    fn rendered(seq: &SemSequence) -> Vec<String> {
        seq.tokens.iter().map(SemToken::rendered).collect()
    }

    /// Two sentences; sentence 0 holds f1 and f2 with a related "but"
    /// between them, sentence 1 holds f3.
    fn two_sentence_doc() -> (AnnotatedDocument, Vec<PlacedSymbol>) {
        let tokens = vec![
            tok(0, "mary", "NNP", 0),
            tok(1, "sleep", "VBD", 0),   // f1
            tok(2, "but", "CC", 0),      // connective
            tok(3, "john", "NNP", 0),
            tok(4, "work", "VBD", 0),    // f2
            tok(5, ".", ".", 0),
            tok(6, "they", "PRP", 1),
            tok(7, "rest", "VBD", 1),    // f3
            tok(8, ".", ".", 1),
        ];
        let doc = AnnotatedDocument {
            doc_id: "d".into(),
            tokens,
            frames: vec![frame(1, "sleep"), frame(4, "work"), frame(7, "rest")],
            connectives: vec![Connective {
                marker: "but".into(),
                span: TokenRange { start: 2, end: 2 },
                arg1: TokenRange { start: 0, end: 1 },
                arg2: TokenRange { start: 3, end: 5 },
            }],
            chains: vec![],
        };
        let placed = vec![
            symbol("sleep.01", 1, 0),
            symbol("work.01", 4, 0),
            symbol("rest.01", 7, 1),
        ];
        (doc, placed)
    }

    #[test]
    fn frame_chain_matches_schematic_shape() {
        let (doc, placed) = two_sentence_doc();
        let seq = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        assert_eq!(
            rendered(&seq),
            vec!["sleep.01", "dis:but", "work.01", "o", "rest.01", "o"]
        );
    }

    #[test]
    fn single_frame_document_gets_frame_then_period() {
        let tokens = vec![tok(0, "it", "PRP", 0), tok(1, "rain", "VBD", 0)];
        let doc = AnnotatedDocument {
            doc_id: "d".into(),
            tokens,
            frames: vec![frame(1, "rain")],
            connectives: vec![],
            chains: vec![],
        };
        let placed = vec![symbol("rain.01", 1, 0)];
        let seq = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        assert_eq!(rendered(&seq), vec!["rain.01", "o"]);
    }

    #[test]
    fn unrelated_connective_is_omitted() {
        let (mut doc, placed) = two_sentence_doc();
        // arg2 no longer covers any frame predicate.
        doc.connectives[0].arg2 = TokenRange { start: 3, end: 3 };
        let seq = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        assert_eq!(
            rendered(&seq),
            vec!["sleep.01", "work.01", "o", "rest.01", "o"]
        );
    }

    #[test]
    fn empty_document_yields_no_sequence() {
        let doc = AnnotatedDocument {
            doc_id: "d".into(),
            tokens: vec![tok(0, "hi", "UH", 0)],
            frames: vec![],
            connectives: vec![],
            chains: vec![],
        };
        assert!(build_frame_chain(&doc, &[], BuildOptions::default()).is_none());
    }

    #[test]
    fn sentence_opening_marker_lands_after_the_period() {
        // "however" opens sentence 1: [f1, o, dis, f2, o].
        let tokens = vec![
            tok(0, "mary", "NNP", 0),
            tok(1, "sleep", "VBD", 0),
            tok(2, ".", ".", 0),
            tok(3, "however", "RB", 1),
            tok(4, "john", "NNP", 1),
            tok(5, "work", "VBD", 1),
            tok(6, ".", ".", 1),
        ];
        let doc = AnnotatedDocument {
            doc_id: "d".into(),
            tokens,
            frames: vec![frame(1, "sleep"), frame(5, "work")],
            connectives: vec![Connective {
                marker: "however".into(),
                span: TokenRange { start: 3, end: 3 },
                arg1: TokenRange { start: 0, end: 2 },
                arg2: TokenRange { start: 3, end: 6 },
            }],
            chains: vec![],
        };
        let placed = vec![symbol("sleep.01", 1, 0), symbol("work.01", 5, 1)];
        let seq = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        assert_eq!(
            rendered(&seq),
            vec!["sleep.01", "o", "dis:however", "work.01", "o"]
        );
    }

    #[test]
    fn sentence_trailing_marker_lands_before_the_period() {
        // "though" trails sentence 0 after its last frame: [f1, dis, o, f2, o].
        let tokens = vec![
            tok(0, "mary", "NNP", 0),
            tok(1, "sleep", "VBD", 0),
            tok(2, "though", "RB", 0),
            tok(3, ".", ".", 0),
            tok(4, "john", "NNP", 1),
            tok(5, "work", "VBD", 1),
            tok(6, ".", ".", 1),
        ];
        let doc = AnnotatedDocument {
            doc_id: "d".into(),
            tokens,
            frames: vec![frame(1, "sleep"), frame(5, "work")],
            connectives: vec![Connective {
                marker: "though".into(),
                span: TokenRange { start: 2, end: 2 },
                arg1: TokenRange { start: 4, end: 6 },
                arg2: TokenRange { start: 0, end: 1 },
            }],
            chains: vec![],
        };
        let placed = vec![symbol("sleep.01", 1, 0), symbol("work.01", 5, 1)];
        let seq = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        assert_eq!(
            rendered(&seq),
            vec!["sleep.01", "dis:though", "o", "work.01", "o"]
        );
    }

    #[test]
    fn no_discourse_option_drops_all_markers() {
        let (doc, placed) = two_sentence_doc();
        let seq = build_frame_chain(
            &doc,
            &placed,
            BuildOptions {
                include_discourse: false,
            },
        )
        .unwrap();
        assert!(seq.tokens.iter().all(|t| !matches!(t, SemToken::Disc(_))));
    }

    #[test]
    fn relatedness_requires_both_arguments() {
        let conn = Connective {
            marker: "but".into(),
            span: TokenRange { start: 2, end: 2 },
            arg1: TokenRange { start: 0, end: 1 },
            arg2: TokenRange { start: 3, end: 5 },
        };
        assert!(is_frame_related(&conn, &[1, 4]));
        assert!(!is_frame_related(&conn, &[1])); // nothing in arg2
        assert!(!is_frame_related(&conn, &[4])); // nothing in arg1
        assert!(!is_frame_related(&conn, &[]));
    }

    /// Chain across two frames with a related connective between mentions.
    fn ec_doc() -> AnnotatedDocument {
        let tokens = vec![
            tok(0, "mary", "NNP", 0),   // mention 1 (head 0)
            tok(1, "sleep", "VBD", 0),  // f1, A0 = [0,0]
            tok(2, "because", "CC", 0), // connective
            tok(3, "she", "PRP", 0),    // mention 2 (head 3)
            tok(4, "work", "VBD", 0),   // f2, A0 = [3,3]
            tok(5, ".", ".", 0),
        ];
        AnnotatedDocument {
            doc_id: "d".into(),
            tokens,
            frames: vec![
                PredicateFrame {
                    predicate_index: 1,
                    lemma: "sleep".into(),
                    pb_sense: "sleep.01".into(),
                    vn_sense: None,
                    args: vec![ArgumentSpan {
                        label: "A0".into(),
                        start: 0,
                        end: 0,
                    }],
                },
                PredicateFrame {
                    predicate_index: 4,
                    lemma: "work".into(),
                    pb_sense: "work.01".into(),
                    vn_sense: None,
                    args: vec![ArgumentSpan {
                        label: "A0".into(),
                        start: 3,
                        end: 3,
                    }],
                },
            ],
            connectives: vec![Connective {
                marker: "because".into(),
                span: TokenRange { start: 2, end: 2 },
                arg1: TokenRange { start: 0, end: 1 },
                arg2: TokenRange { start: 3, end: 5 },
            }],
            chains: vec![vec![
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
            ]],
        }
    }

    fn units_of(doc: &AnnotatedDocument) -> (Vec<FrameSymbol>, Vec<Vec<Option<MentionAlignment>>>) {
        let units = generate_units(doc, &MappingTable::new(), UnitOptions::default());
        let alignments = doc
            .chains
            .iter()
            .map(|chain| {
                chain
                    .iter()
                    .map(|m| align_mention_to_argument(m, &doc.frames))
                    .collect()
            })
            .collect();
        (units.frame_symbols, alignments)
    }

    #[test]
    fn entity_chain_matches_schematic_shape() {
        let doc = ec_doc();
        let (symbols, alignments) = units_of(&doc);
        let seqs = build_entity_chains(&doc, &symbols, &alignments, BuildOptions::default());
        assert_eq!(seqs.len(), 1);
        assert_eq!(
            rendered(&seqs[0]),
            vec!["sleep.01#A0", "dis:because", "work.01#A0"]
        );
        assert_eq!(seqs[0].chain_id, Some(0));
        assert!(seqs[0].tokens.iter().all(|t| !matches!(t, SemToken::Period)));
    }

    #[test]
    fn single_aligned_mention_chain_is_excluded() {
        let mut doc = ec_doc();
        // Second mention's head no longer falls in any argument span.
        doc.chains[0][1].start = 5;
        doc.chains[0][1].head = 5;
        doc.chains[0][1].end = 5;
        let (symbols, alignments) = units_of(&doc);
        let seqs = build_entity_chains(&doc, &symbols, &alignments, BuildOptions::default());
        assert!(seqs.is_empty());
    }

    #[test]
    fn two_arguments_of_one_frame_both_render() {
        let tokens = vec![
            tok(0, "mary", "NNP", 0),
            tok(1, "see", "VBD", 0),
            tok(2, "herself", "PRP", 0),
            tok(3, ".", ".", 0),
        ];
        let doc = AnnotatedDocument {
            doc_id: "d".into(),
            tokens,
            frames: vec![PredicateFrame {
                predicate_index: 1,
                lemma: "see".into(),
                pb_sense: "see.01".into(),
                vn_sense: None,
                args: vec![
                    ArgumentSpan {
                        label: "A0".into(),
                        start: 0,
                        end: 0,
                    },
                    ArgumentSpan {
                        label: "A1".into(),
                        start: 2,
                        end: 2,
                    },
                ],
            }],
            connectives: vec![],
            chains: vec![vec![
                Mention {
                    start: 0,
                    end: 0,
                    head: 0,
                    chain_id: 0,
                },
                Mention {
                    start: 2,
                    end: 2,
                    head: 2,
                    chain_id: 0,
                },
            ]],
        };
        let (symbols, alignments) = units_of(&doc);
        let seqs = build_entity_chains(&doc, &symbols, &alignments, BuildOptions::default());
        assert_eq!(rendered(&seqs[0]), vec!["see.01#A0", "see.01#A1"]);
    }

    #[test]
    fn ec_relatedness_requires_both_sides_to_host_chain_frames() {
        // The connective's arg2 covers a frame, but not one hosting a
        // mention of this chain.
        let mut doc = ec_doc();
        doc.frames[1].args[0] = ArgumentSpan {
            label: "A0".into(),
            start: 5,
            end: 5,
        };
        let (symbols, alignments) = units_of(&doc);
        // Chain mention 2 now aligns nowhere; force both mentions onto f1
        // so the chain survives with hosts = {1} only.
        let mut alignments = alignments;
        alignments[0][1] = Some(MentionAlignment {
            frame_index: 0,
            label: "A0".into(),
        });
        let _ = symbols;
        let seqs = build_entity_chains(&doc, &symbols, &alignments, BuildOptions::default());
        assert_eq!(seqs.len(), 1);
        // arg2 of "because" holds no hosting frame, so no marker appears.
        assert_eq!(rendered(&seqs[0]), vec!["sleep.01#A0", "sleep.01#A0"]);
    }

    #[test]
    fn strip_properties_hold() {
        let (doc, placed) = two_sentence_doc();
        let seq = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        let frames_only: Vec<String> = seq
            .tokens
            .iter()
            .filter_map(|t| match t {
                SemToken::Frame(sym) => Some(sym.rendered().to_string()),
                _ => None,
            })
            .collect();
        assert_eq!(frames_only, vec!["sleep.01", "work.01", "rest.01"]);
        let periods = seq
            .tokens
            .iter()
            .filter(|t| matches!(t, SemToken::Period))
            .count();
        assert_eq!(periods, 2); // two sentences contain frames
    }

    #[test]
    fn build_is_deterministic() {
        let (doc, placed) = two_sentence_doc();
        let a = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        let b = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        assert_eq!(
            dump_sequences_to_string(&[a]),
            dump_sequences_to_string(&[b])
        );
    }

    #[test]
    fn dump_and_parse_round_trip() {
        let (doc, placed) = two_sentence_doc();
        let fc = build_frame_chain(&doc, &placed, BuildOptions::default()).unwrap();
        let ec_doc = ec_doc();
        let (symbols, alignments) = units_of(&ec_doc);
        let mut seqs =
            build_entity_chains(&ec_doc, &symbols, &alignments, BuildOptions::default());
        seqs.insert(0, fc);

        let dumped = dump_sequences_to_string(&seqs);
        let parsed = parse_sequences(std::io::Cursor::new(dumped.clone())).unwrap();
        assert_eq!(parsed.len(), seqs.len());
        for (p, s) in parsed.iter().zip(&seqs) {
            assert_eq!(p.doc_id, s.doc_id);
            assert_eq!(p.kind, s.kind);
            assert_eq!(p.chain_id, s.chain_id);
            assert_eq!(p.render_line(), s.render_line());
        }
        // Re-dumping the parsed sequences is byte-identical.
        assert_eq!(dump_sequences_to_string(&parsed), dumped);
    }

    #[test]
    fn multiword_marker_round_trips_through_underscores() {
        let t = SemToken::Disc("as a result".into());
        assert_eq!(t.rendered(), "dis:as_a_result");
        assert_eq!(SemToken::parse("dis:as_a_result"), t);
    }
}
