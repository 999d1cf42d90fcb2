//! Annotated-document input format.
//!
//! Documents arrive as UTF-8 JSON Lines, one document object per line,
//! carrying the upstream annotations the pipeline consumes: a token stream
//! with lemmas and part-of-speech tags, disambiguated predicate frames with
//! labeled argument spans, explicit discourse connectives with their two
//! argument ranges, and coreference chains. All spans refer to 0-based
//! document-global token indices, inclusive on both ends.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;


use crate::{Error, Result};

/// Bundled closed list of explicit discourse markers (one per line).
pub const DISCOURSE_MARKERS_TXT: &str = include_str!("../data/discourse_markers.txt");

fn marker_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        DISCOURSE_MARKERS_TXT
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    })
}

/// All canonical discourse markers, in file order.
pub fn discourse_markers() -> Vec<&'static str> {
    DISCOURSE_MARKERS_TXT
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect()
}

/// Whether `marker` is a member of the bundled closed marker list.
pub fn is_known_marker(marker: &str) -> bool {
    marker_set().contains(marker)
}

/// One token of the document stream all spans refer to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 0-based position within the document.
    pub index: usize,
    pub surface: String,
    pub lemma: String,
    /// Part-of-speech tag (Penn Treebank style, e.g. `VBD`, `IN`, `RP`).
    pub pos: String,
    /// 0-based sentence id, non-decreasing along the stream.
    pub sentence_index: usize,
}

/// A labeled argument span of a predicate frame, inclusive token range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgumentSpan {
    /// Role label, e.g. `A0`, `A1`, `AM-NEG`, `AM-PRD`.
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl ArgumentSpan {
    pub fn contains(&self, token_index: usize) -> bool {
        self.start <= token_index && token_index <= self.end
    }
}

/// A disambiguated predicate and its argument participants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateFrame {
    pub predicate_index: usize,
    pub lemma: String,
    /// PropBank sense, `lemma.NN` (e.g. `place.01`).
    pub pb_sense: String,
    /// VerbNet sense key when known (e.g. `9.1-2`).
    pub vn_sense: Option<String>,
    pub args: Vec<ArgumentSpan>,
}

impl PredicateFrame {
    /// First argument span with the given label.
    pub fn arg(&self, label: &str) -> Option<&ArgumentSpan> {
        self.args.iter().find(|a| a.label == label)
    }
}

/// Inclusive token range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenRange {
    pub start: usize,
    pub end: usize,
}

impl TokenRange {
    pub fn contains(&self, token_index: usize) -> bool {
        self.start <= token_index && token_index <= self.end
    }
}

/// An explicit discourse connective with its two argument ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connective {
    /// Canonical marker string from the bundled closed list.
    pub marker: String,
    /// Token range of the connective surface itself.
    pub span: TokenRange,
    pub arg1: TokenRange,
    pub arg2: TokenRange,
}

/// A coreference mention; `chain_id` groups mentions of one entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub head: usize,
    pub chain_id: usize,
}

/// One ingested document with all annotations attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedDocument {
    pub doc_id: String,
    pub tokens: Vec<Token>,
    /// Frames ordered by `predicate_index`, no two sharing an index.
    pub frames: Vec<PredicateFrame>,
    /// Connectives ordered by span start.
    pub connectives: Vec<Connective>,
    /// Mention lists grouped by chain id; `chains[i]` holds chain `i`,
    /// mentions in canonical (start, end) order.
    pub chains: Vec<Vec<Mention>>,
}

impl AnnotatedDocument {
    pub fn sentence_of(&self, token_index: usize) -> usize {
        self.tokens[token_index].sentence_index
    }
}

// ---------------------------------------------------------------------------
// Wire schema

mod schema {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    pub struct Doc {
        pub doc_id: String,
        pub tokens: Vec<Tok>,
        pub frames: Vec<Frame>,
        pub connectives: Vec<Conn>,
        pub chains: Vec<Vec<Ment>>,
    }

    #[derive(Serialize, Deserialize)]
    pub struct Tok {
        pub surface: String,
        pub lemma: String,
        pub pos: String,
        pub sentence: usize,
    }

    #[derive(Serialize, Deserialize)]
    pub struct Frame {
        pub predicate: usize,
        pub lemma: String,
        pub pb_sense: String,
        pub vn_sense: Option<String>,
        pub args: Vec<Arg>,
    }

    #[derive(Serialize, Deserialize)]
    pub struct Arg {
        pub label: String,
        pub start: usize,
        pub end: usize,
    }

    #[derive(Serialize, Deserialize)]
    pub struct Conn {
        pub marker: String,
        pub start: usize,
        pub end: usize,
        pub arg1: [usize; 2],
        pub arg2: [usize; 2],
    }

    #[derive(Serialize, Deserialize)]
    pub struct Ment {
        pub start: usize,
        pub end: usize,
        pub head: usize,
    }
}

impl AnnotatedDocument {
    fn from_schema(doc: schema::Doc) -> Self {
        let tokens = doc
            .tokens
            .into_iter()
            .enumerate()
            .map(|(index, t)| Token {
                index,
                surface: t.surface,
                lemma: t.lemma,
                pos: t.pos,
                sentence_index: t.sentence,
            })
            .collect();
        let frames = doc
            .frames
            .into_iter()
            .map(|f| PredicateFrame {
                predicate_index: f.predicate,
                lemma: f.lemma,
                pb_sense: f.pb_sense,
                vn_sense: f.vn_sense,
                args: f
                    .args
                    .into_iter()
                    .map(|a| ArgumentSpan {
                        label: a.label,
                        start: a.start,
                        end: a.end,
                    })
                    .collect(),
            })
            .collect();
        let connectives = doc
            .connectives
            .into_iter()
            .map(|c| Connective {
                marker: c.marker,
                span: TokenRange {
                    start: c.start,
                    end: c.end,
                },
                arg1: TokenRange {
                    start: c.arg1[0],
                    end: c.arg1[1],
                },
                arg2: TokenRange {
                    start: c.arg2[0],
                    end: c.arg2[1],
                },
            })
            .collect();
        let chains = doc
            .chains
            .into_iter()
            .enumerate()
            .map(|(chain_id, ms)| {
                let mut ms: Vec<Mention> = ms
                    .into_iter()
                    .map(|m| Mention {
                        start: m.start,
                        end: m.end,
                        head: m.head,
                        chain_id,
                    })
                    .collect();
                // Canonical mention order within a chain.
                ms.sort_by_key(|m| (m.start, m.end));
                ms
            })
            .collect();
        AnnotatedDocument {
            doc_id: doc.doc_id,
            tokens,
            frames,
            connectives,
            chains,
        }
    }

    fn to_schema(&self) -> schema::Doc {
        schema::Doc {
            doc_id: self.doc_id.clone(),
            tokens: self
                .tokens
                .iter()
                .map(|t| schema::Tok {
                    surface: t.surface.clone(),
                    lemma: t.lemma.clone(),
                    pos: t.pos.clone(),
                    sentence: t.sentence_index,
                })
                .collect(),
            frames: self
                .frames
                .iter()
                .map(|f| schema::Frame {
                    predicate: f.predicate_index,
                    lemma: f.lemma.clone(),
                    pb_sense: f.pb_sense.clone(),
                    vn_sense: f.vn_sense.clone(),
                    args: f
                        .args
                        .iter()
                        .map(|a| schema::Arg {
                            label: a.label.clone(),
                            start: a.start,
                            end: a.end,
                        })
                        .collect(),
                })
                .collect(),
            connectives: self
                .connectives
                .iter()
                .map(|c| schema::Conn {
                    marker: c.marker.clone(),
                    start: c.span.start,
                    end: c.span.end,
                    arg1: [c.arg1.start, c.arg1.end],
                    arg2: [c.arg2.start, c.arg2.end],
                })
                .collect(),
            chains: self
                .chains
                .iter()
                .map(|ms| {
                    let mut ms: Vec<&Mention> = ms.iter().collect();
                    ms.sort_by_key(|m| (m.start, m.end));
                    ms.iter()
                        .map(|m| schema::Ment {
                            start: m.start,
                            end: m.end,
                            head: m.head,
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Serialize back to one JSON line of the wire schema.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_schema()).expect("document serialization cannot fail")
    }
}

// ---------------------------------------------------------------------------
// Validation

/// One violated invariant, pinpointing the field and rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Path of the offending field, e.g. `frames[2].args[0]`.
    pub location: String,
    /// The violated rule, e.g. `ArgumentSpan start ≤ end`.
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} violated", self.location, self.rule)
    }
}

fn check_range(
    violations: &mut Vec<Violation>,
    location: &str,
    what: &str,
    range: TokenRange,
    n_tokens: usize,
) {
    if range.start > range.end {
        violations.push(Violation {
            location: location.to_string(),
            rule: format!("{what} start ≤ end"),
        });
    }
    if range.end >= n_tokens {
        violations.push(Violation {
            location: location.to_string(),
            rule: format!("{what} within document token range"),
        });
    }
}

/// Check every declared invariant; an empty vector means the document is ok.
pub fn validate_document(doc: &AnnotatedDocument) -> Vec<Violation> {
    let mut v = Vec::new();
    let n = doc.tokens.len();

    for (i, tok) in doc.tokens.iter().enumerate() {
        if tok.index != i {
            v.push(Violation {
                location: format!("tokens[{i}].index"),
                rule: "Token indices strictly increasing from 0".into(),
            });
        }
        if i > 0 && tok.sentence_index < doc.tokens[i - 1].sentence_index {
            v.push(Violation {
                location: format!("tokens[{i}].sentence_index"),
                rule: "Token.sentence_index non-decreasing".into(),
            });
        }
    }

    for (i, frame) in doc.frames.iter().enumerate() {
        let loc = format!("frames[{i}]");
        if frame.predicate_index >= n {
            v.push(Violation {
                location: format!("{loc}.predicate_index"),
                rule: "predicate_index within document token range".into(),
            });
        }
        let sense_ok = frame
            .pb_sense
            .strip_prefix(&frame.lemma)
            .and_then(|rest| rest.strip_prefix('.'))
            .map(|digits| digits.len() >= 2 && digits.chars().all(|c| c.is_ascii_digit()))
            .unwrap_or(false);
        if !sense_ok {
            v.push(Violation {
                location: format!("{loc}.pb_sense"),
                rule: "pb_sense matches pattern lemma.NN".into(),
            });
        }
        for (j, arg) in frame.args.iter().enumerate() {
            check_range(
                &mut v,
                &format!("{loc}.args[{j}]"),
                "ArgumentSpan",
                TokenRange {
                    start: arg.start,
                    end: arg.end,
                },
                n,
            );
        }
        for label in ["AM-NEG", "AM-PRD"] {
            if frame.args.iter().filter(|a| a.label == label).count() > 1 {
                v.push(Violation {
                    location: format!("{loc}.args"),
                    rule: format!("at most one {label} span per frame"),
                });
            }
        }
        if i > 0 && frame.predicate_index <= doc.frames[i - 1].predicate_index {
            v.push(Violation {
                location: format!("{loc}.predicate_index"),
                rule: "frames sorted by predicate_index without duplicates".into(),
            });
        }
    }

    for (i, conn) in doc.connectives.iter().enumerate() {
        let loc = format!("connectives[{i}]");
        if !is_known_marker(&conn.marker) {
            v.push(Violation {
                location: format!("{loc}.marker"),
                rule: "marker is a member of the closed discourse-marker list".into(),
            });
        }
        check_range(&mut v, &format!("{loc}.span"), "Connective span", conn.span, n);
        check_range(&mut v, &format!("{loc}.arg1"), "Connective arg1", conn.arg1, n);
        check_range(&mut v, &format!("{loc}.arg2"), "Connective arg2", conn.arg2, n);
        if i > 0 && conn.span.start < doc.connectives[i - 1].span.start {
            v.push(Violation {
                location: format!("{loc}.span"),
                rule: "connectives ordered by span start".into(),
            });
        }
    }

    for (c, chain) in doc.chains.iter().enumerate() {
        for (m, mention) in chain.iter().enumerate() {
            let loc = format!("chains[{c}][{m}]");
            if !(mention.start <= mention.head && mention.head <= mention.end) {
                v.push(Violation {
                    location: format!("{loc}.head"),
                    rule: "Mention.head within [start, end]".into(),
                });
            }
            if mention.end >= n {
                v.push(Violation {
                    location: format!("{loc}.end"),
                    rule: "Mention within document token range".into(),
                });
            }
            if mention.chain_id != c {
                v.push(Violation {
                    location: format!("{loc}.chain_id"),
                    rule: "Mention.chain_id matches its chain group".into(),
                });
            }
        }
    }

    v
}

// ---------------------------------------------------------------------------
// Loading

/// Parse one JSON line into a validated document.
pub fn parse_document(line: &str, line_no: usize) -> Result<AnnotatedDocument> {
    let raw: schema::Doc = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    let doc = AnnotatedDocument::from_schema(raw);
    let violations = validate_document(&doc);
    if let Some(first) = violations.first() {
        return Err(Error::InvalidDocument {
            line: line_no,
            violation: first.to_string(),
        });
    }
    Ok(doc)
}

/// Lazy stream of documents read from JSON Lines.
pub struct DocumentReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<AnnotatedDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line_no += 1;
            match self.lines.next()? {
                Err(e) => return Some(Err(e.into())),
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => return Some(parse_document(&line, self.line_no)),
            }
        }
    }
}

/// Stream documents from any buffered reader.
pub fn read_documents<R: BufRead>(reader: R) -> DocumentReader<R> {
    DocumentReader {
        lines: reader.lines(),
        line_no: 0,
    }
}

/// Stream documents from a JSON Lines file.
pub fn load_documents(path: impl AsRef<Path>) -> Result<DocumentReader<BufReader<File>>> {
    let file = File::open(path.as_ref())?;
    Ok(read_documents(BufReader::new(file)))
}
