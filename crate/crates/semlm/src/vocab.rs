//! Vocabulary construction and sequence encoding.
//!
//! Counts are taken over finished sequences (after compounding and marker
//! insertion). Tokens rarer than `min_count` are dropped and map to UNK at
//! encoding time; UNK and EOS are always present and exempt from filtering.
//! Ids are dense from 0, assigned by descending count with lexicographic
//! tie-breaks, UNK and EOS appended last.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::seqbuild::{dump_sequences_to_string, SemSequence};
use crate::{Error, Result};

/// Dense vocabulary id.
pub type TokenId = usize;

/// Vocabulary class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    /// Frame with predicate sense information.
    FrameSen,
    /// Frame plus argument role label.
    FrameArg,
    /// Discourse marker.
    Conn,
    /// Sentence period.
    Per,
    Unk,
    Eos,
}

impl TokenKind {
    pub fn label(self) -> &'static str {
        match self {
            TokenKind::FrameSen => "F-Sen",
            TokenKind::FrameArg => "F-Arg",
            TokenKind::Conn => "Conn",
            TokenKind::Per => "Per",
            TokenKind::Unk => "UNK",
            TokenKind::Eos => "EOS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "F-Sen" => TokenKind::FrameSen,
            "F-Arg" => TokenKind::FrameArg,
            "Conn" => TokenKind::Conn,
            "Per" => TokenKind::Per,
            "UNK" => TokenKind::Unk,
            "EOS" => TokenKind::Eos,
            _ => return None,
        })
    }
}

/// One vocabulary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub token: String,
    pub count: u64,
    pub kind: TokenKind,
}

/// Token ↔ id bijection with per-token counts and kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabWire", into = "VocabWire")]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    min_count: u32,
    corpus_checksum: String,
    index: HashMap<String, TokenId>,
}

#[derive(Serialize, Deserialize)]
struct VocabWire {
    entries: Vec<VocabEntry>,
    min_count: u32,
    corpus_checksum: String,
}

impl From<VocabWire> for Vocabulary {
    fn from(w: VocabWire) -> Self {
        Vocabulary::from_entries(w.entries, w.min_count, w.corpus_checksum)
    }
}

impl From<Vocabulary> for VocabWire {
    fn from(v: Vocabulary) -> Self {
        VocabWire {
            entries: v.entries,
            min_count: v.min_count,
            corpus_checksum: v.corpus_checksum,
        }
    }
}

/// SHA-256 of the canonical sequence dump, hex-encoded.
pub fn corpus_checksum(sequences: &[SemSequence]) -> String {
    let dump = dump_sequences_to_string(sequences);
    let digest = Sha256::digest(dump.as_bytes());
    hex_string(&digest)
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Build the vocabulary over a finished sequence corpus.
pub fn build_vocabulary(sequences: &[SemSequence], min_count: u32) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::InvalidInput("min_count must be ≥ 1".into()));
    }
    if sequences.is_empty() || sequences.iter().all(|s| s.tokens.is_empty()) {
        return Err(Error::EmptyCorpus);
    }

    let mut counts: HashMap<String, (u64, TokenKind)> = HashMap::new();
    for seq in sequences {
        for token in &seq.tokens {
            let entry = counts
                .entry(token.rendered())
                .or_insert((0, token.kind()));
            entry.0 += 1;
        }
    }

    let mut kept: Vec<VocabEntry> = Vec::new();
    let mut unk_mass = 0u64;
    for (token, (count, kind)) in counts {
        if count >= u64::from(min_count) {
            kept.push(VocabEntry { token, count, kind });
        } else {
            unk_mass += count;
        }
    }
    kept.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.token.cmp(&b.token)));
    kept.push(VocabEntry {
        token: "UNK".into(),
        count: unk_mass,
        kind: TokenKind::Unk,
    });
    kept.push(VocabEntry {
        token: "EOS".into(),
        count: sequences.len() as u64,
        kind: TokenKind::Eos,
    });

    Ok(Vocabulary::from_entries(
        kept,
        min_count,
        corpus_checksum(sequences),
    ))
}

impl Vocabulary {
    fn from_entries(entries: Vec<VocabEntry>, min_count: u32, corpus_checksum: String) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(id, e)| (e.token.clone(), id))
            .collect();
        Vocabulary {
            entries,
            min_count,
            corpus_checksum,
            index,
        }
    }

    /// A vocabulary of `n` synthetic tokens `t0..t{n-1}` plus UNK/EOS, for
    /// id-level corpora that never came from documents.
    pub fn synthetic(n: usize) -> Self {
        let mut entries: Vec<VocabEntry> = (0..n)
            .map(|i| VocabEntry {
                token: format!("t{i}"),
                count: 0,
                kind: TokenKind::FrameSen,
            })
            .collect();
        entries.push(VocabEntry {
            token: "UNK".into(),
            count: 0,
            kind: TokenKind::Unk,
        });
        entries.push(VocabEntry {
            token: "EOS".into(),
            count: 0,
            kind: TokenKind::Eos,
        });
        Vocabulary::from_entries(entries, 1, String::new())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn unk_id(&self) -> TokenId {
        self.index["UNK"]
    }

    pub fn eos_id(&self) -> TokenId {
        self.index["EOS"]
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> TokenId {
        self.id_of(token).unwrap_or_else(|| self.unk_id())
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.entries[id].token
    }

    pub fn kind(&self, id: TokenId) -> TokenKind {
        self.entries[id].kind
    }

    pub fn count(&self, id: TokenId) -> u64 {
        self.entries[id].count
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    pub fn corpus_checksum(&self) -> &str {
        &self.corpus_checksum
    }

    /// Ids of every token of the given kind, ascending.
    pub fn ids_of_kind(&self, kind: TokenKind) -> Vec<TokenId> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind == kind)
            .map(|(id, _)| id)
            .collect()
    }

    /// TSV dump: a header comment with min_count and corpus checksum, then
    /// `id<TAB>token<TAB>count<TAB>kind` rows.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# semlm-vocab v1\tmin_count={}\tcorpus_sha256={}",
            self.min_count, self.corpus_checksum
        )?;
        for (id, e) in self.entries.iter().enumerate() {
            writeln!(w, "{id}\t{}\t{}\t{}", e.token, e.count, e.kind.label())?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut min_count = 1u32;
        let mut checksum = String::new();
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for field in header.split('\t') {
                    if let Some(v) = field.strip_prefix("min_count=") {
                        min_count = v.parse().map_err(|_| Error::Parse {
                            line: line_no,
                            message: "bad min_count".into(),
                        })?;
                    } else if let Some(v) = field.strip_prefix("corpus_sha256=") {
                        checksum = v.to_string();
                    }
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "expected id<TAB>token<TAB>count<TAB>kind".into(),
                });
            }
            let id: usize = cols[0].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: "bad id".into(),
            })?;
            if id != entries.len() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("ids must be dense from 0, got {id}"),
                });
            }
            let count: u64 = cols[2].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: "bad count".into(),
            })?;
            let kind = TokenKind::parse(cols[3]).ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("unknown kind {}", cols[3]),
            })?;
            entries.push(VocabEntry {
                token: cols[1].to_string(),
                count,
                kind,
            });
        }
        if entries.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Vocabulary::from_entries(entries, min_count, checksum))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_tsv(std::io::BufReader::new(file))
    }
}

/// Encode one sequence: out-of-vocabulary tokens become UNK, EOS appended.
pub fn encode_sequence(seq: &SemSequence, vocab: &Vocabulary) -> Vec<TokenId> {
    let mut ids: Vec<TokenId> = seq
        .tokens
        .iter()
        .map(|t| vocab.id_or_unk(&t.rendered()))
        .collect();
    ids.push(vocab.eos_id());
    ids
}

/// Encode a whole corpus of sequences.
pub fn encode_corpus(sequences: &[SemSequence], vocab: &Vocabulary) -> Vec<Vec<TokenId>> {
    sequences.iter().map(|s| encode_sequence(s, vocab)).collect()
}

/// Rendered token strings for a row of ids.
pub fn decode_ids(ids: &[TokenId], vocab: &Vocabulary) -> Vec<String> {
    ids.iter().map(|&id| vocab.token(id).to_string()).collect()
}
