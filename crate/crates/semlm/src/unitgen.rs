//! Semantic unit generation: turns raw predicate frames into
//! vocabulary-ready frame symbols.
//!
//! Four steps, in order: map PropBank senses to FrameNet frames via VerbNet
//! sense keys where the mapping table covers them; augment predicates with
//! trailing particles, secondary predicates (AM-PRD) and negation (AM-NEG);
//! merge near-adjacent predicates into compound symbols; and align
//! coreference mentions to the argument spans that contain their heads.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::annotations::{AnnotatedDocument, Mention, PredicateFrame};
use crate::{Error, Result};

/// Bundled VerbNet-sense to FrameNet-frame mapping table (TSV).
pub const VN_FN_MAPPING_TSV: &str = include_str!("../data/vn_fn_mapping.tsv");

/// One augmented predicate: a frame name plus the optional surface
/// modifications observed around the predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameComponent {
    /// FrameNet frame name, or the PropBank `lemma.NN` sense when unmapped.
    pub base: String,
    /// Lemma of a preposition/particle immediately following the predicate.
    pub particle: Option<String>,
    /// Lemma of the AM-PRD secondary predicate, when present.
    pub secondary: Option<String>,
    /// Whether an AM-NEG span negates the predicate.
    pub negated: bool,
}

impl FrameComponent {
    pub fn plain(base: impl Into<String>) -> Self {
        FrameComponent {
            base: base.into(),
            particle: None,
            secondary: None,
            negated: false,
        }
    }

    /// Surface form: `base` then `(not)` then the appended predicates,
    /// e.g. `want.01(not)-give.08(up)` for a compound of two components.
    /// The particle and the secondary predicate share the plain paren
    /// suffix the surface convention uses for both.
    pub fn render(&self) -> String {
        let mut s = self.base.clone();
        if self.negated {
            s.push_str("(not)");
        }
        if let Some(p) = &self.particle {
            s.push('(');
            s.push_str(p);
            s.push(')');
        }
        if let Some(p) = &self.secondary {
            s.push('(');
            s.push_str(p);
            s.push(')');
        }
        s
    }
}

impl fmt::Display for FrameComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A vocabulary atom: one augmented frame, or a compound of several whose
/// predicates sit nearly adjacent in the text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameSymbol {
    components: Vec<FrameComponent>,
    rendered: String,
}

impl FrameSymbol {
    /// Build from components in textual predicate order; panics on empty input.
    pub fn new(components: Vec<FrameComponent>) -> Self {
        assert!(!components.is_empty(), "FrameSymbol needs ≥ 1 component");
        let rendered = components
            .iter()
            .map(FrameComponent::render)
            .collect::<Vec<_>>()
            .join("-");
        FrameSymbol {
            components,
            rendered,
        }
    }

    pub fn single(component: FrameComponent) -> Self {
        FrameSymbol::new(vec![component])
    }

    /// Wrap an already-rendered token read back from a sequence file. The
    /// component structure is not recovered; the symbol is opaque but
    /// re-renders byte-identically.
    pub fn from_rendered(rendered: &str) -> Self {
        FrameSymbol {
            components: vec![FrameComponent::plain(rendered)],
            rendered: rendered.to_string(),
        }
    }

    pub fn components(&self) -> &[FrameComponent] {
        &self.components
    }

    pub fn rendered(&self) -> &str {
        &self.rendered
    }

    pub fn is_compound(&self) -> bool {
        self.components.len() > 1
    }
}

impl fmt::Display for FrameSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.rendered)
    }
}

/// Deterministic (lemma, VerbNet sense) → FrameNet frame lookup.
#[derive(Debug, Clone, Default)]
pub struct MappingTable {
    entries: HashMap<(String, String), String>,
}

impl MappingTable {
    pub fn new() -> Self {
        MappingTable::default()
    }

    pub fn insert(
        &mut self,
        lemma: impl Into<String>,
        vn_sense: impl Into<String>,
        frame: impl Into<String>,
    ) {
        self.entries
            .insert((lemma.into(), vn_sense.into()), frame.into());
    }

    pub fn lookup(&self, lemma: &str, vn_sense: &str) -> Option<&str> {
        self.entries
            .get(&(lemma.to_string(), vn_sense.to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse the TSV form: `lemma<TAB>vn_sense<TAB>framenet_frame`, with
    /// `#` comment lines ignored.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut table = MappingTable::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(lemma), Some(sense), Some(frame))
                    if !lemma.is_empty() && !sense.is_empty() && !frame.is_empty() =>
                {
                    table.insert(lemma, sense, frame);
                }
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "expected lemma<TAB>vn_sense<TAB>frame".into(),
                    })
                }
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_tsv(&std::fs::read_to_string(path)?)
    }

    /// The mapping table bundled with the crate.
    pub fn bundled() -> &'static MappingTable {
        static TABLE: OnceLock<MappingTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            MappingTable::parse_tsv(VN_FN_MAPPING_TSV).expect("bundled mapping table parses")
        })
    }
}

/// Map a predicate to its FrameNet frame via the VerbNet sense key; frames
/// outside the table keep their PropBank sense.
pub fn map_to_framenet(
    lemma: &str,
    pb_sense: &str,
    vn_sense: Option<&str>,
    table: &MappingTable,
) -> String {
    vn_sense
        .and_then(|sense| table.lookup(lemma, sense))
        .unwrap_or(pb_sense)
        .to_string()
}

/// Apply the three predicate augmentations: trailing preposition/particle,
/// AM-PRD secondary predicate, AM-NEG negation. All three may co-occur.
pub fn augment_predicate(
    frame: &PredicateFrame,
    doc: &AnnotatedDocument,
    mapped_base: String,
) -> FrameComponent {
    let particle = doc
        .tokens
        .get(frame.predicate_index + 1)
        .filter(|t| t.pos == "IN" || t.pos == "RP")
        .map(|t| t.lemma.clone());
    let secondary = frame
        .arg("AM-PRD")
        .and_then(|span| doc.tokens.get(span.end))
        .map(|t| t.lemma.clone());
    let negated = frame.arg("AM-NEG").is_some();
    FrameComponent {
        base: mapped_base,
        particle,
        secondary,
        negated,
    }
}

/// An augmented component placed in the document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedComponent {
    pub component: FrameComponent,
    pub predicate_index: usize,
    pub sentence_index: usize,
}

/// A frame symbol placed in the document; compounds carry every member
/// predicate index and are anchored at the first one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedSymbol {
    pub symbol: FrameSymbol,
    /// Predicate indices of all member components, in textual order.
    pub predicate_indices: Vec<usize>,
    /// Sentence of the first component.
    pub sentence_index: usize,
}

impl PlacedSymbol {
    /// Ordering anchor: the first component's predicate index.
    pub fn anchor(&self) -> usize {
        self.predicate_indices[0]
    }
}

/// Merge consecutive components whose predicate indices differ by at most
/// two (one intervening token, e.g. "eat and drink") into compound symbols.
/// Merging is transitive left-to-right and never crosses a sentence
/// boundary.
pub fn compound_frames(components: Vec<PlacedComponent>) -> Vec<PlacedSymbol> {
    let mut out = Vec::new();
    let mut run: Vec<PlacedComponent> = Vec::new();
    for item in components {
        let extends_run = run.last().is_some_and(|prev| {
            item.predicate_index - prev.predicate_index <= 2
                && item.sentence_index == prev.sentence_index
        });
        if !extends_run && !run.is_empty() {
            out.push(finish_run(std::mem::take(&mut run)));
        }
        run.push(item);
    }
    if !run.is_empty() {
        out.push(finish_run(run));
    }
    out
}

fn finish_run(run: Vec<PlacedComponent>) -> PlacedSymbol {
    let predicate_indices: Vec<usize> = run.iter().map(|c| c.predicate_index).collect();
    let sentence_index = run[0].sentence_index;
    let symbol = FrameSymbol::new(run.into_iter().map(|c| c.component).collect());
    PlacedSymbol {
        symbol,
        predicate_indices,
        sentence_index,
    }
}

/// A mention matched to the argument span containing its head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionAlignment {
    /// Index into the document's frame list.
    pub frame_index: usize,
    /// Role label of the matched argument span.
    pub label: String,
}

/// Match a mention to the first frame (by predicate order) with an argument
/// span containing the mention head; among spans of that frame the smallest
/// wins. `frames` must be the document's frames in predicate order.
pub fn align_mention_to_argument(
    mention: &Mention,
    frames: &[PredicateFrame],
) -> Option<MentionAlignment> {
    for (frame_index, frame) in frames.iter().enumerate() {
        let best = frame
            .args
            .iter()
            .filter(|a| a.contains(mention.head))
            .min_by_key(|a| (a.end - a.start, a.start));
        if let Some(span) = best {
            return Some(MentionAlignment {
                frame_index,
                label: span.label.clone(),
            });
        }
    }
    None
}

/// Unit-generation switches; `framenet_mapping: false` is the `-FM`
/// ablation that keeps every frame in PropBank form.
#[derive(Debug, Clone, Copy)]
pub struct UnitOptions {
    pub framenet_mapping: bool,
}

impl Default for UnitOptions {
    fn default() -> Self {
        UnitOptions {
            framenet_mapping: true,
        }
    }
}

/// All units generated from one document.
#[derive(Debug, Clone)]
pub struct DocumentUnits {
    /// Compounded symbols in textual order.
    pub placed: Vec<PlacedSymbol>,
    /// Per-frame symbol, indexed like `doc.frames`; members of a compound
    /// share the compound symbol.
    pub frame_symbols: Vec<FrameSymbol>,
}

/// Run mapping, augmentation and compounding over a whole document.
pub fn generate_units(
    doc: &AnnotatedDocument,
    table: &MappingTable,
    options: UnitOptions,
) -> DocumentUnits {
    let components: Vec<PlacedComponent> = doc
        .frames
        .iter()
        .map(|frame| {
            let base = if options.framenet_mapping {
                map_to_framenet(&frame.lemma, &frame.pb_sense, frame.vn_sense.as_deref(), table)
            } else {
                frame.pb_sense.clone()
            };
            PlacedComponent {
                component: augment_predicate(frame, doc, base),
                predicate_index: frame.predicate_index,
                sentence_index: doc.sentence_of(frame.predicate_index),
            }
        })
        .collect();
    let placed = compound_frames(components);

    let index_of: HashMap<usize, usize> = doc
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| (f.predicate_index, i))
        .collect();
    let mut frame_symbols: Vec<Option<FrameSymbol>> = vec![None; doc.frames.len()];
    for symbol in &placed {
        for &pred in &symbol.predicate_indices {
            frame_symbols[index_of[&pred]] = Some(symbol.symbol.clone());
        }
    }
    DocumentUnits {
        placed,
        frame_symbols: frame_symbols
            .into_iter()
            .map(|s| s.expect("every frame belongs to exactly one placed symbol"))
            .collect(),
    }
}
