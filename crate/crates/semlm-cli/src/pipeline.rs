//! Shared pipeline plumbing: the deterministic train/held-out document
//! split, sequence-file loading, and model artifact naming.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use semlm::seqbuild::{parse_sequences, SemSequence, SequenceKind};

/// Held-out percentage of the deterministic document split.
pub const HOLDOUT_PERCENT: u64 = 10;

/// Deterministic split by document-id hash: true when the document falls
/// in the held-out slice.
pub fn is_heldout(doc_id: &str) -> bool {
    let digest = Sha256::digest(doc_id.as_bytes());
    let mut prefix = [0u8; 8];
    prefix.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(prefix) % 100 < HOLDOUT_PERCENT
}

/// Sequences of one dump file, split into train and held-out parts.
pub struct SplitSequences {
    pub kind: SequenceKind,
    pub train: Vec<SemSequence>,
    pub heldout: Vec<SemSequence>,
}

pub fn load_split_sequences(path: &Path) -> Result<SplitSequences> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening sequence file {}", path.display()))?;
    let sequences = parse_sequences(std::io::BufReader::new(file))?;
    let kind = match sequences.first() {
        Some(seq) => seq.kind,
        None => bail!("sequence file {} is empty", path.display()),
    };
    if sequences.iter().any(|s| s.kind != kind) {
        bail!("sequence file {} mixes fc and ec sequences", path.display());
    }
    let (heldout, train) = sequences.into_iter().partition(|s| is_heldout(&s.doc_id));
    Ok(SplitSequences {
        kind,
        train,
        heldout,
    })
}

/// Canonical model artifact path: `model-<kind>-<name>.lm`.
pub fn model_path(out_dir: &Path, kind: SequenceKind, model: &str) -> PathBuf {
    out_dir.join(format!("model-{}-{}.lm", kind.label(), model))
}

pub fn embeddings_name(kind: SequenceKind, model: &str) -> String {
    format!("embeddings-{}-{}.txt", kind.label(), model)
}
