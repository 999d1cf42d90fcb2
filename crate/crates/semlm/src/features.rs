//! Downstream feature export.
//!
//! Coreference pair features take an entity-centered model and two fa
//! tokens (optionally separated by a marker) and export the conditional
//! `p_c = p(fa2 | fa1, dis)` with its transforms. Discourse-sense features
//! take a frame-chain model and a `[f1, dis, f2]` triple and export
//! `q_c`: the gap-substitution score of the marker between the two frames,
//! normalized over the closed marker set observed in the vocabulary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::SemLanguageModel;
use crate::vocab::{TokenId, TokenKind};
use crate::{Error, Result};

/// Cap applied to `1/p` so underflowing probabilities stay finite.
pub const INVERSE_CAP: f64 = 1e6;

/// Where a feature value came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model_id: String,
    /// Vocabulary ids of the participating tokens, query order.
    pub token_ids: Vec<TokenId>,
    /// True when any query token fell outside the vocabulary and was
    /// substituted with UNK.
    pub unk_substituted: bool,
}

/// One exported feature record: the base probability, its transforms, and
/// optional embeddings of the participating tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub p: f64,
    pub p_squared: f64,
    pub p_sqrt: f64,
    pub p_inverse: f64,
    /// Embeddings keyed by query role, only for models that carry them.
    pub embeddings: Option<BTreeMap<String, Vec<f64>>>,
    pub provenance: Provenance,
}

impl FeatureRecord {
    fn from_probability(p: f64, provenance: Provenance) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "feature probability {p} outside (0, 1]"
            )));
        }
        Ok(FeatureRecord {
            p,
            p_squared: p * p,
            p_sqrt: p.sqrt(),
            p_inverse: (1.0 / p).min(INVERSE_CAP),
            embeddings: None,
            provenance,
        })
    }
}

struct Lookup {
    id: TokenId,
    substituted: bool,
}

fn lookup(model: &dyn SemLanguageModel, token: &str) -> Lookup {
    match model.vocab().id_of(token) {
        Some(id) => Lookup {
            id,
            substituted: false,
        },
        None => Lookup {
            id: model.vocab().unk_id(),
            substituted: true,
        },
    }
}

fn attach_embeddings(
    model: &dyn SemLanguageModel,
    record: &mut FeatureRecord,
    roles: &[(&str, TokenId)],
) {
    let mut map = BTreeMap::new();
    for (role, id) in roles {
        if let Some(embedding) = model.token_embedding(*id) {
            map.insert(role.to_string(), embedding);
        }
    }
    if !map.is_empty() {
        record.embeddings = Some(map);
    }
}

/// Marker vocabulary form of a raw marker string.
fn marker_token(marker: &str) -> String {
    format!("dis:{}", marker.replace(' ', "_"))
}

/// Coreference pair feature: `p_c = p(fa2 | fa1)` or
/// `p(fa2 | fa1, dis)` when a marker separates the mentions.
pub fn coref_pair_features(
    model: &dyn SemLanguageModel,
    model_id: &str,
    fa1: &str,
    fa2: &str,
    dis: Option<&str>,
) -> Result<FeatureRecord> {
    let first = lookup(model, fa1);
    let second = lookup(model, fa2);
    let marker = dis.map(|m| lookup(model, &marker_token(m)));

    let mut history = vec![first.id];
    if let Some(m) = &marker {
        history.push(m.id);
    }
    let p = model.cond_prob(&history, second.id);

    let mut token_ids = vec![first.id, second.id];
    let mut substituted = first.substituted || second.substituted;
    if let Some(m) = &marker {
        token_ids.push(m.id);
        substituted |= m.substituted;
    }
    let mut record = FeatureRecord::from_probability(
        p,
        Provenance {
            model_id: model_id.to_string(),
            token_ids,
            unk_substituted: substituted,
        },
    )?;

    let mut roles = vec![("fa1", first.id), ("fa2", second.id)];
    if let Some(m) = &marker {
        roles.push(("dis", m.id));
    }
    attach_embeddings(model, &mut record, &roles);
    Ok(record)
}

/// Gap scores of every candidate marker in the virtual `[f1, ?, f2]`
/// sequence, plus the candidate list itself.
fn marker_gap_scores(
    model: &dyn SemLanguageModel,
    f1: TokenId,
    f2: TokenId,
    extra: Option<TokenId>,
) -> (Vec<TokenId>, Vec<f64>) {
    let mut candidates = model.vocab().ids_of_kind(TokenKind::Conn);
    if let Some(id) = extra {
        if !candidates.contains(&id) {
            candidates.push(id);
        }
    }
    let tokens = vec![f1, f1, f2]; // slot 1 is the gap; its value is unused
    let scores = candidates
        .iter()
        .map(|&d| model.gap_score(&tokens, 1, d))
        .collect();
    (candidates, scores)
}

/// Discourse-sense feature: `q_c`, the probability of `dis` among all
/// markers when substituted between `f1` and `f2`.
pub fn discourse_features(
    model: &dyn SemLanguageModel,
    model_id: &str,
    f1: &str,
    f2: &str,
    dis: &str,
) -> Result<FeatureRecord> {
    let left = lookup(model, f1);
    let right = lookup(model, f2);
    let marker = lookup(model, &marker_token(dis));

    // The queried marker always joins the candidate set, so an UNK
    // substitution still yields a normalized value.
    let (candidates, scores) = marker_gap_scores(model, left.id, right.id, Some(marker.id));
    if candidates.is_empty() {
        return Err(Error::InvalidInput(
            "vocabulary has no discourse markers to normalize over".into(),
        ));
    }
    let position = candidates
        .iter()
        .position(|&d| d == marker.id)
        .expect("queried marker is among the candidates");

    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let q = (scores[position] - max).exp() / z;

    let mut record = FeatureRecord::from_probability(
        q,
        Provenance {
            model_id: model_id.to_string(),
            token_ids: vec![left.id, right.id, marker.id],
            unk_substituted: left.substituted || right.substituted || marker.substituted,
        },
    )?;
    attach_embeddings(
        model,
        &mut record,
        &[("f1", left.id), ("f2", right.id), ("dis", marker.id)],
    );
    Ok(record)
}

/// `q_c` for every marker in the vocabulary given `(f1, f2)`; the values
/// sum to 1 by construction.
pub fn marker_distribution(
    model: &dyn SemLanguageModel,
    f1: &str,
    f2: &str,
) -> Result<Vec<(String, f64)>> {
    let left = lookup(model, f1);
    let right = lookup(model, f2);
    let (candidates, scores) = marker_gap_scores(model, left.id, right.id, None);
    if candidates.is_empty() {
        return Err(Error::InvalidInput(
            "vocabulary has no discourse markers to normalize over".into(),
        ));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    Ok(candidates
        .iter()
        .zip(&scores)
        .map(|(&d, s)| {
            (
                model.vocab().token(d).to_string(),
                (s - max).exp() / z,
            )
        })
        .collect())
}
