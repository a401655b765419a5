use super::{ProviderError, Transport};
use crate::document::{Document, EntityPronounPair};
use serde::{Deserialize, Serialize};

/// English personal, possessive, reflexive, demonstrative and relative pronouns.
pub const PRONOUNS: &[&str] = &[
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "themself",
    "this",
    "that",
    "these",
    "those",
    "who",
    "whom",
    "whose",
    "which",
];

fn is_pronoun(mention: &str) -> bool {
    let m = mention.trim().to_lowercase();
    PRONOUNS.contains(&m.as_str())
}

/// Turn mention clusters (character spans) into entity–pronoun pairs.
///
/// The entity of a cluster is its earliest non-pronominal mention; every
/// pronominal mention starting after it yields one pair. Clusters made only of
/// pronouns yield nothing. Output is sorted by `pronoun_end`.
pub fn pairs_from_clusters(text: &str, clusters: &[Vec<(usize, usize)>]) -> Vec<EntityPronounPair> {
    let chars: Vec<char> = text.chars().collect();
    let surface = |(s, e): (usize, usize)| -> Option<String> {
        (s < e && e <= chars.len()).then(|| chars[s..e].iter().collect())
    };
    let mut pairs = Vec::new();
    for cluster in clusters {
        let mut mentions: Vec<((usize, usize), String)> = cluster
            .iter()
            .filter_map(|&span| surface(span).map(|t| (span, t)))
            .collect();
        mentions.sort_by_key(|&(span, _)| span);
        let Some((entity, entity_text)) = mentions.iter().find(|(_, t)| !is_pronoun(t)).cloned()
        else {
            continue;
        };
        for (span, text) in &mentions {
            if span.0 > entity.0 && is_pronoun(text) {
                pairs.push(EntityPronounPair {
                    entity_start: entity.0,
                    pronoun_end: span.1,
                    entity_text: entity_text.clone(),
                    pronoun_text: text.clone(),
                });
            }
        }
    }
    pairs.sort_by_key(|p| (p.pronoun_end, p.entity_start));
    pairs
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefRequest {
    pub text: String,
}

/// `/coref` answer: resolved pairs, or raw mention clusters to be mapped
/// client side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<EntityPronounPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<Vec<Vec<(usize, usize)>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorefOutcome {
    Pairs(Vec<EntityPronounPair>),
    /// Coreference is only resolved for English text.
    NotApplicable,
}

pub trait CorefProvider: Send + Sync {
    fn extract_pairs(&self, doc: &Document) -> Result<CorefOutcome, ProviderError>;
}

/// Client for `POST /coref`.
pub struct RemoteCoref<T> {
    transport: T,
}

impl<T: Transport> RemoteCoref<T> {
    pub fn new(transport: T) -> Self {
        Self { transport }
    }
}

impl<T: Transport> CorefProvider for RemoteCoref<T> {
    fn extract_pairs(&self, doc: &Document) -> Result<CorefOutcome, ProviderError> {
        if !doc.is_english() {
            return Ok(CorefOutcome::NotApplicable);
        }
        let body = serde_json::to_value(CorefRequest {
            text: doc.text().to_string(),
        })
        .map_err(|e| ProviderError::Protocol(e.to_string()))?;
        let resp: CorefResponse =
            serde_json::from_value(self.transport.post_json("/coref", &body)?)
                .map_err(|e| ProviderError::Protocol(e.to_string()))?;
        let mut pairs = match (resp.pairs, resp.clusters) {
            (Some(pairs), _) => pairs,
            (None, Some(clusters)) => pairs_from_clusters(doc.text(), &clusters),
            (None, None) => {
                return Err(ProviderError::Protocol(
                    "neither `pairs` nor `clusters` in /coref response".into(),
                ))
            }
        };
        let len = doc.len();
        if let Some(p) = pairs
            .iter()
            .find(|p| p.entity_start >= p.pronoun_end || p.pronoun_end > len)
        {
            return Err(ProviderError::Protocol(format!(
                "pair ({}, {}) outside document of length {len}",
                p.entity_start, p.pronoun_end
            )));
        }
        pairs.sort_by_key(|p| (p.pronoun_end, p.entity_start));
        Ok(CorefOutcome::Pairs(pairs))
    }
}
