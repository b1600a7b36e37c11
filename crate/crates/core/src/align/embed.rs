//! Embedding-based alignment.
//!
//! Every triple is rendered as `s, p, o` and embedded. Each source triple is
//! paired with its single nearest target triple under cosine distance, found
//! by exact search. The pairs are then sorted by distance and only the
//! `top_k` closest are kept. With [`AlignDirection::ClosedToOpen`] the closed
//! KB is the source side, so every closed triple appears at most once.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::align::{AlignMethod, Alignment, AlignmentSet};
use crate::embed::{check_batch, cosine_distance, embedding_error, Embedding, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::kb::{ClosedKb, ClosedTriple, OpenKb, OpenTriple};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlignDirection {
    #[default]
    OpenToClosed,
    ClosedToOpen,
}

impl std::str::FromStr for AlignDirection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "open_to_closed" | "open-to-closed" => Ok(AlignDirection::OpenToClosed),
            "closed_to_open" | "closed-to-open" | "inv" => Ok(AlignDirection::ClosedToOpen),
            _ => Err(format!("unknown direction {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnnConfig {
    pub direction: AlignDirection,
    pub top_k: usize,
    /// Texts per provider request.
    pub batch_size: usize,
    /// Maximum batches in flight; 0 uses the global pool.
    pub concurrency: usize,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            direction: AlignDirection::OpenToClosed,
            top_k: 1000,
            batch_size: 64,
            concurrency: 0,
        }
    }
}

/// Text fed to the embedder: `s, p, o`, verbatim.
pub trait SerializeTriple {
    fn parts(&self) -> (&str, &str, &str);
}

impl SerializeTriple for OpenTriple {
    fn parts(&self) -> (&str, &str, &str) {
        (&self.subject, &self.predicate, &self.object)
    }
}

impl SerializeTriple for ClosedTriple {
    fn parts(&self) -> (&str, &str, &str) {
        (&self.subject, &self.relation, &self.object)
    }
}

pub fn serialize_triple<T: SerializeTriple + ?Sized>(t: &T) -> String {
    let (s, p, o) = t.parts();
    format!("{s}, {p}, {o}")
}

/// Embeds `texts` once per distinct text, in batches, and fans the vectors
/// back out in input order. Output does not depend on batch size or on how
/// many batches run concurrently.
pub fn embed_all<P: EmbeddingProvider + ?Sized>(
    provider: &P,
    texts: &[String],
    batch_size: usize,
    concurrency: usize,
) -> Result<Vec<Embedding>> {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut unique: Vec<String> = Vec::new();
    let positions: Vec<usize> = texts
        .iter()
        .map(|t| {
            *slot.entry(t.as_str()).or_insert_with(|| {
                unique.push(t.clone());
                unique.len() - 1
            })
        })
        .collect();

    let batches: Vec<Result<Vec<Embedding>>> = par::with_threads(concurrency, || {
        par::map_chunks(&unique, batch_size, |b, chunk| {
            let vectors = provider.embed(chunk).map_err(|e| match e {
                Error::Embedding { message, .. } => embedding_error(b, message),
                other => embedding_error(b, other),
            })?;
            check_batch(chunk, &vectors).map_err(|m| embedding_error(b, m))?;
            Ok(vectors)
        })
    });
    let mut vectors = Vec::with_capacity(unique.len());
    for batch in batches {
        vectors.extend(batch?);
    }
    let dim = vectors.first().map_or(0, Vec::len);
    if let Some(bad) = vectors.iter().position(|v| v.len() != dim) {
        return Err(embedding_error(bad / batch_size.max(1), "dimension changed between batches"));
    }
    Ok(positions.into_iter().map(|i| vectors[i].clone()).collect())
}

/// Index and distance of the nearest target; ties go to the lower index.
pub fn nearest(source: &[f32], targets: &[Embedding]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, t) in targets.iter().enumerate() {
        let d = cosine_distance(source, t);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best
}

/// A source→target nearest-neighbour pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighbourPair {
    pub source: usize,
    pub target: usize,
    pub distance: f64,
}

/// Nearest target for every source, sorted by (distance, source index) and
/// truncated to `top_k`.
pub fn nearest_pairs(sources: &[Embedding], targets: &[Embedding], top_k: usize) -> Vec<NeighbourPair> {
    let mut pairs: Vec<NeighbourPair> = par::map_indexed(sources, |i, s| {
        nearest(s, targets).map(|(j, d)| NeighbourPair {
            source: i,
            target: j,
            distance: d,
        })
    })
    .into_iter()
    .flatten()
    .collect();
    pairs.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.source.cmp(&b.source)));
    pairs.truncate(top_k);
    pairs
}

pub fn knn_align<P: EmbeddingProvider + ?Sized>(
    open_kb: &OpenKb,
    closed_kb: &ClosedKb,
    provider: &P,
    config: KnnConfig,
) -> Result<AlignmentSet> {
    if config.top_k == 0 {
        return Err(Error::Config("top_k must be positive".into()));
    }
    if open_kb.is_empty() || closed_kb.is_empty() {
        return Err(Error::Invalid("embedding alignment needs two nonempty KBs".into()));
    }
    let open_texts: Vec<String> = open_kb.triples.iter().map(serialize_triple).collect();
    let closed_texts: Vec<String> = closed_kb.triples().iter().map(serialize_triple).collect();
    let all: Vec<String> = open_texts.into_iter().chain(closed_texts).collect();
    let vectors = embed_all(provider, &all, config.batch_size, config.concurrency)?;
    let (open_vecs, closed_vecs) = vectors.split_at(open_kb.len());

    let alignments: Vec<Alignment> = match config.direction {
        AlignDirection::OpenToClosed => nearest_pairs(open_vecs, closed_vecs, config.top_k)
            .into_iter()
            .map(|p| {
                Alignment::new(
                    open_kb.triples[p.source].clone(),
                    closed_kb.triples()[p.target].clone(),
                    AlignMethod::Embed { distance: p.distance },
                )
            })
            .collect(),
        AlignDirection::ClosedToOpen => nearest_pairs(closed_vecs, open_vecs, config.top_k)
            .into_iter()
            .map(|p| {
                Alignment::new(
                    open_kb.triples[p.target].clone(),
                    closed_kb.triples()[p.source].clone(),
                    AlignMethod::EmbedInv { distance: p.distance },
                )
            })
            .collect(),
    };
    let label = match config.direction {
        AlignDirection::OpenToClosed => "embed",
        AlignDirection::ClosedToOpen => "embed-inv",
    };
    Ok(AlignmentSet::new(format!("{label} top_k={}", config.top_k), alignments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::MockEmbedder;
    use crate::kb::RelationSchema;

    #[test]
    fn serialization() {
        assert_eq!(serialize_triple(&OpenTriple::new("fish", "live in", "water")), "fish, live in, water");
        assert_eq!(
            serialize_triple(&ClosedTriple::new("fish", "AtLocation", "water")),
            "fish, AtLocation, water"
        );
        assert_eq!(serialize_triple(&OpenTriple::new("a", "b", "c")), "a, b, c");
    }

    fn kbs() -> (OpenKb, ClosedKb) {
        let schema = RelationSchema::new(["AtLocation", "CapableOf"]).unwrap();
        let open = OpenKb::new(
            "o",
            vec![
                OpenTriple::new("bird", "can", "fly"),
                OpenTriple::new("fish", "AtLocation", "water"),
            ],
        );
        let closed = ClosedKb::from_triples(
            "c",
            [
                ClosedTriple::new("cat", "CapableOf", "purr"),
                ClosedTriple::new("fish", "AtLocation", "water"),
            ],
            &schema,
        )
        .0;
        (open, closed)
    }

    #[test]
    fn identical_text_ranks_first() {
        let (open, closed) = kbs();
        let cfg = KnnConfig { top_k: 10, ..KnnConfig::default() };
        let set = knn_align(&open, &closed, &MockEmbedder::default(), cfg).unwrap();
        assert_eq!(set.len(), 2);
        let first = &set.alignments()[0];
        assert_eq!(first.open.subject, "fish");
        assert_eq!(first.method, AlignMethod::Embed { distance: 0.0 });
    }

    #[test]
    fn top_one_is_global_minimum() {
        let (open, closed) = kbs();
        let cfg = KnnConfig {
            top_k: 1,
            direction: AlignDirection::ClosedToOpen,
            ..KnnConfig::default()
        };
        let set = knn_align(&open, &closed, &MockEmbedder::default(), cfg).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.alignments()[0].closed.subject, "fish");
        assert_eq!(set.alignments()[0].method.label(), "embed-inv");
    }

    #[test]
    fn rejects_bad_input() {
        let (open, closed) = kbs();
        let cfg = KnnConfig { top_k: 0, ..KnnConfig::default() };
        assert!(knn_align(&open, &closed, &MockEmbedder::default(), cfg).is_err());
        let empty = OpenKb::default();
        assert!(knn_align(&empty, &closed, &MockEmbedder::default(), KnnConfig::default()).is_err());
    }

    struct Failing;
    impl EmbeddingProvider for Failing {
        fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
            if texts.iter().any(|t| t.contains("purr")) {
                Err(Error::Invalid("model exploded".into()))
            } else {
                MockEmbedder::default().embed(texts)
            }
        }
    }

    #[test]
    fn failing_batch_is_identified() {
        let (open, closed) = kbs();
        let cfg = KnnConfig { batch_size: 1, ..KnnConfig::default() };
        match knn_align(&open, &closed, &Failing, cfg).unwrap_err() {
            Error::Embedding { batch, message } => {
                assert_eq!(batch, 2);
                assert!(message.contains("model exploded"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn batch_size_invariance() {
        let m = MockEmbedder::default();
        let texts: Vec<String> = (0..50).map(|i| format!("t{}, r, x{}", i % 7, i % 3)).collect();
        let a = embed_all(&m, &texts, 1, 1).unwrap();
        let b = embed_all(&m, &texts, 64, 4).unwrap();
        let c = embed_all(&m, &texts, 7, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
