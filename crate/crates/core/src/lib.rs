//! Translation of open knowledge bases (free-form subject/predicate/object
//! triples) into a closed relation schema.
//!
//! The pipeline has four stages:
//!
//! 1. **Alignment**: pair open triples with closed triples, either by exact
//!    normalized-phrase rules ([`align::rule`]) or by nearest-neighbour search
//!    over sentence embeddings ([`align::embed`]).
//! 2. **Finetuning**: the aligned pairs become `[SEP]`-joined training lines
//!    for a generative model (the model itself lives behind [`translate::Generator`]).
//! 3. **Generation**: every open triple is translated into up to `k` candidate
//!    closed triples, which are parsed and filtered ([`translate`]).
//! 4. **Ranking**: candidates generated by several open triples corroborate
//!    each other and are aggregated into a ranked closed KB ([`score`]).
//!
//! Two baselines ([`manual`], [`rulemine`]) and the automatic evaluation
//! suite ([`metrics`]) sit alongside; [`pipeline`] wires everything together.
//!
//! With the default `parallel` feature the data-parallel loops run on rayon;
//! without it every loop runs sequentially with identical output.

pub mod align;
pub mod embed;
pub mod error;
pub mod index;
pub mod kb;
pub mod manual;
pub mod metrics;
pub mod normalize;
pub mod par;
pub mod pipeline;
pub mod rulemine;
pub mod score;
pub mod sidecar;
pub mod translate;

pub use error::{Error, Result};
pub use index::ClosedIndex;
pub use kb::{ClosedKb, ClosedTriple, OpenKb, OpenTriple, RelationSchema};
pub use normalize::{normalize_phrase, NormalizedPhrase};
