//! Weak-supervision alignments between open and closed triples.
//!
//! Serialized as JSONL, one alignment per line:
//!
//! ```text
//! {"open":{"s":"fish","p":"live in","o":"the ocean","score":1.0},"closed":{"s":"fish","r":"AtLocation","o":"ocean"},"method":"rule","pattern":"standard"}
//! {"open":{...},"closed":{...},"method":"embed-inv","distance":0.083}
//! ```

pub mod embed;
pub mod rule;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{read_file, write_file, ClosedTriple, OpenTriple};

pub use embed::{knn_align, serialize_triple, AlignDirection, KnnConfig};
pub use rule::align_rule_based;

/// The four rule-based matching patterns, in matching order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    /// `s, _, o`
    Standard,
    /// `o, _, s`
    Reverse,
    /// `s, _, p + o`
    PredInObj,
    /// `p + o, _, s`
    ReversePredInObj,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [
        Pattern::Standard,
        Pattern::Reverse,
        Pattern::PredInObj,
        Pattern::ReversePredInObj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Standard => "standard",
            Pattern::Reverse => "reverse",
            Pattern::PredInObj => "pred_in_obj",
            Pattern::ReversePredInObj => "reverse_pred_in_obj",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an alignment was produced. Rule alignments carry their pattern,
/// embedding alignments their cosine distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlignMethod {
    Rule(Pattern),
    Embed { distance: f64 },
    EmbedInv { distance: f64 },
}

impl AlignMethod {
    pub fn label(&self) -> &'static str {
        match self {
            AlignMethod::Rule(_) => "rule",
            AlignMethod::Embed { .. } => "embed",
            AlignMethod::EmbedInv { .. } => "embed-inv",
        }
    }

    pub fn pattern(&self) -> Option<Pattern> {
        match self {
            AlignMethod::Rule(p) => Some(*p),
            _ => None,
        }
    }

    pub fn distance(&self) -> Option<f64> {
        match self {
            AlignMethod::Rule(_) => None,
            AlignMethod::Embed { distance } | AlignMethod::EmbedInv { distance } => Some(*distance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlignmentRecord", into = "AlignmentRecord")]
pub struct Alignment {
    pub open: OpenTriple,
    pub closed: ClosedTriple,
    pub method: AlignMethod,
}

impl Alignment {
    pub fn new(open: OpenTriple, closed: ClosedTriple, method: AlignMethod) -> Self {
        Alignment { open, closed, method }
    }

    fn dedup_key(&self) -> (String, String, String, u64, ClosedTriple) {
        (
            self.open.subject.clone(),
            self.open.predicate.clone(),
            self.open.object.clone(),
            self.open.score.to_bits(),
            self.closed.clone(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct AlignmentRecord {
    open: OpenTriple,
    closed: ClosedTriple,
    method: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pattern: Option<Pattern>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    distance: Option<f64>,
}

impl From<Alignment> for AlignmentRecord {
    fn from(a: Alignment) -> Self {
        AlignmentRecord {
            method: a.method.label().to_owned(),
            pattern: a.method.pattern(),
            distance: a.method.distance(),
            open: a.open,
            closed: a.closed,
        }
    }
}

impl TryFrom<AlignmentRecord> for Alignment {
    type Error = String;

    fn try_from(r: AlignmentRecord) -> std::result::Result<Self, String> {
        let method = match (r.method.as_str(), r.pattern, r.distance) {
            ("rule", Some(p), None) => AlignMethod::Rule(p),
            ("embed", None, Some(d)) => AlignMethod::Embed { distance: d },
            ("embed-inv", None, Some(d)) => AlignMethod::EmbedInv { distance: d },
            ("rule", _, _) => return Err("rule alignments need a pattern and no distance".into()),
            ("embed" | "embed-inv", _, _) => {
                return Err("embedding alignments need a distance and no pattern".into())
            }
            (other, _, _) => return Err(format!("unknown alignment method {other:?}")),
        };
        Ok(Alignment::new(r.open, r.closed, method))
    }
}

/// An ordered list of alignments without duplicate (open, closed) pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentSet {
    alignments: Vec<Alignment>,
    /// Method and parameters that produced the set.
    pub provenance: String,
}

impl AlignmentSet {
    /// Keeps the first occurrence of every (open, closed) pair.
    pub fn new(provenance: impl Into<String>, alignments: impl IntoIterator<Item = Alignment>) -> Self {
        let mut seen = HashSet::new();
        let alignments = alignments
            .into_iter()
            .filter(|a| seen.insert(a.dedup_key()))
            .collect();
        AlignmentSet {
            alignments,
            provenance: provenance.into(),
        }
    }

    pub fn alignments(&self) -> &[Alignment] {
        &self.alignments
    }

    pub fn len(&self) -> usize {
        self.alignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alignments.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Alignment> {
        self.alignments.iter()
    }

    pub fn closed_triples(&self) -> impl Iterator<Item = &ClosedTriple> {
        self.alignments.iter().map(|a| &a.closed)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for a in &self.alignments {
            out.push_str(&serde_json::to_string(a)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn parse_jsonl(name: &str, text: &str) -> Result<Self> {
        let mut alignments = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let a: Alignment =
                serde_json::from_str(line).map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
            alignments.push(a);
        }
        Ok(AlignmentSet::new(format!("file:{name}"), alignments))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_jsonl(&path.display().to_string(), &read_file(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_jsonl()?.as_bytes())
    }
}

impl<'a> IntoIterator for &'a AlignmentSet {
    type Item = &'a Alignment;
    type IntoIter = std::slice::Iter<'a, Alignment>;

    fn into_iter(self) -> Self::IntoIter {
        self.alignments.iter()
    }
}
