//! Rule-based alignment: an open triple `(s, p, o)` aligns with every closed
//! triple whose normalized (subject, object) equals one of
//!
//! | pattern               | closed subject | closed object |
//! |-----------------------|----------------|---------------|
//! | `standard`            | s              | o             |
//! | `reverse`             | o              | s             |
//! | `pred_in_obj`         | s              | p o           |
//! | `reverse_pred_in_obj` | p o            | s             |
//!
//! Matching compares exact normalized token sequences. A side that normalizes
//! to nothing (all stopwords) never matches.

use crate::align::{AlignMethod, Alignment, AlignmentSet, Pattern};
use crate::index::ClosedIndex;
use crate::kb::{OpenKb, OpenTriple};
use crate::normalize::phrase_key;
use crate::par;

/// Normalized keys of the phrases an open triple can be matched on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenKeys {
    pub subject: String,
    pub object: String,
    pub predicate_object: String,
}

impl OpenKeys {
    pub fn of(t: &OpenTriple) -> Self {
        OpenKeys {
            subject: phrase_key(&t.subject),
            object: phrase_key(&t.object),
            predicate_object: phrase_key(&t.predicate_object()),
        }
    }

    /// The (closed subject key, closed object key) a pattern looks up.
    pub fn pattern_keys(&self, pattern: Pattern) -> (&str, &str) {
        match pattern {
            Pattern::Standard => (&self.subject, &self.object),
            Pattern::Reverse => (&self.object, &self.subject),
            Pattern::PredInObj => (&self.subject, &self.predicate_object),
            Pattern::ReversePredInObj => (&self.predicate_object, &self.subject),
        }
    }
}

/// Alignments of a single open triple, in pattern order then closed-KB order.
pub fn align_triple(t: &OpenTriple, index: &ClosedIndex<'_>) -> Vec<Alignment> {
    let keys = OpenKeys::of(t);
    let mut out = Vec::new();
    for pattern in Pattern::ALL {
        let (s_key, o_key) = keys.pattern_keys(pattern);
        if s_key.is_empty() || o_key.is_empty() {
            continue;
        }
        for closed in index.lookup_so(s_key, o_key) {
            out.push(Alignment::new(t.clone(), closed.clone(), AlignMethod::Rule(pattern)));
        }
    }
    out
}

/// Aligns every open triple against the closed index.
///
/// Output is ordered by open-KB position, then pattern, then closed-KB
/// position; a pair reachable through several patterns keeps the first.
pub fn align_rule_based(open_kb: &OpenKb, index: &ClosedIndex<'_>) -> AlignmentSet {
    let per_triple = par::map(&open_kb.triples, |t| align_triple(t, index));
    AlignmentSet::new("rule", per_triple.into_iter().flatten())
}
