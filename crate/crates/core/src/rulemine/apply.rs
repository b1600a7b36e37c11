//! Applying mined rules to open triples.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use super::meta::matches;
use super::rules::{MappingView, Rule};
use super::{predicate_tokens, Taxonomy};
use crate::kb::{ClosedTriple, OpenKb};
use crate::normalize::normalize_phrase;
use crate::score::{RankedKb, ScoreMode, ScoredClosedTriple};

/// One head instantiation, with the rule and open triple that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleApplication {
    pub candidate: ClosedTriple,
    /// Rule confidence × open-triple score.
    pub score: f64,
    /// Index into the rule list.
    pub rule: usize,
    /// Index into the open KB.
    pub source: usize,
}

/// Treats each open triple as an unlabeled mapping whose terms are its
/// subject and object, and instantiates every rule head whose body holds.
/// Degenerate candidates are skipped. Output is ordered by open triple,
/// then rule, then binding (`?a` = subject first).
pub fn apply_rules<T: Taxonomy + ?Sized>(
    rules: &[Rule],
    open_kb: &OpenKb,
    taxonomy: &T,
    top_tokens: &[String],
) -> Vec<RuleApplication> {
    if rules.is_empty() {
        return Vec::new();
    }
    let token_set: HashSet<&str> = top_tokens.iter().map(String::as_str).collect();
    crate::par::map_indexed(&open_kb.triples, |source, t| {
        let terms = [t.subject.as_str(), t.object.as_str()];
        let s = normalize_phrase(t.subject.as_str());
        let o = normalize_phrase(t.object.as_str());
        let isa = [taxonomy.hypernyms(terms[0]), taxonomy.hypernyms(terms[1])];
        let contains: Vec<String> = predicate_tokens(&t.predicate)
            .into_iter()
            .filter(|tok| token_set.contains(tok.as_str()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let view = MappingView {
            insubj: [true, matches(&o, &s)],
            inobj: [matches(&s, &o), true],
            isa: [&isa[0], &isa[1]],
            contains: &contains,
        };
        let mut out = Vec::new();
        for (ri, rule) in rules.iter().enumerate() {
            for (a, b) in [(0, 1), (1, 0)] {
                if !rule.body.holds(&view, a, b) {
                    continue;
                }
                let candidate = ClosedTriple::new(terms[a], &rule.relation, terms[b]);
                if candidate.is_degenerate() {
                    continue;
                }
                out.push(RuleApplication {
                    candidate,
                    score: rule.confidence * t.score,
                    rule: ri,
                    source,
                });
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Ranks rule outputs: each open triple contributes its best score for a
/// candidate once, and contributions from different open triples add up.
/// `support` counts contributing open triples.
pub fn ranked_from_applications(apps: &[RuleApplication]) -> RankedKb {
    let mut best: HashMap<(usize, &ClosedTriple), f64> = HashMap::new();
    for a in apps {
        let e = best.entry((a.source, &a.candidate)).or_insert(f64::NEG_INFINITY);
        *e = e.max(a.score);
    }
    let mut groups: HashMap<&ClosedTriple, Vec<(usize, f64)>> = HashMap::new();
    for ((source, cand), score) in best {
        groups.entry(cand).or_default().push((source, score));
    }
    let entries = groups
        .into_iter()
        .map(|(triple, mut contribs)| {
            contribs.sort_by_key(|c| c.0);
            ScoredClosedTriple {
                triple: triple.clone(),
                final_score: contribs.iter().map(|c| c.1).sum(),
                support: contribs.len(),
            }
        })
        .collect();
    RankedKb::from_entries(entries, ScoreMode::WeightOnly)
}
