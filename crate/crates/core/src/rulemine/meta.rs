//! Meta-KB construction from rule-based alignments.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::{predicate_tokens, top_tokens, Taxonomy, CONTAINS, INOBJ, INSUBJ, ISA};
use crate::align::{AlignMethod, AlignmentSet};
use crate::error::{Error, Result};
use crate::kb::OpenKb;
use crate::normalize::{normalize_phrase, NormalizedPhrase};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaConfig {
    /// How many frequent predicate tokens may appear in CONTAINS facts.
    pub top_tokens: usize,
    /// A hypernym needs at least this many ISA facts to be kept...
    pub isa_min_count: usize,
    /// ...and must occur in strictly less than this fraction of mappings.
    pub isa_max_fraction: f64,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            top_tokens: 100,
            isa_min_count: 10,
            isa_max_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Fact {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Fact {
    fn new(subject: impl Into<String>, relation: impl Into<String>, object: impl Into<String>) -> Self {
        Fact {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }
}

/// One reified mapping. Index 0 of the per-term arrays is the closed subject,
/// index 1 the closed object.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaMapping {
    pub id: String,
    pub terms: [String; 2],
    pub relation: String,
    pub insubj: [bool; 2],
    pub inobj: [bool; 2],
    /// Hypernyms that survived the frequency filter, sorted.
    pub isa: [Vec<String>; 2],
    /// Frequent tokens found in the open predicate, sorted.
    pub contains: Vec<String>,
}

impl MetaMapping {
    /// `term+M`
    pub fn term_id(&self, k: usize) -> String {
        format!("{}+{}", self.terms[k], self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetaKb {
    pub mappings: Vec<MetaMapping>,
    pub facts: Vec<Fact>,
    /// Tokens eligible for CONTAINS atoms, most frequent first.
    pub top_tokens: Vec<String>,
    /// Hypernyms kept by the ISA frequency filter, sorted.
    pub hypernyms: Vec<String>,
}

impl MetaKb {
    pub fn mapping_ids(&self) -> HashSet<&str> {
        self.mappings.iter().map(|m| m.id.as_str()).collect()
    }

    /// One fact per line, tab separated.
    pub fn facts_tsv(&self) -> String {
        let mut out = String::new();
        for f in &self.facts {
            let _ = writeln!(out, "{}\t{}\t{}", f.subject, f.relation, f.object);
        }
        out
    }
}

/// True if `x` (normalized) occurs as a contiguous run inside `y`.
pub fn matches(x: &NormalizedPhrase, y: &NormalizedPhrase) -> bool {
    x.is_contiguous_in(y)
}

pub fn build_meta_kb<T: Taxonomy + ?Sized>(
    alignments: &AlignmentSet,
    taxonomy: &T,
    open_kb: &OpenKb,
    config: MetaConfig,
) -> Result<MetaKb> {
    if let Some(a) = alignments.iter().find(|a| !matches!(a.method, AlignMethod::Rule(_))) {
        return Err(Error::Invalid(format!(
            "the meta-KB is built from rule-based alignments only, found a {} alignment",
            a.method.label()
        )));
    }
    let tokens = top_tokens(open_kb, config.top_tokens);
    let token_set: HashSet<&str> = tokens.iter().map(String::as_str).collect();

    struct Raw {
        mapping: MetaMapping,
        hypernyms: [Vec<String>; 2],
    }
    let raws: Vec<Raw> = crate::par::map_indexed(alignments.alignments(), |i, a| {
        let s = normalize_phrase(&a.open.subject);
        let o = normalize_phrase(&a.open.object);
        let terms = [a.closed.subject.clone(), a.closed.object.clone()];
        let norm = [normalize_phrase(&terms[0]), normalize_phrase(&terms[1])];
        let present: BTreeSet<String> = predicate_tokens(&a.open.predicate)
            .into_iter()
            .filter(|t| token_set.contains(t.as_str()))
            .collect();
        Raw {
            mapping: MetaMapping {
                id: format!("M{}", i + 1),
                insubj: [matches(&norm[0], &s), matches(&norm[1], &s)],
                inobj: [matches(&norm[0], &o), matches(&norm[1], &o)],
                isa: [Vec::new(), Vec::new()],
                contains: present.into_iter().collect(),
                relation: a.closed.relation.clone(),
                terms: terms.clone(),
            },
            hypernyms: [taxonomy.hypernyms(&terms[0]), taxonomy.hypernyms(&terms[1])],
        }
    });

    // ISA frequency filter over the whole meta-KB.
    let mut occurrences: HashMap<&str, usize> = HashMap::new();
    let mut in_mappings: HashMap<&str, usize> = HashMap::new();
    for raw in &raws {
        let mut seen = HashSet::new();
        for h in raw.hypernyms.iter().flatten() {
            *occurrences.entry(h).or_default() += 1;
            if seen.insert(h.as_str()) {
                *in_mappings.entry(h).or_default() += 1;
            }
        }
    }
    let n = raws.len();
    let kept: HashSet<&str> = occurrences
        .iter()
        .filter(|&(h, &count)| {
            count >= config.isa_min_count && (in_mappings[h] as f64) < config.isa_max_fraction * n as f64
        })
        .map(|(h, _)| *h)
        .collect();
    let mut hypernyms: Vec<String> = kept.iter().map(|h| h.to_string()).collect();
    hypernyms.sort();

    let mut mappings = Vec::with_capacity(n);
    let mut facts = Vec::new();
    for raw in &raws {
        let mut m = raw.mapping.clone();
        for k in 0..2 {
            let mut hs: Vec<String> = raw.hypernyms[k]
                .iter()
                .filter(|h| kept.contains(h.as_str()))
                .cloned()
                .collect();
            hs.sort();
            hs.dedup();
            m.isa[k] = hs;
        }
        facts.push(Fact::new(m.term_id(0), &m.relation, m.term_id(1)));
        for k in 0..2 {
            if m.insubj[k] {
                facts.push(Fact::new(&m.id, INSUBJ, m.term_id(k)));
            }
        }
        for k in 0..2 {
            if m.inobj[k] {
                facts.push(Fact::new(&m.id, INOBJ, m.term_id(k)));
            }
        }
        for k in 0..2 {
            for h in &m.isa[k] {
                facts.push(Fact::new(m.term_id(k), ISA, h));
            }
        }
        for t in &m.contains {
            facts.push(Fact::new(&m.id, CONTAINS, t));
        }
        mappings.push(m);
    }
    Ok(MetaKb {
        mappings,
        facts,
        top_tokens: tokens,
        hypernyms,
    })
}
