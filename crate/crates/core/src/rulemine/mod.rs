//! Rule-mining baseline.
//!
//! Rule-based alignments are reified into a meta-KB: every mapping `M` from
//! `(s, p, o)` to `(s', p', o')` contributes the facts
//!
//! ```text
//! (s'+M, p', o'+M)
//! (M, INSUBJ, x+M)   for x ∈ {s', o'} matching s
//! (M, INOBJ,  x+M)   for x ∈ {s', o'} matching o
//! (x+M, ISA, h)      for frequent-but-not-ubiquitous hypernyms h of x
//! (M, CONTAINS, t)   for frequent predicate tokens t occurring in p
//! ```
//!
//! Horn rules over these facts are mined with standard confidence and then
//! applied to unseen open triples.

pub mod apply;
pub mod meta;
pub mod rules;

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kb::{read_file, OpenKb};
use crate::normalize::{lemmatize_phrase, phrase_key};

pub use apply::{apply_rules, ranked_from_applications, RuleApplication};
pub use meta::{build_meta_kb, Fact, MetaConfig, MetaKb, MetaMapping};
pub use rules::{load_rules, mine_rules, parse_rules, rules_to_tsv, save_rules, Atom, Body, MineConfig, Rule, Var};

pub const INSUBJ: &str = "INSUBJ";
pub const INOBJ: &str = "INOBJ";
pub const ISA: &str = "ISA";
pub const CONTAINS: &str = "CONTAINS";

pub trait Taxonomy: Sync {
    /// Hypernym identifiers of `term` (e.g. `activity.n.01`), deterministic order.
    fn hypernyms(&self, term: &str) -> Vec<String>;
}

/// Hypernym table loaded from `term<TAB>hypernym_id` rows (already
/// transitively closed). Terms are matched by their normalized key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TsvTaxonomy {
    map: HashMap<String, Vec<String>>,
}

impl TsvTaxonomy {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut map: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((term, hyper)) = line.split_once('\t') else {
                return Err(Error::parse(name, i + 1, "expected term<TAB>hypernym_id"));
            };
            let hyper = hyper.trim();
            if term.trim().is_empty() || hyper.is_empty() || hyper.contains('\t') {
                return Err(Error::parse(name, i + 1, "expected term<TAB>hypernym_id"));
            }
            let entry = map.entry(phrase_key(term)).or_default();
            if !entry.iter().any(|h| h == hyper) {
                entry.push(hyper.to_owned());
            }
        }
        Ok(TsvTaxonomy { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&path.display().to_string(), &read_file(path)?)
    }

    pub fn insert(&mut self, term: &str, hypernym: &str) {
        let entry = self.map.entry(phrase_key(term)).or_default();
        if !entry.iter().any(|h| h == hypernym) {
            entry.push(hypernym.to_owned());
        }
    }
}

impl Taxonomy for TsvTaxonomy {
    fn hypernyms(&self, term: &str) -> Vec<String> {
        let key = phrase_key(term);
        if key.is_empty() {
            return Vec::new();
        }
        self.map.get(&key).cloned().unwrap_or_default()
    }
}

/// A taxonomy that knows nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTaxonomy;

impl Taxonomy for NoTaxonomy {
    fn hypernyms(&self, _term: &str) -> Vec<String> {
        Vec::new()
    }
}

/// Predicate tokens used by CONTAINS atoms: lemmatized, stopwords kept.
pub fn predicate_tokens(predicate: &str) -> Vec<String> {
    lemmatize_phrase(predicate)
}

/// The `n` most frequent predicate tokens of the open KB, ties broken
/// lexicographically. Every occurrence counts.
pub fn top_tokens(open_kb: &OpenKb, n: usize) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for t in &open_kb.triples {
        for tok in predicate_tokens(&t.predicate) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(n).map(|(t, _)| t).collect()
}
