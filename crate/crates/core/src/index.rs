//! Lookup tables over a closed KB keyed by normalized phrases.

use std::collections::HashMap;

use crate::kb::{ClosedKb, ClosedTriple};
use crate::normalize::phrase_key;

/// Read-only index of a [`ClosedKb`] by normalized (subject, object) and by
/// normalized subject. Postings hold KB positions in input order.
#[derive(Debug, Clone)]
pub struct ClosedIndex<'kb> {
    kb: &'kb ClosedKb,
    by_so: HashMap<String, Vec<usize>>,
    by_s: HashMap<String, Vec<usize>>,
}

impl<'kb> ClosedIndex<'kb> {
    pub fn build(kb: &'kb ClosedKb) -> Self {
        let mut by_so: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_s: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, t) in kb.triples().iter().enumerate() {
            let s = phrase_key(&t.subject);
            let o = phrase_key(&t.object);
            by_s.entry(s.clone()).or_default().push(i);
            by_so.entry(so_key(&s, &o)).or_default().push(i);
        }
        ClosedIndex { kb, by_so, by_s }
    }

    pub fn kb(&self) -> &'kb ClosedKb {
        self.kb
    }

    /// Positions of closed triples whose normalized subject and object keys
    /// are `s_key` and `o_key`.
    pub fn positions_so(&self, s_key: &str, o_key: &str) -> &[usize] {
        self.by_so
            .get(&so_key(s_key, o_key))
            .map_or(&[], Vec::as_slice)
    }

    pub fn lookup_so(&self, s_key: &str, o_key: &str) -> impl Iterator<Item = &'kb ClosedTriple> + '_ {
        let triples = self.kb.triples();
        self.positions_so(s_key, o_key).iter().map(move |&i| &triples[i])
    }

    pub fn lookup_s(&self, s_key: &str) -> impl Iterator<Item = &'kb ClosedTriple> + '_ {
        let triples = self.kb.triples();
        self.by_s
            .get(s_key)
            .map_or(&[][..], Vec::as_slice)
            .iter()
            .map(move |&i| &triples[i])
    }

    pub fn is_empty(&self) -> bool {
        self.by_s.is_empty()
    }

    pub fn so_keys(&self) -> usize {
        self.by_so.len()
    }
}

// Normalized keys are alphanumeric tokens joined by spaces, so a tab cannot
// occur inside either half.
fn so_key(s: &str, o: &str) -> String {
    format!("{s}\t{o}")
}

pub fn index_closed_kb(kb: &ClosedKb) -> ClosedIndex<'_> {
    ClosedIndex::build(kb)
}
