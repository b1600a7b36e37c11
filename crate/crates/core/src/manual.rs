//! Manual-mapping baseline: a hand-written predicate → relation table.
//!
//! Table file rows are `predicate<TAB>relation[<TAB>inv]`. An `inv` row maps
//! `(s, p, o)` to `(o, r, s)`. Predicates without an entry fall back to
//! `(s, CapableOf, p o)` unless the fallback is disabled.
//!
//! Keys are lemmatized predicates with stopwords kept, so "lives in" and
//! "live in" share an entry while "live in" and "live on" stay distinct.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kb::{read_file, ClosedTriple, OpenKb, OpenTriple, RelationSchema};
use crate::normalize::lemmatize_phrase;
use crate::score::{aggregate, RankedKb, ScoreMode};
use crate::translate::Generation;

pub const DEFAULT_FALLBACK: &str = "CapableOf";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub relation: String,
    pub inverted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManualTable {
    entries: HashMap<String, TableEntry>,
    pub fallback_relation: String,
}

pub fn predicate_key(predicate: &str) -> String {
    lemmatize_phrase(predicate).join(" ")
}

impl ManualTable {
    pub fn new(fallback_relation: impl Into<String>) -> Self {
        ManualTable {
            entries: HashMap::new(),
            fallback_relation: fallback_relation.into(),
        }
    }

    /// Adds an entry; returns false if the normalized predicate was already present.
    pub fn insert(&mut self, predicate: &str, relation: impl Into<String>, inverted: bool) -> bool {
        let key = predicate_key(predicate);
        if self.entries.contains_key(&key) {
            return false;
        }
        self.entries.insert(
            key,
            TableEntry {
                relation: relation.into(),
                inverted,
            },
        );
        true
    }

    pub fn get(&self, predicate: &str) -> Option<&TableEntry> {
        self.entries.get(&predicate_key(predicate))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every relation, including the fallback, must be in the schema.
    pub fn validate(&self, schema: &RelationSchema) -> Result<()> {
        if !schema.contains(&self.fallback_relation) {
            return Err(Error::Schema(format!(
                "fallback relation {:?} is not in the schema",
                self.fallback_relation
            )));
        }
        let mut keys: Vec<_> = self.entries.keys().collect();
        keys.sort();
        for k in keys {
            let r = &self.entries[k].relation;
            if !schema.contains(r) {
                return Err(Error::Schema(format!("table entry {k:?} uses unknown relation {r:?}")));
            }
        }
        Ok(())
    }

    pub fn parse(name: &str, text: &str, schema: &RelationSchema) -> Result<Self> {
        let mut table = ManualTable::new(DEFAULT_FALLBACK);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(name, i + 1, m);
            let fields: Vec<&str> = line.split('\t').collect();
            let inverted = match fields.get(2).map(|f| f.trim()) {
                None => false,
                Some("inv") => true,
                Some(other) => return Err(err(format!("third column must be `inv`, got {other:?}"))),
            };
            if fields.len() < 2 || fields.len() > 3 || fields[0].trim().is_empty() {
                return Err(err("expected predicate<TAB>relation[<TAB>inv]".into()));
            }
            let relation = fields[1].trim();
            if !schema.contains(relation) {
                return Err(err(format!("unknown relation {relation:?}")));
            }
            if !table.insert(fields[0], relation, inverted) {
                return Err(err(format!("duplicate entry for predicate {:?}", fields[0])));
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, schema: &RelationSchema) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&path.display().to_string(), &read_file(path)?, schema)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManualOutcome {
    Table,
    Fallback,
    Unmatched,
    /// A mapping was found but its subject and object coincide.
    Degenerate { from_table: bool },
}

/// Maps one open triple; `None` when unmatched or degenerate.
pub fn map_manual(t: &OpenTriple, table: &ManualTable, use_fallback: bool) -> Option<ClosedTriple> {
    map_manual_with_outcome(t, table, use_fallback).0
}

pub fn map_manual_with_outcome(
    t: &OpenTriple,
    table: &ManualTable,
    use_fallback: bool,
) -> (Option<ClosedTriple>, ManualOutcome) {
    let (triple, from_table) = match table.get(&t.predicate) {
        Some(e) if e.inverted => (ClosedTriple::new(&t.object, &e.relation, &t.subject), true),
        Some(e) => (ClosedTriple::new(&t.subject, &e.relation, &t.object), true),
        None if use_fallback => (
            ClosedTriple::new(&t.subject, &table.fallback_relation, t.predicate_object()),
            false,
        ),
        None => return (None, ManualOutcome::Unmatched),
    };
    if triple.is_degenerate() {
        return (None, ManualOutcome::Degenerate { from_table });
    }
    let outcome = if from_table {
        ManualOutcome::Table
    } else {
        ManualOutcome::Fallback
    };
    (Some(triple), outcome)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ManualReport {
    pub total: usize,
    pub table: usize,
    pub fallback: usize,
    pub unmatched: usize,
    pub degenerate: usize,
    /// Triples whose predicate has a table entry (including degenerate ones).
    pub covered: usize,
}

impl ManualReport {
    /// Fraction of open triples whose predicate is in the table.
    pub fn coverage(&self) -> Option<f64> {
        (self.total > 0).then(|| self.covered as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManualMapping {
    /// One rank-0 generation per mapped triple, in open-KB order.
    pub generations: Vec<Generation>,
    pub report: ManualReport,
}

impl ManualMapping {
    /// Each mapped triple carries its open triple's score; duplicates sum.
    pub fn ranked(&self) -> RankedKb {
        aggregate(&self.generations, ScoreMode::WeightOnly)
    }
}

pub fn map_manual_kb(open_kb: &OpenKb, table: &ManualTable, use_fallback: bool) -> ManualMapping {
    let outcomes = crate::par::map(&open_kb.triples, |t| map_manual_with_outcome(t, table, use_fallback));
    let mut report = ManualReport {
        total: open_kb.len(),
        ..Default::default()
    };
    let mut generations = Vec::new();
    for (t, (mapped, outcome)) in open_kb.triples.iter().zip(outcomes) {
        match outcome {
            ManualOutcome::Table => {
                report.table += 1;
                report.covered += 1;
            }
            ManualOutcome::Fallback => report.fallback += 1,
            ManualOutcome::Unmatched => report.unmatched += 1,
            ManualOutcome::Degenerate { from_table } => {
                report.degenerate += 1;
                report.covered += usize::from(from_table);
            }
        }
        if let Some(candidate) = mapped {
            generations.push(Generation {
                source: t.clone(),
                candidate,
                rank: 0,
                gen_score: 0.0,
            });
        }
    }
    ManualMapping { generations, report }
}
