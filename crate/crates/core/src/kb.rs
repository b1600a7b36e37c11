//! Triples, relation schemas and the TSV formats they are stored in.
//!
//! * open KB: `subject<TAB>predicate<TAB>object[<TAB>score]`
//! * closed KB: `subject<TAB>relation<TAB>object`
//! * schema: one relation per line, a leading `!` marks an inverse sense
//!
//! All files are UTF-8 with LF line endings and no header. Blank lines are
//! skipped.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::phrase_key;

/// A free-form triple from an open KB, with its confidence score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenTriple {
    #[serde(rename = "s")]
    pub subject: String,
    #[serde(rename = "p")]
    pub predicate: String,
    #[serde(rename = "o")]
    pub object: String,
    #[serde(default = "default_score")]
    pub score: f64,
}

fn default_score() -> f64 {
    1.0
}

impl OpenTriple {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Self::with_score(subject, predicate, object, 1.0)
    }

    pub fn with_score(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
        score: f64,
    ) -> Self {
        OpenTriple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
            score,
        }
    }

    /// Identity of the triple ignoring its score.
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.subject, &self.predicate, &self.object)
    }

    /// `predicate + " " + object`, the phrase used by the
    /// predicate-in-object patterns and the CapableOf fallback.
    pub fn predicate_object(&self) -> String {
        format!("{} {}", self.predicate, self.object)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for (name, field) in [
            ("subject", &self.subject),
            ("predicate", &self.predicate),
            ("object", &self.object),
        ] {
            if field.trim().is_empty() {
                return Err(format!("empty {name}"));
            }
        }
        if !(self.score >= 0.0 && self.score.is_finite()) {
            return Err(format!("score must be a finite nonnegative number, got {}", self.score));
        }
        Ok(())
    }
}

/// A triple whose relation comes from a [`RelationSchema`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClosedTriple {
    #[serde(rename = "s")]
    pub subject: String,
    #[serde(rename = "r")]
    pub relation: String,
    #[serde(rename = "o")]
    pub object: String,
}

impl ClosedTriple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        ClosedTriple {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }

    /// True if subject and object normalize to the same phrase.
    pub fn is_degenerate(&self) -> bool {
        phrase_key(&self.subject) == phrase_key(&self.object)
    }

    /// Checks the closed-triple invariants against `schema`.
    pub fn validate(&self, schema: &RelationSchema) -> std::result::Result<(), String> {
        if self.subject.trim().is_empty() || self.object.trim().is_empty() {
            return Err("empty subject or object".into());
        }
        if !schema.contains(&self.relation) {
            return Err(format!("relation {:?} is not in the schema", self.relation));
        }
        if self.is_degenerate() {
            return Err("subject and object normalize to the same phrase".into());
        }
        Ok(())
    }

    /// Identity used for deduplication inside a closed KB.
    pub fn normalized_key(&self) -> (String, String, String) {
        (
            phrase_key(&self.subject),
            self.relation.clone(),
            phrase_key(&self.object),
        )
    }
}

/// The closed set of relation names.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationSchema {
    relations: Vec<String>,
    lookup: HashMap<String, usize>,
    inverse: HashSet<String>,
}

impl RelationSchema {
    pub fn new<I, S>(relations: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut schema = RelationSchema::default();
        for r in relations {
            schema.push(r.into(), false)?;
        }
        Ok(schema)
    }

    fn push(&mut self, name: String, inverse: bool) -> Result<()> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::Schema(format!("invalid relation name {name:?}")));
        }
        if self.lookup.contains_key(&name) {
            return Err(Error::Schema(format!("duplicate relation {name:?}")));
        }
        if inverse {
            self.inverse.insert(name.clone());
        }
        self.lookup.insert(name.clone(), self.relations.len());
        self.relations.push(name);
        Ok(())
    }

    /// Marks an existing relation as having an inverse sense.
    pub fn mark_inverse(&mut self, name: &str) -> Result<()> {
        if !self.contains(name) {
            return Err(Error::Schema(format!("cannot mark unknown relation {name:?}")));
        }
        self.inverse.insert(name.to_owned());
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut schema = RelationSchema::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line.strip_prefix('!') {
                Some(name) => schema.push(name.trim().to_owned(), true)?,
                None => schema.push(line.to_owned(), false)?,
            }
        }
        if schema.relations.is_empty() {
            return Err(Error::Schema("schema has no relations".into()));
        }
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn contains(&self, relation: &str) -> bool {
        self.lookup.contains_key(relation)
    }

    pub fn has_inverse(&self, relation: &str) -> bool {
        self.inverse.contains(relation)
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OpenKb {
    pub name: String,
    pub triples: Vec<OpenTriple>,
}

impl OpenKb {
    pub fn new(name: impl Into<String>, triples: Vec<OpenTriple>) -> Self {
        OpenKb {
            name: name.into(),
            triples,
        }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut triples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            let score = match fields.len() {
                3 => 1.0,
                4 => fields[3].trim().parse::<f64>().map_err(|e| {
                    Error::parse(name, lineno, format!("bad score {:?}: {e}", fields[3]))
                })?,
                n if n < 3 => return Err(Error::parse(name, lineno, "missing field")),
                _ => return Err(Error::parse(name, lineno, "too many fields")),
            };
            let t = OpenTriple::with_score(fields[0], fields[1], fields[2], score);
            t.validate().map_err(|m| Error::parse(name, lineno, m))?;
            triples.push(t);
        }
        Ok(OpenKb::new(name, triples))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    /// Canonical TSV: single tabs, score always rendered.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", t.subject, t.predicate, t.object, t.score);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_tsv().as_bytes())
    }
}

/// A closed KB: no duplicates after normalization, every relation in the schema.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClosedKb {
    pub name: String,
    triples: Vec<ClosedTriple>,
}

/// Lines dropped while loading a closed KB.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClosedLoadStats {
    pub unknown_relation: usize,
    pub degenerate: usize,
    pub duplicates: usize,
}

impl ClosedLoadStats {
    pub fn warnings(&self) -> usize {
        self.unknown_relation + self.degenerate
    }
}

impl ClosedKb {
    /// Builds a closed KB, dropping invalid and duplicate triples (first kept).
    pub fn from_triples(
        name: impl Into<String>,
        triples: impl IntoIterator<Item = ClosedTriple>,
        schema: &RelationSchema,
    ) -> (Self, ClosedLoadStats) {
        let mut stats = ClosedLoadStats::default();
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for t in triples {
            if !schema.contains(&t.relation) {
                stats.unknown_relation += 1;
                continue;
            }
            if t.is_degenerate() {
                stats.degenerate += 1;
                continue;
            }
            if !seen.insert(t.normalized_key()) {
                stats.duplicates += 1;
                continue;
            }
            kept.push(t);
        }
        (
            ClosedKb {
                name: name.into(),
                triples: kept,
            },
            stats,
        )
    }

    pub fn parse(name: &str, text: &str, schema: &RelationSchema) -> Result<(Self, ClosedLoadStats)> {
        let mut raw = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let t = parse_closed_line(line).map_err(|m| Error::parse(name, i + 1, m))?;
            raw.push(t);
        }
        let (kb, stats) = Self::from_triples(name, raw, schema);
        if stats.warnings() > 0 {
            log::warn!(
                "{name}: skipped {} triples with unknown relations and {} with identical subject and object",
                stats.unknown_relation,
                stats.degenerate
            );
        }
        Ok((kb, stats))
    }

    pub fn load(path: impl AsRef<Path>, schema: &RelationSchema) -> Result<(Self, ClosedLoadStats)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text, schema)
    }

    pub fn triples(&self) -> &[ClosedTriple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            let _ = writeln!(out, "{}\t{}\t{}", t.subject, t.relation, t.object);
        }
        out
    }
}

pub(crate) fn parse_closed_line(line: &str) -> std::result::Result<ClosedTriple, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    match fields.len() {
        3 => {}
        n if n < 3 => return Err("missing field".into()),
        _ => return Err("too many fields".into()),
    }
    if fields.iter().any(|f| f.trim().is_empty()) {
        return Err("empty field".into());
    }
    Ok(ClosedTriple::new(fields[0], fields[1], fields[2]))
}

pub fn load_open_kb(path: impl AsRef<Path>) -> Result<OpenKb> {
    OpenKb::load(path)
}

pub fn load_closed_kb(path: impl AsRef<Path>, schema: &RelationSchema) -> Result<(ClosedKb, ClosedLoadStats)> {
    ClosedKb::load(path, schema)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
