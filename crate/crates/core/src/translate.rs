//! Generative translation of open triples into closed triples.
//!
//! Training lines and prompts share one format:
//!
//! ```text
//! fish, live in, water [SEP] fish, AtLocation, water
//! ```
//!
//! A prompt is the left half plus the trailing ` [SEP] ` marker; the generator
//! completes the right half. Its top-`k` outputs are parsed back into closed
//! triples, ill-formed ones are rejected, and candidates whose subject and
//! object normalize to the same phrase are dropped.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::align::{serialize_triple, Alignment};
use crate::embed::fnv1a;
use crate::error::{Error, Result};
use crate::kb::{read_file, write_file, ClosedTriple, OpenKb, OpenTriple, RelationSchema};
use crate::normalize::lemmatize_phrase;
use crate::par;

pub const SEP: &str = "[SEP]";

/// One generator output for a prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub score: f64,
    pub rank: usize,
}

/// A sequence generator returning up to `k` ranked candidates per prompt.
pub trait Generator: Sync {
    fn generate(&self, prompts: &[String], k: usize) -> Result<Vec<Vec<Candidate>>>;
}

impl<G: Generator + ?Sized> Generator for &G {
    fn generate(&self, prompts: &[String], k: usize) -> Result<Vec<Vec<Candidate>>> {
        (**self).generate(prompts, k)
    }
}

impl<G: Generator + ?Sized> Generator for Box<G> {
    fn generate(&self, prompts: &[String], k: usize) -> Result<Vec<Vec<Candidate>>> {
        (**self).generate(prompts, k)
    }
}

/// A parsed, filtered candidate together with the open triple it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub source: OpenTriple,
    pub candidate: ClosedTriple,
    pub rank: usize,
    pub gen_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Arity,
    EmptyField,
    UnknownRelation,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::Arity => "arity",
            Rejection::EmptyField => "empty_field",
            Rejection::UnknownRelation => "unknown_relation",
        })
    }
}

pub fn format_training_example(a: &Alignment) -> String {
    format!("{} {SEP} {}", serialize_triple(&a.open), serialize_triple(&a.closed))
}

pub fn format_prompt(t: &OpenTriple) -> String {
    format!("{} {SEP} ", serialize_triple(t))
}

/// Splits `s, r, o` on the first and last `, `. Fields are trimmed.
pub fn split_triple_text(text: &str) -> std::result::Result<(&str, &str, &str), Rejection> {
    let first = text.find(", ").ok_or(Rejection::Arity)?;
    let last = text.rfind(", ").ok_or(Rejection::Arity)?;
    if first == last {
        return Err(Rejection::Arity);
    }
    let fields = (
        text[..first].trim(),
        text[first + 2..last].trim(),
        text[last + 2..].trim(),
    );
    if fields.0.is_empty() || fields.1.is_empty() || fields.2.is_empty() {
        return Err(Rejection::EmptyField);
    }
    Ok(fields)
}

/// Parses generator output: the text after the last `[SEP]` (or all of it)
/// must be `s, r, o` with `r` in the schema.
pub fn parse_generation(text: &str, schema: &RelationSchema) -> std::result::Result<ClosedTriple, Rejection> {
    let target = match text.rfind(SEP) {
        Some(i) => &text[i + SEP.len()..],
        None => text,
    };
    let (s, r, o) = split_triple_text(target.trim())?;
    if !schema.contains(r) {
        return Err(Rejection::UnknownRelation);
    }
    Ok(ClosedTriple::new(s, r, o))
}

/// A successfully parsed candidate before filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub triple: ClosedTriple,
    pub rank: usize,
    pub gen_score: f64,
}

/// Drops degenerate candidates (subject = object after normalization) and
/// repeated candidates, keeping the lowest rank. Ranks are not renumbered.
pub fn filter_generations(source: &OpenTriple, mut parsed: Vec<Parsed>) -> Vec<Generation> {
    parsed.sort_by_key(|p| p.rank);
    let mut seen = HashSet::new();
    parsed
        .into_iter()
        .filter(|p| !p.triple.is_degenerate())
        .filter(|p| seen.insert(p.triple.clone()))
        .map(|p| Generation {
            source: source.clone(),
            candidate: p.triple,
            rank: p.rank,
            gen_score: p.gen_score,
        })
        .collect()
}

fn check_candidates(prompts: &[String], k: usize, out: &[Vec<Candidate>]) -> std::result::Result<(), String> {
    if out.len() != prompts.len() {
        return Err(format!("{} prompts but {} candidate lists", prompts.len(), out.len()));
    }
    for (i, cands) in out.iter().enumerate() {
        if cands.len() > k {
            return Err(format!("prompt {i}: {} candidates for k = {k}", cands.len()));
        }
        if let Some(j) = cands.iter().enumerate().position(|(j, c)| c.rank != j) {
            return Err(format!("prompt {i}: candidate {j} has rank {}", cands[j].rank));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranslateConfig {
    pub k: usize,
    pub batch_size: usize,
    /// Maximum batches in flight; 0 uses the global pool.
    pub concurrency: usize,
}

impl Default for TranslateConfig {
    fn default() -> Self {
        TranslateConfig {
            k: 10,
            batch_size: 64,
            concurrency: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Translation {
    pub generations: Vec<Generation>,
    /// Parse failures by reason.
    pub rejected: BTreeMap<Rejection, usize>,
    /// Well-formed candidates dropped as degenerate or repeated.
    pub filtered: usize,
}

/// Translates every open triple; output follows open-KB order.
pub fn translate_kb<G: Generator + ?Sized>(
    open_kb: &OpenKb,
    generator: &G,
    schema: &RelationSchema,
    config: TranslateConfig,
) -> Result<Translation> {
    if config.k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let batches = par::with_threads(config.concurrency, || {
        par::map_chunks(&open_kb.triples, config.batch_size, |b, chunk| {
            let prompts: Vec<String> = chunk.iter().map(format_prompt).collect();
            let err = |message: String| Error::Generation { batch: b, message };
            let out = generator.generate(&prompts, config.k).map_err(|e| match e {
                Error::Generation { message, .. } => err(message),
                other => err(other.to_string()),
            })?;
            check_candidates(&prompts, config.k, &out).map_err(err)?;
            Ok::<_, Error>(translate_batch(chunk, out, schema))
        })
    });
    let mut result = Translation::default();
    for batch in batches {
        let part: Translation = batch?;
        result.generations.extend(part.generations);
        result.filtered += part.filtered;
        for (reason, n) in part.rejected {
            *result.rejected.entry(reason).or_default() += n;
        }
    }
    Ok(result)
}

fn translate_batch(sources: &[OpenTriple], out: Vec<Vec<Candidate>>, schema: &RelationSchema) -> Translation {
    let mut part = Translation::default();
    for (source, cands) in sources.iter().zip(out) {
        let mut parsed = Vec::with_capacity(cands.len());
        for c in cands {
            match parse_generation(&c.text, schema) {
                Ok(triple) => parsed.push(Parsed {
                    triple,
                    rank: c.rank,
                    gen_score: c.score,
                }),
                Err(reason) => *part.rejected.entry(reason).or_default() += 1,
            }
        }
        let n = parsed.len();
        let kept = filter_generations(source, parsed);
        part.filtered += n - kept.len();
        part.generations.extend(kept);
    }
    part
}

pub fn generations_to_jsonl(generations: &[Generation]) -> Result<String> {
    let mut out = String::new();
    for g in generations {
        out.push_str(&serde_json::to_string(g)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_generations(path: impl AsRef<Path>, generations: &[Generation]) -> Result<()> {
    write_file(path.as_ref(), generations_to_jsonl(generations)?.as_bytes())
}

pub fn load_generations(path: impl AsRef<Path>) -> Result<Vec<Generation>> {
    let path = path.as_ref();
    let name = path.display().to_string();
    read_file(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(&name, i + 1, e.to_string())))
        .collect()
}

/// Deterministic stand-in for a trained generator.
///
/// Candidates repeat the prompt and append a closed triple built from the
/// open triple found in the prompt, so that `[SEP]` parsing is exercised.
#[derive(Debug, Clone)]
pub struct MockGenerator {
    mode: MockMode,
    max_candidates: usize,
}

#[derive(Debug, Clone)]
enum MockMode {
    /// `s, <relation>, p o` at rank 0 only.
    Echo(String),
    /// Cycles through five templates; the relation is picked by hashing the
    /// lemmatized predicate, so open triples sharing a predicate agree.
    Hashed { relations: Vec<String>, fallback: String },
}

impl MockGenerator {
    pub fn echo(relation: impl Into<String>) -> Self {
        MockGenerator {
            mode: MockMode::Echo(relation.into()),
            max_candidates: 1,
        }
    }

    pub fn hashed(schema: &RelationSchema) -> Self {
        let relations = schema.relations().to_vec();
        let fallback = if schema.contains("CapableOf") {
            "CapableOf".to_owned()
        } else {
            relations[0].clone()
        };
        MockGenerator {
            mode: MockMode::Hashed { relations, fallback },
            max_candidates: usize::MAX,
        }
    }

    /// Caps the number of candidates per prompt regardless of `k`.
    pub fn with_max_candidates(mut self, n: usize) -> Self {
        self.max_candidates = n;
        self
    }

    fn candidates(&self, prompt: &str, k: usize) -> Vec<Candidate> {
        let left = prompt.trim_end().strip_suffix(SEP).unwrap_or(prompt).trim();
        let n = k.min(self.max_candidates);
        let Ok((s, p, o)) = split_triple_text(left) else {
            return (0..n.min(1))
                .map(|rank| Candidate {
                    text: format!("{prompt}{left}"),
                    score: 0.0,
                    rank,
                })
                .collect();
        };
        let texts: Vec<String> = match &self.mode {
            MockMode::Echo(rel) => vec![format!("{s}, {rel}, {p} {o}")],
            MockMode::Hashed { relations, fallback } => {
                let h = fnv1a(lemmatize_phrase(p).join(" ").as_bytes());
                (0..n.min(64))
                    .map(|j| {
                        let rel = &relations[((h as usize) ^ j) % relations.len()];
                        match j % 5 {
                            0 => format!("{s}, {rel}, {o}"),
                            1 => format!("{s}, {fallback}, {p} {o}"),
                            2 => format!("{o}, {rel}, {s}"),
                            3 => format!("{s}, {rel}, {s}"),
                            _ => format!("{s}, {rel}"),
                        }
                    })
                    .collect()
            }
        };
        texts
            .into_iter()
            .take(n)
            .enumerate()
            .map(|(rank, t)| Candidate {
                text: format!("{prompt}{t}"),
                score: 0.0 - rank as f64 * 0.5,
                rank,
            })
            .collect()
    }
}

impl Generator for MockGenerator {
    fn generate(&self, prompts: &[String], k: usize) -> Result<Vec<Vec<Candidate>>> {
        Ok(prompts.iter().map(|p| self.candidates(p, k)).collect())
    }
}
