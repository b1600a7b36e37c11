//! Corroborative scoring of generated closed triples.
//!
//! A closed triple generated by several open triples accumulates one
//! contribution per generating triple:
//!
//! ```text
//! combined:    Σ score(t') / (rank(t', t) + 1)
//! weight_only: Σ score(t')
//! rank_only:   Σ 1 / (rank(t', t) + 1)
//! ```
//!
//! where `score(t')` is the open-KB score of the generating triple and the
//! rank is 0-based.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{parse_closed_line, read_file, write_file, ClosedTriple};
use crate::translate::Generation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    #[default]
    Combined,
    WeightOnly,
    RankOnly,
}

impl ScoreMode {
    pub const ALL: [ScoreMode; 3] = [ScoreMode::Combined, ScoreMode::WeightOnly, ScoreMode::RankOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMode::Combined => "combined",
            ScoreMode::WeightOnly => "weight_only",
            ScoreMode::RankOnly => "rank_only",
        }
    }

    /// Value of one contribution.
    pub fn term(self, open_score: f64, rank: usize) -> f64 {
        let inv_rank = 1.0 / (rank as f64 + 1.0);
        match self {
            ScoreMode::Combined => open_score * inv_rank,
            ScoreMode::WeightOnly => open_score,
            ScoreMode::RankOnly => inv_rank,
        }
    }
}

impl FromStr for ScoreMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "combined" => Ok(ScoreMode::Combined),
            "weight_only" | "weight-only" => Ok(ScoreMode::WeightOnly),
            "rank_only" | "rank-only" => Ok(ScoreMode::RankOnly),
            _ => Err(format!("unknown score mode {s:?} (combined, weight_only, rank_only)")),
        }
    }
}

/// Scores a list of `(open_score, rank)` contributions.
pub fn final_score(contribs: &[(f64, usize)], mode: ScoreMode) -> Result<f64> {
    if contribs.is_empty() {
        return Err(Error::EmptyContributions);
    }
    Ok(contribs.iter().map(|&(s, r)| mode.term(s, r)).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredClosedTriple {
    pub triple: ClosedTriple,
    pub final_score: f64,
    pub support: usize,
}

/// Closed triples in descending score; ties ordered by (subject, relation, object).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedKb {
    pub entries: Vec<ScoredClosedTriple>,
    pub score_mode: ScoreMode,
}

fn rank_order(a: &ScoredClosedTriple, b: &ScoredClosedTriple) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then_with(|| a.triple.cmp(&b.triple))
}

impl RankedKb {
    /// Sorts entries into rank order.
    pub fn from_entries(mut entries: Vec<ScoredClosedTriple>, score_mode: ScoreMode) -> Self {
        entries.sort_by(rank_order);
        RankedKb { entries, score_mode }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = &ClosedTriple> {
        self.entries.iter().map(|e| &e.triple)
    }

    /// `subject<TAB>relation<TAB>object<TAB>final_score<TAB>support`
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let t = &e.triple;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                t.subject, t.relation, t.object, e.final_score, e.support
            );
        }
        out
    }

    pub fn parse_tsv(name: &str, text: &str, score_mode: ScoreMode) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse(name, i + 1, m);
            let mut parts = line.rsplitn(3, '\t');
            let support = parts.next().unwrap_or_default();
            let score = parts.next().ok_or_else(|| err("missing field".into()))?;
            let triple_text = parts.next().ok_or_else(|| err("missing field".into()))?;
            let triple = parse_closed_line(triple_text).map_err(err)?;
            let final_score = score
                .parse::<f64>()
                .map_err(|e| err(format!("bad score {score:?}: {e}")))?;
            let support = support
                .parse::<usize>()
                .map_err(|e| err(format!("bad support {support:?}: {e}")))?;
            entries.push(ScoredClosedTriple {
                triple,
                final_score,
                support,
            });
        }
        Ok(RankedKb::from_entries(entries, score_mode))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_tsv().as_bytes())
    }

    pub fn load(path: impl AsRef<Path>, score_mode: ScoreMode) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_tsv(&path.display().to_string(), &read_file(path)?, score_mode)
    }
}

/// Groups generations by closed triple and ranks the groups.
///
/// Contributions within a group are summed in sorted order, so scores are
/// bit-identical for any permutation of the input.
pub fn aggregate(generations: &[Generation], mode: ScoreMode) -> RankedKb {
    let mut groups: HashMap<&ClosedTriple, Vec<(f64, usize)>> = HashMap::new();
    for g in generations {
        groups
            .entry(&g.candidate)
            .or_default()
            .push((g.source.score, g.rank));
    }
    let groups: Vec<(&ClosedTriple, Vec<(f64, usize)>)> = groups.into_iter().collect();
    let entries = crate::par::map(&groups, |(triple, contribs)| {
        let mut contribs = contribs.clone();
        contribs.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
        ScoredClosedTriple {
            triple: (*triple).clone(),
            final_score: final_score(&contribs, mode).expect("groups are nonempty"),
            support: contribs.len(),
        }
    });
    RankedKb::from_entries(entries, mode)
}
