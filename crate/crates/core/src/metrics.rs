//! Automatic evaluation of a translated KB against a target closed KB.
//!
//! With `T` the translated triples, `G` the target KB and `D` the closed
//! triples used for training:
//!
//! ```text
//! R_a  = |T ∩ G| / |G|              P_a  = |T ∩ G| / |T|
//! R̄_a  = |T ∩ (G − D)| / |G − D|    P̄_a  = |T ∩ (G − D)| / |T − D|
//! P_a@K = P_a over the top K entries of the ranking
//! MRR  = Σ_{T[i] ∈ G} 1/i  /  Σ_{i=1..|G|} 1/i        (M̄RR: G − D)
//! ```
//!
//! Triples are compared on trimmed, case-folded (subject, relation, object).
//! A metric whose denominator is zero is undefined and renders as `NA`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::hash::Hash;

use serde::{Serialize, Serializer};

use crate::align::AlignmentSet;
use crate::kb::{ClosedTriple, OpenKb, OpenTriple};
use crate::normalize::phrase_key;
use crate::translate::Generation;

pub const DEFAULT_KS: [usize; 4] = [10, 100, 1000, 10000];

/// A metric value, or undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metric(pub Option<f64>);

impl Metric {
    pub const NA: Metric = Metric(None);

    pub fn ratio(num: usize, den: usize) -> Metric {
        Metric((den > 0).then(|| num as f64 / den as f64))
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }
}

impl From<Option<f64>> for Metric {
    fn from(v: Option<f64>) -> Self {
        Metric(v)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:.4}"),
            None => f.write_str("NA"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("NA"),
        }
    }
}

pub type TripleKey = (String, String, String);

pub fn membership_key(t: &ClosedTriple) -> TripleKey {
    let fold = |x: &str| x.trim().to_lowercase();
    (fold(&t.subject), fold(&t.relation), fold(&t.object))
}

fn key_set<'a>(triples: impl IntoIterator<Item = &'a ClosedTriple>) -> HashSet<TripleKey> {
    triples.into_iter().map(membership_key).collect()
}

fn ranked_keys<'a>(triples: impl IntoIterator<Item = &'a ClosedTriple>) -> Vec<TripleKey> {
    triples.into_iter().map(membership_key).collect()
}

fn minus<K: Hash + Eq + Clone>(a: &HashSet<K>, b: &HashSet<K>) -> HashSet<K> {
    a.iter().filter(|k| !b.contains(*k)).cloned().collect()
}

fn overlap<K: Hash + Eq>(a: &HashSet<K>, b: &HashSet<K>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|k| large.contains(*k)).count()
}

/// `Σ_{i=1..n} 1/i`
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

fn mrr_keys<K: Hash + Eq>(ranked: &[K], target: &HashSet<K>) -> Metric {
    if target.is_empty() {
        return Metric::NA;
    }
    let mut seen = HashSet::new();
    let mut num = 0.0;
    for (i, k) in ranked.iter().enumerate() {
        if target.contains(k) && seen.insert(k) {
            num += 1.0 / (i + 1) as f64;
        }
    }
    Metric(Some(num / harmonic(target.len())))
}

fn precision_at_k_keys<K: Hash + Eq + Clone>(ranked: &[K], target: &HashSet<K>, k: usize) -> Metric {
    let top: HashSet<K> = ranked[..k.min(ranked.len())].iter().cloned().collect();
    Metric::ratio(overlap(&top, target), top.len())
}

pub fn automatic_recall(trans: &[ClosedTriple], target: &[ClosedTriple]) -> Metric {
    let (t, g) = (key_set(trans), key_set(target));
    Metric::ratio(overlap(&t, &g), g.len())
}

pub fn automatic_precision(trans: &[ClosedTriple], target: &[ClosedTriple]) -> Metric {
    let (t, g) = (key_set(trans), key_set(target));
    Metric::ratio(overlap(&t, &g), t.len())
}

/// `R̄_a`: recall of the target triples not seen in training.
pub fn recall_bar(trans: &[ClosedTriple], target: &[ClosedTriple], train: &[ClosedTriple]) -> Metric {
    let g = minus(&key_set(target), &key_set(train));
    Metric::ratio(overlap(&key_set(trans), &g), g.len())
}

/// `P̄_a`: precision over the translated triples not seen in training.
pub fn precision_bar(trans: &[ClosedTriple], target: &[ClosedTriple], train: &[ClosedTriple]) -> Metric {
    let d = key_set(train);
    let g = minus(&key_set(target), &d);
    let t = minus(&key_set(trans), &d);
    Metric::ratio(overlap(&t, &g), t.len())
}

/// `P_a` over the first `min(k, len)` ranked triples.
pub fn precision_at_k(ranked: &[ClosedTriple], target: &[ClosedTriple], k: usize) -> Metric {
    precision_at_k_keys(&ranked_keys(ranked), &key_set(target), k)
}

/// `P̄_a` over the first `min(k, len)` ranked triples.
pub fn precision_bar_at_k(ranked: &[ClosedTriple], target: &[ClosedTriple], train: &[ClosedTriple], k: usize) -> Metric {
    precision_bar(&ranked[..k.min(ranked.len())], target, train)
}

/// Generalized MRR with 1-based positions; with `exclude`, the target loses
/// the training triples (M̄RR). Positions always refer to the full ranking,
/// and only the first occurrence of a triple counts.
pub fn generalized_mrr(ranked: &[ClosedTriple], target: &[ClosedTriple], exclude: Option<&[ClosedTriple]>) -> Metric {
    let mut g = key_set(target);
    if let Some(d) = exclude {
        g = minus(&g, &key_set(d));
    }
    mrr_keys(&ranked_keys(ranked), &g)
}

/// `value / reference`; undefined unless both are defined and the reference is positive.
pub fn relative(value: Metric, reference: Metric) -> Metric {
    match (value.0, reference.0) {
        (Some(v), Some(r)) if r > 0.0 => Metric(Some(v / r)),
        _ => Metric::NA,
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MetricValues {
    pub r_a: Metric,
    pub r_a_bar: Metric,
    pub p_a: Metric,
    pub p_a_bar: Metric,
    pub p_at_k: BTreeMap<usize, Metric>,
    pub p_bar_at_k: BTreeMap<usize, Metric>,
    pub mrr: Metric,
    pub mrr_bar: Metric,
}

impl MetricValues {
    fn compute<K: Hash + Eq + Clone>(ranked: &[K], target: &HashSet<K>, train: &HashSet<K>, ks: &[usize]) -> Self {
        let trans: HashSet<K> = ranked.iter().cloned().collect();
        let target_bar = minus(target, train);
        let trans_bar = minus(&trans, train);
        let hits = overlap(&trans, target);
        let hits_bar = overlap(&trans, &target_bar);
        let mut p_at_k = BTreeMap::new();
        let mut p_bar_at_k = BTreeMap::new();
        for &k in ks {
            p_at_k.insert(k, precision_at_k_keys(ranked, target, k));
            let top: HashSet<K> = ranked[..k.min(ranked.len())].iter().cloned().collect();
            let top_bar = minus(&top, train);
            p_bar_at_k.insert(k, Metric::ratio(overlap(&top_bar, &target_bar), top_bar.len()));
        }
        MetricValues {
            r_a: Metric::ratio(hits, target.len()),
            r_a_bar: Metric::ratio(hits_bar, target_bar.len()),
            p_a: Metric::ratio(hits, trans.len()),
            p_a_bar: Metric::ratio(overlap(&trans_bar, &target_bar), trans_bar.len()),
            p_at_k,
            p_bar_at_k,
            mrr: mrr_keys(ranked, target),
            mrr_bar: mrr_keys(ranked, &target_bar),
        }
    }

    fn relative_to(&self, reference: &MetricValues) -> MetricValues {
        let rel_map = |a: &BTreeMap<usize, Metric>, b: &BTreeMap<usize, Metric>| {
            a.iter()
                .map(|(k, v)| (*k, relative(*v, b.get(k).copied().unwrap_or_default())))
                .collect()
        };
        MetricValues {
            r_a: relative(self.r_a, reference.r_a),
            r_a_bar: relative(self.r_a_bar, reference.r_a_bar),
            p_a: relative(self.p_a, reference.p_a),
            p_a_bar: relative(self.p_a_bar, reference.p_a_bar),
            p_at_k: rel_map(&self.p_at_k, &reference.p_at_k),
            p_bar_at_k: rel_map(&self.p_bar_at_k, &reference.p_bar_at_k),
            mrr: relative(self.mrr, reference.mrr),
            mrr_bar: relative(self.mrr_bar, reference.mrr_bar),
        }
    }

    /// `(name, value)` rows in report order.
    pub fn rows(&self) -> Vec<(String, Metric)> {
        let mut rows = vec![
            ("R_a".to_string(), self.r_a),
            ("R_a_bar".to_string(), self.r_a_bar),
            ("P_a".to_string(), self.p_a),
            ("P_a_bar".to_string(), self.p_a_bar),
        ];
        rows.extend(self.p_at_k.iter().map(|(k, v)| (format!("P_a@{k}"), *v)));
        rows.extend(self.p_bar_at_k.iter().map(|(k, v)| (format!("P_a_bar@{k}"), *v)));
        rows.push(("MRR".into(), self.mrr));
        rows.push(("MRR_bar".into(), self.mrr_bar));
        rows
    }
}

/// Relation-agnostic key for the reference run: the normalized subject and
/// object, unordered.
pub fn pair_key(subject: &str, object: &str) -> (String, String) {
    let (a, b) = (phrase_key(subject), phrase_key(object));
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Open triples by score descending, input order on ties.
pub fn rank_open_kb(open_kb: &OpenKb) -> Vec<&OpenTriple> {
    let mut ranked: Vec<&OpenTriple> = open_kb.triples.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    ranked
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Distinct translated triples.
    pub size: usize,
    pub target_size: usize,
    pub train_size: usize,
    pub metrics: MetricValues,
    /// Distinct (subject, object) pairs of the open KB, when a reference run was made.
    pub reference_size: Option<usize>,
    pub reference: Option<MetricValues>,
    pub relative: Option<MetricValues>,
}

impl EvalReport {
    /// Aligned text table: metric, value, and reference/relative columns when present.
    pub fn to_text(&self) -> String {
        let mut header = vec!["metric".to_string(), "value".to_string()];
        let rows = self.metrics.rows();
        let mut cols: Vec<Vec<Metric>> = vec![rows.iter().map(|r| r.1).collect()];
        if let (Some(reference), Some(rel)) = (&self.reference, &self.relative) {
            header.push("reference".into());
            header.push("relative".into());
            cols.push(reference.rows().into_iter().map(|r| r.1).collect());
            cols.push(rel.rows().into_iter().map(|r| r.1).collect());
        }
        let mut table: Vec<Vec<String>> = vec![header];
        for (i, (name, _)) in rows.iter().enumerate() {
            let mut line = vec![name.clone()];
            line.extend(cols.iter().map(|c| c[i].to_string()));
            table.push(line);
        }
        let mut size_row = vec!["size".to_string(), self.size.to_string()];
        if self.reference.is_some() {
            size_row.push(self.reference_size.map_or("NA".into(), |s| s.to_string()));
            size_row.push(relative(Metric::ratio(self.size, 1), Metric(self.reference_size.map(|s| s as f64))).to_string());
        }
        table.push(size_row);
        render_table(&table)
    }
}

fn render_table(rows: &[Vec<String>]) -> String {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// Full automatic evaluation of a ranked translation. `reference` is the
/// open KB the translation came from; when given, the relation-agnostic
/// reference metrics and the relative metrics are filled in.
pub fn evaluate(
    ranked: &[ClosedTriple],
    target: &[ClosedTriple],
    train: &[ClosedTriple],
    reference: Option<&OpenKb>,
    ks: &[usize],
) -> EvalReport {
    let keys = ranked_keys(ranked);
    let target_keys = key_set(target);
    let train_keys = key_set(train);
    let metrics = MetricValues::compute(&keys, &target_keys, &train_keys, ks);
    let size = keys.iter().collect::<HashSet<_>>().len();

    let (reference_size, reference, relative) = match reference {
        Some(open) => {
            let pairs: Vec<(String, String)> = rank_open_kb(open)
                .into_iter()
                .map(|t| pair_key(&t.subject, &t.object))
                .collect();
            let to_pairs = |ts: &[ClosedTriple]| -> HashSet<(String, String)> {
                ts.iter().map(|t| pair_key(&t.subject, &t.object)).collect()
            };
            let ref_values = MetricValues::compute(&pairs, &to_pairs(target), &to_pairs(train), ks);
            let rel = metrics.relative_to(&ref_values);
            let n = pairs.iter().collect::<HashSet<_>>().len();
            (Some(n), Some(ref_values), Some(rel))
        }
        None => (None, None, None),
    };
    EvalReport {
        size,
        target_size: target_keys.len(),
        train_size: train_keys.len(),
        metrics,
        reference_size,
        reference,
        relative,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SoRow {
    pub s: Metric,
    pub o: Metric,
    pub so: Metric,
}

/// Fraction of source triples whose subject (S), object (O) or both (SO)
/// survive translation in the first generation, in at least one, or in all.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SoReport {
    pub groups: usize,
    pub first: SoRow,
    pub any: SoRow,
    pub all: SoRow,
}

impl SoReport {
    pub fn to_text(&self) -> String {
        let mut rows = vec![vec!["".to_string(), "S".into(), "O".into(), "SO".into()]];
        for (name, r) in [("first", self.first), ("any", self.any), ("all", self.all)] {
            rows.push(vec![name.into(), r.s.to_string(), r.o.to_string(), r.so.to_string()]);
        }
        rows.push(vec!["groups".into(), self.groups.to_string()]);
        render_table(&rows)
    }
}

type SourceKey<'a> = (&'a str, &'a str, &'a str, u64);

/// Groups generations by source triple (first appearance order), each group
/// sorted by rank.
pub fn group_by_source(generations: &[Generation]) -> Vec<Vec<&Generation>> {
    let mut index: HashMap<SourceKey<'_>, usize> = HashMap::new();
    let mut groups: Vec<Vec<&Generation>> = Vec::new();
    for g in generations {
        let s = &g.source;
        let key = (s.subject.as_str(), s.predicate.as_str(), s.object.as_str(), s.score.to_bits());
        let i = *index.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[i].push(g);
    }
    for g in &mut groups {
        g.sort_by_key(|g| g.rank);
    }
    groups
}

/// `(S, O)` conservation of one generation.
pub fn conserves(g: &Generation) -> (bool, bool) {
    (
        phrase_key(&g.candidate.subject) == phrase_key(&g.source.subject),
        phrase_key(&g.candidate.object) == phrase_key(&g.source.object),
    )
}

pub fn so_conservation(generations: &[Generation]) -> SoReport {
    let groups = group_by_source(generations);
    let n = groups.len();
    let mut counts = [[0usize; 3]; 3];
    for group in &groups {
        let flags: Vec<[bool; 3]> = group
            .iter()
            .map(|g| {
                let (s, o) = conserves(g);
                [s, o, s && o]
            })
            .collect();
        for c in 0..3 {
            counts[0][c] += usize::from(flags[0][c]);
            counts[1][c] += usize::from(flags.iter().any(|f| f[c]));
            counts[2][c] += usize::from(flags.iter().all(|f| f[c]));
        }
    }
    let row = |r: [usize; 3]| SoRow {
        s: Metric::ratio(r[0], n),
        o: Metric::ratio(r[1], n),
        so: Metric::ratio(r[2], n),
    };
    SoReport {
        groups: n,
        first: row(counts[0]),
        any: row(counts[1]),
        all: row(counts[2]),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AlignmentTestReport {
    /// Open triples in the gold set.
    pub triples: usize,
    pub mrr: Metric,
    pub p_at: BTreeMap<usize, Metric>,
    pub r_at: BTreeMap<usize, Metric>,
}

impl AlignmentTestReport {
    pub fn to_text(&self) -> String {
        let mut rows = vec![vec!["metric".to_string(), "value".into()], vec!["MRR".into(), self.mrr.to_string()]];
        rows.extend(self.r_at.iter().map(|(k, v)| vec![format!("R@{k}"), v.to_string()]));
        rows.extend(self.p_at.iter().map(|(k, v)| vec![format!("P@{k}"), v.to_string()]));
        rows.push(vec!["triples".into(), self.triples.to_string()]);
        render_table(&rows)
    }
}

/// Per-open-triple retrieval metrics of the generations against held-out
/// alignments, macro-averaged over the gold open triples. A candidate at
/// generation rank `r` (0-based) sits at position `r + 1`; top-K means
/// rank < K. Gold triples without any generation score zero.
pub fn alignment_test_metrics(predictions: &[Generation], gold: &AlignmentSet, ks: &[usize]) -> AlignmentTestReport {
    let mut gold_by_open: Vec<(&OpenTriple, HashSet<TripleKey>)> = Vec::new();
    let mut index: HashMap<(&str, &str, &str), usize> = HashMap::new();
    for a in gold {
        let i = *index.entry(a.open.key()).or_insert_with(|| {
            gold_by_open.push((&a.open, HashSet::new()));
            gold_by_open.len() - 1
        });
        gold_by_open[i].1.insert(membership_key(&a.closed));
    }
    let mut preds: HashMap<(&str, &str, &str), Vec<&Generation>> = HashMap::new();
    for g in predictions {
        if index.contains_key(&g.source.key()) {
            preds.entry(g.source.key()).or_default().push(g);
        }
    }
    let n = gold_by_open.len();
    let mut rr_sum = 0.0;
    let mut p_sum = vec![0.0; ks.len()];
    let mut r_sum = vec![0.0; ks.len()];
    for (open, gold_keys) in &gold_by_open {
        let mut list = preds.remove(&open.key()).unwrap_or_default();
        list.sort_by_key(|g| g.rank);
        if let Some(hit) = list.iter().find(|g| gold_keys.contains(&membership_key(&g.candidate))) {
            rr_sum += 1.0 / (hit.rank + 1) as f64;
        }
        for (j, &k) in ks.iter().enumerate() {
            let hits: HashSet<TripleKey> = list
                .iter()
                .filter(|g| g.rank < k)
                .map(|g| membership_key(&g.candidate))
                .filter(|key| gold_keys.contains(key))
                .collect();
            if k > 0 {
                p_sum[j] += hits.len() as f64 / k as f64;
            }
            r_sum[j] += hits.len() as f64 / gold_keys.len() as f64;
        }
    }
    let avg = |s: f64| Metric((n > 0).then(|| s / n as f64));
    AlignmentTestReport {
        triples: n,
        mrr: avg(rr_sum),
        p_at: ks.iter().zip(&p_sum).map(|(k, s)| (*k, if *k == 0 { Metric::NA } else { avg(*s) })).collect(),
        r_at: ks.iter().zip(&r_sum).map(|(k, s)| (*k, avg(*s))).collect(),
    }
}
