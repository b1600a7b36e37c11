//! Synthetic data and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use kbmap::align::{AlignDirection, AlignMethod, Alignment, AlignmentSet, Pattern};
use kbmap::embed::MockEmbedder;
use kbmap::kb::{ClosedKb, ClosedTriple, OpenKb, OpenTriple, RelationSchema};
use kbmap::normalize::normalize_phrase;
use kbmap::rulemine::{MetaKb, TsvTaxonomy};
use kbmap::score::ScoreMode;
use kbmap::translate::Generation;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RELATIONS: [&str; 10] = [
    "AtLocation",
    "CapableOf",
    "Causes",
    "Desires",
    "HasA",
    "HasProperty",
    "IsA",
    "PartOf",
    "RelatedTo",
    "UsedFor",
];

pub const NOUNS: [&str; 16] = [
    "fish", "water", "ocean", "bird", "tree", "dog", "bone", "cat", "milk", "rain", "flood", "fire", "smoke",
    "student", "book", "sun",
];

pub const PREDICATES: [&str; 8] = ["live in", "lives in", "eat", "cause", "be", "have", "use", "drink"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn schema() -> RelationSchema {
    RelationSchema::new(RELATIONS).unwrap()
}

/// One or two nouns, sometimes with an article or a plural.
pub fn phrase(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words);
    let mut words: Vec<String> = (0..n).map(|_| NOUNS.choose(rng).unwrap().to_string()).collect();
    if rng.gen_bool(0.15) {
        words[0].push('s');
    }
    if rng.gen_bool(0.2) {
        words.insert(0, "the".into());
    }
    words.join(" ")
}

pub fn random_open_kb(rng: &mut ChaCha8Rng, n: usize) -> OpenKb {
    let triples = (0..n)
        .map(|_| {
            let score = [0.5, 1.0, 2.0, 3.5][rng.gen_range(0..4)];
            OpenTriple::with_score(phrase(rng, 2), *PREDICATES.choose(rng).unwrap(), phrase(rng, 2), score)
        })
        .collect();
    OpenKb::new("random-open", triples)
}

pub fn random_closed_kb(rng: &mut ChaCha8Rng, n: usize) -> ClosedKb {
    let triples: Vec<ClosedTriple> = (0..n)
        .map(|_| {
            let object = if rng.gen_bool(0.2) {
                format!("{} {}", PREDICATES.choose(rng).unwrap(), phrase(rng, 1))
            } else {
                phrase(rng, 2)
            };
            let subject = if rng.gen_bool(0.1) {
                format!("{} {}", PREDICATES.choose(rng).unwrap(), phrase(rng, 1))
            } else {
                phrase(rng, 2)
            };
            ClosedTriple::new(subject, *RELATIONS.choose(rng).unwrap(), object)
        })
        .collect();
    ClosedKb::from_triples("random-closed", triples, &schema()).0
}

fn norm(s: &str) -> Vec<String> {
    normalize_phrase(s).tokens().to_vec()
}

/// Nested-loop join of every open triple with every closed triple under the
/// four patterns, in (open, pattern, closed) order, first occurrence kept.
pub fn oracle_rule_alignments(open: &OpenKb, closed: &ClosedKb) -> Vec<Alignment> {
    let mut out = Vec::new();
    let mut seen: HashSet<(String, String, String, u64, ClosedTriple)> = HashSet::new();
    let closed_norm: Vec<(Vec<String>, Vec<String>)> =
        closed.triples().iter().map(|c| (norm(&c.subject), norm(&c.object))).collect();
    for t in &open.triples {
        let s = norm(&t.subject);
        let o = norm(&t.object);
        let po = norm(&format!("{} {}", t.predicate, t.object));
        for pattern in Pattern::ALL {
            let (lhs, rhs) = match pattern {
                Pattern::Standard => (&s, &o),
                Pattern::Reverse => (&o, &s),
                Pattern::PredInObj => (&s, &po),
                Pattern::ReversePredInObj => (&po, &s),
            };
            if lhs.is_empty() || rhs.is_empty() {
                continue;
            }
            for (c, (cs, co)) in closed.triples().iter().zip(&closed_norm) {
                if cs == lhs && co == rhs {
                    let id = (t.subject.clone(), t.predicate.clone(), t.object.clone(), t.score.to_bits(), c.clone());
                    if seen.insert(id) {
                        out.push(Alignment::new(t.clone(), c.clone(), AlignMethod::Rule(pattern)));
                    }
                }
            }
        }
    }
    out
}

fn oracle_distance(a: &[f32], b: &[f32]) -> f64 {
    let mut ab = 0.0f64;
    let mut aa = 0.0f64;
    let mut bb = 0.0f64;
    for i in 0..a.len() {
        ab += f64::from(a[i]) * f64::from(b[i]);
    }
    for x in a {
        aa += f64::from(*x) * f64::from(*x);
    }
    for y in b {
        bb += f64::from(*y) * f64::from(*y);
    }
    let cos = ab / (aa * bb).sqrt();
    if 1.0 - cos > 0.0 {
        1.0 - cos
    } else {
        0.0
    }
}

/// Exhaustive all-pairs nearest-neighbour alignment with the mock embedder.
pub fn oracle_knn(
    open: &OpenKb,
    closed: &ClosedKb,
    embedder: &MockEmbedder,
    direction: AlignDirection,
    top_k: usize,
) -> Vec<Alignment> {
    let text = |s: &str, p: &str, o: &str| format!("{s}, {p}, {o}");
    let open_vecs: Vec<_> = open
        .triples
        .iter()
        .map(|t| embedder.embed_one(&text(&t.subject, &t.predicate, &t.object)))
        .collect();
    let closed_vecs: Vec<_> = closed
        .triples()
        .iter()
        .map(|t| embedder.embed_one(&text(&t.subject, &t.relation, &t.object)))
        .collect();
    let (sources, targets) = match direction {
        AlignDirection::OpenToClosed => (&open_vecs, &closed_vecs),
        AlignDirection::ClosedToOpen => (&closed_vecs, &open_vecs),
    };
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, s) in sources.iter().enumerate() {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, t) in targets.iter().enumerate() {
            let d = oracle_distance(s, t);
            if d < best.0 {
                best = (d, j);
            }
        }
        pairs.push((best.0, i, best.1));
    }
    // stable sort on distance keeps source order among equal distances
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.truncate(top_k);
    let mut seen = HashSet::new();
    pairs
        .into_iter()
        .map(|(d, i, j)| match direction {
            AlignDirection::OpenToClosed => Alignment::new(
                open.triples[i].clone(),
                closed.triples()[j].clone(),
                AlignMethod::Embed { distance: d },
            ),
            AlignDirection::ClosedToOpen => Alignment::new(
                open.triples[j].clone(),
                closed.triples()[i].clone(),
                AlignMethod::EmbedInv { distance: d },
            ),
        })
        .filter(|a| {
            let o = &a.open;
            seen.insert((o.subject.clone(), o.predicate.clone(), o.object.clone(), o.score.to_bits(), a.closed.clone()))
        })
        .collect()
}

pub fn oracle_final_score(contribs: &[(f64, usize)], mode: ScoreMode) -> f64 {
    let mut total = 0.0;
    for &(score, rank) in contribs {
        let position = (rank + 1) as f64;
        total += match mode {
            ScoreMode::Combined => score / position,
            ScoreMode::WeightOnly => score,
            ScoreMode::RankOnly => 1.0 / position,
        };
    }
    total
}

// ---- metric oracles: linear scans over vectors ----

pub type Key = (String, String, String);

pub fn key(t: &ClosedTriple) -> Key {
    (
        t.subject.trim().to_lowercase(),
        t.relation.trim().to_lowercase(),
        t.object.trim().to_lowercase(),
    )
}

pub fn distinct(ts: &[ClosedTriple]) -> Vec<Key> {
    let mut out: Vec<Key> = Vec::new();
    for t in ts {
        let k = key(t);
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn without(a: &[Key], b: &[Key]) -> Vec<Key> {
    a.iter().filter(|k| !b.contains(k)).cloned().collect()
}

fn count_in(a: &[Key], b: &[Key]) -> usize {
    a.iter().filter(|k| b.contains(k)).count()
}

fn frac(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

pub fn oracle_recall(trans: &[ClosedTriple], target: &[ClosedTriple]) -> Option<f64> {
    let g = distinct(target);
    frac(count_in(&g, &distinct(trans)), g.len())
}

pub fn oracle_precision(trans: &[ClosedTriple], target: &[ClosedTriple]) -> Option<f64> {
    let t = distinct(trans);
    frac(count_in(&t, &distinct(target)), t.len())
}

pub fn oracle_recall_bar(trans: &[ClosedTriple], target: &[ClosedTriple], train: &[ClosedTriple]) -> Option<f64> {
    let g = without(&distinct(target), &distinct(train));
    frac(count_in(&g, &distinct(trans)), g.len())
}

pub fn oracle_precision_bar(trans: &[ClosedTriple], target: &[ClosedTriple], train: &[ClosedTriple]) -> Option<f64> {
    let d = distinct(train);
    let t = without(&distinct(trans), &d);
    let g = without(&distinct(target), &d);
    frac(count_in(&t, &g), t.len())
}

pub fn oracle_precision_at_k(ranked: &[ClosedTriple], target: &[ClosedTriple], k: usize) -> Option<f64> {
    let top: Vec<ClosedTriple> = ranked.iter().take(k).cloned().collect();
    oracle_precision(&top, target)
}

pub fn oracle_mrr(ranked: &[ClosedTriple], target: &[ClosedTriple], exclude: &[ClosedTriple]) -> Option<f64> {
    let g = without(&distinct(target), &distinct(exclude));
    if g.is_empty() {
        return None;
    }
    let mut found: Vec<Key> = Vec::new();
    let mut num = 0.0;
    for (i, t) in ranked.iter().enumerate() {
        let k = key(t);
        if g.contains(&k) && !found.contains(&k) {
            num += 1.0 / (i as f64 + 1.0);
            found.push(k);
        }
    }
    let mut den = 0.0;
    for i in 1..=g.len() {
        den += 1.0 / i as f64;
    }
    Some(num / den)
}

/// Macro-averaged (MRR, P@K, R@K) over gold open triples.
pub fn oracle_alignment_metrics(preds: &[Generation], gold: &AlignmentSet, k: usize) -> (f64, f64, f64) {
    let mut opens: Vec<(String, String, String)> = Vec::new();
    for a in gold {
        let o = (a.open.subject.clone(), a.open.predicate.clone(), a.open.object.clone());
        if !opens.contains(&o) {
            opens.push(o);
        }
    }
    let (mut rr, mut p, mut r) = (0.0, 0.0, 0.0);
    for o in &opens {
        let same = |t: &OpenTriple| t.subject == o.0 && t.predicate == o.1 && t.object == o.2;
        let gold_keys: Vec<Key> = {
            let closed: Vec<ClosedTriple> = gold.iter().filter(|a| same(&a.open)).map(|a| a.closed.clone()).collect();
            distinct(&closed)
        };
        let mut mine: Vec<&Generation> = preds.iter().filter(|g| same(&g.source)).collect();
        mine.sort_by_key(|g| g.rank);
        for g in &mine {
            if gold_keys.contains(&key(&g.candidate)) {
                rr += 1.0 / (g.rank as f64 + 1.0);
                break;
            }
        }
        let top: Vec<ClosedTriple> = mine.iter().filter(|g| g.rank < k).map(|g| g.candidate.clone()).collect();
        let hits = count_in(&distinct(&top), &gold_keys);
        p += hits as f64 / k as f64;
        r += hits as f64 / gold_keys.len() as f64;
    }
    let n = opens.len() as f64;
    (rr / n, p / n, r / n)
}

/// (first, any, all) × (S, O, SO) counts over source groups.
pub fn oracle_so_counts(gens: &[Generation]) -> (usize, [[usize; 3]; 3]) {
    let mut sources: Vec<&OpenTriple> = Vec::new();
    for g in gens {
        if !sources
            .iter()
            .any(|s| s.key() == g.source.key() && s.score.to_bits() == g.source.score.to_bits())
        {
            sources.push(&g.source);
        }
    }
    let mut counts = [[0usize; 3]; 3];
    for s in &sources {
        let mut group: Vec<&Generation> = gens
            .iter()
            .filter(|g| g.source.key() == s.key() && g.source.score.to_bits() == s.score.to_bits())
            .collect();
        group.sort_by_key(|g| g.rank);
        let flags: Vec<[bool; 3]> = group
            .iter()
            .map(|g| {
                let cs = norm(&g.candidate.subject) == norm(&g.source.subject);
                let co = norm(&g.candidate.object) == norm(&g.source.object);
                [cs, co, cs && co]
            })
            .collect();
        for c in 0..3 {
            if flags[0][c] {
                counts[0][c] += 1;
            }
            if flags.iter().any(|f| f[c]) {
                counts[1][c] += 1;
            }
            if flags.iter().all(|f| f[c]) {
                counts[2][c] += 1;
            }
        }
    }
    (sources.len(), counts)
}

pub fn random_generations(rng: &mut ChaCha8Rng, sources: usize, max_per_source: usize) -> Vec<Generation> {
    let mut gens = Vec::new();
    for _ in 0..sources {
        let src = OpenTriple::with_score(phrase(rng, 2), *PREDICATES.choose(rng).unwrap(), phrase(rng, 2), 1.0);
        let n = rng.gen_range(1..=max_per_source);
        for rank in 0..n {
            let s = if rng.gen_bool(0.5) { src.subject.clone() } else { phrase(rng, 1) };
            let o = if rng.gen_bool(0.5) { src.object.clone() } else { phrase(rng, 1) };
            gens.push(Generation {
                source: src.clone(),
                candidate: ClosedTriple::new(s, *RELATIONS.choose(rng).unwrap(), o),
                rank,
                gen_score: -(rank as f64),
            });
        }
    }
    gens.shuffle(rng);
    gens
}

// ---- rule mining ----

pub fn random_taxonomy(rng: &mut ChaCha8Rng) -> TsvTaxonomy {
    let mut tax = TsvTaxonomy::default();
    for n in NOUNS {
        for h in ["animal.n.01", "liquid.n.01", "event.n.01", "object.n.01", "entity.n.01"] {
            if rng.gen_bool(0.3) {
                tax.insert(n, h);
            }
        }
    }
    tax
}

/// A brute-force miner: enumerates every body over the meta-KB's hypernyms
/// and tokens and every head relation, and counts instantiations by fact
/// lookup. Returns `(rule text, confidence, support)` for qualifying rules,
/// in the miner's output order.
pub fn oracle_mine(meta: &MetaKb, min_conf: f64, min_support: usize) -> Vec<(String, f64, usize)> {
    let facts: HashSet<(String, String, String)> = meta
        .facts
        .iter()
        .map(|f| (f.subject.clone(), f.relation.clone(), f.object.clone()))
        .collect();
    let has = |s: &str, r: &str, o: &str| facts.contains(&(s.to_string(), r.to_string(), o.to_string()));
    let relations: Vec<String> = {
        let mut r: Vec<String> = meta.mappings.iter().map(|m| m.relation.clone()).collect();
        r.sort();
        r.dedup();
        r
    };
    let vars = [None, Some('a'), Some('b')];
    let mut isa_opts: Vec<Option<(char, String)>> = vec![None];
    for h in &meta.hypernyms {
        isa_opts.push(Some(('a', h.clone())));
        isa_opts.push(Some(('b', h.clone())));
    }
    let mut contains_opts: Vec<Option<String>> = vec![None];
    contains_opts.extend(meta.top_tokens.iter().cloned().map(Some));

    let mut out = Vec::new();
    for insubj in vars {
        for inobj in vars {
            if insubj.is_none() && inobj.is_none() || insubj.is_some() && insubj == inobj {
                continue;
            }
            for isa in &isa_opts {
                for contains in &contains_opts {
                    let holds = |m: &kbmap::rulemine::MetaMapping, a: &str, b: &str| {
                        let bind = |v: char| if v == 'a' { a.to_string() } else { b.to_string() };
                        insubj.is_none_or(|v| has(&m.id, "INSUBJ", &bind(v)))
                            && inobj.is_none_or(|v| has(&m.id, "INOBJ", &bind(v)))
                            && isa.as_ref().is_none_or(|(v, h)| has(&bind(*v), "ISA", h))
                            && contains.as_ref().is_none_or(|t| has(&m.id, "CONTAINS", t))
                    };
                    let mut body = 0;
                    let mut per_rel = vec![0usize; relations.len()];
                    for m in &meta.mappings {
                        let (x, y) = (m.term_id(0), m.term_id(1));
                        for (a, b) in [(&x, &y), (&y, &x)] {
                            if holds(m, a, b) {
                                body += 1;
                                for (ri, r) in relations.iter().enumerate() {
                                    if has(a, r, b) {
                                        per_rel[ri] += 1;
                                    }
                                }
                            }
                        }
                    }
                    for (ri, r) in relations.iter().enumerate() {
                        let support = per_rel[ri];
                        if support == 0 || support < min_support {
                            continue;
                        }
                        let conf = support as f64 / body as f64;
                        if conf <= min_conf {
                            continue;
                        }
                        let mut atoms = Vec::new();
                        if let Some(v) = insubj {
                            atoms.push(format!("?i INSUBJ ?{v}"));
                        }
                        if let Some(v) = inobj {
                            atoms.push(format!("?i INOBJ ?{v}"));
                        }
                        if let Some((v, h)) = isa {
                            atoms.push(format!("?{v} ISA {h}"));
                        }
                        if let Some(t) = contains {
                            atoms.push(format!("?i CONTAINS {t}"));
                        }
                        out.push((format!("{} ⇒ ?a {r} ?b", atoms.join(" ∧ ")), conf, support));
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then(b.2.cmp(&a.2))
            .then_with(|| a.0.cmp(&b.0))
    });
    out
}

/// Open/closed KBs where "cause" triples always map to Causes and "live in"
/// triples to AtLocation, with `n` of each.
pub fn causes_dataset(n: usize) -> (OpenKb, ClosedKb) {
    let mut open = Vec::new();
    let mut closed = Vec::new();
    for i in 0..n {
        let (x, y) = (format!("agent{i}"), format!("effect{i}"));
        open.push(OpenTriple::new(&x, "cause", &y));
        closed.push(ClosedTriple::new(&x, "Causes", &y));
        let (p, q) = (format!("creature{i}"), format!("place{i}"));
        open.push(OpenTriple::new(&p, "live in", format!("the {q}")));
        closed.push(ClosedTriple::new(&p, "AtLocation", &q));
    }
    (
        OpenKb::new("causes-open", open),
        ClosedKb::from_triples("causes-closed", closed, &schema()).0,
    )
}

// ---- pipeline fixtures ----

pub struct PipelineInputs {
    pub open: PathBuf,
    pub closed: PathBuf,
    pub schema: PathBuf,
}

/// Writes a 100-triple open KB, a closed KB that aligns with part of it,
/// and the schema into `dir`.
pub fn write_pipeline_inputs(dir: &Path, n: usize, seed: u64) -> PipelineInputs {
    let mut r = rng(seed);
    let table = [
        ("live in", "AtLocation"),
        ("eat", "Desires"),
        ("cause", "Causes"),
        ("be", "IsA"),
        ("have", "HasA"),
        ("use", "UsedFor"),
        ("drink", "Desires"),
    ];
    let mut open = Vec::new();
    let mut closed = Vec::new();
    for i in 0..n {
        let s = format!("{} {}", NOUNS[i % NOUNS.len()], i / NOUNS.len());
        let o = format!("the {}", NOUNS[(i * 7 + 3) % NOUNS.len()]);
        let (p, rel) = table[r.gen_range(0..table.len())];
        let score = (r.gen_range(1..=8) as f64) * 0.5;
        if r.gen_bool(0.6) {
            closed.push(ClosedTriple::new(&s, rel, o.trim_start_matches("the ")));
        }
        if r.gen_bool(0.2) {
            closed.push(ClosedTriple::new(&s, "RelatedTo", phrase(&mut r, 1)));
        }
        open.push(OpenTriple::with_score(s, p, o, score));
    }
    let paths = PipelineInputs {
        open: dir.join("open.tsv"),
        closed: dir.join("closed.tsv"),
        schema: dir.join("schema.txt"),
    };
    OpenKb::new("open", open).save(&paths.open).unwrap();
    let closed = ClosedKb::from_triples("closed", closed, &schema()).0;
    std::fs::write(&paths.closed, closed.to_tsv()).unwrap();
    std::fs::write(&paths.schema, RELATIONS.join("\n") + "\n").unwrap();
    paths
}

/// Every file under `dir`, relative path → bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
