//! Configuration, dataset splitting and end-to-end runs.
//!
//! A run executes alignment, split, training export, generation, ranking and
//! evaluation in order. Each stage writes its artifact into the output
//! directory and the next stage reads it back from disk, so deleting a
//! downstream artifact and re-running regenerates it from its inputs.
//! Finetuning happens in the model sidecar and is not part of a run.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::align::{align_rule_based, knn_align, AlignDirection, Alignment, AlignmentSet, KnnConfig};
use crate::embed::{EmbeddingProvider, MockEmbedder};
use crate::error::{Error, Result};
use crate::index::ClosedIndex;
use crate::kb::{read_file, write_file, ClosedKb, OpenKb, RelationSchema};
use crate::metrics::{alignment_test_metrics, evaluate, so_conservation, DEFAULT_KS};
use crate::score::{aggregate, RankedKb, ScoreMode};
use crate::sidecar::SidecarClient;
use crate::translate::{
    format_training_example, load_generations, save_generations, translate_kb, Generator, MockGenerator,
    TranslateConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignChoice {
    Rule,
    Embed,
    EmbedInv,
}

impl AlignChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            AlignChoice::Rule => "rule",
            AlignChoice::Embed => "embed",
            AlignChoice::EmbedInv => "embed-inv",
        }
    }
}

impl std::str::FromStr for AlignChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rule" => Ok(AlignChoice::Rule),
            "embed" => Ok(AlignChoice::Embed),
            "embed-inv" | "embed_inv" => Ok(AlignChoice::EmbedInv),
            _ => Err(format!("unknown alignment method {s:?} (rule, embed, embed-inv)")),
        }
    }
}

/// `mock` or the base URL of a sidecar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Mock,
    Http(String),
}

impl std::str::FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "mock" {
            Ok(Endpoint::Mock)
        } else if s.starts_with("http://") || s.starts_with("https://") {
            Ok(Endpoint::Http(s.to_string()))
        } else {
            Err(format!("expected `mock` or an http(s) URL, got {s:?}"))
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Mock => f.write_str("mock"),
            Endpoint::Http(url) => f.write_str(url),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub open_kb: PathBuf,
    pub closed_kb: PathBuf,
    pub schema: PathBuf,
    pub output_dir: PathBuf,
    pub align_method: AlignChoice,
    pub top_k: usize,
    pub embedder: Endpoint,
    pub generator: Endpoint,
    pub mock_dim: usize,
    /// Generations per open triple.
    pub k: usize,
    pub score_mode: ScoreMode,
    pub split_ratio: f64,
    pub seed: u64,
    pub batch_size: usize,
    /// Worker threads; 0 uses the default pool.
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub eval_ks: Vec<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            open_kb: PathBuf::new(),
            closed_kb: PathBuf::new(),
            schema: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            align_method: AlignChoice::Rule,
            top_k: 1000,
            embedder: Endpoint::Mock,
            generator: Endpoint::Mock,
            mock_dim: 64,
            k: 10,
            score_mode: ScoreMode::Combined,
            split_ratio: 0.9,
            seed: 42,
            batch_size: 64,
            concurrency: 0,
            timeout_secs: 120,
            eval_ks: DEFAULT_KS.to_vec(),
        }
    }
}

pub const CONFIG_KEYS: [&str; 17] = [
    "open_kb",
    "closed_kb",
    "schema",
    "output_dir",
    "align_method",
    "top_k",
    "embedder",
    "generator",
    "mock_dim",
    "k",
    "score_mode",
    "split_ratio",
    "seed",
    "batch_size",
    "concurrency",
    "timeout_secs",
    "eval_ks",
];

/// Keys that cannot change any artifact byte; left out of the config hash.
const EXECUTION_ONLY_KEYS: [&str; 3] = ["output_dir", "concurrency", "timeout_secs"];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let cfg = |e: String| Error::Config(format!("{key}: {e}"));
        match key {
            "open_kb" => self.open_kb = value.into(),
            "closed_kb" => self.closed_kb = value.into(),
            "schema" => self.schema = value.into(),
            "output_dir" => self.output_dir = value.into(),
            "align_method" => self.align_method = value.parse().map_err(cfg)?,
            "top_k" => self.top_k = parse_num(key, value)?,
            "embedder" => self.embedder = value.parse().map_err(cfg)?,
            "generator" => self.generator = value.parse().map_err(cfg)?,
            "mock_dim" => self.mock_dim = parse_num(key, value)?,
            "k" => self.k = parse_num(key, value)?,
            "score_mode" => self.score_mode = value.parse().map_err(cfg)?,
            "split_ratio" => self.split_ratio = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "concurrency" => self.concurrency = parse_num(key, value)?,
            "timeout_secs" => self.timeout_secs = parse_num(key, value)?,
            "eval_ks" => {
                self.eval_ks = value
                    .split(',')
                    .map(|k| parse_num(key, k.trim()))
                    .collect::<Result<_>>()?
            }
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` (or `key = value`) assignments.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {o:?}")))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        let mut seen = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(name, i + 1, "expected key = value"))?;
            let k = k.trim();
            if let Some(prev) = seen.insert(k.to_string(), i + 1) {
                return Err(Error::parse(name, i + 1, format!("{k} already set on line {prev}")));
            }
            config.set(k, v).map_err(|e| Error::parse(name, i + 1, e.to_string()))?;
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&path.display().to_string(), &read_file(path)?)
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "open_kb" => self.open_kb.display().to_string(),
            "closed_kb" => self.closed_kb.display().to_string(),
            "schema" => self.schema.display().to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            "align_method" => self.align_method.as_str().into(),
            "top_k" => self.top_k.to_string(),
            "embedder" => self.embedder.to_string(),
            "generator" => self.generator.to_string(),
            "mock_dim" => self.mock_dim.to_string(),
            "k" => self.k.to_string(),
            "score_mode" => self.score_mode.as_str().into(),
            "split_ratio" => self.split_ratio.to_string(),
            "seed" => self.seed.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "concurrency" => self.concurrency.to_string(),
            "timeout_secs" => self.timeout_secs.to_string(),
            "eval_ks" => self.eval_ks.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
            _ => unreachable!("unknown config key {key}"),
        }
    }

    /// Canonical `key = value` rendering, parseable by [`PipelineConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_of(key));
        }
        out
    }

    /// SHA-256 over every setting that can influence the artifacts.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for key in CONFIG_KEYS.iter().filter(|k| !EXECUTION_ONLY_KEYS.contains(k)) {
            h.update(format!("{key} = {}\n", self.value_of(key)));
        }
        hex::encode(h.finalize())
    }

    pub fn validate(&self) -> Result<()> {
        for (key, path) in [("open_kb", &self.open_kb), ("closed_kb", &self.closed_kb), ("schema", &self.schema)] {
            if path.as_os_str().is_empty() {
                return Err(Error::Config(format!("{key} is not set")));
            }
            if !path.is_file() {
                return Err(Error::Config(format!("{key}: no such file {}", path.display())));
            }
        }
        check_ratio(self.split_ratio)?;
        for (key, v) in [("k", self.k), ("top_k", self.top_k), ("batch_size", self.batch_size), ("mock_dim", self.mock_dim)] {
            if v == 0 {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        if self.eval_ks.is_empty() || self.eval_ks.contains(&0) {
            return Err(Error::Config("eval_ks must list positive cutoffs".into()));
        }
        Ok(())
    }
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("split ratio must lie strictly between 0 and 1, got {ratio}")))
    }
}

/// Fisher–Yates shuffle driven by ChaCha8 seeded with `seed`: for `i` from
/// `n - 1` down to 1, swap `i` with a uniform `j ∈ [0, i]`.
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}

/// Splits alignments into train and test with no open triple on both sides.
///
/// Alignments are grouped by open triple (groups in first-appearance order,
/// alignments in input order), the groups are shuffled with
/// [`seeded_shuffle`], and the first `⌈ratio · groups⌉` go to train.
pub fn split_alignments(set: &AlignmentSet, ratio: f64, seed: u64) -> Result<(AlignmentSet, AlignmentSet)> {
    check_ratio(ratio)?;
    if set.is_empty() {
        return Err(Error::Invalid("cannot split an empty alignment set".into()));
    }
    let mut index: HashMap<(&str, &str, &str), usize> = HashMap::new();
    let mut groups: Vec<Vec<&Alignment>> = Vec::new();
    for a in set {
        let i = *index.entry(a.open.key()).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[i].push(a);
    }
    seeded_shuffle(&mut groups, seed);
    // The epsilon keeps e.g. 0.7 × 10 from rounding up to 8.
    let n_train = ((ratio * groups.len() as f64) - 1e-9).ceil() as usize;
    let n_train = n_train.min(groups.len());
    let collect = |gs: &[Vec<&Alignment>]| -> Vec<Alignment> { gs.iter().flatten().map(|a| (*a).clone()).collect() };
    let train = AlignmentSet::new(format!("{} train", set.provenance), collect(&groups[..n_train]));
    let test = AlignmentSet::new(format!("{} test", set.provenance), collect(&groups[n_train..]));
    Ok((train, test))
}

/// One training line per alignment, shuffled with `seed`.
pub fn export_training(train: &AlignmentSet, seed: u64) -> Vec<String> {
    let mut lines: Vec<String> = train.iter().map(format_training_example).collect();
    seeded_shuffle(&mut lines, seed);
    lines
}

pub fn training_text(lines: &[String]) -> String {
    lines.iter().map(|l| format!("{l}\n")).collect()
}

pub fn make_embedder(endpoint: &Endpoint, mock_dim: usize, timeout: Duration) -> Box<dyn EmbeddingProvider> {
    match endpoint {
        Endpoint::Mock => Box::new(MockEmbedder::new(mock_dim)),
        Endpoint::Http(url) => Box::new(SidecarClient::new(url, timeout)),
    }
}

pub fn make_generator(endpoint: &Endpoint, schema: &RelationSchema, timeout: Duration) -> Box<dyn Generator> {
    match endpoint {
        Endpoint::Mock => Box::new(MockGenerator::hashed(schema)),
        Endpoint::Http(url) => Box::new(SidecarClient::new(url, timeout)),
    }
}

pub const ARTIFACTS: [(&str, &[&str]); 7] = [
    ("align", &["alignments.jsonl"]),
    ("split", &["train.jsonl", "test.jsonl"]),
    ("export-train", &["train.txt"]),
    ("translate", &["generations.jsonl", "translate.json"]),
    ("rank", &["ranked.tsv"]),
    ("eval", &["eval.json", "eval.txt"]),
    ("so-report", &["so.json", "so.txt"]),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub stage: String,
    /// Artifact file name → SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Validation(#[source] Error),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
}

impl RunError {
    /// 1 for validation errors, 2 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 1,
            RunError::Stage { .. } => 2,
        }
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

struct Inputs {
    open: OpenKb,
    closed: ClosedKb,
    schema: RelationSchema,
}

fn load_inputs(config: &PipelineConfig) -> Result<Inputs> {
    let schema = RelationSchema::load(&config.schema)?;
    let open = OpenKb::load(&config.open_kb)?;
    let (closed, stats) = ClosedKb::load(&config.closed_kb, &schema)?;
    if stats.warnings() > 0 {
        log::warn!(
            "closed KB: skipped {} triples with unknown relations and {} degenerate triples",
            stats.unknown_relation,
            stats.degenerate
        );
    }
    if open.is_empty() || closed.is_empty() {
        return Err(Error::Invalid("open and closed KBs must be nonempty".into()));
    }
    Ok(Inputs { open, closed, schema })
}

/// Stage bodies. Each one reads its inputs from `dir` (or the loaded KBs)
/// and writes its artifacts to `dir`.
fn run_stage(stage: &str, config: &PipelineConfig, inputs: &Inputs, dir: &Path) -> Result<()> {
    let timeout = Duration::from_secs(config.timeout_secs);
    match stage {
        "align" => {
            let set = match config.align_method {
                AlignChoice::Rule => align_rule_based(&inputs.open, &ClosedIndex::build(&inputs.closed)),
                method => {
                    let provider = make_embedder(&config.embedder, config.mock_dim, timeout);
                    let knn = KnnConfig {
                        direction: if method == AlignChoice::EmbedInv {
                            AlignDirection::ClosedToOpen
                        } else {
                            AlignDirection::OpenToClosed
                        },
                        top_k: config.top_k,
                        batch_size: config.batch_size,
                        concurrency: config.concurrency,
                    };
                    knn_align(&inputs.open, &inputs.closed, &provider, knn)?
                }
            };
            log::info!("{} alignments ({})", set.len(), set.provenance);
            set.save(dir.join("alignments.jsonl"))
        }
        "split" => {
            let set = AlignmentSet::load(dir.join("alignments.jsonl"))?;
            let (train, test) = split_alignments(&set, config.split_ratio, config.seed)?;
            train.save(dir.join("train.jsonl"))?;
            test.save(dir.join("test.jsonl"))
        }
        "export-train" => {
            let train = AlignmentSet::load(dir.join("train.jsonl"))?;
            let lines = export_training(&train, config.seed);
            write_file(&dir.join("train.txt"), training_text(&lines).as_bytes())
        }
        "translate" => {
            let generator = make_generator(&config.generator, &inputs.schema, timeout);
            let tc = TranslateConfig {
                k: config.k,
                batch_size: config.batch_size,
                concurrency: config.concurrency,
            };
            let t = translate_kb(&inputs.open, &generator, &inputs.schema, tc)?;
            let rejected: BTreeMap<String, usize> = t.rejected.iter().map(|(r, n)| (r.to_string(), *n)).collect();
            save_generations(dir.join("generations.jsonl"), &t.generations)?;
            write_json(
                &dir.join("translate.json"),
                &serde_json::json!({
                    "generations": t.generations.len(),
                    "rejected": rejected,
                    "filtered": t.filtered,
                }),
            )
        }
        "rank" => {
            let generations = load_generations(dir.join("generations.jsonl"))?;
            let ranked = crate::par::with_threads(config.concurrency, || aggregate(&generations, config.score_mode));
            ranked.save(dir.join("ranked.tsv"))
        }
        "eval" => {
            let ranked = RankedKb::load(dir.join("ranked.tsv"), config.score_mode)?;
            let train = AlignmentSet::load(dir.join("train.jsonl"))?;
            let test = AlignmentSet::load(dir.join("test.jsonl"))?;
            let generations = load_generations(dir.join("generations.jsonl"))?;
            let ranked_triples: Vec<_> = ranked.triples().cloned().collect();
            let train_closed: Vec<_> = train.closed_triples().cloned().collect();
            let report = evaluate(
                &ranked_triples,
                inputs.closed.triples(),
                &train_closed,
                Some(&inputs.open),
                &config.eval_ks,
            );
            let test_ks = [1, 5, 10];
            let test_report = alignment_test_metrics(&generations, &test, &test_ks);
            write_json(
                &dir.join("eval.json"),
                &serde_json::json!({ "automatic": report, "alignment_test": test_report }),
            )?;
            let text = format!("{}\nalignment test split\n{}", report.to_text(), test_report.to_text());
            write_file(&dir.join("eval.txt"), text.as_bytes())
        }
        "so-report" => {
            let generations = load_generations(dir.join("generations.jsonl"))?;
            let report = so_conservation(&generations);
            write_json(&dir.join("so.json"), &report)?;
            write_file(&dir.join("so.txt"), report.to_text().as_bytes())
        }
        other => unreachable!("unknown stage {other}"),
    }
}

/// Validates the config, runs every stage in order and writes `manifest.json`.
/// A failing stage stops the run; artifacts of earlier stages stay on disk.
pub fn run(config: &PipelineConfig) -> std::result::Result<Manifest, RunError> {
    config.validate().map_err(RunError::Validation)?;
    let dir = config.output_dir.as_path();
    let inputs = load_inputs(config).map_err(RunError::Validation)?;
    let mut stages = Vec::new();
    for (stage, files) in ARTIFACTS {
        log::info!("stage {stage}");
        run_stage(stage, config, &inputs, dir).map_err(|source| RunError::Stage { stage, source })?;
        let mut artifacts = BTreeMap::new();
        for f in files {
            let sum = sha256_file(&dir.join(f)).map_err(|source| RunError::Stage { stage, source })?;
            artifacts.insert(f.to_string(), sum);
        }
        stages.push(StageRecord {
            stage: stage.to_string(),
            artifacts,
        });
    }
    let manifest = Manifest {
        config_sha256: config.hash(),
        stages,
    };
    write_json(&dir.join("manifest.json"), &manifest).map_err(|source| RunError::Stage {
        stage: "manifest",
        source,
    })?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{AlignMethod, Pattern};
    use crate::kb::{ClosedTriple, OpenTriple};

    fn set(opens: &[&str]) -> AlignmentSet {
        AlignmentSet::new(
            "rule",
            opens.iter().enumerate().map(|(i, s)| {
                Alignment::new(
                    OpenTriple::new(*s, "p", "o"),
                    ClosedTriple::new(*s, "R", format!("o{i}")),
                    AlignMethod::Rule(Pattern::Standard),
                )
            }),
        )
    }

    #[test]
    fn split_sizes_and_determinism() {
        let names: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
        let s = set(&names.iter().map(String::as_str).collect::<Vec<_>>());
        let (train, test) = split_alignments(&s, 0.9, 7).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));
        assert_eq!(split_alignments(&s, 0.9, 7).unwrap(), (train, test));
        let (train, _) = split_alignments(&s, 0.7, 7).unwrap();
        assert_eq!(train.len(), 7);
    }

    #[test]
    fn split_keeps_open_triples_together() {
        let s = set(&["a", "a", "a", "a", "b"]);
        for seed in 0..20 {
            let (train, test) = split_alignments(&s, 0.5, seed).unwrap();
            let a_train = train.iter().filter(|a| a.open.subject == "a").count();
            let a_test = test.iter().filter(|a| a.open.subject == "a").count();
            assert!(a_train == 4 && a_test == 0 || a_train == 0 && a_test == 4);
        }
    }

    #[test]
    fn split_errors() {
        let s = set(&["a", "b"]);
        assert!(split_alignments(&s, 1.0, 0).is_err());
        assert!(split_alignments(&s, 0.0, 0).is_err());
        assert!(split_alignments(&AlignmentSet::default(), 0.5, 0).is_err());
    }

    #[test]
    fn config_round_trip() {
        let mut c = PipelineConfig::default();
        c.apply_overrides(["k = 5", "align_method=embed-inv", "eval_ks=1,2", "generator=http://localhost:8000"])
            .unwrap();
        let parsed = PipelineConfig::parse("c", &c.to_text()).unwrap();
        assert_eq!(parsed, c);
        assert!(PipelineConfig::parse("c", "k = 1\nk = 2\n").is_err());
        assert!(PipelineConfig::parse("c", "nope = 1\n").is_err());
        assert!(PipelineConfig::parse("c", "generator = gpt\n").is_err());
        let mut d = c.clone();
        d.concurrency = 8;
        d.output_dir = "elsewhere".into();
        assert_eq!(c.hash(), d.hash());
        d.seed = 1;
        assert_ne!(c.hash(), d.hash());
    }

    #[test]
    fn validation_catches_missing_files() {
        let c = PipelineConfig {
            open_kb: "/nonexistent/open.tsv".into(),
            ..Default::default()
        };
        assert!(matches!(run(&c), Err(RunError::Validation(_))));
    }

    #[test]
    fn training_export_is_a_permutation() {
        let s = set(&["a", "b", "c"]);
        let mut lines = export_training(&s, 3);
        assert_eq!(lines, export_training(&s, 3));
        lines.sort();
        let mut expected: Vec<String> = s.iter().map(format_training_example).collect();
        expected.sort();
        assert_eq!(lines, expected);
    }
}
