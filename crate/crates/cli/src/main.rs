use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kbmap::align::{align_rule_based, knn_align, AlignDirection, AlignmentSet, KnnConfig};
use kbmap::kb::{ClosedKb, OpenKb, RelationSchema};
use kbmap::manual::{map_manual_kb, ManualTable};
use kbmap::metrics::{alignment_test_metrics, evaluate, so_conservation, DEFAULT_KS};
use kbmap::pipeline::{
    export_training, make_embedder, make_generator, run, split_alignments, training_text, Endpoint, PipelineConfig,
};
use kbmap::rulemine::{
    apply_rules, build_meta_kb, load_rules, mine_rules, ranked_from_applications, save_rules, Atom, MetaConfig,
    MineConfig, NoTaxonomy, Taxonomy, TsvTaxonomy,
};
use kbmap::score::{aggregate, RankedKb, ScoreMode};
use kbmap::translate::{load_generations, save_generations, translate_kb, TranslateConfig};
use kbmap::ClosedIndex;

/// Translate open knowledge bases into a closed relation schema.
#[derive(Parser)]
#[command(name = "kbmap", version)]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ClosedArgs {
    /// Closed KB TSV (subject, relation, object).
    #[arg(long)]
    closed: PathBuf,
    /// Relation schema, one relation per line.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct Exec {
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    concurrency: usize,
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Align open triples with closed triples by normalized phrase matching.
    AlignRules {
        #[arg(long)]
        open: PathBuf,
        #[command(flatten)]
        closed: ClosedArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Align by nearest neighbours over sentence embeddings.
    AlignEmbed {
        #[arg(long)]
        open: PathBuf,
        #[command(flatten)]
        closed: ClosedArgs,
        #[arg(long)]
        out: PathBuf,
        /// Search from closed triples to open triples.
        #[arg(long)]
        inv: bool,
        #[arg(long, default_value_t = 1000)]
        top_k: usize,
        /// `mock` or the sidecar URL.
        #[arg(long, default_value = "mock")]
        embedder: Endpoint,
        #[arg(long, default_value_t = 64)]
        mock_dim: usize,
        #[command(flatten)]
        exec: Exec,
    },
    /// Split alignments into train and test sets.
    Split {
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        ratio: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Write `[SEP]`-joined training lines for the generator.
    ExportTrain {
        #[arg(long)]
        alignments: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate, parse and filter closed candidates for every open triple.
    Translate {
        #[arg(long)]
        open: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `mock` or the sidecar URL.
        #[arg(long, default_value = "mock")]
        generator: Endpoint,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        exec: Exec,
    },
    /// Aggregate generations into a ranked closed KB.
    Rank {
        #[arg(long)]
        generations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "combined")]
        score_mode: ScoreMode,
    },
    /// Automatic metrics of a ranked KB against a target closed KB.
    Eval {
        #[arg(long)]
        ranked: PathBuf,
        /// Target closed KB.
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Training alignments whose closed triples are excluded by the barred metrics.
        #[arg(long)]
        exclude_train: Option<PathBuf>,
        /// Open KB for the relation-agnostic reference run and relative metrics.
        #[arg(long)]
        open: Option<PathBuf>,
        /// Held-out alignments for the per-triple MRR/P@K/R@K (needs --generations).
        #[arg(long, requires = "generations")]
        test_alignments: Option<PathBuf>,
        #[arg(long)]
        generations: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
        ks: Vec<usize>,
        /// Write the JSON report here (text goes to stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Mine Horn rules from rule-based alignments.
    MineRules {
        #[arg(long)]
        alignments: PathBuf,
        /// Open KB the alignments came from (predicate token frequencies).
        #[arg(long)]
        open: PathBuf,
        /// `term<TAB>hypernym` file.
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        min_conf: f64,
        #[arg(long, default_value_t = 20)]
        min_support: usize,
        #[arg(long, default_value_t = 100)]
        top_tokens: usize,
        #[arg(long, default_value_t = 10)]
        isa_min_count: usize,
        #[arg(long, default_value_t = 0.5)]
        isa_max_fraction: f64,
    },
    /// Apply mined rules to an open KB and rank the results.
    ApplyRules {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        open: PathBuf,
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Ranked closed KB output.
        #[arg(long)]
        out: PathBuf,
        /// Per-application provenance (JSONL).
        #[arg(long)]
        provenance: Option<PathBuf>,
    },
    /// Map open triples through a hand-written predicate table.
    MapManual {
        #[arg(long)]
        open: PathBuf,
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Ranked closed KB output.
        #[arg(long)]
        out: PathBuf,
        /// Drop unmatched predicates instead of falling back to CapableOf.
        #[arg(long)]
        no_fallback: bool,
        #[arg(long)]
        generations: Option<PathBuf>,
    },
    /// Subject/object conservation of generations.
    SoReport {
        #[arg(long)]
        generations: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config entry (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

/// Failure class: bad input or configuration (exit 1) or a stage that
/// failed while running (exit 2).
enum Failure {
    Validation(anyhow::Error),
    Stage(anyhow::Error),
}

trait Classify<T> {
    fn invalid(self) -> std::result::Result<T, Failure>;
    fn stage(self) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn invalid(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Validation(e.into()))
    }

    fn stage(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Stage(e.into()))
    }
}

type Outcome = std::result::Result<(), Failure>;

fn load_closed(args: &ClosedArgs) -> Result<(ClosedKb, RelationSchema)> {
    let schema = RelationSchema::load(&args.schema)?;
    let (kb, stats) = ClosedKb::load(&args.closed, &schema)?;
    if stats.warnings() > 0 {
        log::warn!(
            "{}: skipped {} triples with unknown relations and {} degenerate triples",
            args.closed.display(),
            stats.unknown_relation,
            stats.degenerate
        );
    }
    Ok((kb, schema))
}

fn load_taxonomy(path: &Option<PathBuf>) -> Result<Box<dyn Taxonomy>> {
    Ok(match path {
        Some(p) => Box::new(TsvTaxonomy::load(p)?),
        None => Box::new(NoTaxonomy),
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn execute(command: Command) -> Outcome {
    match command {
        Command::AlignRules { open, closed, out } => {
            let open = OpenKb::load(&open).invalid()?;
            let (closed, _) = load_closed(&closed).invalid()?;
            let set = align_rule_based(&open, &ClosedIndex::build(&closed));
            println!("{} alignments", set.len());
            set.save(&out).stage()
        }
        Command::AlignEmbed {
            open,
            closed,
            out,
            inv,
            top_k,
            embedder,
            mock_dim,
            exec,
        } => {
            let open = OpenKb::load(&open).invalid()?;
            let (closed, _) = load_closed(&closed).invalid()?;
            let provider = make_embedder(&embedder, mock_dim.max(1), Duration::from_secs(exec.timeout_secs));
            let config = KnnConfig {
                direction: if inv {
                    AlignDirection::ClosedToOpen
                } else {
                    AlignDirection::OpenToClosed
                },
                top_k,
                batch_size: exec.batch_size,
                concurrency: exec.concurrency,
            };
            if top_k == 0 || exec.batch_size == 0 {
                return Err(Failure::Validation(anyhow::anyhow!("top-k and batch-size must be positive")));
            }
            let set = knn_align(&open, &closed, &provider, config).stage()?;
            println!("{} alignments", set.len());
            set.save(&out).stage()
        }
        Command::Split {
            alignments,
            ratio,
            seed,
            train_out,
            test_out,
        } => {
            let set = AlignmentSet::load(&alignments).invalid()?;
            let (train, test) = split_alignments(&set, ratio, seed).invalid()?;
            println!("train {} / test {}", train.len(), test.len());
            train.save(&train_out).stage()?;
            test.save(&test_out).stage()
        }
        Command::ExportTrain { alignments, seed, out } => {
            let set = AlignmentSet::load(&alignments).invalid()?;
            let lines = export_training(&set, seed);
            write(&out, &training_text(&lines)).stage()
        }
        Command::Translate {
            open,
            schema,
            out,
            generator,
            k,
            exec,
        } => {
            let open = OpenKb::load(&open).invalid()?;
            let schema = RelationSchema::load(&schema).invalid()?;
            if k == 0 || exec.batch_size == 0 {
                return Err(Failure::Validation(anyhow::anyhow!("k and batch-size must be positive")));
            }
            let generator = make_generator(&generator, &schema, Duration::from_secs(exec.timeout_secs));
            let config = TranslateConfig {
                k,
                batch_size: exec.batch_size,
                concurrency: exec.concurrency,
            };
            let t = translate_kb(&open, &generator, &schema, config).stage()?;
            let rejected: Vec<String> = t.rejected.iter().map(|(r, n)| format!("{r}={n}")).collect();
            println!(
                "{} generations, filtered {}, rejected [{}]",
                t.generations.len(),
                t.filtered,
                rejected.join(", ")
            );
            save_generations(&out, &t.generations).stage()
        }
        Command::Rank {
            generations,
            out,
            score_mode,
        } => {
            let gens = load_generations(&generations).invalid()?;
            let ranked = aggregate(&gens, score_mode);
            println!("{} ranked triples", ranked.len());
            ranked.save(&out).stage()
        }
        Command::Eval {
            ranked,
            target,
            schema,
            exclude_train,
            open,
            test_alignments,
            generations,
            ks,
            json: json_out,
        } => {
            let ranked = RankedKb::load(&ranked, ScoreMode::default()).invalid()?;
            let (target, _) = load_closed(&ClosedArgs { closed: target, schema }).invalid()?;
            let train: Vec<_> = match &exclude_train {
                Some(p) => AlignmentSet::load(p).invalid()?.closed_triples().cloned().collect(),
                None => Vec::new(),
            };
            let open = open.map(|p| OpenKb::load(&p)).transpose().invalid()?;
            let ranked_triples: Vec<_> = ranked.triples().cloned().collect();
            let report = evaluate(&ranked_triples, target.triples(), &train, open.as_ref(), &ks);
            print!("{}", report.to_text());
            let test = match (&test_alignments, &generations) {
                (Some(a), Some(g)) => {
                    let gold = AlignmentSet::load(a).invalid()?;
                    let gens = load_generations(g).invalid()?;
                    let r = alignment_test_metrics(&gens, &gold, &[1, 5, 10]);
                    print!("\nalignment test split\n{}", r.to_text());
                    Some(r)
                }
                _ => None,
            };
            if let Some(p) = json_out {
                let value = serde_json::json!({ "automatic": report, "alignment_test": test });
                write(&p, &json(&value).stage()?).stage()?;
            }
            Ok(())
        }
        Command::MineRules {
            alignments,
            open,
            taxonomy,
            out,
            min_conf,
            min_support,
            top_tokens,
            isa_min_count,
            isa_max_fraction,
        } => {
            let set = AlignmentSet::load(&alignments).invalid()?;
            let open = OpenKb::load(&open).invalid()?;
            let taxonomy = load_taxonomy(&taxonomy).invalid()?;
            let meta_config = MetaConfig {
                top_tokens,
                isa_min_count,
                isa_max_fraction,
            };
            let meta = build_meta_kb(&set, taxonomy.as_ref(), &open, meta_config).invalid()?;
            let rules = mine_rules(
                &meta,
                MineConfig {
                    min_confidence: min_conf,
                    min_support,
                },
            );
            println!("{} mappings, {} facts, {} rules", meta.mappings.len(), meta.facts.len(), rules.len());
            save_rules(&out, &rules).stage()
        }
        Command::ApplyRules {
            rules,
            open,
            taxonomy,
            out,
            provenance,
        } => {
            let rules = load_rules(&rules).invalid()?;
            let open = OpenKb::load(&open).invalid()?;
            let taxonomy = load_taxonomy(&taxonomy).invalid()?;
            // Every CONTAINS token of a mined rule was a frequent token at mining time.
            let tokens: Vec<String> = rules
                .iter()
                .flat_map(|r| r.body.atoms())
                .filter_map(|a| match a {
                    Atom::Contains(t) => Some(t),
                    _ => None,
                })
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let apps = apply_rules(&rules, &open, taxonomy.as_ref(), &tokens);
            let ranked = ranked_from_applications(&apps);
            println!("{} applications, {} ranked triples", apps.len(), ranked.len());
            if let Some(p) = provenance {
                let mut text = String::new();
                for a in &apps {
                    let line = serde_json::json!({
                        "candidate": a.candidate,
                        "score": a.score,
                        "rule": rules[a.rule].text(),
                        "source": open.triples[a.source],
                    });
                    text.push_str(&line.to_string());
                    text.push('\n');
                }
                write(&p, &text).stage()?;
            }
            ranked.save(&out).stage()
        }
        Command::MapManual {
            open,
            table,
            schema,
            out,
            no_fallback,
            generations,
        } => {
            let open = OpenKb::load(&open).invalid()?;
            let schema = RelationSchema::load(&schema).invalid()?;
            let table = ManualTable::load(&table, &schema).invalid()?;
            if !no_fallback {
                table.validate(&schema).invalid()?;
            }
            let mapping = map_manual_kb(&open, &table, !no_fallback);
            let r = mapping.report;
            println!(
                "{} triples: {} table, {} fallback, {} unmatched, {} degenerate",
                r.total, r.table, r.fallback, r.unmatched, r.degenerate
            );
            if let Some(p) = generations {
                save_generations(&p, &mapping.generations).stage()?;
            }
            mapping.ranked().save(&out).stage()
        }
        Command::SoReport { generations, json: json_out } => {
            let gens = load_generations(&generations).invalid()?;
            let report = so_conservation(&gens);
            print!("{}", report.to_text());
            if let Some(p) = json_out {
                write(&p, &json(&report).stage()?).stage()?;
            }
            Ok(())
        }
        Command::Run { config, overrides } => {
            let mut cfg = match config {
                Some(p) => PipelineConfig::load(&p).invalid()?,
                None => PipelineConfig::default(),
            };
            cfg.apply_overrides(overrides.iter().map(String::as_str)).invalid()?;
            match run(&cfg) {
                Ok(manifest) => {
                    println!(
                        "run complete: {} stages, artifacts in {}",
                        manifest.stages.len(),
                        cfg.output_dir.display()
                    );
                    Ok(())
                }
                Err(e) if e.exit_code() == 1 => Err(Failure::Validation(e.into())),
                Err(e) => Err(Failure::Stage(e.into())),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
