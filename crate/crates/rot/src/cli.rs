//! Command-line interface: `ingest`, `run`, `score`, `analyze`,
//! `simulate`.
//!
//! Exit codes: 0 success, 2 usage/config/data error, 3 backend
//! exhaustion (partial results are preserved on disk). Human-readable
//! output goes to stdout; `--json` switches to machine output.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{
    self, compare_runs, length_comparison, merge_annotations, size_bins, traversal_histogram,
    DEFAULT_SIZE_BIN_EDGES,
};
use crate::backend::{Backend, RemoteBackend, ScriptedBackend, DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE};
use crate::dataset::{
    adapt_hitab, adapt_tablebench, adapt_wikitq, load_canonical, write_canonical,
};
use crate::error::{Error, Result};
use crate::formal::verify_subset;
use crate::metrics::{aggregate, ScoreKind};
use crate::prompt::{load_demonstrations, Method, MethodSpec};
use crate::records::{default_run_filename, read_records};
use crate::runner::{run, RunConfig};
use crate::table::TraversalUnit;

#[derive(Parser)]
#[command(name = "rot", version, about = "Iterative table-traversal prompting harness")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum IngestFormat {
    Wikitq,
    Hitab,
    Tablebench,
    Canonical,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendChoice {
    Remote,
    Scripted,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Traversals,
    Lengths,
    Sizes,
    Compare,
}

#[derive(Subcommand)]
enum Command {
    /// Convert benchmark files to the canonical JSONL schema.
    Ingest {
        #[arg(long, value_enum)]
        format: IngestFormat,
        /// Input path(s); wikitq takes the question file then the table
        /// directory.
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a method over a canonical dataset, resumably.
    Run {
        /// Canonical JSONL dataset.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long, default_value = "row")]
        unit: TraversalUnit,
        /// Demonstrations in the prompt; defaults to 1, or 0 with
        /// --reasoning-model.
        #[arg(long)]
        shots: Option<usize>,
        #[arg(long, value_enum, default_value = "remote")]
        backend: BackendChoice,
        #[arg(long, default_value = "unspecified")]
        model: String,
        /// Endpoint base URL (or set ROT_ENDPOINT).
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
        temperature: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
        max_tokens: usize,
        /// In-flight request cap.
        #[arg(long, default_value_t = 4)]
        concurrency: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output records file, or an existing directory to use the
        /// conventional {dataset}.{method}.{unit}.{shots}shot.jsonl name.
        #[arg(long)]
        out: PathBuf,
        /// Fixture store for the scripted backend.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Demonstration pool override (canonical JSONL + reasoning/answer).
        #[arg(long)]
        demos: Option<PathBuf>,
        /// Target is a reasoning-style model (zero-shot by default).
        #[arg(long)]
        reasoning_model: bool,
    },
    /// Aggregate one metric over a records file.
    Score {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        metric: ScoreKind,
    },
    /// Reports over records files.
    Analyze {
        #[arg(long = "records", num_args = 1.., required = true)]
        records: Vec<PathBuf>,
        #[arg(long, value_enum)]
        report: ReportKind,
        /// Size-bin edges for --report sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        edges: Option<Vec<usize>>,
        /// Annotation file (JSON map of instance id to category) merged
        /// into the traversals report input.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Emit CSV instead of an aligned text table.
        #[arg(long)]
        csv: bool,
    },
    /// Exhaustively check that in-order traversal simulation reproduces
    /// every row-consumption order.
    Simulate {
        #[arg(long, default_value_t = 6)]
        max_rows: usize,
    },
}

impl Cli {
    pub fn execute(self) -> Result<()> {
        match self.command {
            Command::Ingest { format, inputs, out } => cmd_ingest(format, &inputs, &out),
            Command::Run {
                data,
                method,
                unit,
                shots,
                backend,
                model,
                endpoint,
                temperature,
                max_tokens,
                concurrency,
                seed,
                out,
                fixtures,
                demos,
                reasoning_model,
            } => {
                let shots = shots.unwrap_or(if reasoning_model { 0 } else { 1 });
                let spec = MethodSpec::new(method, unit, shots, reasoning_model)?;
                cmd_run(RunArgs {
                    data,
                    spec,
                    backend,
                    model,
                    endpoint,
                    temperature,
                    max_tokens,
                    concurrency,
                    seed,
                    out,
                    fixtures,
                    demos,
                })
            }
            Command::Score { records, metric } => cmd_score(&records, metric, self.json),
            Command::Analyze {
                records,
                report,
                edges,
                annotations,
                csv,
            } => cmd_analyze(&records, report, edges.as_deref(), annotations.as_deref(), csv, self.json),
            Command::Simulate { max_rows } => cmd_simulate(max_rows, self.json),
        }
    }
}

fn cmd_ingest(format: IngestFormat, inputs: &[PathBuf], out: &PathBuf) -> Result<()> {
    let instances = match format {
        IngestFormat::Wikitq => {
            let [questions, tables] = inputs else {
                return Err(Error::Config(
                    "wikitq ingest takes --in QUESTION_FILE TABLE_DIR".into(),
                ));
            };
            adapt_wikitq(questions, tables)?
        }
        IngestFormat::Hitab => single_input(inputs).and_then(adapt_hitab)?,
        IngestFormat::Tablebench => single_input(inputs).and_then(adapt_tablebench)?,
        IngestFormat::Canonical => single_input(inputs).and_then(load_canonical)?,
    };
    write_canonical(out, &instances)?;
    println!("{} instance(s) written to {}", instances.len(), out.display());
    Ok(())
}

fn single_input(inputs: &[PathBuf]) -> Result<&PathBuf> {
    match inputs {
        [one] => Ok(one),
        _ => Err(Error::Config("this format takes exactly one --in path".into())),
    }
}

struct RunArgs {
    data: PathBuf,
    spec: MethodSpec,
    backend: BackendChoice,
    model: String,
    endpoint: Option<String>,
    temperature: f64,
    max_tokens: usize,
    concurrency: usize,
    seed: u64,
    out: PathBuf,
    fixtures: Option<PathBuf>,
    demos: Option<PathBuf>,
}

fn cmd_run(args: RunArgs) -> Result<()> {
    if args.temperature < 0.0 {
        return Err(Error::Config(format!(
            "temperature must be non-negative, got {}",
            args.temperature
        )));
    }
    if args.max_tokens == 0 {
        return Err(Error::Config("max-tokens must be at least 1".into()));
    }
    let instances = load_canonical(&args.data)?;
    let backend: Box<dyn Backend> = match args.backend {
        BackendChoice::Remote => Box::new(RemoteBackend::from_env(args.endpoint.as_deref())?),
        BackendChoice::Scripted => {
            let path = args.fixtures.ok_or_else(|| {
                Error::Config("scripted backend needs --fixtures".into())
            })?;
            Box::new(ScriptedBackend::open(path)?)
        }
    };
    let demos = args.demos.map(load_demonstrations).transpose()?;
    let out = if args.out.is_dir() {
        let dataset = instances
            .first()
            .map(|i| i.dataset.to_string())
            .unwrap_or_else(|| "empty".into());
        args.out.join(default_run_filename(&dataset, &args.spec))
    } else {
        args.out
    };
    let config = RunConfig {
        spec: args.spec,
        model_id: args.model,
        temperature: args.temperature,
        max_tokens: args.max_tokens,
        concurrency: args.concurrency,
        seed: args.seed,
        out: out.clone(),
        demos,
        progress: true,
    };
    let outcome = run(&instances, backend.as_ref(), &config)?;
    println!(
        "{} new record(s), {} skipped (resume), output {}",
        outcome.completed,
        outcome.skipped,
        out.display()
    );
    Ok(())
}

fn cmd_score(records_path: &PathBuf, metric: ScoreKind, json: bool) -> Result<()> {
    let records = read_records(records_path)?;
    let summary = aggregate(&records, metric)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        return Ok(());
    }
    println!("{} over {} record(s): {:.4}", summary.kind, summary.count, summary.mean);
    if summary.per_qtype.len() > 1 || !summary.per_qtype.contains_key("unknown") {
        let rows: Vec<Vec<String>> = summary
            .per_qtype
            .iter()
            .map(|(qtype, s)| vec![qtype.clone(), format!("{:.4}", s.mean), s.count.to_string()])
            .collect();
        println!("{}", analysis::text_table(&["qtype", "mean", "n"], &rows));
    }
    Ok(())
}

fn cmd_analyze(
    records_paths: &[PathBuf],
    report: ReportKind,
    edges: Option<&[usize]>,
    annotations: Option<&std::path::Path>,
    csv: bool,
    json: bool,
) -> Result<()> {
    let mut sets = Vec::new();
    for path in records_paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        sets.push((name, read_records(path)?));
    }
    let all: Vec<_> = sets.iter().flat_map(|(_, r)| r.iter().cloned()).collect();

    let (header, rows): (Vec<&str>, Vec<Vec<String>>) = match report {
        ReportKind::Traversals => {
            if let Some(path) = annotations {
                let raw = crate::dataset::read_file(path)?;
                let map: std::collections::BTreeMap<String, analysis::Category> =
                    serde_json::from_str(&raw)
                        .map_err(|e| Error::schema(path.display().to_string(), 1, e.to_string()))?;
                let merge = merge_annotations(&all, &map);
                if !merge.unknown_ids.is_empty() {
                    eprintln!("warning: annotations for unknown ids: {:?}", merge.unknown_ids);
                }
                let mut by_category: std::collections::BTreeMap<String, usize> =
                    std::collections::BTreeMap::new();
                for annotated in &merge.records {
                    if let Some(category) = annotated.category {
                        *by_category.entry(format!("{category:?}")).or_default() += 1;
                    }
                }
                let annotated_total: usize = by_category.values().sum();
                println!("annotations: {annotated_total}/{} record(s)", merge.records.len());
                for (category, n) in by_category {
                    println!("  {category}: {n}");
                }
            }
            let hist = traversal_histogram(&all)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&hist).expect("histogram serializes"));
                return Ok(());
            }
            (
                vec!["traversals", "share", "mean_score", "n"],
                hist.iter()
                    .map(|(bucket, stats)| {
                        vec![
                            bucket.to_string(),
                            format!("{:.4}", stats.share),
                            format!("{:.4}", stats.mean_score),
                            stats.count.to_string(),
                        ]
                    })
                    .collect(),
            )
        }
        ReportKind::Lengths => {
            let cmp = length_comparison(&all)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&cmp).expect("comparison serializes"));
                return Ok(());
            }
            let fmt = |v: Option<f64>| v.map_or("absent".to_string(), |v| format!("{v:.1}"));
            (
                vec!["outcome", "mean_tokens", "n"],
                vec![
                    vec!["correct".into(), fmt(cmp.mean_tokens_correct), cmp.n_correct.to_string()],
                    vec![
                        "incorrect".into(),
                        fmt(cmp.mean_tokens_incorrect),
                        cmp.n_incorrect.to_string(),
                    ],
                ],
            )
        }
        ReportKind::Sizes => {
            let default_edges = DEFAULT_SIZE_BIN_EDGES.to_vec();
            let bins = size_bins(&all, edges.unwrap_or(&default_edges))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&bins).expect("bins serialize"));
                return Ok(());
            }
            (
                vec!["size_bin", "mean_score", "n"],
                bins.iter()
                    .map(|b| {
                        let label = match b.hi {
                            Some(hi) => format!("[{}, {})", b.lo, hi),
                            None => format!("[{}, inf)", b.lo),
                        };
                        vec![
                            label,
                            b.mean_score.map_or("absent".to_string(), |m| format!("{m:.4}")),
                            b.count.to_string(),
                        ]
                    })
                    .collect(),
            )
        }
        ReportKind::Compare => {
            let rows = compare_runs(&sets)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
                return Ok(());
            }
            (
                vec!["run", "mean_score", "n", "mean_traversals", "mean_tokens"],
                rows.iter()
                    .map(|r| {
                        vec![
                            r.name.clone(),
                            format!("{:.4}", r.mean_score),
                            r.n.to_string(),
                            format!("{:.2}", r.mean_traversals),
                            format!("{:.1}", r.mean_tokens),
                        ]
                    })
                    .collect(),
            )
        }
    };

    if csv {
        print!("{}", analysis::csv_table(&header, &rows));
    } else {
        println!("{}", analysis::text_table(&header, &rows));
    }
    Ok(())
}

fn cmd_simulate(max_rows: usize, json: bool) -> Result<()> {
    if max_rows == 0 {
        return Err(Error::Config("--max-rows must be at least 1".into()));
    }
    let report = verify_subset(max_rows);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("{report}");
    }
    if !report.is_ok() {
        return Err(Error::Config(format!(
            "{} counterexample(s) found",
            report.failures.len()
        )));
    }
    Ok(())
}
