//! The `chunk`, `score`, `select` and `report` commands.
//!
//! Output layout under `output_dir`:
//!
//! ```text
//! chunks/<label>/<doc_id>.jsonl    one chunk per line
//! chunks/<label>/stats.json        size statistics
//! chunks/<label>/sizes.txt         size table
//! scores/<label>/reports.jsonl     one metric report per document
//! scores/<label>/aggregate.json
//! scores/<label>/metrics.txt       metric table
//! select/selection.jsonl           one selection result per document
//! select/summary.{json,txt}        selection shares
//! select/metrics.txt               metric table per portfolio entry and for the selection
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use adachunk::chunking::ChunkRecord;
use adachunk::metrics::{score, Metric, MetricReport};
use adachunk::providers::CorefProvider;
use adachunk::selector::{run_chunker, select_best, ChunkContext, ChunkerSpec, PortfolioEntry};
use adachunk::stats::{metric_table, selection_table, size_table, MetricAggregate, SizeStats};
use adachunk::{selection_stats, validate_chunking, Chunking, Document, SelectionResult};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::corpus::{self, Entry};
use crate::plot::histogram_svg;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Input(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Config(_) | CommandError::Input(_) => 2,
            CommandError::Io { .. } => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CommandError {
    let context = context.into();
    move |source| CommandError::Io { context, source }
}

/// Whether every document went through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    Partial { failed: usize },
}

impl Outcome {
    fn from_failures(failed: usize) -> Self {
        if failed == 0 {
            Outcome::Complete
        } else {
            Outcome::Partial { failed }
        }
    }
}

fn par_map<T: Sync, R: Send>(
    workers: usize,
    items: &[T],
    f: impl Fn(&T) -> R + Sync + Send,
) -> Vec<R> {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            tracing::warn!("worker pool unavailable ({e}); running sequentially");
            items.iter().map(f).collect()
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CommandError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(format!("creating {}", parent.display())))?;
    }
    fs::write(path, contents).map_err(io_err(format!("writing {}", path.display())))
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("serialisable output"));
        out.push('\n');
    }
    out
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable output");
    s.push('\n');
    s
}

/// Recreate `dir` empty so reruns never mix old and new files.
fn fresh_dir(dir: &Path) -> Result<(), CommandError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io_err(format!("clearing {}", dir.display())))?;
    }
    fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))
}

/// File-name-safe form of a method label.
pub fn dir_label(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._+-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn report_failures(what: &str, failures: &[(String, String)]) {
    for (id, err) in failures {
        tracing::error!(doc = %id, "{what} failed: {err}");
    }
    if !failures.is_empty() {
        eprintln!("{} document(s) failed during {what}", failures.len());
    }
}

struct Shared {
    entries: Vec<Entry>,
    coref: Option<Box<dyn CorefProvider>>,
}

impl Shared {
    fn new(cfg: &RunConfig) -> Result<Self, CommandError> {
        let entries = corpus::discover(&cfg.corpus_dir, cfg.sidecar_dir())
            .map_err(io_err(format!("listing {}", cfg.corpus_dir.display())))?;
        let coref = cfg.coref().map(|c| Box::new(c) as Box<dyn CorefProvider>);
        Ok(Self { entries, coref })
    }

    fn load(&self, entry: &Entry) -> Result<Document, String> {
        corpus::load(entry, self.coref.as_deref())
    }
}

/// A portfolio entry by name, or one of the built-in methods `page`,
/// `sentence`, `llm-regex`, `recursive`, `recursive-<S>` and `regex:<pattern>`.
pub fn resolve_method(cfg: &RunConfig, name: &str) -> Result<PortfolioEntry, CommandError> {
    if let Some(entry) = cfg.portfolio.get(name) {
        return Ok(entry.clone());
    }
    let overlap = cfg.chunker.overlap;
    let spec = match name {
        "page" => ChunkerSpec::Page,
        "sentence" => ChunkerSpec::Sentence {
            sentences_per_chunk: None,
        },
        "llm-regex" => ChunkerSpec::LlmRegex,
        "recursive" => ChunkerSpec::Recursive {
            target_size: cfg.chunker.target_size,
            overlap,
        },
        _ => {
            if let Some(size) = name.strip_prefix("recursive-") {
                let target_size = size.parse().map_err(|_| {
                    CommandError::Input(format!("bad chunk size in method `{name}`"))
                })?;
                ChunkerSpec::Recursive {
                    target_size,
                    overlap,
                }
            } else if let Some(pattern) = name.strip_prefix("regex:") {
                ChunkerSpec::Regex {
                    pattern: pattern.to_string(),
                }
            } else {
                return Err(CommandError::Input(format!("unknown method `{name}`")));
            }
        }
    };
    Ok(PortfolioEntry::new(name, spec, true))
}

pub fn run_label(entry: &PortfolioEntry) -> String {
    if entry.postprocess {
        format!(
            "{}{}",
            entry.name,
            adachunk::postprocess::POSTPROCESS_SUFFIX
        )
    } else {
        entry.name.clone()
    }
}

struct ChunkedDoc {
    records: Vec<ChunkRecord>,
    proposal: Option<String>,
    elapsed: Duration,
}

pub fn cmd_chunk(
    cfg: &RunConfig,
    method: &str,
    no_postprocess: bool,
) -> Result<Outcome, CommandError> {
    let mut entry = resolve_method(cfg, method)?;
    if no_postprocess {
        entry.postprocess = false;
    }
    let llm = cfg.llm();
    if entry.chunker == ChunkerSpec::LlmRegex && llm.is_none() {
        return Err(
            ConfigError::Invalid("llm-regex needs `llm.url` or a replay directory".into()).into(),
        );
    }
    let counter = cfg.counter()?;
    let shared = Shared::new(cfg)?;
    let ctx = ChunkContext {
        config: &cfg.chunker,
        bounds: &cfg.bounds,
        counter: counter.as_ref(),
        llm: llm.as_deref(),
    };

    let results = par_map(cfg.workers, &shared.entries, |e| {
        let doc = shared.load(e)?;
        let run = run_chunker(&doc, &entry.chunker, entry.postprocess, &ctx)
            .map_err(|err| err.to_string())?;
        Ok::<_, String>(ChunkedDoc {
            records: run.chunking.to_records(&doc),
            proposal: run.proposal.map(|p| pretty(&p)),
            elapsed: run.elapsed,
        })
    });

    let label = run_label(&entry);
    let dir = cfg.output_dir.join("chunks").join(dir_label(&label));
    fresh_dir(&dir)?;
    let mut counts = Vec::new();
    let mut time = Duration::ZERO;
    let mut done = 0;
    let mut failures = Vec::new();
    for (e, result) in shared.entries.iter().zip(results) {
        match result {
            Ok(doc) => {
                counts.extend(doc.records.iter().map(|r| r.token_count));
                time += doc.elapsed;
                done += 1;
                write_file(&dir.join(format!("{}.jsonl", e.id)), &jsonl(&doc.records))?;
                if let Some(p) = doc.proposal {
                    write_file(&dir.join("proposals").join(format!("{}.json", e.id)), &p)?;
                }
            }
            Err(err) => failures.push((e.id.clone(), err)),
        }
    }
    report_failures("chunking", &failures);

    let stats = SizeStats::from_counts(&label, &counts, done, time.as_secs_f64());
    let table = size_table(std::slice::from_ref(&stats));
    write_file(&dir.join("stats.json"), &pretty(&stats))?;
    write_file(&dir.join("sizes.txt"), &table)?;
    print!("{table}");
    Ok(Outcome::from_failures(failures.len()))
}

/// Chunk records grouped by document id, read from every `*.jsonl` in `dir`.
fn read_chunk_dir(dir: &Path) -> Result<BTreeMap<String, Vec<ChunkRecord>>, CommandError> {
    let listing = fs::read_dir(dir).map_err(io_err(format!("listing {}", dir.display())))?;
    let mut by_doc: BTreeMap<String, Vec<ChunkRecord>> = BTreeMap::new();
    let mut paths: Vec<PathBuf> = listing
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("jsonl"))
        .collect();
    paths.sort();
    for path in paths {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let raw =
            fs::read_to_string(&path).map_err(io_err(format!("reading {}", path.display())))?;
        let records = by_doc.entry(stem).or_default();
        for (n, line) in raw
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let record: ChunkRecord = serde_json::from_str(line)
                .map_err(|e| CommandError::Input(format!("{}:{}: {e}", path.display(), n + 1)))?;
            records.push(record);
        }
    }
    // records name their document; the file stem is only a fallback
    let mut out: BTreeMap<String, Vec<ChunkRecord>> = BTreeMap::new();
    for (stem, records) in by_doc {
        let id = records.first().map_or(stem, |r| r.doc_id.clone());
        out.entry(id).or_default().extend(records);
    }
    Ok(out)
}

pub fn cmd_score(cfg: &RunConfig, chunks_dir: &Path) -> Result<Outcome, CommandError> {
    if !chunks_dir.is_dir() {
        return Err(CommandError::Input(format!(
            "{} is not a directory",
            chunks_dir.display()
        )));
    }
    let chunks = read_chunk_dir(chunks_dir)?;
    let shared = Shared::new(cfg)?;
    let corpus_ids: BTreeSet<&str> = shared.entries.iter().map(|e| e.id.as_str()).collect();
    let chunk_ids: BTreeSet<&str> = chunks.keys().map(String::as_str).collect();
    if corpus_ids != chunk_ids {
        let missing: Vec<&str> = corpus_ids.difference(&chunk_ids).copied().collect();
        let unknown: Vec<&str> = chunk_ids.difference(&corpus_ids).copied().collect();
        return Err(CommandError::Input(format!(
            "chunk files do not match the corpus; without chunks: [{}]; not in corpus: [{}]",
            missing.join(", "),
            unknown.join(", ")
        )));
    }
    let provider = cfg.embedder();

    let results = par_map(cfg.workers, &shared.entries, |e| {
        let doc = shared.load(e)?;
        let records = &chunks[&e.id];
        let chunking = Chunking::from_records(records, "imported").unwrap_or_else(|| Chunking {
            doc_id: e.id.clone(),
            method: "imported".into(),
            counter: "imported".into(),
            chunks: Vec::new(),
        });
        let violations = validate_chunking(&doc, &chunking);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(format!("invalid chunking: {}", list.join("; ")));
        }
        score(&doc, &chunking, &cfg.metrics, provider.as_ref()).map_err(|err| err.to_string())
    });

    let label = chunks_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "chunks".into());
    let dir = cfg.output_dir.join("scores").join(dir_label(&label));
    fresh_dir(&dir)?;
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for (e, result) in shared.entries.iter().zip(results) {
        match result {
            Ok(r) => reports.push(r),
            Err(err) => failures.push((e.id.clone(), err)),
        }
    }
    report_failures("scoring", &failures);

    let aggregate = MetricAggregate::from_reports(&label, &reports);
    let table = metric_table(std::slice::from_ref(&aggregate));
    write_file(&dir.join("reports.jsonl"), &jsonl(&reports))?;
    write_file(&dir.join("aggregate.json"), &pretty(&aggregate))?;
    write_file(&dir.join("metrics.txt"), &table)?;
    print!("{table}");
    Ok(Outcome::from_failures(failures.len()))
}

/// Per-entry aggregates in portfolio order, then one row for the selection.
fn selection_aggregates(cfg: &RunConfig, results: &[SelectionResult]) -> Vec<MetricAggregate> {
    let mut rows: Vec<MetricAggregate> = cfg
        .portfolio
        .entries()
        .iter()
        .map(|entry| {
            let reports: Vec<MetricReport> = results
                .iter()
                .filter_map(|r| r.reports.get(&entry.name).cloned())
                .collect();
            MetricAggregate::from_reports(run_label(entry), &reports)
        })
        .collect();
    let chosen: Vec<MetricReport> = results
        .iter()
        .map(|r| r.reports[&r.selected].clone())
        .collect();
    rows.push(MetricAggregate::from_reports("adaptive", &chosen));
    rows
}

pub fn cmd_select(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let llm = cfg.llm();
    if llm.is_none()
        && cfg
            .portfolio
            .entries()
            .iter()
            .any(|e| e.chunker == ChunkerSpec::LlmRegex)
    {
        tracing::warn!("no LLM configured; llm-regex entries will be recorded as failures");
    }
    let counter = cfg.counter()?;
    let provider = cfg.embedder();
    let shared = Shared::new(cfg)?;
    let ctx = ChunkContext {
        config: &cfg.chunker,
        bounds: &cfg.bounds,
        counter: counter.as_ref(),
        llm: llm.as_deref(),
    };

    let outcomes = par_map(cfg.workers, &shared.entries, |e| {
        let doc = shared.load(e)?;
        select_best(&doc, &cfg.portfolio, &ctx, &cfg.metrics, provider.as_ref())
            .map_err(|err| err.to_string())
    });

    let dir = cfg.output_dir.join("select");
    fresh_dir(&dir)?;
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (e, outcome) in shared.entries.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(err) => failures.push((e.id.clone(), err)),
        }
    }
    report_failures("selection", &failures);

    let shares = selection_stats(&results);
    let summary = selection_table(&shares);
    let metrics = metric_table(&selection_aggregates(cfg, &results));
    write_file(&dir.join("selection.jsonl"), &jsonl(&results))?;
    write_file(&dir.join("summary.json"), &pretty(&shares))?;
    write_file(&dir.join("summary.txt"), &summary)?;
    write_file(&dir.join("metrics.txt"), &metrics)?;
    print!("{summary}\n{metrics}");
    Ok(Outcome::from_failures(failures.len()))
}

/// Files under `dir` (recursively) with the given name, sorted.
fn find_named(dir: &Path, name: &str, out: &mut Vec<PathBuf>) -> io::Result<()> {
    let mut items: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    items.sort();
    for path in items {
        if path.is_dir() {
            find_named(&path, name, out)?;
        } else if path.file_name().and_then(|n| n.to_str()) == Some(name) {
            out.push(path);
        }
    }
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CommandError> {
    let raw = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| CommandError::Input(format!("{}:{}: {e}", path.display(), n + 1)))
        })
        .collect()
}

fn parent_label(path: &Path, root: &Path) -> String {
    let parent = path.parent().unwrap_or(root);
    let rel = parent.strip_prefix(root).unwrap_or(parent);
    let s = rel.to_string_lossy().replace('\\', "/");
    if s.is_empty() {
        ".".into()
    } else {
        s
    }
}

/// Tables and histograms for every run found under `dir`.
pub fn cmd_report(dir: &Path) -> Result<Outcome, CommandError> {
    if !dir.is_dir() {
        return Err(CommandError::Input(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let find = |name: &str| -> Result<Vec<PathBuf>, CommandError> {
        let mut out = Vec::new();
        find_named(dir, name, &mut out).map_err(io_err(format!("scanning {}", dir.display())))?;
        Ok(out)
    };

    let mut sizes = Vec::new();
    for path in find("stats.json")? {
        let raw =
            fs::read_to_string(&path).map_err(io_err(format!("reading {}", path.display())))?;
        let stats: SizeStats = serde_json::from_str(&raw)
            .map_err(|e| CommandError::Input(format!("{}: {e}", path.display())))?;
        sizes.push(stats);
    }

    let mut metric_rows = Vec::new();
    let mut histograms: Vec<(String, Vec<MetricReport>)> = Vec::new();
    for path in find("reports.jsonl")? {
        let reports: Vec<MetricReport> = read_jsonl(&path)?;
        let label = parent_label(&path, dir);
        metric_rows.push(MetricAggregate::from_reports(&label, &reports));
        histograms.push((label, reports));
    }

    let mut shares = Vec::new();
    for path in find("selection.jsonl")? {
        let results: Vec<SelectionResult> = read_jsonl(&path)?;
        let label = parent_label(&path, dir);
        let mut names: Vec<String> = Vec::new();
        for r in &results {
            for name in r.reports.keys() {
                if !names.contains(name) {
                    names.push(name.clone());
                }
            }
        }
        for name in names {
            let reports: Vec<MetricReport> = results
                .iter()
                .filter_map(|r| r.reports.get(&name).cloned())
                .collect();
            metric_rows.push(MetricAggregate::from_reports(
                format!("{label}/{name}"),
                &reports,
            ));
        }
        let chosen: Vec<MetricReport> = results
            .iter()
            .map(|r| r.reports[&r.selected].clone())
            .collect();
        metric_rows.push(MetricAggregate::from_reports(
            format!("{label}/adaptive"),
            &chosen,
        ));
        histograms.push((format!("{label}/adaptive"), chosen));
        shares.extend(selection_stats(&results));
    }

    let text = format!(
        "Chunk sizes (tokens)\n\n{}\nIntrinsic metrics (%)\n\n{}\nMethod selection\n\n{}",
        size_table(&sizes),
        metric_table(&metric_rows),
        selection_table(&shares)
    );
    write_file(&dir.join("report.txt"), &text)?;

    let plots = dir.join("plots");
    for (label, reports) in &histograms {
        for metric in Metric::ALL {
            let values: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.get(metric).value())
                .collect();
            if values.is_empty() {
                continue;
            }
            let title = format!("{label} {}", metric.label());
            let name = format!("{}-{}.svg", dir_label(label), metric.label().to_lowercase());
            write_file(&plots.join(name), &histogram_svg(&title, &values, 10))?;
        }
    }
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(io_err("writing stdout"))?;
    Ok(Outcome::Complete)
}
