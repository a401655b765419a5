//! `adachunk`: chunk, score and select over a corpus of parsed Markdown
//! documents with JSON sidecars.
//!
//! Exit status is 0 on success, 1 when some documents failed and 2 on a
//! configuration or input error.

mod commands;
mod config;
mod corpus;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use crate::commands::{CommandError, Outcome};
use crate::config::{Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "adachunk",
    version,
    about = "Document-aware chunking, chunk-quality metrics and adaptive selection"
)]
struct Cli {
    /// JSON run configuration; defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Token counter (`o200k_base` or `whitespace`).
    #[arg(long, global = true)]
    counter: Option<String>,
    /// Directory of recorded LLM responses, `<doc_id>.txt`.
    #[arg(long, global = true)]
    replay_dir: Option<PathBuf>,
    /// Documents processed in parallel.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one chunking method over the corpus.
    Chunk {
        /// Portfolio entry name, or page, sentence, llm-regex, recursive, recursive-<S>, regex:<pattern>.
        #[arg(long)]
        method: String,
        /// Keep the raw chunker output (skip re-splitting and tiny-chunk merging)
        #[arg(long)]
        no_postprocess: bool,
    },
    /// Score the chunks written by `chunk`.
    Score {
        /// Directory of `<doc_id>.jsonl` chunk files.
        #[arg(long)]
        chunks: PathBuf,
    },
    /// Run every portfolio entry and keep the best-scoring chunking per document.
    Select,
    /// Render tables and histograms for every run under a results directory.
    Report { dir: PathBuf },
}

fn run(cli: Cli) -> Result<Outcome, CommandError> {
    let overrides = Overrides {
        counter: cli.counter,
        replay_dir: cli.replay_dir,
        workers: cli.workers,
    };
    let load = || RunConfig::load(cli.config.as_deref(), &overrides);
    match cli.command {
        Command::Chunk {
            method,
            no_postprocess,
        } => commands::cmd_chunk(&load()?, &method, no_postprocess),
        Command::Score { chunks } => commands::cmd_score(&load()?, &chunks),
        Command::Select => commands::cmd_select(&load()?),
        Command::Report { dir } => commands::cmd_report(&dir),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_env("ADACHUNK_LOG").unwrap_or_else(|_| EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial { failed }) => {
            eprintln!("finished with {failed} failed document(s)");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
