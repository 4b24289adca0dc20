use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "kgrag", version, about = "Knowledge-graph augmented retrieval over telecom documents")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Run configuration (JSON). Flags below override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// llm_only, rag or kg_rag.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Snippets per prompt.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub hops: Option<usize>,
    /// Hybrid score weights as `sim,tfidf,em`.
    #[arg(long, global = true, value_name = "A,B,C")]
    pub weights: Option<String>,
    /// Replay model replies from this fixture directory; unknown prompts fail.
    #[arg(long, global = true, value_name = "DIR")]
    pub mock: Option<PathBuf>,
    /// Chat-completions base URL.
    #[arg(long, global = true, value_name = "URL")]
    pub endpoint: Option<String>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Concurrent model calls.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Output file instead of stdout (or the snapshot path for build commands).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Validate and compute, but write nothing.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    PlainText,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractorKind {
    Rules,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Qa,
    Summarization,
}

#[derive(Debug, Args)]
pub struct Snapshots {
    /// Knowledge graph snapshot; an empty graph when omitted.
    #[arg(long, value_name = "PATH")]
    pub kg: Option<PathBuf>,
    /// Index snapshot; an empty index when omitted.
    #[arg(long, value_name = "PATH")]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a corpus and write a chunk store.
    Ingest {
        /// Corpus root directory.
        #[arg(long, required_unless_present = "manifest")]
        root: Option<PathBuf>,
        /// Glob relative to the root; repeatable.
        #[arg(long = "include", value_name = "GLOB")]
        include: Vec<String>,
        #[arg(long, value_enum, default_value = "plain-text")]
        format: Format,
        /// Corpus manifest (JSON) instead of --root/--include/--format.
        #[arg(long, value_name = "PATH", conflicts_with_all = ["root", "include"])]
        manifest: Option<PathBuf>,
    },
    /// Extract entities and relations from chunks into a knowledge graph snapshot.
    BuildKg {
        #[arg(long, value_name = "PATH")]
        chunks: PathBuf,
        #[arg(long, value_enum, default_value = "rules")]
        extractor: ExtractorKind,
        /// `surface<TAB>type` lines (rules extractor).
        #[arg(long, value_name = "PATH")]
        gazetteer: Option<PathBuf>,
        /// `label<TAB>regex` lines (rules extractor).
        #[arg(long, value_name = "PATH")]
        patterns: Option<PathBuf>,
    },
    /// Train TransE embeddings for a knowledge graph snapshot.
    TrainEmbeddings {
        #[arg(long, value_name = "PATH")]
        kg: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Encode chunks into a vector index snapshot.
    BuildIndex {
        #[arg(long, value_name = "PATH")]
        chunks: PathBuf,
        /// Graph used to link chunks to the entities they name.
        #[arg(long, value_name = "PATH")]
        kg: Option<PathBuf>,
    },
    /// Rank snippets for a question and print the score components.
    Query {
        question: String,
        #[command(flatten)]
        snapshots: Snapshots,
    },
    /// Answer one question, optionally multiple choice.
    Answer {
        question: String,
        /// `LABEL=text`; repeat for each option.
        #[arg(long = "option", value_name = "LABEL=TEXT")]
        options: Vec<String>,
        #[command(flatten)]
        snapshots: Snapshots,
    },
    /// Summarize one document.
    Summarize {
        #[arg(long, value_name = "PATH")]
        file: PathBuf,
        #[command(flatten)]
        snapshots: Snapshots,
    },
    /// Evaluate a dataset and emit an evaluation report.
    Evaluate {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        /// Dataset name used in reports; defaults to the file stem.
        #[arg(long)]
        name: Option<String>,
        #[command(flatten)]
        snapshots: Snapshots,
    },
    /// Render evaluation reports side by side.
    Report {
        #[arg(required = true, value_name = "REPORT")]
        reports: Vec<PathBuf>,
        /// Also render the per-difficulty table for this dataset.
        #[arg(long, value_name = "DATASET")]
        difficulty: Option<String>,
    },
}
