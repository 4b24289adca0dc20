use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use kgrag_core::embedding::train;
use kgrag_core::evaluation::{
    evaluate_qa, evaluate_summarization, render_accuracy_table, render_difficulty_table, render_summarization_table,
    EvalReport, Task,
};
use kgrag_core::extraction::{
    chunk_document, extract_all, merge_into_graph, Document, Extractor, LlmExtractor, RuleBasedExtractor,
};
use kgrag_core::generation::{
    answer_mcq, answer_question, summarize, Deps, HttpClient, LlmClient, McqOption, MockClient, Mode,
};
use kgrag_core::kg::KnowledgeGraph;
use kgrag_core::persistence::{
    load_chunks, load_corpus, load_index, load_kg, load_mcq, load_summarization, read_json, save_chunks,
    save_embeddings, save_index, save_kg, write_atomic, ChunkStore, CorpusManifest, DocFormat, RunConfig,
};
use kgrag_core::retrieval::{build_index, EntityMatcher, HashedEncoder, KnowledgeSnippet, Retriever, ScoringWeights, VectorIndex};

use crate::args::{Command, ExtractorKind, Format, GlobalOpts, Snapshots, TaskArg};
use crate::error::{CliError, Result};

pub struct Ctx {
    pub cfg: RunConfig,
    pub global: GlobalOpts,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

impl Ctx {
    /// Load `--config` and apply flag overrides, validating everything before
    /// any command runs.
    pub fn new(global: GlobalOpts) -> Result<Self> {
        let mut cfg = match &global.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = global.seed {
            cfg.train.seed = seed;
        }
        if let Some(m) = &global.mode {
            cfg.generation.mode = m.parse::<Mode>()?;
        }
        if let Some(k) = global.k {
            cfg.generation.top_k = k;
        }
        if let Some(h) = global.hops {
            cfg.generation.hops = h;
        }
        if let Some(w) = &global.weights {
            cfg.generation.weights = w.parse::<ScoringWeights>()?;
        }
        if let Some(e) = &global.endpoint {
            cfg.endpoint.base_url = e.clone();
        }
        if let Some(m) = &global.model {
            cfg.endpoint.model = m.clone();
        }
        if let Some(p) = global.parallelism {
            if p == 0 {
                return Err(CliError::Usage("--parallelism must be positive".into()));
            }
            cfg.parallelism = p;
        }
        cfg.generation.validate()?;
        cfg.chunking.validate()?;
        cfg.train.validate()?;
        if let Some(dir) = &global.mock {
            if !dir.is_dir() {
                return Err(CliError::Usage(format!("--mock {} is not a directory", dir.display())));
            }
        }
        Ok(Self { cfg, global })
    }

    fn client(&self) -> Result<Box<dyn LlmClient>> {
        match &self.global.mock {
            Some(dir) => Ok(Box::new(MockClient::from_dir(dir))),
            None => Ok(Box::new(HttpClient::new(self.cfg.endpoint.clone())?)),
        }
    }

    fn encoder(&self) -> Result<HashedEncoder> {
        Ok(self.cfg.encoder.build()?)
    }

    /// Where a build command writes its snapshot.
    fn snapshot_path(&self, default: &str) -> PathBuf {
        self.global.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn persist(&self, path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        if self.global.dry_run {
            eprintln!("dry run: {} not written", path.display());
            Ok(())
        } else {
            write(path)
        }
    }

    /// Print `text` or write it to `--out`.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.global.out {
            Some(path) => self.persist(path, |p| Ok(write_atomic(p, text.as_bytes())?)),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

struct Loaded {
    graph: KnowledgeGraph,
    index: VectorIndex,
    encoder: HashedEncoder,
}

impl Loaded {
    fn new(ctx: &Ctx, snaps: &Snapshots) -> Result<Self> {
        let graph = match &snaps.kg {
            Some(p) => load_kg(p)?,
            None => KnowledgeGraph::new().frozen(),
        };
        let (index, encoder) = match &snaps.index {
            Some(p) => {
                let index = load_index(p)?;
                // the snapshot records which encoder built it
                let encoder = match HashedEncoder::from_id(index.encoder_id()) {
                    Some(e) => e,
                    None => ctx.encoder()?,
                };
                (index, encoder)
            }
            None => {
                let encoder = ctx.encoder()?;
                (VectorIndex::empty(&encoder), encoder)
            }
        };
        Ok(Self { graph, index, encoder })
    }

    fn deps<'a>(&'a self, client: &'a dyn LlmClient) -> Deps<'a> {
        Deps { graph: &self.graph, index: &self.index, encoder: &self.encoder, client }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn run(ctx: &Ctx, command: &Command) -> Result<()> {
    match command {
        Command::Ingest { root, include, format, manifest } => ingest(ctx, root.as_deref(), include, *format, manifest.as_deref()),
        Command::BuildKg { chunks, extractor, gazetteer, patterns } => {
            build_kg(ctx, chunks, *extractor, gazetteer.as_deref(), patterns.as_deref())
        }
        Command::TrainEmbeddings { kg, epochs, dim } => train_embeddings(ctx, kg, *epochs, *dim),
        Command::BuildIndex { chunks, kg } => build_index_cmd(ctx, chunks, kg.as_deref()),
        Command::Query { question, snapshots } => query(ctx, question, snapshots),
        Command::Answer { question, options, snapshots } => answer(ctx, question, options, snapshots),
        Command::Summarize { file, snapshots } => summarize_cmd(ctx, file, snapshots),
        Command::Evaluate { task, dataset, name, snapshots } => evaluate(ctx, *task, dataset, name.as_deref(), snapshots),
        Command::Report { reports, difficulty } => report(ctx, reports, difficulty.as_deref()),
    }
}

fn ingest(ctx: &Ctx, root: Option<&Path>, include: &[String], format: Format, manifest: Option<&Path>) -> Result<()> {
    let manifest: CorpusManifest = match (manifest, root) {
        (Some(p), _) => read_json(p)?,
        (None, Some(root)) => {
            let globs: Vec<&str> = if include.is_empty() {
                vec!["**/*.txt", "**/*.md"]
            } else {
                include.iter().map(String::as_str).collect()
            };
            let format = match format {
                Format::PlainText => DocFormat::PlainText,
                Format::Markdown => DocFormat::Markdown,
            };
            CorpusManifest::new(root, &globs, format)
        }
        (None, None) => return Err(CliError::Usage("ingest needs --root or --manifest".into())),
    };
    let documents = load_corpus(&manifest)?;
    let mut chunks = Vec::new();
    for doc in &documents {
        chunks.extend(chunk_document(doc, ctx.cfg.chunking)?);
    }
    let store = ChunkStore { chunking: ctx.cfg.chunking, documents, chunks };
    let path = ctx.snapshot_path("chunks.jsonl");
    ctx.persist(&path, |p| Ok(save_chunks(&store, p)?))?;
    println!("ingested {} documents into {} chunks: {}", store.documents.len(), store.chunks.len(), path.display());
    Ok(())
}

fn build_kg(ctx: &Ctx, chunks: &Path, kind: ExtractorKind, gazetteer: Option<&Path>, patterns: Option<&Path>) -> Result<()> {
    let store = load_chunks(chunks)?;
    let client;
    let extractor: Box<dyn Extractor> = match kind {
        ExtractorKind::Rules => {
            let (Some(g), Some(p)) = (gazetteer, patterns) else {
                return Err(CliError::Usage("the rules extractor needs --gazetteer and --patterns".into()));
            };
            Box::new(RuleBasedExtractor::from_files(&read_text(g)?, &read_text(p)?)?)
        }
        ExtractorKind::Llm => {
            client = ctx.client()?;
            Box::new(LlmExtractor::new(client.as_ref()))
        }
    };
    let extractions = extract_all(&store.chunks, extractor.as_ref(), ctx.cfg.parallelism)?;
    let mut graph = KnowledgeGraph::new();
    let report = merge_into_graph(&mut graph, &extractions)?;
    let graph = graph.frozen();
    let path = ctx.snapshot_path("kg.jsonl");
    ctx.persist(&path, |p| Ok(save_kg(&graph, p)?))?;
    let summary = serde_json::json!({
        "entities": graph.entity_count(),
        "relations": graph.relation_count(),
        "triples": graph.triple_count(),
        "merge": report,
        "snapshot": path.display().to_string(),
    });
    print!("{}", to_json(&summary));
    Ok(())
}

fn train_embeddings(ctx: &Ctx, kg: &Path, epochs: Option<usize>, dim: Option<usize>) -> Result<()> {
    let mut config = ctx.cfg.train;
    if let Some(e) = epochs {
        config.epochs = e;
    }
    if let Some(d) = dim {
        config.dim = d;
    }
    config.validate()?;
    let graph = load_kg(kg)?;
    let (table, stats) = train(&graph, &config)?;
    let path = ctx.snapshot_path("embeddings.jsonl");
    ctx.persist(&path, |p| Ok(save_embeddings(&table, p)?))?;
    let summary = serde_json::json!({
        "dim": table.dim,
        "entities": table.entities.len(),
        "relations": table.relations.len(),
        "epochs": stats.epoch_losses.len(),
        "first_loss": stats.epoch_losses.first(),
        "final_loss": stats.final_loss,
        "unfiltered_negatives": stats.unfiltered_negatives,
        "elapsed_secs": stats.elapsed.as_secs_f64(),
        "snapshot": path.display().to_string(),
    });
    print!("{}", to_json(&summary));
    Ok(())
}

fn build_index_cmd(ctx: &Ctx, chunks: &Path, kg: Option<&Path>) -> Result<()> {
    let store = load_chunks(chunks)?;
    let graph = match kg {
        Some(p) => load_kg(p)?,
        None => KnowledgeGraph::new(),
    };
    let matcher = EntityMatcher::new(&graph);
    let snippets: Vec<KnowledgeSnippet> = store
        .chunks
        .iter()
        .filter(|c| !c.text.trim().is_empty())
        .map(|c| KnowledgeSnippet::from_chunk(c, &matcher))
        .collect();
    let encoder = ctx.encoder()?;
    let index = build_index(snippets, &encoder)?;
    let path = ctx.snapshot_path("index.jsonl");
    ctx.persist(&path, |p| Ok(save_index(&index, p)?))?;
    println!("indexed {} snippets with {}: {}", index.len(), index.encoder_id(), path.display());
    Ok(())
}

fn query(ctx: &Ctx, question: &str, snaps: &Snapshots) -> Result<()> {
    if snaps.index.is_none() {
        return Err(CliError::Usage("query needs --index".into()));
    }
    let loaded = Loaded::new(ctx, snaps)?;
    let g = &ctx.cfg.generation;
    let retriever = Retriever::new(&loaded.index, &loaded.encoder, &loaded.graph)?;
    let ranked = match g.mode {
        Mode::LlmOnly => return Err(CliError::Usage("query needs --mode rag or kg_rag".into())),
        Mode::Rag => retriever.top_k(question, g.top_k, g.weights)?,
        Mode::KgRag => retriever.for_query(question, g.top_k, g.weights, g.hops)?,
    };
    let mut out = String::new();
    for (i, s) in ranked.iter().enumerate() {
        out.push_str(&format!(
            "{}\t{:.6}\tsim={:.6}\ttfidf={:.6}\tem={:.6}\t{}\t{}\n",
            i + 1,
            s.score,
            s.parts.sim,
            s.parts.tfidf,
            s.parts.em,
            s.snippet.source.as_str(),
            s.snippet.id
        ));
    }
    ctx.emit(&out)
}

fn parse_options(raw: &[String]) -> Result<Vec<McqOption>> {
    raw.iter()
        .map(|o| {
            o.split_once('=')
                .map(|(l, t)| McqOption::new(l.trim(), t.trim()))
                .ok_or_else(|| CliError::Usage(format!("--option {o:?} is not LABEL=TEXT")))
        })
        .collect()
}

fn answer(ctx: &Ctx, question: &str, options: &[String], snaps: &Snapshots) -> Result<()> {
    if question.trim().is_empty() {
        return Err(CliError::Usage("question is empty".into()));
    }
    let options = parse_options(options)?;
    let loaded = Loaded::new(ctx, snaps)?;
    let client = ctx.client()?;
    let deps = loaded.deps(client.as_ref());
    let ans = if options.is_empty() {
        answer_question(question, &ctx.cfg.generation, &deps)?
    } else {
        answer_mcq(question, &options, &ctx.cfg.generation, &deps)?
    };
    ctx.emit(&to_json(&ans))
}

fn summarize_cmd(ctx: &Ctx, file: &Path, snaps: &Snapshots) -> Result<()> {
    let text = read_text(file)?;
    let id = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let doc = Document::new(id, text, file.display().to_string(), vec![])?;
    let loaded = Loaded::new(ctx, snaps)?;
    let client = ctx.client()?;
    let ans = summarize(&doc, &ctx.cfg.generation, &loaded.deps(client.as_ref()))?;
    ctx.emit(&to_json(&ans))
}

fn evaluate(ctx: &Ctx, task: TaskArg, dataset: &Path, name: Option<&str>, snaps: &Snapshots) -> Result<()> {
    let name = match name {
        Some(n) => n.to_string(),
        None => dataset.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into()),
    };
    let loaded = Loaded::new(ctx, snaps)?;
    let client = ctx.client()?;
    let deps = loaded.deps(client.as_ref());
    let report = match task {
        TaskArg::Qa => evaluate_qa(&load_mcq(dataset)?, &name, &ctx.cfg.generation, &deps, ctx.cfg.parallelism)?,
        TaskArg::Summarization => {
            evaluate_summarization(&load_summarization(dataset)?, &name, &ctx.cfg.generation, &deps, ctx.cfg.parallelism)?
        }
    };
    for f in &report.failures {
        log::warn!("{}: {}", f.id, f.error);
    }
    let mut json = report.to_json();
    json.push('\n');
    let table = render_tables(std::slice::from_ref(&report), None);
    if ctx.global.out.is_some() {
        ctx.emit(&json)?;
        print!("{table}");
    } else {
        print!("{json}");
        eprint!("{table}");
    }
    Ok(())
}

fn render_tables(reports: &[EvalReport], difficulty: Option<&str>) -> String {
    let qa: Vec<EvalReport> = reports.iter().filter(|r| r.task == Task::Qa).cloned().collect();
    let sum: Vec<EvalReport> = reports.iter().filter(|r| r.task == Task::Summarization).cloned().collect();
    let mut out = String::new();
    if !sum.is_empty() {
        out.push_str(&render_summarization_table(&sum));
    }
    if !qa.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&render_accuracy_table(&qa));
        if let Some(ds) = difficulty {
            out.push('\n');
            out.push_str(&render_difficulty_table(&qa, ds));
        }
    }
    out
}

fn report(ctx: &Ctx, paths: &[PathBuf], difficulty: Option<&str>) -> Result<()> {
    let mut reports = Vec::new();
    let mut seen = BTreeSet::new();
    for p in paths {
        let r: EvalReport = read_json(p)?;
        if !seen.insert((r.task, r.mode, r.dataset.clone())) {
            return Err(CliError::Usage(format!(
                "{}: a {} report for {:?} was already given",
                p.display(),
                r.mode.as_str(),
                r.dataset
            )));
        }
        reports.push(r);
    }
    if let Some(ds) = difficulty {
        if !reports.iter().any(|r| r.task == Task::Qa && r.dataset == ds) {
            return Err(CliError::Usage(format!("no QA report for dataset {ds:?}")));
        }
    }
    ctx.emit(&render_tables(&reports, difficulty))
}
