use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use patharchive::eval::{
    evaluate_panels, evaluate_ranks, evaluate_stats, evaluate_text, read_jsonl, read_rank_log, write_metrics,
    MetricReport, PanelCase, StatRequest, TextPair, DEFAULT_CUTOFF, DEFAULT_RESAMPLES,
};
use patharchive::ingest::{emit_corpus, ingest_reports, read_raw_reports, Chunker, MarkerLexicon, Normalizer};
use patharchive::rag::{
    answer_query, recommend_ihc_for_report, run_cohort, transform_report, write_cohort_results, CohortSpec, LlmClient,
    Rendering,
};
use patharchive::retrieval::{Corpus, Engine, IndexSet, SearchRequest};
use patharchive::service::{run_blocking, AppState, EncoderBackend, EngineConfig};
use patharchive::{Error, Result};

#[derive(Parser)]
#[command(name = "patharchive", version, about = "Hybrid retrieval and grounded LLM workflows over pathology reports")]
struct Cli {
    /// Engine configuration (TOML); env overrides always apply.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the deterministic mock encoder with this dimension.
    #[arg(long, global = true, value_name = "DIM")]
    mock_encoder: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize, section and chunk raw reports into a corpus directory.
    Ingest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = patharchive::ingest::DEFAULT_MIN_TOKENS)]
        min_tokens: usize,
        #[arg(long, default_value_t = patharchive::ingest::DEFAULT_MAX_TOKENS)]
        max_tokens: usize,
        #[arg(long)]
        mask_ihc: bool,
    },
    /// Embed a corpus and write the three indices.
    Index {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hybrid search, optionally with a grounded answer.
    Search {
        query: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        generate: bool,
        #[command(flatten)]
        dirs: Dirs,
    },
    #[command(subcommand)]
    Cohort(CohortCommand),
    /// Rewrite one report for an audience.
    Transform {
        #[arg(long)]
        report: String,
        #[arg(long)]
        kind: Rendering,
        #[command(flatten)]
        dirs: Dirs,
    },
    /// Recommend an IHC panel for one report (its IHC content is masked first).
    Ihc {
        #[arg(long)]
        report: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        dirs: Dirs,
    },
    /// Metrics with confidence intervals from JSONL inputs.
    Eval {
        kind: EvalKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 3, 5, 10])]
        k: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
        resamples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Args)]
struct Dirs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CohortCommand {
    /// Judge every report against inclusion/exclusion criteria.
    Run {
        #[arg(long)]
        criteria: PathBuf,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long, requires = "threshold")]
        prefilter_query: Option<String>,
        #[arg(long, requires = "prefilter_query")]
        threshold: Option<f64>,
        #[arg(long)]
        concurrency: Option<usize>,
        #[arg(long, default_value = "cohort_out")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ConfigCommand {
    /// Print the effective configuration with all defaults.
    Show,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalKind {
    Ranks,
    Panels,
    Text,
    Stats,
}

fn load_config(cli: &Cli) -> Result<EngineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => EngineConfig::load(p)?,
        None => {
            let mut c = EngineConfig::default();
            c.apply_env();
            c
        }
    };
    if let Some(dim) = cli.mock_encoder {
        cfg.encoder_backend = EncoderBackend::Mock { dim, seed: 0 };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn with_dirs(mut cfg: EngineConfig, corpus: &Option<PathBuf>, index: &Option<PathBuf>) -> EngineConfig {
    if let Some(c) = corpus {
        cfg.corpus_dir = c.clone();
    }
    if let Some(i) = index {
        cfg.index_dir = i.clone();
    }
    cfg
}

fn require_llm(cfg: &EngineConfig) -> Result<Arc<dyn LlmClient>> {
    cfg.llm_client()?.ok_or_else(|| Error::InvalidConfig("no LLM endpoint configured; set LLM_URL".into()))
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Error::InvalidInput(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn report<'a>(engine: &'a Engine, id: &str) -> Result<&'a patharchive::ingest::ReportDoc> {
    engine.corpus().doc(id).ok_or_else(|| Error::NotFound(format!("report {id}")))
}

fn eval(kind: EvalKind, input: &Path, ks: &[usize], cutoff: usize, resamples: usize, seed: u64) -> Result<Vec<MetricReport>> {
    match kind {
        EvalKind::Ranks => evaluate_ranks(&read_rank_log(input)?, ks, cutoff),
        EvalKind::Panels => evaluate_panels(&read_jsonl::<PanelCase>(input)?),
        EvalKind::Text => evaluate_text(&read_jsonl::<TextPair>(input)?),
        EvalKind::Stats => evaluate_stats(&read_jsonl::<StatRequest>(input)?, resamples, seed),
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Ingest { input, out, min_tokens, max_tokens, mask_ihc } => {
            let raws = read_raw_reports(&input)?;
            let chunker = Chunker::new(min_tokens, max_tokens)?;
            let lexicon = MarkerLexicon::default();
            let (docs, chunks) = ingest_reports(&raws, &Normalizer::default(), &chunker, mask_ihc.then_some(&lexicon))?;
            print_json(&emit_corpus(&docs, &chunks, &out)?)
        }
        Command::Index { corpus, out } => {
            let cfg = with_dirs(cfg, &corpus, &out);
            let corpus = Corpus::load(&cfg.corpus_dir)?;
            let indices = IndexSet::build(&corpus, cfg.encoder()?.as_ref(), &cfg.index_build_config())?;
            std::fs::create_dir_all(&cfg.index_dir).map_err(|e| Error::InvalidInput(format!("{}: {e}", cfg.index_dir.display())))?;
            let digests: std::collections::BTreeMap<_, _> = indices.persist(&cfg.index_dir)?.into_iter().collect();
            print_json(&digests)
        }
        Command::Search { query, k, generate, dirs } => {
            let cfg = with_dirs(cfg, &dirs.corpus, &dirs.index);
            let engine = cfg.open_engine()?;
            if generate {
                print_json(&answer_query(&engine, require_llm(&cfg)?.as_ref(), &query, k, &cfg.rag)?)
            } else {
                let req = SearchRequest::new(query, k).with_weights(cfg.weights).with_k_backend(cfg.k_backend.max(k));
                print_json(&engine.search(&req)?)
            }
        }
        Command::Cohort(CohortCommand::Run { criteria, corpus, index, prefilter_query, threshold, concurrency, out }) => {
            let cfg = with_dirs(cfg, &corpus, &index);
            let mut spec = CohortSpec::from_file(&criteria)?;
            spec.concurrency = concurrency.unwrap_or(cfg.cohort.concurrency);
            if let (Some(q), Some(t)) = (prefilter_query, threshold) {
                spec = spec.with_prefilter(q, t);
            }
            let llm = require_llm(&cfg)?;
            let engine = if spec.prefilter.is_some() { Some(cfg.open_engine()?) } else { None };
            let corpus = match &engine {
                Some(e) => e.corpus().clone(),
                None => Arc::new(Corpus::load(&cfg.corpus_dir)?),
            };
            let progress = |done: usize, total: usize| eprint!("\r{done}/{total}");
            let outcome = run_cohort(&spec, &corpus, engine.as_ref(), llm.as_ref(), &cfg.rag, &progress)?;
            eprintln!();
            write_cohort_results(&out, &outcome)?;
            print_json(&outcome.stats)
        }
        Command::Transform { report: id, kind, dirs } => {
            let cfg = with_dirs(cfg, &dirs.corpus, &dirs.index);
            let engine = cfg.open_engine()?;
            println!("{}", transform_report(report(&engine, &id)?, kind, require_llm(&cfg)?.as_ref(), &cfg.rag)?);
            Ok(())
        }
        Command::Ihc { report: id, k, dirs } => {
            let cfg = with_dirs(cfg, &dirs.corpus, &dirs.index);
            let engine = cfg.open_engine()?;
            let lexicon = MarkerLexicon::default();
            let doc = report(&engine, &id)?;
            print_json(&recommend_ihc_for_report(doc, &engine, require_llm(&cfg)?.as_ref(), k, &lexicon, &cfg.rag)?)
        }
        Command::Eval { kind, input, k, cutoff, resamples, seed, out } => {
            let reports = eval(kind, &input, &k, cutoff, resamples, seed)?;
            if let Some(out) = out {
                write_metrics(&out, &reports)?;
            }
            print_json(&reports)
        }
        Command::Serve { bind } => {
            let addr = match bind {
                Some(a) => a,
                None => cfg.bind.parse().map_err(|e| Error::InvalidConfig(format!("bind {}: {e}", cfg.bind)))?,
            };
            let state = AppState::from_config(cfg)?;
            eprintln!("listening on {addr}");
            run_blocking(state, addr)
        }
        Command::Config(ConfigCommand::Show) => {
            print!("{}", cfg.show()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
