//! Command-line front end. Every subcommand reads sharded JSONL corpora
//! (files, directories or manifests) and writes its outputs to a directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use forge::analytics::{self, AnalysisOptions, LexicalResources};
use forge::bpe::{BpeModel, ChunkCounts};
use forge::error::ForgeError;
use forge::ingest::{resolve_inputs, DocBatches};
use forge::langid::{self, LanguageIdentifier, LanguageScorer, ScoreTable};
use forge::phase;
use forge::pipeline::{self, Emit, ReportFormat};
use forge::PipelineConfig;

#[derive(Parser)]
#[command(name = "forge", version, about = "Corpus filtering, deduplication and analytics")]
struct Cli {
    /// Pipeline configuration (JSON). Missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Language filter, dedup and quality filter in one run.
    Run(RunArgs),
    /// Language filtering, or `langid train` to build n-gram profiles.
    Langid(LangidArgs),
    /// MinHash near-duplicate removal.
    Dedup(DedupArgs),
    /// Line- and document-level quality filtering.
    Quality(QualityArgs),
    /// Lexical metrics on a seeded sample.
    Analyze(AnalyzeArgs),
    /// Token-budgeted split into three training phases.
    SplitPhases(SplitArgs),
    /// Train or apply the byte-level BPE tokenizer.
    Tokenizer(TokenizerArgs),
    /// Assemble a retention report from stage directories or a run report.
    Report(ReportArgs),
}

#[derive(Args)]
struct Io {
    /// Input shards, shard directories or manifest files.
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ScorerArgs {
    /// Trained n-gram profiles (from `forge langid train`).
    #[arg(long, conflicts_with = "scores")]
    profiles: Option<PathBuf>,
    /// Precomputed scores, one `{id, label, confidence}` object per line.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Confirm LSH candidate pairs with exact shingle Jaccard before removal.
    #[arg(long)]
    verify: bool,
    /// Write one MinHash signature per document (JSON lines).
    #[arg(long)]
    emit_signatures: Option<PathBuf>,
    /// Write one keep/drop verdict per document (JSON lines).
    #[arg(long)]
    emit_verdicts: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct LangidArgs {
    #[command(subcommand)]
    train: Option<LangidCommand>,
    /// Input shards, shard directories or manifest files.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Write one keep/drop verdict per document (JSON lines).
    #[arg(long)]
    emit_verdicts: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LangidCommand {
    /// Builds a profile per label; repeat `--label/--text` pairs for each language.
    Train {
        /// Language label, e.g. `por`.
        #[arg(long, required = true)]
        label: Vec<String>,
        /// Training text file per label, one sample per line.
        #[arg(long, required = true)]
        text: Vec<PathBuf>,
        /// Where to write the trained profiles.
        #[arg(long)]
        profiles: PathBuf,
    },
}

#[derive(Args)]
struct DedupArgs {
    #[command(flatten)]
    io: Io,
    /// Confirm LSH candidate pairs with exact shingle Jaccard before removal.
    #[arg(long)]
    verify: bool,
    /// Write one MinHash signature per document (JSON lines).
    #[arg(long)]
    emit_signatures: Option<PathBuf>,
    /// Write one keep/drop verdict per document (JSON lines).
    #[arg(long)]
    emit_verdicts: Option<PathBuf>,
}

#[derive(Args)]
struct QualityArgs {
    #[command(flatten)]
    io: Io,
    /// Write one keep/drop verdict per document (JSON lines).
    #[arg(long)]
    emit_verdicts: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    io: Io,
    /// Stopword list, one word per line.
    #[arg(long)]
    stopwords: PathBuf,
    /// Reference frequency list, `word<TAB>count`, most frequent first.
    #[arg(long)]
    freq: PathBuf,
    /// Optional content-word lexicon.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Token log-probability sidecar for perplexity.
    #[arg(long)]
    logprobs: Option<PathBuf>,
    /// Fraction of documents to sample, in (0, 1].
    #[arg(long, default_value_t = 0.01)]
    sample: f64,
    /// Corpus name used in the summary.
    #[arg(long, default_value = "corpus")]
    name: String,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    io: Io,
    /// Tokenizer directory used for token counts.
    #[arg(long)]
    tokenizer: PathBuf,
}

#[derive(Args)]
struct TokenizerArgs {
    #[command(subcommand)]
    command: TokenizerCommand,
}

#[derive(Subcommand)]
enum TokenizerCommand {
    /// Learns merges from a corpus; writes vocab.json and merges.txt.
    Train {
        #[command(flatten)]
        io: Io,
        /// Overrides the configured target vocabulary size.
        #[arg(long)]
        vocab_size: Option<usize>,
    },
    /// Writes `{id, tokens}` per document to `<output>/tokens.jsonl`.
    Encode {
        #[command(flatten)]
        io: Io,
        /// Directory holding vocab.json and merges.txt.
        #[arg(long)]
        tokenizer: PathBuf,
    },
}

#[derive(Args)]
struct ReportArgs {
    /// Stage output directories in execution order.
    #[arg(long, num_args = 1.., conflicts_with = "from", required_unless_present = "from")]
    stages: Vec<PathBuf>,
    /// An existing report.json to re-render.
    #[arg(long)]
    from: Option<PathBuf>,
    /// `markdown` or `json`.
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Forge(ForgeError),
}

impl From<ForgeError> for Failure {
    fn from(e: ForgeError) -> Self {
        Failure::Forge(e)
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FORGE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Forge(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, ForgeError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::from_json_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    cfg.validate()
}

fn load_scorer(args: &ScorerArgs) -> Result<Box<dyn LanguageScorer>, Failure> {
    match (&args.profiles, &args.scores) {
        (Some(p), None) => Ok(Box::new(LanguageIdentifier::load(p)?)),
        (None, Some(s)) => Ok(Box::new(ScoreTable::load(s)?)),
        _ => Err(Failure::Usage("language scoring needs --profiles or --scores".into())),
    }
}

fn run(cli: Cli) -> CliResult {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Run(a) => {
            cfg.dedup_verify |= a.verify;
            let scorer = load_scorer(&a.scorer)?;
            let emit = Emit {
                signatures: a.emit_signatures,
                verdicts: a.emit_verdicts,
            };
            let report = pipeline::run_pipeline(&cfg, &a.io.input, &a.io.output, scorer.as_ref(), &emit)?;
            for st in &report.stages {
                log::info!("{}: {} -> {}", st.stage.name(), st.docs_in, st.docs_out);
            }
        }
        Command::Langid(a) => match a.train {
            Some(LangidCommand::Train { label, text, profiles }) => {
                if label.len() != text.len() {
                    return Err(Failure::Usage("give one --text file per --label".into()));
                }
                let mut trained = Vec::new();
                for (label, path) in label.iter().zip(&text) {
                    let samples = analytics::read_word_list(path)?;
                    trained.push(langid::train_profile(label, &samples, cfg.ngram_order)?);
                }
                LanguageIdentifier::new(trained.clone())?;
                langid::save_profiles(&trained, &profiles)?;
            }
            None => {
                let Some(output) = a.output else {
                    return Err(Failure::Usage("langid needs --output".into()));
                };
                if a.input.is_empty() {
                    return Err(Failure::Usage("langid needs --input".into()));
                }
                let scorer = load_scorer(&a.scorer)?;
                let emit = Emit {
                    signatures: None,
                    verdicts: a.emit_verdicts,
                };
                pipeline::run_langid_stage(&cfg, &a.input, &output, scorer.as_ref(), &emit)?;
            }
        },
        Command::Dedup(a) => {
            cfg.dedup_verify |= a.verify;
            let emit = Emit {
                signatures: a.emit_signatures,
                verdicts: a.emit_verdicts,
            };
            pipeline::run_dedup_stage(&cfg, &a.io.input, &a.io.output, &emit)?;
        }
        Command::Quality(a) => {
            let emit = Emit {
                signatures: None,
                verdicts: a.emit_verdicts,
            };
            pipeline::run_quality_stage(&cfg, &a.io.input, &a.io.output, &emit)?;
        }
        Command::Analyze(a) => {
            let res = LexicalResources::load(&a.stopwords, &a.freq, a.lexicon.as_deref(), cfg.sophistication_top_k)?;
            let logprobs = a.logprobs.as_deref().map(analytics::load_logprobs).transpose()?;
            let opts = AnalysisOptions {
                corpus: a.name,
                fraction: a.sample,
                seed: cfg.master_seed,
                logprobs: logprobs.as_deref(),
            };
            let paths = resolve_inputs(&a.io.input)?;
            let analysis = analytics::analyze(forge::ingest::read_shards(&paths), &res, &cfg, &opts)?;
            analysis.write(&a.io.output)?;
        }
        Command::SplitPhases(a) => {
            let model = BpeModel::load(&a.tokenizer)?;
            let paths = resolve_inputs(&a.io.input)?;
            let counts = phase::count_stream(forge::ingest::read_shards(&paths), &model)?;
            let plan = phase::partition_phases(counts, &cfg)?;
            for w in &plan.warnings {
                log::warn!("{w}");
            }
            plan.write(&a.io.output)?;
        }
        Command::Tokenizer(t) => match t.command {
            TokenizerCommand::Train { io, vocab_size } => {
                let paths = resolve_inputs(&io.input)?;
                let mut counts = ChunkCounts::default();
                let mut batches = DocBatches::new(&paths, 4096);
                while let Some(batch) = batches.next_batch()? {
                    for doc in &batch {
                        counts.add(&doc.text);
                    }
                }
                let model = counts.train(vocab_size.unwrap_or(cfg.target_vocab))?;
                log::info!("learned {} merges", model.merges().len());
                model.save(&io.output)?;
            }
            TokenizerCommand::Encode { io, tokenizer } => {
                let model = BpeModel::load(&tokenizer)?;
                encode_corpus(&model, &io.input, &io.output)?;
            }
        },
        Command::Report(a) => {
            let report = match &a.from {
                Some(path) => {
                    let bytes = std::fs::read(path).map_err(|e| ForgeError::io(path, e))?;
                    serde_json::from_slice(&bytes)
                        .map_err(|e| ForgeError::data(format!("bad {}: {e}", path.display())))?
                }
                None => pipeline::report_from_stage_dirs(&a.stages)?,
            };
            let bytes = pipeline::emit_report(&report, a.format)?;
            match &a.output {
                Some(path) => std::fs::write(path, bytes).map_err(|e| ForgeError::io(path, e))?,
                None => {
                    use std::io::Write;
                    std::io::stdout()
                        .write_all(&bytes)
                        .map_err(|e| ForgeError::io("<stdout>", e))?;
                }
            }
        }
    }
    Ok(())
}

fn encode_corpus(model: &BpeModel, inputs: &[PathBuf], out_dir: &Path) -> Result<(), ForgeError> {
    use rayon::prelude::*;
    use std::io::Write;

    #[derive(serde::Serialize)]
    struct Encoded<'a> {
        id: &'a str,
        tokens: Vec<u32>,
    }

    std::fs::create_dir_all(out_dir).map_err(|e| ForgeError::io(out_dir, e))?;
    let path = out_dir.join("tokens.jsonl");
    let file = std::fs::File::create(&path).map_err(|e| ForgeError::io(&path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let mut batches = DocBatches::new(&resolve_inputs(inputs)?, 4096);
    while let Some(batch) = batches.next_batch()? {
        let lines: Vec<Vec<u8>> = batch
            .par_iter()
            .map(|d| {
                let mut line = serde_json::to_vec(&Encoded {
                    id: &d.id,
                    tokens: model.encode(&d.text),
                })
                .expect("tokens serialize");
                line.push(b'\n');
                line
            })
            .collect();
        for line in lines {
            out.write_all(&line).map_err(|e| ForgeError::io(&path, e))?;
        }
    }
    out.flush().map_err(|e| ForgeError::io(&path, e))
}
