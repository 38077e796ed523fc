use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use opinion_stream::corpus::{
    filter_fixed_vocabulary, load_corpus, reorder_for_vocab_novelty, synthesize_drift_stream, validate_seed,
    write_stream, CorpusFormat, DriftScript, StreamManifest, StreamVariant, TokenizerConfig,
};
use opinion_stream::harness::{prepare_stream, run_experiment, run_experiment_with, ExperimentConfig, RunSummary};
use opinion_stream::oracle::{InteractiveOracle, LabelDesk};
use opinion_stream::report::{load_runs, stream_diagnostics, write_diagnostics_csv, write_report};
use opinion_stream::service::LabelService;

/// Active polarity learning over document streams.
///
/// Log verbosity follows the OPINION_STREAM_LOG variable (default: info).
#[derive(Debug, Parser)]
#[command(name = "opinion-stream", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Derive a stream variant from a labeled corpus.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        /// original, reordered or fixed-vocab
        #[arg(long, value_parser = parse_variant)]
        variant: StreamVariant,
        #[arg(long)]
        seed_size: usize,
        #[arg(long)]
        output: PathBuf,
        /// Tokenize the text column instead of splitting on whitespace.
        #[arg(long)]
        raw: bool,
        /// Minimum token length when --raw is set.
        #[arg(long, default_value_t = 1)]
        min_token_len: usize,
    },
    /// Generate a synthetic drift stream from a TOML script.
    Synth {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Seed size recorded in the manifest.
        #[arg(long, default_value_t = 200)]
        seed_size: usize,
    },
    /// Run an experiment against the stream's ground truth.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an experiment with a human oracle behind the label service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Directory holding the labeling console's static files.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Build comparison tables and kappa series from run directories.
    Report {
        /// Run directories, optionally as label=dir.
        #[arg(long, num_args = 1..)]
        runs: Vec<String>,
        #[arg(long)]
        output: PathBuf,
        /// Stream file for per-batch vocabulary and class diagnostics.
        #[arg(long, requires_all = ["seed_size", "batch"])]
        stream: Option<PathBuf>,
        #[arg(long)]
        seed_size: Option<usize>,
        #[arg(long)]
        batch: Option<usize>,
    },
}

fn parse_variant(s: &str) -> Result<StreamVariant, String> {
    s.parse()
}

fn manifest_path(stream: &Path) -> PathBuf {
    let mut name = stream.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    stream.with_file_name(name)
}

fn write_stream_file(path: &Path, docs: &[opinion_stream::Document]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_stream(BufWriter::new(file), docs).with_context(|| format!("writing {}", path.display()))
}

fn prepare(
    input: &Path,
    variant: StreamVariant,
    seed_size: usize,
    output: &Path,
    format: CorpusFormat,
) -> Result<()> {
    let corpus = load_corpus(input, format)?;
    validate_seed(&corpus.documents, seed_size)?;
    if corpus.stats.empty_dropped > 0 {
        log::info!("dropped {} empty document(s)", corpus.stats.empty_dropped);
    }
    let (docs, fallback, novelty) = match variant {
        StreamVariant::Original => (corpus.documents, false, None),
        StreamVariant::Reordered => {
            let r = reorder_for_vocab_novelty(&corpus.documents, seed_size);
            if r.fallback {
                log::warn!("fewer than {seed_size} documents are covered by the seed vocabulary");
            }
            (r.documents, r.fallback, Some(r.novelty_fractions))
        }
        StreamVariant::FixedVocab => (filter_fixed_vocabulary(&corpus.documents, seed_size), false, None),
    };
    write_stream_file(output, &docs)?;
    let mut manifest = StreamManifest::new(&docs, variant, seed_size);
    manifest.reorder_fallback = fallback;
    manifest.novelty_fractions = novelty;
    let mpath = manifest_path(output);
    manifest.write(&mpath).with_context(|| format!("writing {}", mpath.display()))?;
    println!("{}: {} documents, {} words ({variant})", output.display(), manifest.length, manifest.vocabulary_size);
    Ok(())
}

fn synth(script: &Path, output: &Path, seed_size: usize) -> Result<()> {
    let text = std::fs::read_to_string(script).with_context(|| format!("reading {}", script.display()))?;
    let script: DriftScript = toml::from_str(&text).with_context(|| format!("parsing {}", script.display()))?;
    let stream = synthesize_drift_stream(&script)?;
    write_stream_file(output, &stream.documents)?;
    let mut manifest = StreamManifest::new(&stream.documents, StreamVariant::Original, seed_size);
    manifest.segments = Some(stream.segments);
    let mpath = manifest_path(output);
    manifest.write(&mpath).with_context(|| format!("writing {}", mpath.display()))?;
    println!("{}: {} documents, {} words", output.display(), manifest.length, manifest.vocabulary_size);
    Ok(())
}

fn print_summary(s: &RunSummary) {
    let kappa = s.mean_kappa.map_or_else(|| "-".to_owned(), |k| format!("{k:.4}"));
    println!(
        "{}: {} documents, {} queries ({} abandoned), labels {}%, mean kappa {kappa}, vocabulary {}{}",
        s.strategy,
        s.stream_length,
        s.queries,
        s.abandoned,
        s.spend_percent_rounded,
        s.final_vocab_size,
        if s.interrupted { " [interrupted]" } else { "" }
    );
}

fn serve(config: &ExperimentConfig, bind: &str, port: u16, assets: Option<PathBuf>) -> Result<()> {
    // Fail on stream problems before opening the port.
    prepare_stream(config)?;
    let desk = LabelDesk::new();
    let service = LabelService::start(&format!("{bind}:{port}"), desk.clone(), assets)
        .with_context(|| format!("binding {bind}:{port}"))?;
    log::info!("label service listening on http://{}", service.local_addr());
    {
        let desk = desk.clone();
        ctrlc::set_handler(move || desk.cancel()).context("installing interrupt handler")?;
    }
    let mut oracle = InteractiveOracle::new(desk, config.timeout);
    let summary = run_experiment_with(config, &mut oracle);
    service.shutdown();
    print_summary(&summary?);
    Ok(())
}

fn report(
    runs: &[String],
    output: &Path,
    stream: Option<&Path>,
    seed_size: Option<usize>,
    batch: Option<usize>,
) -> Result<()> {
    if runs.is_empty() && stream.is_none() {
        bail!("nothing to report: pass --runs and/or --stream");
    }
    if !runs.is_empty() {
        let pairs: Vec<(String, PathBuf)> = runs
            .iter()
            .map(|r| match r.split_once('=') {
                Some((label, dir)) => (label.to_owned(), PathBuf::from(dir)),
                None => {
                    let dir = PathBuf::from(r);
                    let label = dir
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| r.clone());
                    (label, dir)
                }
            })
            .collect();
        let loaded = load_runs(&pairs)?;
        let files = write_report(&loaded, output)?;
        println!("wrote {}", files.summary.display());
    }
    if let (Some(stream), Some(seed_size), Some(batch)) = (stream, seed_size, batch) {
        let corpus = load_corpus(stream, CorpusFormat::Tokens)?;
        let rows = stream_diagnostics(&corpus.documents, seed_size, batch)?;
        std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
        let path = output.join("diagnostics.csv");
        write_diagnostics_csv(&path, &rows).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare {
            input,
            variant,
            seed_size,
            output,
            raw,
            min_token_len,
        } => {
            let format = if raw {
                CorpusFormat::Raw(TokenizerConfig {
                    casefold: true,
                    min_len: min_token_len,
                })
            } else {
                CorpusFormat::Tokens
            };
            prepare(&input, variant, seed_size, &output, format)
        }
        Command::Synth {
            script,
            output,
            seed_size,
        } => synth(&script, &output, seed_size),
        Command::Run { config } => {
            let config = ExperimentConfig::from_path(&config)?;
            let summary = run_experiment(&config)?;
            print_summary(&summary);
            Ok(())
        }
        Command::Serve {
            config,
            port,
            bind,
            assets,
        } => {
            let config = ExperimentConfig::from_path(&config)?;
            serve(&config, &bind, port, assets)
        }
        Command::Report {
            runs,
            output,
            stream,
            seed_size,
            batch,
        } => report(&runs, &output, stream.as_deref(), seed_size, batch),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OPINION_STREAM_LOG", "info")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
