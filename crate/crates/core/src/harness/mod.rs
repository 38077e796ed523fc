//! The prequential active-learning loop: predict, evaluate, decide, query,
//! update.

mod config;
mod kappa;
mod records;

use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    filter_fixed_vocabulary, load_corpus, renumber, reorder_for_vocab_novelty, validate_seed, CorpusError,
    Document, Polarity, StreamVariant,
};
use crate::mnb::{MnbClassifier, MnbError};
use crate::oracle::{BudgetLedger, LabelOutcome, Oracle, OracleError, QueryContext, RunStatus, WIRE_VERSION};
use crate::sampling::{Sampler, Strategy};

pub use config::{ConfigError, ExperimentConfig, DEFAULT_WINDOW};
pub use kappa::{kappa_from_confusion, ConfusionWindow, EmptyWindow, WindowMode};
pub use records::{read_records, CsvRecordWriter, PrequentialRecord, RecordSink, RecordsError, RECORDS_HEADER};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] MnbError),
    #[error("oracle failed: {0}")]
    Oracle(#[from] OracleError),
    #[error("document {0} has no ground truth to evaluate against")]
    MissingTruth(u64),
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Evaluation window settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalSettings {
    pub window: usize,
    pub mode: WindowMode,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            window: DEFAULT_WINDOW,
            mode: WindowMode::Sliding,
        }
    }
}

/// State left behind by a finished (or interrupted) run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: MnbClassifier,
    pub ledger: BudgetLedger,
    /// Mean of the per-document windowed kappa values.
    pub mean_kappa: Option<f64>,
    /// Kappa of each consecutive block of `window` documents; a trailing
    /// partial block is included.
    pub block_kappa: Vec<f64>,
    pub interrupted: bool,
}

/// Runs the loop over `stream` starting from a model trained on `seed`.
///
/// Each document is predicted with the current model, scored against its
/// ground truth, and offered to the sampler; only labels returned by the
/// oracle reach the model. Records go to `sink` as they are produced.
pub fn run_stream<I, O, S>(
    seed: &[Document],
    stream: I,
    strategy: Strategy,
    oracle: &mut O,
    eval: EvalSettings,
    sink: &mut S,
) -> Result<RunOutcome, HarnessError>
where
    I: IntoIterator<Item = Document>,
    O: Oracle + ?Sized,
    S: RecordSink + ?Sized,
{
    let mut model = MnbClassifier::init_from_seed(seed)?;
    let mut sampler = Sampler::new(strategy);
    let mut ledger = BudgetLedger::new(seed.len());
    let mut window = ConfusionWindow::new(eval.window, eval.mode);
    let mut block = [[0u64; 2]; 2];
    let mut block_len = 0;
    let mut block_kappa = Vec::new();
    let mut kappa_sum = 0.0;
    let mut interrupted = false;

    let sink_err = |source| HarnessError::Output {
        path: PathBuf::from(RECORDS_FILE),
        source,
    };

    for doc in stream {
        if oracle.should_stop() {
            interrupted = true;
            break;
        }
        let truth = doc.label.ok_or(HarnessError::MissingTruth(doc.id))?;
        let prediction = model.predict(&doc);
        let kappa_before = window.kappa().ok();
        let decision = sampler.decide(model.stats(), &doc, &prediction);

        let mut sampled = false;
        if decision.query {
            let ctx = QueryContext {
                predicted: prediction.label,
                score: decision.score,
                priors: Polarity::ALL.map(|c| model.stats().class_prior(c).unwrap_or(0.0)),
                vocab_size: model.stats().vocab_size(),
                kappa: kappa_before,
            };
            let outcome = match oracle.request_label(&doc, &ctx) {
                Err(OracleError::Cancelled(_)) => {
                    interrupted = true;
                    break;
                }
                other => other?,
            };
            ledger.record(&outcome);
            if let LabelOutcome::Answered(label) = outcome {
                model.update(&doc, label);
                sampled = true;
            }
        }
        ledger.advance();

        window.push(prediction.label, truth);
        let kappa = window.kappa().expect("window holds the current document");
        kappa_sum += kappa;
        block[prediction.label.index()][truth.index()] += 1;
        block_len += 1;
        if block_len == eval.window {
            block_kappa.push(kappa_from_confusion(block).expect("block is non-empty"));
            block = [[0; 2]; 2];
            block_len = 0;
        }

        sink.write(&PrequentialRecord {
            doc_id: doc.id,
            predicted: prediction.label,
            truth,
            sampled,
            kappa,
            vocab_size: model.stats().vocab_size(),
        })
        .map_err(sink_err)?;

        oracle.publish_status(&status_of(&ledger, Some(kappa), &model, false));
    }
    if block_len > 0 {
        block_kappa.push(kappa_from_confusion(block).expect("block is non-empty"));
    }
    sink.flush().map_err(sink_err)?;
    let last_kappa = window.kappa().ok();
    oracle.publish_status(&status_of(&ledger, last_kappa, &model, true));

    let processed = ledger.stream_position;
    Ok(RunOutcome {
        model,
        ledger,
        mean_kappa: (processed > 0).then(|| kappa_sum / processed as f64),
        block_kappa,
        interrupted,
    })
}

fn status_of(ledger: &BudgetLedger, kappa: Option<f64>, model: &MnbClassifier, finished: bool) -> RunStatus {
    RunStatus {
        v: WIRE_VERSION,
        position: ledger.stream_position,
        seed_size: ledger.seed_size,
        queries: ledger.queries_made,
        abandoned: ledger.abandoned,
        spend_percent: ledger.spend_percentage(),
        kappa,
        vocab_size: model.stats().vocab_size(),
        finished,
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub v: u32,
    pub stream: PathBuf,
    pub variant: StreamVariant,
    pub strategy: Strategy,
    pub seed_size: usize,
    /// Stream documents processed, seed excluded.
    pub stream_length: usize,
    pub queries: usize,
    pub abandoned: usize,
    pub spend_percent: f64,
    pub spend_percent_rounded: u32,
    pub window: usize,
    pub window_mode: WindowMode,
    pub mean_kappa: Option<f64>,
    pub block_kappa: Vec<f64>,
    pub final_vocab_size: usize,
    pub interrupted: bool,
}

impl RunSummary {
    pub fn read(path: &Path) -> io::Result<Self> {
        let file = io::BufReader::new(File::open(path)?);
        serde_json::from_reader(file).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Loads the configured stream, applies its variant and splits off the
/// seed. Returned documents carry dense ids `0..n`.
pub fn prepare_stream(config: &ExperimentConfig) -> Result<(Vec<Document>, Vec<Document>), HarnessError> {
    let corpus = load_corpus(&config.stream.path, config.format)?;
    let seed_size = config.stream.seed_size;
    validate_seed(&corpus.documents, seed_size)?;
    let mut docs = match config.stream.variant {
        StreamVariant::Original => corpus.documents,
        StreamVariant::Reordered => reorder_for_vocab_novelty(&corpus.documents, seed_size).documents,
        StreamVariant::FixedVocab => filter_fixed_vocabulary(&corpus.documents, seed_size),
    };
    renumber(&mut docs);
    validate_seed(&docs, seed_size)?;
    let stream = docs.split_off(seed_size);
    Ok((docs, stream))
}

/// Runs a configured experiment with `oracle`, writing `records.csv`,
/// `summary.json` and `model.json` into the output directory.
pub fn run_experiment_with<O: Oracle + ?Sized>(
    config: &ExperimentConfig,
    oracle: &mut O,
) -> Result<RunSummary, HarnessError> {
    let (seed, stream) = prepare_stream(config)?;
    let out = &config.output_dir;
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| HarnessError::Output { path, source }
    };
    fs::create_dir_all(out).map_err(io_err(out))?;

    let records_path = out.join(RECORDS_FILE);
    let file = File::create(&records_path).map_err(io_err(&records_path))?;
    let mut sink = CsvRecordWriter::new(BufWriter::new(file)).map_err(io_err(&records_path))?;
    let eval = EvalSettings {
        window: config.window,
        mode: config.window_mode,
    };
    let outcome = run_stream(&seed, stream, config.strategy, oracle, eval, &mut sink).map_err(|e| match e {
        HarnessError::Output { source, .. } => HarnessError::Output {
            path: records_path.clone(),
            source,
        },
        other => other,
    })?;
    sink.into_inner().map_err(io_err(&records_path))?;

    let summary = RunSummary {
        v: WIRE_VERSION,
        stream: config.stream.path.clone(),
        variant: config.stream.variant,
        strategy: config.strategy,
        seed_size: seed.len(),
        stream_length: outcome.ledger.stream_position,
        queries: outcome.ledger.queries_made,
        abandoned: outcome.ledger.abandoned,
        spend_percent: outcome.ledger.spend_percentage(),
        spend_percent_rounded: outcome.ledger.spend_report(),
        window: config.window,
        window_mode: config.window_mode,
        mean_kappa: outcome.mean_kappa,
        block_kappa: outcome.block_kappa.clone(),
        final_vocab_size: outcome.model.stats().vocab_size(),
        interrupted: outcome.interrupted,
    };
    let summary_path = out.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&summary_path, json + "\n").map_err(io_err(&summary_path))?;
    let model_path = out.join(MODEL_FILE);
    fs::write(&model_path, outcome.model.snapshot().to_json() + "\n").map_err(io_err(&model_path))?;
    Ok(summary)
}

/// Runs a configured experiment against the stream's ground truth.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    run_experiment_with(config, &mut crate::oracle::GroundTruthOracle)
}
