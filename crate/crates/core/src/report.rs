//! Comparison artifacts computed purely from run output files.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};

use crate::corpus::{seed_vocabulary, Document, Polarity};
use crate::harness::{read_records, PrequentialRecord, RecordsError, RunSummary, WindowMode, RECORDS_FILE, SUMMARY_FILE};
use crate::sampling::Strategy;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("missing run files: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    Missing(Vec<PathBuf>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Records {
        path: PathBuf,
        #[source]
        source: RecordsError,
    },
    #[error("runs cover different stream lengths: {0}")]
    MismatchedLengths(String),
    #[error("batch size {batch} does not fit a stream of {len} documents")]
    BatchSize { batch: usize, len: usize },
    #[error("window must be positive")]
    Window,
}

/// One run's output directory, loaded.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub label: String,
    pub summary: RunSummary,
    pub records: Vec<PrequentialRecord>,
}

/// Loads `records.csv` and `summary.json` from each `(label, dir)` pair.
/// Every missing file is reported at once.
pub fn load_runs(runs: &[(String, PathBuf)]) -> Result<Vec<LoadedRun>, ReportError> {
    let missing: Vec<PathBuf> = runs
        .iter()
        .flat_map(|(_, dir)| [dir.join(RECORDS_FILE), dir.join(SUMMARY_FILE)])
        .filter(|p| !p.is_file())
        .collect();
    if !missing.is_empty() {
        return Err(ReportError::Missing(missing));
    }
    runs.iter()
        .map(|(label, dir)| {
            let summary_path = dir.join(SUMMARY_FILE);
            let summary = RunSummary::read(&summary_path).map_err(|source| ReportError::Io {
                path: summary_path,
                source,
            })?;
            let records_path = dir.join(RECORDS_FILE);
            let file = File::open(&records_path).map_err(|source| ReportError::Io {
                path: records_path.clone(),
                source,
            })?;
            let records = read_records(io::BufReader::new(file)).map_err(|source| ReportError::Records {
                path: records_path,
                source,
            })?;
            Ok(LoadedRun {
                label: label.clone(),
                summary,
                records,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpendRow {
    pub label: String,
    pub strategy: String,
    pub stream_length: usize,
    pub seed_size: usize,
    pub queries: usize,
    /// Labeled documents including the seed, over stream length including
    /// the seed, as a rounded percentage.
    pub percent: u32,
}

/// Label spend per run, sorted by label.
pub fn spend_table(runs: &[LoadedRun]) -> Result<Vec<SpendRow>, ReportError> {
    let lengths: HashSet<usize> = runs.iter().map(|r| r.records.len()).collect();
    if lengths.len() > 1 {
        let detail = runs
            .iter()
            .map(|r| format!("{}={}", r.label, r.records.len()))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(ReportError::MismatchedLengths(detail));
    }
    let mut rows: Vec<SpendRow> = runs
        .iter()
        .map(|r| {
            let queries = r.records.iter().filter(|x| x.sampled).count();
            let seed = r.summary.seed_size;
            let total = r.records.len() + seed;
            let percent = if total == 0 {
                0.0
            } else {
                100.0 * (queries + seed) as f64 / total as f64
            };
            SpendRow {
                label: r.label.clone(),
                strategy: r.summary.strategy.to_string(),
                stream_length: r.records.len(),
                seed_size: seed,
                queries,
                percent: percent.round() as u32,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.label.cmp(&b.label));
    Ok(rows)
}

/// Recomputes windowed kappa for every record from its `(predicted, truth)`
/// pair, using prefix sums over the confusion cells. Returns
/// `(doc_id, kappa)` pairs.
pub fn kappa_series(
    records: &[PrequentialRecord],
    window: usize,
    mode: WindowMode,
) -> Result<Vec<(u64, f64)>, ReportError> {
    if window == 0 {
        return Err(ReportError::Window);
    }
    // prefix[i][cell] counts cells among records[..i]; cell = 2*pred + truth.
    let mut prefix = Vec::with_capacity(records.len() + 1);
    let mut acc = [0u64; 4];
    prefix.push(acc);
    for r in records {
        acc[2 * r.predicted.index() + r.truth.index()] += 1;
        prefix.push(acc);
    }
    Ok(records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let start = match mode {
                WindowMode::Sliding => (i + 1).saturating_sub(window),
                WindowMode::Tumbling => (i / window) * window,
            };
            let hi = prefix[i + 1];
            let lo = prefix[start];
            let [tp, fp, fn_, tn] = [0, 1, 2, 3].map(|k| (hi[k] - lo[k]) as f64);
            (r.doc_id, cohen_kappa(tp, fp, fn_, tn))
        })
        .collect())
}

// tp: predicted pos & true pos, fp: predicted pos & true neg,
// fn_: predicted neg & true pos, tn: predicted neg & true neg.
fn cohen_kappa(tp: f64, fp: f64, fn_: f64, tn: f64) -> f64 {
    let n = tp + fp + fn_ + tn;
    let agree = (tp + tn) / n;
    let chance = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
    if chance >= 1.0 {
        0.0
    } else {
        (agree - chance) / (1.0 - chance)
    }
}

/// Largest absolute gap between recorded and recomputed kappa.
pub fn kappa_cross_check(run: &LoadedRun) -> Result<f64, ReportError> {
    let series = kappa_series(&run.records, run.summary.window, run.summary.window_mode)?;
    Ok(series
        .iter()
        .zip(&run.records)
        .map(|((_, k), r)| (k - r.kappa).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub log_alpha: f64,
    pub spend_percent: u32,
    pub mean_kappa: Option<f64>,
}

/// Groups uncertainty runs that differ only in their threshold, ordered by
/// ascending alpha. `None` unless at least two such runs exist and no other
/// setting differs.
pub fn alpha_sweep(runs: &[LoadedRun]) -> Option<Vec<SweepRow>> {
    if runs.len() < 2 {
        return None;
    }
    let first = &runs[0].summary;
    let mut rows = Vec::new();
    let mut alphas = HashSet::new();
    for run in runs {
        let s = &run.summary;
        let Strategy::Uncertainty { log_alpha } = s.strategy else {
            return None;
        };
        let same_setup = s.stream == first.stream
            && s.variant == first.variant
            && s.seed_size == first.seed_size
            && s.window == first.window
            && s.window_mode == first.window_mode
            && s.stream_length == first.stream_length;
        if !same_setup {
            return None;
        }
        alphas.insert(log_alpha.to_bits());
        rows.push(SweepRow {
            label: run.label.clone(),
            log_alpha,
            spend_percent: s.spend_percent_rounded,
            mean_kappa: s.mean_kappa,
        });
    }
    if alphas.len() < 2 {
        return None;
    }
    rows.sort_by(|a, b| a.log_alpha.total_cmp(&b.log_alpha));
    Some(rows)
}

/// Word and class composition of one batch of stream documents.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchDiagnostics {
    /// Index of the first document of the batch within the stream, seed
    /// excluded.
    pub start: usize,
    pub documents: usize,
    /// Share of word occurrences in the seed vocabulary.
    pub known: f64,
    /// Share of word occurrences outside the seed vocabulary.
    pub novel: f64,
    /// Share of occurrences that are outside the seed vocabulary and seen
    /// for the first time in the stream.
    pub first_seen: f64,
    pub positive_share: f64,
    pub negative_share: f64,
}

/// Per-batch vocabulary and class statistics of the documents after the
/// seed. A trailing partial batch is included.
pub fn stream_diagnostics(
    docs: &[Document],
    seed_size: usize,
    batch: usize,
) -> Result<Vec<BatchDiagnostics>, ReportError> {
    let stream = docs.get(seed_size..).unwrap_or_default();
    if batch == 0 || batch > stream.len() {
        return Err(ReportError::BatchSize {
            batch,
            len: stream.len(),
        });
    }
    let vocab = seed_vocabulary(docs, seed_size);
    let mut seen_novel: HashSet<&str> = HashSet::new();
    let mut out = Vec::new();
    for (b, chunk) in stream.chunks(batch).enumerate() {
        let (mut total, mut known, mut first) = (0usize, 0usize, 0usize);
        for word in chunk.iter().flat_map(|d| d.words.iter()) {
            total += 1;
            if vocab.contains(word.as_str()) {
                known += 1;
            } else if seen_novel.insert(word.as_str()) {
                first += 1;
            }
        }
        let share = |x: usize, of: usize| if of == 0 { 0.0 } else { x as f64 / of as f64 };
        let positive = chunk.iter().filter(|d| d.label == Some(Polarity::Positive)).count();
        let negative = chunk.iter().filter(|d| d.label == Some(Polarity::Negative)).count();
        out.push(BatchDiagnostics {
            start: b * batch,
            documents: chunk.len(),
            known: share(known, total),
            novel: share(total - known, total),
            first_seen: share(first, total),
            positive_share: share(positive, chunk.len()),
            negative_share: share(negative, chunk.len()),
        });
    }
    Ok(out)
}

pub fn write_diagnostics_csv(path: &Path, rows: &[BatchDiagnostics]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["start", "documents", "known", "novel", "first_seen", "positive_share", "negative_share"])?;
    for r in rows {
        w.write_record([
            r.start.to_string(),
            r.documents.to_string(),
            r.known.to_string(),
            r.novel.to_string(),
            r.first_seen.to_string(),
            r.positive_share.to_string(),
            r.negative_share.to_string(),
        ])?;
    }
    w.flush()
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Files written by [`write_report`].
#[derive(Debug, Clone, Default)]
pub struct ReportFiles {
    pub spend_table: PathBuf,
    pub kappa_series: Vec<PathBuf>,
    pub alpha_sweep: Option<PathBuf>,
    pub summary: PathBuf,
}

/// Writes `spend_table.csv`, one `kappa_<label>.csv` per run,
/// `alpha_sweep.csv` when the runs form a sweep, and `report.md`.
pub fn write_report(runs: &[LoadedRun], out_dir: &Path) -> Result<ReportFiles, ReportError> {
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source: io::Error| ReportError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let table = spend_table(runs)?;
    let mut files = ReportFiles {
        spend_table: out_dir.join("spend_table.csv"),
        ..ReportFiles::default()
    };
    {
        let mut w = csv::Writer::from_path(&files.spend_table).map_err(|e| io_err(out_dir)(e.into()))?;
        let res: csv::Result<()> = (|| {
            w.write_record(["label", "strategy", "stream_length", "seed_size", "queries", "percent"])?;
            for r in &table {
                w.write_record([
                    r.label.clone(),
                    r.strategy.clone(),
                    r.stream_length.to_string(),
                    r.seed_size.to_string(),
                    r.queries.to_string(),
                    r.percent.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })();
        res.map_err(|e| io_err(&files.spend_table)(e.into()))?;
    }

    let mut md = String::from("# Run report\n\n## Requested labels\n\n| run | strategy | stream | seed | queries | labels % |\n|---|---|---|---|---|---|\n");
    for r in &table {
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} |",
            r.label, r.strategy, r.stream_length, r.seed_size, r.queries, r.percent
        );
    }
    md.push_str("\n## Kappa\n\n| run | mean kappa | max recompute gap | series |\n|---|---|---|---|\n");
    for run in runs {
        let series = kappa_series(&run.records, run.summary.window, run.summary.window_mode)?;
        let path = out_dir.join(format!("kappa_{}.csv", file_stem(&run.label)));
        let mut body = String::from("doc_id,kappa\n");
        for (id, k) in &series {
            let _ = writeln!(body, "{id},{k}");
        }
        fs::write(&path, body).map_err(io_err(&path))?;
        let gap = kappa_cross_check(run)?;
        let mean = run
            .summary
            .mean_kappa
            .map_or_else(|| "-".to_owned(), |k| format!("{k:.4}"));
        let _ = writeln!(
            md,
            "| {} | {} | {:.3e} | {} |",
            run.label,
            mean,
            gap,
            path.file_name().unwrap_or_default().to_string_lossy()
        );
        files.kappa_series.push(path);
    }

    if let Some(sweep) = alpha_sweep(runs) {
        let path = out_dir.join("alpha_sweep.csv");
        let mut body = String::from("label,log_alpha,spend_percent,mean_kappa\n");
        md.push_str("\n## Uncertainty threshold sweep\n\n| run | ln alpha | labels % | mean kappa |\n|---|---|---|---|\n");
        for r in &sweep {
            let mean = r.mean_kappa.map(|k| k.to_string()).unwrap_or_default();
            let _ = writeln!(body, "{},{},{},{}", r.label, r.log_alpha, r.spend_percent, mean);
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} |",
                r.label,
                r.log_alpha,
                r.spend_percent,
                r.mean_kappa.map_or_else(|| "-".to_owned(), |k| format!("{k:.4}"))
            );
        }
        fs::write(&path, body).map_err(io_err(&path))?;
        files.alpha_sweep = Some(path);
    }

    files.summary = out_dir.join("report.md");
    fs::write(&files.summary, md).map_err(io_err(&files.summary))?;
    Ok(files)
}
