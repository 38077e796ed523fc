use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;

pub const RECORDS_HEADER: &str = "doc_id,predicted,truth,sampled,kappa,vocab_size";

/// One evaluated stream document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrequentialRecord {
    pub doc_id: u64,
    pub predicted: Polarity,
    /// Ground truth, used for evaluation only.
    pub truth: Polarity,
    /// Whether a true label was obtained and fed to the model.
    pub sampled: bool,
    /// Windowed kappa including this document.
    pub kappa: f64,
    /// Vocabulary size after any update for this document.
    pub vocab_size: usize,
}

/// Destination for records as they are produced.
pub trait RecordSink {
    fn write(&mut self, record: &PrequentialRecord) -> io::Result<()>;

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

impl RecordSink for Vec<PrequentialRecord> {
    fn write(&mut self, record: &PrequentialRecord) -> io::Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Writes `records.csv`, one flushed row per document so an interrupted run
/// leaves a parseable file.
pub struct CsvRecordWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvRecordWriter<W> {
    pub fn new(out: W) -> io::Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(RECORDS_HEADER.split(','))?;
        inner.flush()?;
        Ok(CsvRecordWriter { inner })
    }

    pub fn into_inner(self) -> io::Result<W> {
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

impl<W: Write> RecordSink for CsvRecordWriter<W> {
    fn write(&mut self, r: &PrequentialRecord) -> io::Result<()> {
        self.inner.write_record([
            r.doc_id.to_string(),
            r.predicted.to_string(),
            r.truth.to_string(),
            (r.sampled as u8).to_string(),
            r.kappa.to_string(),
            r.vocab_size.to_string(),
        ])?;
        self.inner.flush()
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RecordsError {
    #[error("unexpected records header `{0}`")]
    Header(String),
    #[error("records row {row}: {message}")]
    Row { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Parses a `records.csv` body.
pub fn read_records<R: io::Read>(input: R) -> Result<Vec<PrequentialRecord>, RecordsError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != RECORDS_HEADER {
        return Err(RecordsError::Header(header));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let bad = |message: String| RecordsError::Row { row: i + 1, message };
        if row.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", row.len())));
        }
        let field = |k: usize| row.get(k).unwrap_or_default();
        out.push(PrequentialRecord {
            doc_id: field(0).parse().map_err(|e| bad(format!("doc_id: {e}")))?,
            predicted: field(1).parse().map_err(|e| bad(format!("predicted: {e}")))?,
            truth: field(2).parse().map_err(|e| bad(format!("truth: {e}")))?,
            sampled: match field(3) {
                "1" => true,
                "0" => false,
                other => return Err(bad(format!("sampled: expected 0 or 1, got `{other}`"))),
            },
            kappa: field(4).parse().map_err(|e| bad(format!("kappa: {e}")))?,
            vocab_size: field(5).parse().map_err(|e| bad(format!("vocab_size: {e}")))?,
        });
    }
    Ok(out)
}
