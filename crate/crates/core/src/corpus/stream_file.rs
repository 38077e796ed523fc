use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, CorpusError, Document, Polarity, SegmentManifest, StreamVariant, TokenizerConfig};

/// How the text after the tab is turned into words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// Already tokenized: split on whitespace only.
    #[default]
    Tokens,
    /// Raw text run through the tokenizer.
    Raw(TokenizerConfig),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines: usize,
    pub documents: usize,
    /// Lines whose word list was empty after tokenization.
    pub empty_dropped: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub documents: Vec<Document>,
    pub stats: IngestStats,
}

/// Sidecar written next to every prepared or synthesized stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamManifest {
    pub v: u32,
    pub length: usize,
    pub vocabulary_size: usize,
    pub variant: StreamVariant,
    pub seed_size: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reorder_fallback: bool,
    /// Per output document, the share of its word occurrences outside the
    /// seed vocabulary (reordered streams only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novelty_fractions: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentManifest>>,
}

impl StreamManifest {
    pub fn new(docs: &[Document], variant: StreamVariant, seed_size: usize) -> Self {
        let vocabulary_size = docs
            .iter()
            .flat_map(|d| d.words.iter())
            .collect::<std::collections::HashSet<_>>()
            .len();
        StreamManifest {
            v: 1,
            length: docs.len(),
            vocabulary_size,
            variant,
            seed_size,
            reorder_fallback: false,
            novelty_fractions: None,
            segments: None,
        }
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        let file = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(file, self).map_err(io::Error::other)
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let file = BufReader::new(File::open(path)?);
        serde_json::from_reader(file).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Reads a stream file: one `<label>\t<text>` document per line.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<LoadedCorpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_corpus(BufReader::new(file), format).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

pub fn parse_corpus<R: BufRead>(reader: R, format: CorpusFormat) -> Result<LoadedCorpus, CorpusError> {
    let mut documents = Vec::new();
    let mut stats = IngestStats::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: Default::default(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let (label, text) = line.split_once('\t').ok_or_else(|| CorpusError::Malformed {
            line: line_no,
            message: "missing tab between label and words".into(),
        })?;
        let label: Polarity = label.trim().parse().map_err(|e: super::InvalidLabel| {
            CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            }
        })?;
        let words: Vec<String> = match format {
            CorpusFormat::Tokens => text.split_whitespace().map(str::to_owned).collect(),
            CorpusFormat::Raw(cfg) => tokenize(text, &cfg),
        };
        if words.is_empty() {
            stats.empty_dropped += 1;
            continue;
        }
        documents.push(Document {
            id: documents.len() as u64,
            words,
            label: Some(label),
        });
    }
    stats.documents = documents.len();
    if documents.len() < 2 {
        return Err(CorpusError::TooShort(documents.len()));
    }
    Ok(LoadedCorpus { documents, stats })
}

/// Writes documents in stream-file format. Every document must be labeled.
pub fn write_stream<W: Write>(mut out: W, docs: &[Document]) -> io::Result<()> {
    for doc in docs {
        let label = doc.label.ok_or_else(|| {
            io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("document {} has no label", doc.id),
            )
        })?;
        writeln!(out, "{}\t{}", label, doc.words.join(" "))?;
    }
    out.flush()
}
