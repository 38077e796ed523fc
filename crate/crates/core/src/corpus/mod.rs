//! Documents, stream files and the stream variants used for experiments.

mod stream_file;
mod synthetic;
mod tokenize;
mod variants;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use stream_file::{
    load_corpus, parse_corpus, write_stream, CorpusFormat, IngestStats, LoadedCorpus, StreamManifest,
};
pub use synthetic::{synthesize_drift_stream, DriftScript, SegmentManifest, SegmentScript, SyntheticStream};
pub use tokenize::{tokenize, TokenizerConfig};
pub use variants::{
    filter_fixed_vocabulary, known_fraction, reorder_for_vocab_novelty, seed_vocabulary, Reordered,
};

/// Sentiment polarity of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl Polarity {
    pub const ALL: [Polarity; 2] = [Polarity::Positive, Polarity::Negative];

    /// Position of this class in per-class arrays.
    pub fn index(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
        }
    }

    pub fn from_index(i: usize) -> Polarity {
        if i == 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn opposite(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    /// Token used in stream files and on the wire.
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "pos",
            Polarity::Negative => "neg",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid polarity label `{0}` (expected `pos` or `neg`)")]
pub struct InvalidLabel(pub String);

impl FromStr for Polarity {
    type Err = InvalidLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pos" => Ok(Polarity::Positive),
            "neg" => Ok(Polarity::Negative),
            other => Err(InvalidLabel(other.to_owned())),
        }
    }
}

/// One element of a stream: an ordinal, its bag of words and, if known, its
/// ground-truth polarity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: u64,
    pub words: Vec<String>,
    pub label: Option<Polarity>,
}

impl Document {
    pub fn new(id: u64, words: Vec<String>, label: Option<Polarity>) -> Self {
        Document { id, words, label }
    }

    /// Builds a labeled document from a whitespace-separated word list.
    pub fn labeled(id: u64, words: &str, label: Polarity) -> Self {
        Document {
            id,
            words: words.split_whitespace().map(str::to_owned).collect(),
            label: Some(label),
        }
    }
}

/// Reassigns ids `0..n` in sequence order.
pub fn renumber(docs: &mut [Document]) {
    for (i, doc) in docs.iter_mut().enumerate() {
        doc.id = i as u64;
    }
}

/// How a stream is derived from its source corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamVariant {
    #[default]
    Original,
    Reordered,
    FixedVocab,
}

impl StreamVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            StreamVariant::Original => "original",
            StreamVariant::Reordered => "reordered",
            StreamVariant::FixedVocab => "fixed-vocab",
        }
    }
}

impl FromStr for StreamVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(StreamVariant::Original),
            "reordered" => Ok(StreamVariant::Reordered),
            "fixed-vocab" | "fixed_vocab" => Ok(StreamVariant::FixedVocab),
            other => Err(format!(
                "unknown stream variant `{other}` (expected original, reordered or fixed-vocab)"
            )),
        }
    }
}

impl fmt::Display for StreamVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a stream comes from and how the labeled seed is split off.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub path: PathBuf,
    pub variant: StreamVariant,
    pub seed_size: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("stream holds {0} document(s); at least 2 are required")]
    TooShort(usize),
    #[error("seed size {seed_size} is invalid for a stream of {len} documents (need 2 <= seed < length)")]
    InvalidSeedSize { seed_size: usize, len: usize },
    #[error("seed documents must contain both classes")]
    SeedMissingClass,
    #[error("invalid drift script: {0}")]
    InvalidScript(String),
}

/// Checks the seed invariants: `2 <= seed_size < len` and both classes
/// present among the seed documents.
pub fn validate_seed(docs: &[Document], seed_size: usize) -> Result<(), CorpusError> {
    if seed_size < 2 || seed_size >= docs.len() {
        return Err(CorpusError::InvalidSeedSize {
            seed_size,
            len: docs.len(),
        });
    }
    let seed = &docs[..seed_size];
    let has = |p| seed.iter().any(|d| d.label == Some(p));
    if !(has(Polarity::Positive) && has(Polarity::Negative)) {
        return Err(CorpusError::SeedMissingClass);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarity_tokens_round_trip() {
        for p in Polarity::ALL {
            assert_eq!(p.as_str().parse::<Polarity>().unwrap(), p);
            assert_eq!(Polarity::from_index(p.index()), p);
        }
        assert!("maybe".parse::<Polarity>().is_err());
    }

    #[test]
    fn seed_validation() {
        let docs = vec![
            Document::labeled(0, "good", Polarity::Positive),
            Document::labeled(1, "bad", Polarity::Negative),
            Document::labeled(2, "fine", Polarity::Positive),
        ];
        assert!(validate_seed(&docs, 2).is_ok());
        assert!(matches!(
            validate_seed(&docs, 1),
            Err(CorpusError::InvalidSeedSize { .. })
        ));
        assert!(matches!(
            validate_seed(&docs, 3),
            Err(CorpusError::InvalidSeedSize { .. })
        ));
        let one_class = vec![
            Document::labeled(0, "good", Polarity::Positive),
            Document::labeled(1, "nice", Polarity::Positive),
            Document::labeled(2, "bad", Polarity::Negative),
        ];
        assert!(matches!(
            validate_seed(&one_class, 2),
            Err(CorpusError::SeedMissingClass)
        ));
    }

    #[test]
    fn variant_names() {
        assert_eq!("fixed-vocab".parse::<StreamVariant>(), Ok(StreamVariant::FixedVocab));
        assert!("shuffled".parse::<StreamVariant>().is_err());
    }
}
