//! Incrementally updated multinomial naive Bayes over word-class counts.
//!
//! The whole model is a table of per-word, per-class occurrence counts plus
//! per-class document counts. Estimates use add-one smoothing over the
//! current vocabulary and all arithmetic happens in natural-log space.

mod snapshot;

use std::collections::HashMap;
use std::fmt;

use crate::corpus::{Document, Polarity};

pub use snapshot::{ModelSnapshot, SnapshotError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MnbError {
    #[error("model holds no labeled documents")]
    EmptyModel,
    #[error("model vocabulary is empty")]
    EmptyVocabulary,
    #[error("seed lacks documents of class {0}")]
    MissingClass(Polarity),
    #[error("seed document {0} carries no label")]
    UnlabeledSeed(u64),
}

/// A label that came from ground truth or a human answer, never from a
/// prediction. Only such labels may change the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrueLabel(Polarity);

impl TrueLabel {
    /// The ground-truth annotation carried by `doc`, if any.
    pub fn from_ground_truth(doc: &Document) -> Option<TrueLabel> {
        doc.label.map(TrueLabel)
    }

    /// A label supplied by a human annotator.
    pub(crate) fn from_annotator(p: Polarity) -> TrueLabel {
        TrueLabel(p)
    }

    pub fn polarity(self) -> Polarity {
        self.0
    }
}

/// Word-class counts and document-class counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VocabularyStats {
    word_class_counts: HashMap<String, [u64; 2]>,
    class_doc_counts: [u64; 2],
    class_word_totals: [u64; 2],
    vocab_size: usize,
    doc_count: u64,
}

impl VocabularyStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds every word occurrence of `doc` under `label`, growing the
    /// vocabulary with unseen words, then counts the document itself.
    /// Documents without words leave the stats untouched.
    pub fn update(&mut self, doc: &Document, label: TrueLabel) {
        if doc.words.is_empty() {
            return;
        }
        let c = label.polarity().index();
        for word in &doc.words {
            let counts = match self.word_class_counts.get_mut(word.as_str()) {
                Some(counts) => counts,
                None => {
                    self.vocab_size += 1;
                    self.word_class_counts.entry(word.clone()).or_insert([0, 0])
                }
            };
            counts[c] += 1;
            self.class_word_totals[c] += 1;
        }
        self.class_doc_counts[c] += 1;
        self.doc_count += 1;
    }

    /// `[positive, negative]` occurrence counts of `word`; zero when unknown.
    pub fn word_counts(&self, word: &str) -> [u64; 2] {
        self.word_class_counts.get(word).copied().unwrap_or([0, 0])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.word_class_counts.contains_key(word)
    }

    pub fn class_doc_count(&self, c: Polarity) -> u64 {
        self.class_doc_counts[c.index()]
    }

    pub fn class_word_total(&self, c: Polarity) -> u64 {
        self.class_word_totals[c.index()]
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Number of labeled documents absorbed so far.
    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, [u64; 2])> {
        self.word_class_counts.iter().map(|(w, c)| (w.as_str(), *c))
    }

    pub fn class_prior(&self, c: Polarity) -> Result<f64, MnbError> {
        if self.doc_count == 0 {
            return Err(MnbError::EmptyModel);
        }
        Ok(self.class_doc_counts[c.index()] as f64 / self.doc_count as f64)
    }

    /// Smoothed `P(word | c)`; unknown words get the pure smoothing mass.
    pub fn word_likelihood(&self, word: &str, c: Polarity) -> Result<f64, MnbError> {
        if self.vocab_size == 0 {
            return Err(MnbError::EmptyVocabulary);
        }
        let n = self.word_counts(word)[c.index()];
        let denom = self.class_word_totals[c.index()] + self.vocab_size as u64;
        Ok((n + 1) as f64 / denom as f64)
    }

    /// Checks every cached quantity against the raw counts.
    pub fn audit(&self) -> Vec<AuditViolation> {
        let mut out = Vec::new();
        let actual_vocab = self
            .word_class_counts
            .values()
            .filter(|c| c[0] + c[1] > 0)
            .count();
        if actual_vocab != self.vocab_size || actual_vocab != self.word_class_counts.len() {
            out.push(AuditViolation::VocabSize {
                cached: self.vocab_size,
                actual: actual_vocab,
            });
        }
        for c in Polarity::ALL {
            let actual: u64 = self.word_class_counts.values().map(|v| v[c.index()]).sum();
            if actual != self.class_word_totals[c.index()] {
                out.push(AuditViolation::StaleClassTotal {
                    class: c,
                    cached: self.class_word_totals[c.index()],
                    actual,
                });
            }
        }
        let docs = self.class_doc_counts[0] + self.class_doc_counts[1];
        if docs != self.doc_count {
            out.push(AuditViolation::DocCount {
                cached: self.doc_count,
                actual: docs,
            });
        }
        out
    }

    pub(crate) fn from_parts(
        word_class_counts: HashMap<String, [u64; 2]>,
        class_doc_counts: [u64; 2],
        class_word_totals: [u64; 2],
    ) -> Self {
        let vocab_size = word_class_counts.len();
        VocabularyStats {
            word_class_counts,
            class_doc_counts,
            class_word_totals,
            vocab_size,
            doc_count: class_doc_counts[0] + class_doc_counts[1],
        }
    }
}

/// A broken invariant found by [`VocabularyStats::audit`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditViolation {
    VocabSize { cached: usize, actual: usize },
    StaleClassTotal { class: Polarity, cached: u64, actual: u64 },
    DocCount { cached: u64, actual: u64 },
}

impl fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditViolation::VocabSize { cached, actual } => {
                write!(f, "vocabulary size cached as {cached}, actual {actual}")
            }
            AuditViolation::StaleClassTotal {
                class,
                cached,
                actual,
            } => write!(
                f,
                "stale word total for class {class}: cached {cached}, actual {actual}"
            ),
            AuditViolation::DocCount { cached, actual } => {
                write!(f, "document count cached as {cached}, class counts sum to {actual}")
            }
        }
    }
}

/// Outcome of classifying one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: Polarity,
    /// `ln P(c) + Σ ln P(w|c)` per class, indexed by [`Polarity::index`].
    pub log_joint: [f64; 2],
    /// Word occurrences of the document that were in the vocabulary.
    pub in_vocab_words: usize,
}

impl Prediction {
    /// Argmax over the two log-joints; ties go to the positive class.
    pub fn argmax(log_joint: [f64; 2]) -> Polarity {
        if log_joint[0] >= log_joint[1] {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn max_log_joint(&self) -> f64 {
        self.log_joint[0].max(self.log_joint[1])
    }
}

/// The polarity classifier: vocabulary stats known to hold both classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnbClassifier {
    stats: VocabularyStats,
}

impl MnbClassifier {
    /// Trains on labeled seed documents. Both classes must be present.
    pub fn init_from_seed(seed: &[Document]) -> Result<Self, MnbError> {
        let mut stats = VocabularyStats::new();
        for doc in seed {
            let label = TrueLabel::from_ground_truth(doc).ok_or(MnbError::UnlabeledSeed(doc.id))?;
            stats.update(doc, label);
        }
        Self::from_stats(stats)
    }

    pub fn from_stats(stats: VocabularyStats) -> Result<Self, MnbError> {
        for c in Polarity::ALL {
            if stats.class_doc_count(c) == 0 {
                return Err(MnbError::MissingClass(c));
            }
        }
        Ok(MnbClassifier { stats })
    }

    pub fn stats(&self) -> &VocabularyStats {
        &self.stats
    }

    pub fn update(&mut self, doc: &Document, label: TrueLabel) {
        self.stats.update(doc, label);
    }

    /// Scores `doc` against both classes. Words outside the vocabulary are
    /// skipped; a document without known words is decided by the priors.
    pub fn predict(&self, doc: &Document) -> Prediction {
        let s = &self.stats;
        let ln_docs = (s.doc_count as f64).ln();
        let mut log_joint = [0.0; 2];
        let mut ln_denom = [0.0; 2];
        for c in 0..2 {
            log_joint[c] = (s.class_doc_counts[c] as f64).ln() - ln_docs;
            ln_denom[c] = ((s.class_word_totals[c] + s.vocab_size as u64) as f64).ln();
        }
        let mut in_vocab_words = 0;
        for word in &doc.words {
            if let Some(counts) = s.word_class_counts.get(word.as_str()) {
                in_vocab_words += 1;
                for c in 0..2 {
                    log_joint[c] += ((counts[c] + 1) as f64).ln() - ln_denom[c];
                }
            }
        }
        Prediction {
            label: Prediction::argmax(log_joint),
            log_joint,
            in_vocab_words,
        }
    }

    pub fn snapshot(&self) -> ModelSnapshot {
        ModelSnapshot::from_stats(&self.stats)
    }

    pub fn from_snapshot(snapshot: &ModelSnapshot) -> Result<Self, SnapshotError> {
        let stats = snapshot.to_stats()?;
        Self::from_stats(stats).map_err(SnapshotError::Model)
    }
}
