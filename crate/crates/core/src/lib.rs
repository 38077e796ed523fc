//! Active polarity learning over a stream of opinionated documents.
//!
//! A multinomial naive Bayes model is trained on a small labeled seed and
//! then classifies each arriving document. A sampling strategy decides which
//! documents are worth a true label; only those labels, obtained from ground
//! truth or from a human through the label service, update the model. Every
//! document is evaluated prequentially with windowed kappa.

pub mod corpus;
pub mod harness;
pub mod mnb;
pub mod oracle;
pub mod report;
pub mod sampling;
pub mod service;

pub use corpus::{Document, Polarity};
pub use harness::{run_experiment, run_stream, ExperimentConfig, PrequentialRecord, RunSummary};
pub use mnb::{MnbClassifier, Prediction, TrueLabel, VocabularyStats};
pub use sampling::{Sampler, SamplingDecision, Strategy};
