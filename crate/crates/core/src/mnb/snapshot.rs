use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{MnbError, VocabularyStats};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("word `{0}` appears more than once")]
    DuplicateWord(String),
    #[error("word `{0}` has no occurrences")]
    EmptyWord(String),
    #[error("inconsistent snapshot: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Model(MnbError),
    #[error("malformed snapshot: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub pos: u64,
    pub neg: u64,
}

/// Serialized model: every vocabulary entry as `[word, count_pos, count_neg]`
/// sorted by word, so equal models serialize to equal bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub v: u32,
    pub class_docs: ClassCounts,
    pub class_word_totals: ClassCounts,
    pub vocab: Vec<(String, u64, u64)>,
}

impl ModelSnapshot {
    pub fn from_stats(stats: &VocabularyStats) -> Self {
        let mut vocab: Vec<(String, u64, u64)> = stats
            .words()
            .map(|(w, [p, n])| (w.to_owned(), p, n))
            .collect();
        vocab.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let docs = stats.class_doc_counts;
        let totals = stats.class_word_totals;
        ModelSnapshot {
            v: SNAPSHOT_VERSION,
            class_docs: ClassCounts {
                pos: docs[0],
                neg: docs[1],
            },
            class_word_totals: ClassCounts {
                pos: totals[0],
                neg: totals[1],
            },
            vocab,
        }
    }

    pub fn to_stats(&self) -> Result<VocabularyStats, SnapshotError> {
        if self.v != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version(self.v));
        }
        let mut counts = HashMap::with_capacity(self.vocab.len());
        for (word, p, n) in &self.vocab {
            if p + n == 0 {
                return Err(SnapshotError::EmptyWord(word.clone()));
            }
            if counts.insert(word.clone(), [*p, *n]).is_some() {
                return Err(SnapshotError::DuplicateWord(word.clone()));
            }
        }
        let stats = VocabularyStats::from_parts(
            counts,
            [self.class_docs.pos, self.class_docs.neg],
            [self.class_word_totals.pos, self.class_word_totals.neg],
        );
        if let Some(v) = stats.audit().first() {
            return Err(SnapshotError::Inconsistent(v.to_string()));
        }
        Ok(stats)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, SnapshotError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Polarity};
    use crate::mnb::{MnbClassifier, TrueLabel};
    use proptest::prelude::*;

    #[test]
    fn format_is_stable() {
        let seed = [
            Document::labeled(0, "good good", Polarity::Positive),
            Document::labeled(1, "bad", Polarity::Negative),
        ];
        let json = MnbClassifier::init_from_seed(&seed).unwrap().snapshot().to_json();
        assert_eq!(
            json,
            r#"{"v":1,"class_docs":{"pos":1,"neg":1},"class_word_totals":{"pos":2,"neg":1},"vocab":[["bad",0,1],["good",2,0]]}"#
        );
    }

    #[test]
    fn rejects_inconsistent_totals_and_versions() {
        let bad = r#"{"v":1,"class_docs":{"pos":1,"neg":1},"class_word_totals":{"pos":3,"neg":1},"vocab":[["bad",0,1],["good",2,0]]}"#;
        let snap = ModelSnapshot::from_json(bad).unwrap();
        assert!(matches!(snap.to_stats(), Err(SnapshotError::Inconsistent(_))));
        let v2 = bad.replace("\"v\":1", "\"v\":2");
        let snap = ModelSnapshot::from_json(&v2).unwrap();
        assert!(matches!(snap.to_stats(), Err(SnapshotError::Version(2))));
        let one_class = r#"{"v":1,"class_docs":{"pos":1,"neg":0},"class_word_totals":{"pos":1,"neg":0},"vocab":[["a",1,0]]}"#;
        let snap = ModelSnapshot::from_json(one_class).unwrap();
        assert!(matches!(
            MnbClassifier::from_snapshot(&snap),
            Err(SnapshotError::Model(_))
        ));
    }

    proptest! {
        #[test]
        fn round_trip_preserves_predictions(
            rows in prop::collection::vec((prop::collection::vec(0u8..15, 1..6), any::<bool>()), 2..40),
            probe in prop::collection::vec(0u8..18, 0..8),
        ) {
            let docs: Vec<Document> = rows.iter().enumerate().map(|(i, (ws, p))| Document::new(
                i as u64,
                ws.iter().map(|w| format!("w{w}")).collect(),
                Some(if *p { Polarity::Positive } else { Polarity::Negative }),
            )).collect();
            let mut stats = VocabularyStats::new();
            for d in &docs { stats.update(d, TrueLabel::from_ground_truth(d).unwrap()); }
            prop_assume!(stats.class_doc_count(Polarity::Positive) > 0 && stats.class_doc_count(Polarity::Negative) > 0);
            let model = MnbClassifier::from_stats(stats).unwrap();
            let json = model.snapshot().to_json();
            let restored = MnbClassifier::from_snapshot(&ModelSnapshot::from_json(&json).unwrap()).unwrap();
            prop_assert_eq!(&restored, &model);
            let d = Document::new(0, probe.iter().map(|w| format!("w{w}")).collect(), None);
            let (a, b) = (model.predict(&d), restored.predict(&d));
            prop_assert_eq!(a.label, b.label);
            prop_assert_eq!(a.log_joint[0].to_bits(), b.log_joint[0].to_bits());
            prop_assert_eq!(a.log_joint[1].to_bits(), b.log_joint[1].to_bits());
        }
    }
}
