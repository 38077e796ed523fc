//! Per-document decisions on whether to spend an oracle query.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Polarity};
use crate::mnb::{Prediction, VocabularyStats};

/// Two-class entropy in bits, with `0·log 0 = 0` and `H(0, 0) = 0`.
pub fn entropy(a: u64, b: u64) -> f64 {
    if a == 0 || b == 0 {
        return 0.0;
    }
    let n = (a + b) as f64;
    let term = |x: u64| {
        let p = x as f64 / n;
        p * p.log2()
    };
    -(term(a) + term(b))
}

/// Entropy reduction of one word's class distribution if the document were
/// added under `predicted`. Negative when the prediction works against the
/// word's dominant class.
pub fn entropy_gain(counts: [u64; 2], predicted: Polarity) -> f64 {
    let mut after = counts;
    after[predicted.index()] += 1;
    entropy(counts[0], counts[1]) - entropy(after[0], after[1])
}

/// Sum of [`entropy_gain`] over the distinct in-vocabulary words of `doc`,
/// taken in order of first occurrence.
pub fn information_gain(stats: &VocabularyStats, doc: &Document, predicted: Polarity) -> f64 {
    let mut seen = HashSet::with_capacity(doc.words.len());
    let mut gain = 0.0;
    for word in &doc.words {
        if !seen.insert(word.as_str()) || !stats.contains(word) {
            continue;
        }
        gain += entropy_gain(stats.word_counts(word), predicted);
    }
    gain
}

/// Which documents get a true label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    /// Query when the predicted label would make the words' class
    /// distributions purer overall.
    #[serde(rename = "ig")]
    InformationGain,
    /// Query when the larger class joint is at most `alpha`. Stored as
    /// `ln alpha` so thresholds far below `f64` range stay exact.
    Uncertainty { log_alpha: f64 },
    /// Query with probability `budget`.
    Random { budget: f64, rng_seed: u64 },
    /// Query every document.
    Always,
    /// Never query.
    Never,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error("alpha must lie in (0, 1), got ln(alpha) = {0}")]
    Alpha(f64),
    #[error("budget must lie in [0, 1], got {0}")]
    Budget(f64),
}

impl Strategy {
    pub fn uncertainty(alpha: f64) -> Result<Strategy, StrategyError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(StrategyError::Alpha(alpha.ln()));
        }
        Ok(Strategy::Uncertainty {
            log_alpha: alpha.ln(),
        })
    }

    pub fn uncertainty_log(log_alpha: f64) -> Result<Strategy, StrategyError> {
        if !(log_alpha.is_finite() && log_alpha < 0.0) {
            return Err(StrategyError::Alpha(log_alpha));
        }
        Ok(Strategy::Uncertainty { log_alpha })
    }

    pub fn random(budget: f64, rng_seed: u64) -> Result<Strategy, StrategyError> {
        if !(0.0..=1.0).contains(&budget) {
            return Err(StrategyError::Budget(budget));
        }
        Ok(Strategy::Random { budget, rng_seed })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::InformationGain => "ig",
            Strategy::Uncertainty { .. } => "uncertainty",
            Strategy::Random { .. } => "random",
            Strategy::Always => "always",
            Strategy::Never => "never",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Uncertainty { log_alpha } => write!(f, "uncertainty(alpha=e^{log_alpha})"),
            Strategy::Random { budget, .. } => write!(f, "random(B={budget})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Verdict for one document and the score behind it: the information gain,
/// the larger log-joint, the uniform draw, or 0 for always/never.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingDecision {
    pub query: bool,
    pub score: f64,
}

/// A strategy together with the random state it needs.
#[derive(Debug, Clone)]
pub struct Sampler {
    strategy: Strategy,
    rng: Option<ChaCha8Rng>,
}

impl Sampler {
    pub fn new(strategy: Strategy) -> Self {
        let rng = match strategy {
            Strategy::Random { rng_seed, .. } => Some(ChaCha8Rng::seed_from_u64(rng_seed)),
            _ => None,
        };
        Sampler { strategy, rng }
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    /// Decides on `doc` given the prediction made by the current model.
    pub fn decide(
        &mut self,
        stats: &VocabularyStats,
        doc: &Document,
        prediction: &Prediction,
    ) -> SamplingDecision {
        match self.strategy {
            Strategy::InformationGain => {
                let score = information_gain(stats, doc, prediction.label);
                SamplingDecision {
                    query: score > 0.0,
                    score,
                }
            }
            Strategy::Uncertainty { log_alpha } => {
                let score = prediction.max_log_joint();
                SamplingDecision {
                    query: score <= log_alpha,
                    score,
                }
            }
            Strategy::Random { budget, .. } => {
                let rng = self.rng.as_mut().expect("random sampler owns a generator");
                let draw: f64 = rng.random();
                SamplingDecision {
                    query: draw < budget,
                    score: draw,
                }
            }
            Strategy::Always => SamplingDecision {
                query: true,
                score: 0.0,
            },
            Strategy::Never => SamplingDecision {
                query: false,
                score: 0.0,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mnb::{MnbClassifier, TrueLabel};
    use proptest::prelude::{prop, prop_assert, proptest};

    const POS: Polarity = Polarity::Positive;
    const NEG: Polarity = Polarity::Negative;

    fn stats_with(words: &[(&str, u64, u64)]) -> VocabularyStats {
        let mut s = VocabularyStats::new();
        for (w, p, n) in words {
            for (count, label) in [(*p, POS), (*n, NEG)] {
                for _ in 0..count {
                    let d = Document::labeled(0, w, label);
                    s.update(&d, TrueLabel::from_ground_truth(&d).unwrap());
                }
            }
        }
        s
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(1, 1), 1.0);
        assert_eq!(entropy(30, 0), 0.0);
        assert_eq!(entropy(0, 0), 0.0);
        // -(30/31 log2(30/31) + 1/31 log2(1/31))
        assert!((entropy(30, 1) - 0.205_592).abs() < 1e-6);
    }

    #[test]
    fn gain_terms() {
        assert_eq!(entropy_gain([5, 0], POS), 0.0);
        assert!((entropy_gain([1, 1], POS) - 0.081_704).abs() < 1e-6);
        assert!((entropy_gain([30, 0], NEG) + 0.205_592).abs() < 1e-6);
    }

    #[test]
    fn old_word_against_prediction_is_not_sampled() {
        let s = stats_with(&[("w", 30, 0), ("other", 1, 1)]);
        let d = Document::labeled(9, "w", NEG);
        assert!(information_gain(&s, &d, NEG) < 0.0);
        let p = Prediction {
            label: NEG,
            log_joint: [-1.0, -0.5],
            in_vocab_words: 1,
        };
        assert!(!Sampler::new(Strategy::InformationGain).decide(&s, &d, &p).query);
    }

    #[test]
    fn pure_words_give_zero_gain() {
        let s = stats_with(&[("a", 4, 0), ("b", 7, 0), ("c", 0, 3)]);
        let d = Document::labeled(0, "a b a b unknown", POS);
        assert_eq!(information_gain(&s, &d, POS), 0.0);
    }

    #[test]
    fn repeated_words_count_once() {
        let s = stats_with(&[("a", 1, 1)]);
        let once = information_gain(&s, &Document::labeled(0, "a", POS), POS);
        let thrice = information_gain(&s, &Document::labeled(0, "a a a", POS), POS);
        assert_eq!(once, thrice);
    }

    #[test]
    fn decision_rules() {
        let m = MnbClassifier::init_from_seed(&[
            Document::labeled(0, "a", POS),
            Document::labeled(1, "b", NEG),
        ])
        .unwrap();
        let d = Document::labeled(2, "a", POS);
        let p = Prediction {
            label: POS,
            log_joint: [-3.0, -4.0],
            in_vocab_words: 1,
        };
        assert!(!Sampler::new(Strategy::Never).decide(m.stats(), &d, &p).query);
        assert!(Sampler::new(Strategy::Always).decide(m.stats(), &d, &p).query);
        let u = Strategy::uncertainty((-2.0f64).exp()).unwrap();
        let dec = Sampler::new(u).decide(m.stats(), &d, &p);
        assert!(dec.query);
        assert_eq!(dec.score, -3.0);
        let u = Strategy::uncertainty_log(-3.5).unwrap();
        assert!(!Sampler::new(u).decide(m.stats(), &d, &p).query);
    }

    #[test]
    fn parameter_validation() {
        assert!(Strategy::uncertainty(1.0).is_err());
        assert!(Strategy::uncertainty(0.0).is_err());
        assert!(Strategy::uncertainty_log(0.0).is_err());
        assert!(Strategy::random(1.5, 0).is_err());
        assert!(Strategy::random(0.3, 0).is_ok());
    }

    #[test]
    fn random_budget_concentrates() {
        let m = MnbClassifier::init_from_seed(&[
            Document::labeled(0, "a", POS),
            Document::labeled(1, "b", NEG),
        ])
        .unwrap();
        let d = Document::labeled(2, "a", POS);
        let p = m.predict(&d);
        let mut sampler = Sampler::new(Strategy::random(0.3, 42).unwrap());
        let hits = (0..10_000)
            .filter(|_| sampler.decide(m.stats(), &d, &p).query)
            .count();
        let share = hits as f64 / 10_000.0;
        assert!((share - 0.3).abs() <= 0.015, "share {share}");
    }

    #[test]
    fn opposing_term_shrinks_with_evidence() {
        let mut prev = f64::INFINITY;
        for n in 1..=1000 {
            let mag = (entropy(n, 0) - entropy(n, 1)).abs();
            assert!(mag < prev, "n = {n}");
            prev = mag;
        }
    }

    fn arb_counts() -> impl proptest::strategy::Strategy<Value = Vec<(u64, u64)>> {
        prop::collection::vec((0u64..20, 0u64..20), 1..8)
    }

    proptest! {
        #[test]
        fn gain_additive_over_disjoint_words(a in arb_counts(), b in arb_counts(), pos: bool) {
            let mut words: Vec<(String, u64, u64)> = Vec::new();
            for (i, (p, n)) in a.iter().enumerate() { words.push((format!("a{i}"), *p, *n)); }
            for (i, (p, n)) in b.iter().enumerate() { words.push((format!("b{i}"), *p, *n)); }
            let refs: Vec<(&str, u64, u64)> = words.iter().map(|(w, p, n)| (w.as_str(), *p, *n)).collect();
            let s = stats_with(&refs);
            let label = if pos { POS } else { NEG };
            let da: Vec<String> = (0..a.len()).map(|i| format!("a{i}")).collect();
            let db: Vec<String> = (0..b.len()).map(|i| format!("b{i}")).collect();
            let both = Document::new(0, da.iter().chain(&db).cloned().collect(), None);
            let ga = information_gain(&s, &Document::new(0, da, None), label);
            let gb = information_gain(&s, &Document::new(0, db, None), label);
            prop_assert!((information_gain(&s, &both, label) - (ga + gb)).abs() < 1e-12);
        }

        #[test]
        fn uncertainty_monotone_in_alpha(lj0 in -200f64..0.0, lj1 in -200f64..0.0, a1 in -60f64..-0.01, delta in 0f64..30.0) {
            let s = VocabularyStats::new();
            let d = Document::new(0, vec![], None);
            let p = Prediction { label: Prediction::argmax([lj0, lj1]), log_joint: [lj0, lj1], in_vocab_words: 0 };
            let a2 = (a1 + delta).min(-1e-9);
            let low = Sampler::new(Strategy::uncertainty_log(a1).unwrap()).decide(&s, &d, &p).query;
            let high = Sampler::new(Strategy::uncertainty_log(a2).unwrap()).decide(&s, &d, &p).query;
            prop_assert!(!low || high);
        }
    }
}
