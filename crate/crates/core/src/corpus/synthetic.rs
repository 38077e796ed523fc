use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Document, Polarity};

/// One stretch of a synthetic stream with stationary parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentScript {
    pub length: usize,
    /// `[positive, negative]` document prior; must sum to 1.
    pub class_prior: [f64; 2],
    /// Share of the sentiment-bearing words whose polarity flips when the
    /// segment starts.
    #[serde(default)]
    pub polarity_flip_fraction: f64,
    /// Probability that a word slot is filled with a never-seen word.
    #[serde(default)]
    pub novelty_rate: f64,
}

/// Parameters of a generated drift stream.
///
/// Words `w0..w{vocab_size}` form the initial vocabulary. Word `k` has base
/// weight `(k + 1)^-zipf_exponent`, so low-numbered words are frequent. A
/// `polar_fraction` of the words lean towards one class, the rest are
/// neutral; a word leaning to class `c` has its weight multiplied by
/// `affinity` in documents of class `c`. Novel words are named `n<k>`, take
/// the next rank, lean towards the class of the document that introduced them
/// with probability `polar_fraction`, and join the vocabulary for later
/// documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftScript {
    pub vocab_size: usize,
    pub polar_fraction: f64,
    pub affinity: f64,
    #[serde(default)]
    pub zipf_exponent: f64,
    pub min_doc_len: usize,
    pub max_doc_len: usize,
    pub segments: Vec<SegmentScript>,
    pub seed: u64,
}

impl DriftScript {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InvalidScript(msg));
        if self.vocab_size < 2 {
            return bad("vocab_size must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.polar_fraction) {
            return bad("polar_fraction must lie in [0, 1]".into());
        }
        if !(self.affinity.is_finite() && self.affinity >= 1.0) {
            return bad("affinity must be a finite value >= 1".into());
        }
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent >= 0.0) {
            return bad("zipf_exponent must be a finite value >= 0".into());
        }
        if self.min_doc_len == 0 || self.min_doc_len > self.max_doc_len {
            return bad("document lengths need 1 <= min_doc_len <= max_doc_len".into());
        }
        if self.segments.is_empty() {
            return bad("at least one segment is required".into());
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.length == 0 {
                return bad(format!("segment {i}: length must be positive"));
            }
            let [p, n] = seg.class_prior;
            if p < 0.0 || n < 0.0 || (p + n - 1.0).abs() > 1e-9 {
                return bad(format!("segment {i}: class priors must be non-negative and sum to 1"));
            }
            for (name, v) in [
                ("polarity_flip_fraction", seg.polarity_flip_fraction),
                ("novelty_rate", seg.novelty_rate),
            ] {
                if !(0.0..=1.0).contains(&v) {
                    return bad(format!("segment {i}: {name} must lie in [0, 1]"));
                }
            }
        }
        Ok(())
    }

    pub fn total_length(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }
}

/// Ground truth recorded for one generated segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentManifest {
    /// First document id of the segment.
    pub start: usize,
    /// One past the last document id.
    pub end: usize,
    pub class_prior: [f64; 2],
    pub polarity_flips: usize,
    pub novelty_rate: f64,
    pub novel_words: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticStream {
    pub documents: Vec<Document>,
    pub segments: Vec<SegmentManifest>,
}

/// Words of one category with cumulative weights for sampling.
#[derive(Default)]
struct Pool {
    words: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Pool {
    fn push(&mut self, word: usize, weight: f64) {
        self.cumulative.push(self.mass() + weight);
        self.words.push(word);
    }

    fn mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// The word whose cumulative interval contains `x`, for `0 <= x < mass`.
    fn pick(&self, x: f64) -> usize {
        let i = self.cumulative.partition_point(|&c| c <= x);
        self.words[i.min(self.words.len() - 1)]
    }
}

struct Lexicon {
    names: Vec<String>,
    weights: Vec<f64>,
    leaning: Vec<Option<Polarity>>,
    by_class: [Pool; 2],
    neutral: Pool,
    novel: usize,
    zipf_exponent: f64,
}

impl Lexicon {
    fn new(script: &DriftScript, rng: &mut ChaCha8Rng) -> Self {
        let mut lex = Lexicon {
            names: Vec::new(),
            weights: Vec::new(),
            leaning: Vec::new(),
            by_class: [Pool::default(), Pool::default()],
            neutral: Pool::default(),
            novel: 0,
            zipf_exponent: script.zipf_exponent,
        };
        for i in 0..script.vocab_size {
            let leaning = if rng.random::<f64>() < script.polar_fraction {
                Some(Polarity::from_index(rng.random_range(0..2)))
            } else {
                None
            };
            lex.push(format!("w{i}"), leaning);
        }
        lex
    }

    fn push(&mut self, name: String, leaning: Option<Polarity>) -> usize {
        let id = self.names.len();
        let weight = ((id + 1) as f64).powf(-self.zipf_exponent);
        self.names.push(name);
        self.weights.push(weight);
        self.leaning.push(leaning);
        match leaning {
            Some(p) => self.by_class[p.index()].push(id, weight),
            None => self.neutral.push(id, weight),
        }
        id
    }

    fn flip(&mut self, fraction: f64, rng: &mut ChaCha8Rng) -> usize {
        let polar: Vec<usize> = (0..self.names.len())
            .filter(|&i| self.leaning[i].is_some())
            .collect();
        let count = (fraction * polar.len() as f64).round() as usize;
        if count == 0 {
            return 0;
        }
        for pick in index::sample(rng, polar.len(), count) {
            let w = polar[pick];
            self.leaning[w] = self.leaning[w].map(Polarity::opposite);
        }
        self.by_class = [Pool::default(), Pool::default()];
        for (i, lean) in self.leaning.iter().enumerate() {
            if let Some(p) = lean {
                self.by_class[p.index()].push(i, self.weights[i]);
            }
        }
        count
    }

    fn draw(&self, class: Polarity, affinity: f64, rng: &mut ChaCha8Rng) -> usize {
        let own = &self.by_class[class.index()];
        let other = &self.by_class[class.opposite().index()];
        let own_mass = affinity * own.mass();
        let rest = other.mass() + self.neutral.mass();
        let x = rng.random::<f64>() * (own_mass + rest);
        if (x < own_mass && !own.words.is_empty()) || rest == 0.0 {
            return own.pick(x / affinity);
        }
        let x = x - own_mass;
        if x < other.mass() || self.neutral.words.is_empty() {
            other.pick(x)
        } else {
            self.neutral.pick(x - other.mass())
        }
    }
}

/// Generates a labeled stream following `script`. Identical scripts give
/// identical streams.
pub fn synthesize_drift_stream(script: &DriftScript) -> Result<SyntheticStream, CorpusError> {
    script.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let mut lex = Lexicon::new(script, &mut rng);
    let mut documents = Vec::with_capacity(script.total_length());
    let mut segments = Vec::with_capacity(script.segments.len());

    for seg in &script.segments {
        let start = documents.len();
        let flips = lex.flip(seg.polarity_flip_fraction, &mut rng);
        let novel_before = lex.novel;
        for _ in 0..seg.length {
            let class = if rng.random::<f64>() < seg.class_prior[0] {
                Polarity::Positive
            } else {
                Polarity::Negative
            };
            let len = rng.random_range(script.min_doc_len..=script.max_doc_len);
            let mut words = Vec::with_capacity(len);
            for _ in 0..len {
                let w = if seg.novelty_rate > 0.0 && rng.random::<f64>() < seg.novelty_rate {
                    let leaning = (rng.random::<f64>() < script.polar_fraction).then_some(class);
                    let name = format!("n{}", lex.novel);
                    lex.novel += 1;
                    lex.push(name, leaning)
                } else {
                    lex.draw(class, script.affinity, &mut rng)
                };
                words.push(lex.names[w].clone());
            }
            documents.push(Document {
                id: documents.len() as u64,
                words,
                label: Some(class),
            });
        }
        segments.push(SegmentManifest {
            start,
            end: documents.len(),
            class_prior: seg.class_prior,
            polarity_flips: flips,
            novelty_rate: seg.novelty_rate,
            novel_words: lex.novel - novel_before,
        });
    }
    Ok(SyntheticStream {
        documents,
        segments,
    })
}
