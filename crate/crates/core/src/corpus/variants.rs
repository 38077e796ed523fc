use std::cmp::Ordering;
use std::collections::HashSet;

use super::Document;

/// Distinct words of the first `seed_size` documents.
pub fn seed_vocabulary(docs: &[Document], seed_size: usize) -> HashSet<&str> {
    docs.iter()
        .take(seed_size)
        .flat_map(|d| d.words.iter().map(String::as_str))
        .collect()
}

/// `(known, total)` word-occurrence counts of `doc` against `vocab`.
pub fn known_fraction(doc: &Document, vocab: &HashSet<&str>) -> (usize, usize) {
    let known = doc
        .words
        .iter()
        .filter(|w| vocab.contains(w.as_str()))
        .count();
    (known, doc.words.len())
}

#[derive(Debug, Clone)]
pub struct Reordered {
    /// Permutation of the input; documents keep their source ids.
    pub documents: Vec<Document>,
    /// Share of each output document's word occurrences outside the seed
    /// vocabulary, aligned with `documents`.
    pub novelty_fractions: Vec<f64>,
    /// Set when fewer than `seed_size` documents were fully covered by the
    /// seed vocabulary, so the leading block holds the most-covered ones.
    pub fallback: bool,
}

/// Orders the stream so that seed-vocabulary coverage falls over time.
///
/// Documents are sorted by descending share of in-vocabulary word
/// occurrences, ties broken by source id. The fully covered seed documents
/// therefore stay in front and newer vocabulary accumulates towards the end.
/// Fractions are compared exactly as integer ratios.
pub fn reorder_for_vocab_novelty(docs: &[Document], seed_size: usize) -> Reordered {
    let vocab = seed_vocabulary(docs, seed_size);
    let mut scored: Vec<(usize, usize, usize)> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (known, total) = known_fraction(d, &vocab);
            (i, known, total)
        })
        .collect();
    let covered = scored.iter().filter(|&&(_, k, t)| k == t).count();

    scored.sort_by(|&(ia, ka, ta), &(ib, kb, tb)| {
        // ka/ta > kb/tb  <=>  ka*tb > kb*ta; empty documents count as covered.
        let lhs = (ka as u128) * (tb.max(1) as u128);
        let rhs = (kb as u128) * (ta.max(1) as u128);
        match rhs.cmp(&lhs) {
            Ordering::Equal => docs[ia].id.cmp(&docs[ib].id),
            other => other,
        }
    });

    let novelty_fractions = scored
        .iter()
        .map(|&(_, k, t)| if t == 0 { 0.0 } else { (t - k) as f64 / t as f64 })
        .collect();
    let documents = scored.iter().map(|&(i, _, _)| docs[i].clone()).collect();
    Reordered {
        documents,
        novelty_fractions,
        fallback: covered < seed_size,
    }
}

/// Keeps the seed followed by every later document whose words all belong to
/// the seed vocabulary, in source order.
pub fn filter_fixed_vocabulary(docs: &[Document], seed_size: usize) -> Vec<Document> {
    let vocab = seed_vocabulary(docs, seed_size);
    docs.iter()
        .enumerate()
        .filter(|(i, d)| *i < seed_size || d.words.iter().all(|w| vocab.contains(w.as_str())))
        .map(|(_, d)| d.clone())
        .collect()
}
