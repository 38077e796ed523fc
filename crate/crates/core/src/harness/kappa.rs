use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Polarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("kappa of an empty window is undefined")]
pub struct EmptyWindow;

/// Cohen's kappa from a confusion table indexed `[predicted][truth]`.
///
/// The chance agreement assumes a classifier that hands out each class as
/// often as the evaluated one did. When chance agreement is 1 (one class
/// everywhere) kappa is reported as 0.
pub fn kappa_from_confusion(table: [[u64; 2]; 2]) -> Result<f64, EmptyWindow> {
    let n = table.iter().flatten().sum::<u64>();
    if n == 0 {
        return Err(EmptyWindow);
    }
    let n = n as f64;
    let observed = (table[0][0] + table[1][1]) as f64 / n;
    let chance: f64 = (0..2)
        .map(|c| {
            let predicted = (table[c][0] + table[c][1]) as f64 / n;
            let actual = (table[0][c] + table[1][c]) as f64 / n;
            predicted * actual
        })
        .sum();
    if chance >= 1.0 {
        return Ok(0.0);
    }
    Ok((observed - chance) / (1.0 - chance))
}

/// How the evaluation window moves along the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowMode {
    /// The last `W` documents.
    #[default]
    Sliding,
    /// Consecutive, non-overlapping blocks of `W` documents; kappa covers
    /// the block so far.
    Tumbling,
}

impl FromStr for WindowMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sliding" => Ok(WindowMode::Sliding),
            "tumbling" => Ok(WindowMode::Tumbling),
            other => Err(format!("unknown window mode `{other}` (expected sliding or tumbling)")),
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowMode::Sliding => "sliding",
            WindowMode::Tumbling => "tumbling",
        })
    }
}

/// Bounded window of `(predicted, truth)` pairs with running counts.
#[derive(Debug, Clone)]
pub struct ConfusionWindow {
    capacity: usize,
    mode: WindowMode,
    pairs: VecDeque<(Polarity, Polarity)>,
    table: [[u64; 2]; 2],
}

impl ConfusionWindow {
    pub fn new(capacity: usize, mode: WindowMode) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        ConfusionWindow {
            capacity,
            mode,
            pairs: VecDeque::with_capacity(capacity),
            table: [[0; 2]; 2],
        }
    }

    pub fn push(&mut self, predicted: Polarity, truth: Polarity) {
        if self.pairs.len() == self.capacity {
            match self.mode {
                WindowMode::Sliding => {
                    let (p, t) = self.pairs.pop_front().expect("window is full");
                    self.table[p.index()][t.index()] -= 1;
                }
                WindowMode::Tumbling => {
                    self.pairs.clear();
                    self.table = [[0; 2]; 2];
                }
            }
        }
        self.pairs.push_back((predicted, truth));
        self.table[predicted.index()][truth.index()] += 1;
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Counts `[predicted][truth]`.
    pub fn confusion(&self) -> [[u64; 2]; 2] {
        self.table
    }

    pub fn accuracy(&self) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        Some((self.table[0][0] + self.table[1][1]) as f64 / self.len() as f64)
    }

    pub fn kappa(&self) -> Result<f64, EmptyWindow> {
        kappa_from_confusion(self.table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: Polarity = Polarity::Positive;
    const N: Polarity = Polarity::Negative;

    fn window_of(pairs: &[(Polarity, Polarity)]) -> ConfusionWindow {
        let mut w = ConfusionWindow::new(pairs.len().max(1), WindowMode::Sliding);
        for &(p, t) in pairs {
            w.push(p, t);
        }
        w
    }

    #[test]
    fn perfect_balanced() {
        let w = window_of(&[(P, P), (N, N), (P, P), (N, N)]);
        assert_eq!(w.kappa().unwrap(), 1.0);
    }

    #[test]
    fn chance_level_is_zero() {
        // Marginals 50/50 on both sides, accuracy 0.5.
        let w = window_of(&[(P, P), (P, N), (N, P), (N, N)]);
        assert_eq!(w.kappa().unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_window() {
        let truths = [P, P, P, N];
        let preds = [P, P, N, N];
        let pairs: Vec<_> = preds.into_iter().zip(truths).collect();
        assert_eq!(window_of(&pairs).kappa().unwrap(), 0.5);
    }

    #[test]
    fn single_class_window_is_zero() {
        let w = window_of(&[(N, N), (N, N), (N, N)]);
        assert_eq!(w.kappa().unwrap(), 0.0);
    }

    #[test]
    fn empty_window_errors() {
        assert_eq!(ConfusionWindow::new(3, WindowMode::Sliding).kappa(), Err(EmptyWindow));
    }

    #[test]
    fn sliding_evicts_oldest() {
        let mut w = ConfusionWindow::new(2, WindowMode::Sliding);
        w.push(P, N);
        w.push(P, P);
        w.push(N, N);
        assert_eq!(w.len(), 2);
        assert_eq!(w.confusion(), [[1, 0], [0, 1]]);
    }

    #[test]
    fn tumbling_restarts_blocks() {
        let mut w = ConfusionWindow::new(2, WindowMode::Tumbling);
        w.push(P, N);
        w.push(P, P);
        w.push(N, N);
        assert_eq!(w.len(), 1);
        assert_eq!(w.confusion(), [[0, 0], [0, 1]]);
    }

    fn arb_pairs() -> impl Strategy<Value = Vec<(Polarity, Polarity)>> {
        prop::collection::vec((any::<bool>(), any::<bool>()), 1..60).prop_map(|v| {
            v.into_iter()
                .map(|(a, b)| (Polarity::from_index(a as usize), Polarity::from_index(b as usize)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn bounded_and_perfect_iff_accurate(pairs in arb_pairs(), cap in 1usize..20) {
            let mut w = ConfusionWindow::new(cap, WindowMode::Sliding);
            for &(p, t) in &pairs {
                w.push(p, t);
                let k = w.kappa().unwrap();
                prop_assert!((-1.0..=1.0).contains(&k), "kappa {}", k);
                let table = w.confusion();
                let n = w.len() as u64;
                prop_assert_eq!(table.iter().flatten().sum::<u64>(), n);
                let perfect = w.accuracy().unwrap() == 1.0;
                let pred_pos = table[0][0] + table[0][1];
                let true_pos = table[0][0] + table[1][0];
                let degenerate = (pred_pos == n || pred_pos == 0) && (true_pos == n || true_pos == 0) && perfect;
                prop_assert_eq!(k == 1.0, perfect && !degenerate);
            }
        }
    }
}
