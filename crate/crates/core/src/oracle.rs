//! Label sources and label-spend accounting.
//!
//! The ground-truth oracle answers from the stream's own annotations. The
//! interactive oracle parks each query on a [`LabelDesk`] and blocks until a
//! human answers through the label service, the timeout passes, or the run
//! is cancelled.

use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Polarity};
use crate::mnb::TrueLabel;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
pub const WIRE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("document {0} has no ground-truth label")]
    Unlabeled(u64),
    #[error("labeling cancelled while waiting on document {0}")]
    Cancelled(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelOutcome {
    Answered(TrueLabel),
    /// Nobody answered in time; the document is skipped without an update.
    Abandoned,
}

/// What the learner knows about a document it asks about.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryContext {
    pub predicted: Polarity,
    pub score: f64,
    pub priors: [f64; 2],
    pub vocab_size: usize,
    pub kappa: Option<f64>,
}

/// Progress of a running experiment as shown to annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub v: u32,
    /// Stream documents processed so far, seed excluded.
    pub position: usize,
    pub seed_size: usize,
    pub queries: usize,
    pub abandoned: usize,
    pub spend_percent: f64,
    pub kappa: Option<f64>,
    pub vocab_size: usize,
    pub finished: bool,
}

impl Default for RunStatus {
    fn default() -> Self {
        RunStatus {
            v: WIRE_VERSION,
            position: 0,
            seed_size: 0,
            queries: 0,
            abandoned: 0,
            spend_percent: 0.0,
            kappa: None,
            vocab_size: 0,
            finished: false,
        }
    }
}

pub trait Oracle {
    fn request_label(&mut self, doc: &Document, ctx: &QueryContext) -> Result<LabelOutcome, OracleError>;

    /// Called after every processed document.
    fn publish_status(&mut self, _status: &RunStatus) {}

    /// Whether the run should stop before the next document.
    fn should_stop(&self) -> bool {
        false
    }
}

/// Answers from the document's own annotation.
#[derive(Debug, Clone, Copy, Default)]
pub struct GroundTruthOracle;

impl Oracle for GroundTruthOracle {
    fn request_label(&mut self, doc: &Document, _ctx: &QueryContext) -> Result<LabelOutcome, OracleError> {
        TrueLabel::from_ground_truth(doc)
            .map(LabelOutcome::Answered)
            .ok_or(OracleError::Unlabeled(doc.id))
    }
}

/// Counts consumed labels against stream progress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub queries_made: usize,
    pub abandoned: usize,
    pub stream_position: usize,
    pub seed_size: usize,
}

impl BudgetLedger {
    pub fn new(seed_size: usize) -> Self {
        BudgetLedger {
            seed_size,
            ..Default::default()
        }
    }

    pub fn advance(&mut self) {
        self.stream_position += 1;
    }

    pub fn record(&mut self, outcome: &LabelOutcome) {
        match outcome {
            LabelOutcome::Answered(_) => self.queries_made += 1,
            LabelOutcome::Abandoned => self.abandoned += 1,
        }
    }

    /// Labeled documents, seed included, as a percentage of seed plus
    /// stream documents seen.
    pub fn spend_percentage(&self) -> f64 {
        let seen = self.stream_position + self.seed_size;
        if seen == 0 {
            return 0.0;
        }
        100.0 * (self.queries_made + self.seed_size) as f64 / seen as f64
    }

    pub fn spend_report(&self) -> u32 {
        self.spend_percentage().round() as u32
    }
}

/// The single outstanding question shown to the annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingQuery {
    pub v: u32,
    pub doc_id: u64,
    pub words: Vec<String>,
    pub predicted: Polarity,
    pub score: f64,
    pub priors: Priors,
    pub vocab_size: usize,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub pos: f64,
    pub neg: f64,
}

impl PendingQuery {
    pub fn new(doc: &Document, ctx: &QueryContext) -> Self {
        PendingQuery {
            v: WIRE_VERSION,
            doc_id: doc.id,
            words: doc.words.clone(),
            predicted: ctx.predicted,
            score: ctx.score,
            priors: Priors {
                pos: ctx.priors[0],
                neg: ctx.priors[1],
            },
            vocab_size: ctx.vocab_size,
            kappa: ctx.kappa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitOutcome {
    Accepted,
    /// The doc id is not the one currently pending.
    Conflict,
}

#[derive(Debug, Default)]
struct DeskState {
    pending: Option<PendingQuery>,
    answer: Option<(u64, Polarity)>,
    status: RunStatus,
    cancelled: bool,
}

/// Hand-off point between the experiment loop and the label service.
/// Holds at most one pending query.
#[derive(Debug, Clone, Default)]
pub struct LabelDesk {
    inner: Arc<(Mutex<DeskState>, Condvar)>,
}

impl LabelDesk {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, DeskState> {
        self.inner.0.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn pending(&self) -> Option<PendingQuery> {
        self.lock().pending.clone()
    }

    pub fn status(&self) -> RunStatus {
        self.lock().status.clone()
    }

    pub fn set_status(&self, status: RunStatus) {
        self.lock().status = status;
    }

    /// Answers the pending query if `doc_id` matches it. A second answer to
    /// the same document is a conflict.
    pub fn submit(&self, doc_id: u64, label: Polarity) -> SubmitOutcome {
        let mut state = self.lock();
        match &state.pending {
            Some(q) if q.doc_id == doc_id => {
                state.pending = None;
                state.answer = Some((doc_id, label));
                drop(state);
                self.inner.1.notify_all();
                SubmitOutcome::Accepted
            }
            _ => SubmitOutcome::Conflict,
        }
    }

    /// Stops the run: any waiting query returns and no new one is posted.
    pub fn cancel(&self) {
        self.lock().cancelled = true;
        self.inner.1.notify_all();
    }

    pub fn is_cancelled(&self) -> bool {
        self.lock().cancelled
    }

    /// Posts `query` and waits for its answer. `Ok(None)` on timeout.
    fn ask(&self, query: PendingQuery, timeout: Duration) -> Result<Option<Polarity>, OracleError> {
        let doc_id = query.doc_id;
        let deadline = Instant::now() + timeout;
        let mut state = self.lock();
        if state.cancelled {
            return Err(OracleError::Cancelled(doc_id));
        }
        state.answer = None;
        state.pending = Some(query);
        loop {
            if let Some((id, label)) = state.answer {
                if id == doc_id {
                    state.answer = None;
                    return Ok(Some(label));
                }
            }
            if state.cancelled {
                state.pending = None;
                return Err(OracleError::Cancelled(doc_id));
            }
            let now = Instant::now();
            if now >= deadline {
                state.pending = None;
                return Ok(None);
            }
            state = self
                .inner
                .1
                .wait_timeout(state, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }
}

/// Asks a human through a [`LabelDesk`].
#[derive(Debug, Clone)]
pub struct InteractiveOracle {
    desk: LabelDesk,
    timeout: Duration,
}

impl InteractiveOracle {
    pub fn new(desk: LabelDesk, timeout: Duration) -> Self {
        InteractiveOracle { desk, timeout }
    }

    pub fn desk(&self) -> &LabelDesk {
        &self.desk
    }
}

impl Oracle for InteractiveOracle {
    fn request_label(&mut self, doc: &Document, ctx: &QueryContext) -> Result<LabelOutcome, OracleError> {
        let answer = self.desk.ask(PendingQuery::new(doc, ctx), self.timeout)?;
        Ok(match answer {
            Some(label) => LabelOutcome::Answered(TrueLabel::from_annotator(label)),
            None => LabelOutcome::Abandoned,
        })
    }

    fn publish_status(&mut self, status: &RunStatus) {
        self.desk.set_status(status.clone());
    }

    fn should_stop(&self) -> bool {
        self.desk.is_cancelled()
    }
}
