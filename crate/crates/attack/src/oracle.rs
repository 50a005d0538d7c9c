//! Query access to the model under attack, with counting and budgets.

use std::cell::Cell;
use std::time::{Duration, Instant};

use iso3d_nn::{argmax_lowest, softmax, ForwardTrace, Model, ModelInput, Prediction};
use iso3d_salience::LogitSource;

use crate::log::AttackEvent;
use crate::Error;

/// A classifier the attacks can query. Each call is one query. The white-box
/// attack additionally reads introspection fields off the returned trace, so
/// implementations must populate them the way `Model::forward` does;
/// black-box flows only read `logits`.
pub trait AttackOracle {
    fn forward_trace(&self, input: &ModelInput) -> Result<ForwardTrace, Error>;
}

impl AttackOracle for Model {
    fn forward_trace(&self, input: &ModelInput) -> Result<ForwardTrace, Error> {
        Ok(self.forward(input)?)
    }
}

impl<T: AttackOracle + ?Sized> AttackOracle for &T {
    fn forward_trace(&self, input: &ModelInput) -> Result<ForwardTrace, Error> {
        (**self).forward_trace(input)
    }
}

/// Everything an attack reports back.
#[derive(Debug, Clone)]
pub struct AttackResult {
    /// The occluded input, a subset of the original.
    pub survivor: ModelInput,
    /// Ids of removed elements, ascending. Point index or flat voxel index.
    pub removed: Vec<usize>,
    pub occlusion_size: usize,
    /// Forward passes spent, as counted at the oracle boundary.
    pub queries: usize,
    pub elapsed: Duration,
    pub goal_met: bool,
    pub predicted_before: Prediction,
    pub predicted_after: Prediction,
    /// Every remove/restore/restart, in order, replayable.
    pub log: Vec<AttackEvent>,
}

/// Counting wrapper all attack queries are routed through, also the budget
/// clock. Budgets are checked before each unit of work, so expiry overshoot
/// is bounded by a single forward pass.
pub(crate) struct Session<O: AttackOracle> {
    oracle: O,
    queries: Cell<usize>,
    started: Instant,
    time_budget: Option<Duration>,
    query_budget: Option<usize>,
}

impl<O: AttackOracle> Session<O> {
    pub fn new(oracle: O, time_budget: Option<Duration>, query_budget: Option<usize>) -> Self {
        Session {
            oracle,
            queries: Cell::new(0),
            started: Instant::now(),
            time_budget,
            query_budget,
        }
    }

    pub fn expired(&self) -> bool {
        if let Some(t) = self.time_budget {
            if self.started.elapsed() >= t {
                return true;
            }
        }
        if let Some(q) = self.query_budget {
            if self.queries.get() >= q {
                return true;
            }
        }
        false
    }

    pub fn queries(&self) -> usize {
        self.queries.get()
    }

    pub fn elapsed(&self) -> Duration {
        self.started.elapsed()
    }

    pub fn trace(&self, input: &ModelInput) -> Result<ForwardTrace, Error> {
        self.queries.set(self.queries.get() + 1);
        self.oracle.forward_trace(input)
    }

    /// Logits plus the derived prediction, one query.
    pub fn judge(&self, input: &ModelInput) -> Result<Judged, Error> {
        let trace = self.trace(input)?;
        Ok(Judged::from_logits(trace.logits))
    }
}

impl<O: AttackOracle> LogitSource for Session<O> {
    fn query_logits(&self, input: &ModelInput) -> Result<Vec<f32>, iso3d_salience::Error> {
        self.queries.set(self.queries.get() + 1);
        let trace = self
            .oracle
            .forward_trace(input)
            .map_err(|e| iso3d_salience::Error::BadInput(e.to_string()))?;
        Ok(trace.logits)
    }
}

/// One classification outcome, kept around as probabilities.
#[derive(Debug, Clone)]
pub(crate) struct Judged {
    pub logits: Vec<f32>,
    pub probs: Vec<f32>,
    pub class: usize,
}

impl Judged {
    pub fn from_logits(logits: Vec<f32>) -> Self {
        let probs = softmax(&logits);
        let class = argmax_lowest(&logits);
        Judged { logits, probs, class }
    }

    pub fn confidence_of(&self, class: usize) -> f32 {
        self.probs[class]
    }

    pub fn prediction(&self) -> Prediction {
        Prediction { class: self.class, confidence: self.probs[self.class] }
    }
}
