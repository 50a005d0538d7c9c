//! What an attack is trying to achieve, and for how long it may try.

use std::time::Duration;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoalKind {
    /// Change the prediction away from the clean one.
    Untargeted,
    /// Make the prediction equal this class.
    Targeted(usize),
    /// Drop the clean class's confidence by more than this much.
    ConfidenceDrop(f32),
}

/// Attack objective plus termination condition. Non-exhaustive goals must
/// carry a time or query budget (or both): without one, an unreachable goal
/// would loop forever through restart permutations. Exhaustive runs terminate
/// by exhausting the permutation space instead and must not have a wall-clock
/// limit, whose expiry would void the certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goal {
    pub kind: GoalKind,
    pub time_budget: Option<Duration>,
    pub query_budget: Option<usize>,
    pub exhaustive: bool,
}

impl Goal {
    pub fn untargeted(time_budget: Duration) -> Self {
        Goal {
            kind: GoalKind::Untargeted,
            time_budget: Some(time_budget),
            query_budget: None,
            exhaustive: false,
        }
    }

    pub fn targeted(class: usize, time_budget: Duration) -> Self {
        Goal {
            kind: GoalKind::Targeted(class),
            time_budget: Some(time_budget),
            query_budget: None,
            exhaustive: false,
        }
    }

    pub fn confidence_drop(k: f32, time_budget: Duration) -> Self {
        Goal {
            kind: GoalKind::ConfidenceDrop(k),
            time_budget: Some(time_budget),
            query_budget: None,
            exhaustive: false,
        }
    }

    pub fn with_query_budget(mut self, queries: usize) -> Self {
        self.query_budget = Some(queries);
        self
    }

    /// Goal for the exhaustive verifier: no wall clock, queries optional.
    pub fn exhaustive(kind: GoalKind) -> Self {
        Goal { kind, time_budget: None, query_budget: None, exhaustive: true }
    }

    pub(crate) fn validate(&self) -> Result<(), Error> {
        if let GoalKind::ConfidenceDrop(k) = self.kind {
            if !(k > 0.0 && k < 1.0) {
                return Err(Error::BadGoal(format!(
                    "confidence drop must lie in (0, 1), got {k}"
                )));
            }
        }
        if let Some(t) = self.time_budget {
            if t.is_zero() {
                return Err(Error::BadGoal("time budget must be positive".into()));
            }
        }
        if self.query_budget == Some(0) {
            return Err(Error::BadGoal("query budget must be positive".into()));
        }
        if self.exhaustive {
            if self.time_budget.is_some() {
                return Err(Error::BadGoal(
                    "exhaustive mode cannot have a wall-clock limit".into(),
                ));
            }
        } else if self.time_budget.is_none() && self.query_budget.is_none() {
            return Err(Error::BadGoal(
                "non-exhaustive attacks need a time or query budget".into(),
            ));
        }
        Ok(())
    }

    /// Does `probs` satisfy the goal, given the clean prediction `base_class`
    /// with confidence `base_confidence`?
    pub fn satisfied(
        &self,
        probs: &[f32],
        predicted: usize,
        base_class: usize,
        base_confidence: f32,
    ) -> bool {
        match self.kind {
            GoalKind::Untargeted => predicted != base_class,
            GoalKind::Targeted(t) => predicted == t,
            GoalKind::ConfidenceDrop(k) => base_confidence - probs[base_class] > k,
        }
    }
}
