//! Attack event log: enough to replay and re-verify every decision.

use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackAction {
    Remove,
    Restore,
    Restart,
}

impl AttackAction {
    pub fn name(&self) -> &'static str {
        match self {
            AttackAction::Remove => "remove",
            AttackAction::Restore => "restore",
            AttackAction::Restart => "restart",
        }
    }
}

/// One accepted attack step. Confidences are of the clean predicted class
/// (the quantity the descent gates on), measured just before and just after
/// the action; `predicted_class` is the prediction after it. Restarts carry
/// no element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackEvent {
    pub step: usize,
    pub action: AttackAction,
    pub element_index: Option<usize>,
    pub confidence_before: f32,
    pub confidence_after: f32,
    pub predicted_class: usize,
}

/// Comma-separated log, one event per record.
pub fn write_attack_log<W: Write>(mut w: W, events: &[AttackEvent]) -> io::Result<()> {
    writeln!(
        w,
        "step,action,element_index,confidence_before,confidence_after,predicted_class"
    )?;
    for e in events {
        let element = e.element_index.map(|i| i.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            e.step,
            e.action.name(),
            element,
            e.confidence_before,
            e.confidence_after,
            e.predicted_class
        )?;
    }
    Ok(())
}
