//! Paired comparison of two curves measured on the same seeded sample.

use std::io::{self, Write};

use crate::eval::RobustnessCurve;
use crate::Error;

#[derive(Debug, Clone)]
pub struct PairedInput {
    pub dataset_index: usize,
    pub fraction_a: Option<f64>,
    pub fraction_b: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PairedReport {
    pub method_a: String,
    pub method_b: String,
    pub checkpoints: Vec<u8>,
    pub accuracy_a: Vec<f64>,
    pub accuracy_b: Vec<f64>,
    /// accuracy_a - accuracy_b, per checkpoint.
    pub deltas: Vec<f64>,
    /// Mean of the deltas across checkpoints.
    pub mean_gap: f64,
    pub paired: Vec<PairedInput>,
}

/// Both curves must come from the same model, dataset, checkpoints, and
/// sample; anything else would compare apples with oranges.
pub fn compare(a: &RobustnessCurve, b: &RobustnessCurve) -> Result<PairedReport, Error> {
    if a.model != b.model || a.dataset != b.dataset {
        return Err(Error::NotComparable(format!(
            "({}, {}) vs ({}, {})",
            a.model, a.dataset, b.model, b.dataset
        )));
    }
    let cps: Vec<u8> = a.checkpoints.iter().map(|r| r.checkpoint_pct).collect();
    let cps_b: Vec<u8> = b.checkpoints.iter().map(|r| r.checkpoint_pct).collect();
    if cps != cps_b {
        return Err(Error::NotComparable("different checkpoint lists".into()));
    }
    let idx_a: Vec<usize> = a.per_input.iter().map(|p| p.dataset_index).collect();
    let idx_b: Vec<usize> = b.per_input.iter().map(|p| p.dataset_index).collect();
    if idx_a != idx_b {
        return Err(Error::NotComparable(
            "curves were measured on different samples".into(),
        ));
    }

    let accuracy_a: Vec<f64> = a.checkpoints.iter().map(|r| r.accuracy).collect();
    let accuracy_b: Vec<f64> = b.checkpoints.iter().map(|r| r.accuracy).collect();
    let deltas: Vec<f64> = accuracy_a
        .iter()
        .zip(&accuracy_b)
        .map(|(x, y)| x - y)
        .collect();
    let mean_gap = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let paired = a
        .per_input
        .iter()
        .zip(&b.per_input)
        .map(|(pa, pb)| PairedInput {
            dataset_index: pa.dataset_index,
            fraction_a: pa.flip_fraction,
            fraction_b: pb.flip_fraction,
        })
        .collect();
    Ok(PairedReport {
        method_a: a.method.name().to_string(),
        method_b: b.method.name().to_string(),
        checkpoints: cps,
        accuracy_a,
        accuracy_b,
        deltas,
        mean_gap,
        paired,
    })
}

pub fn write_report_csv<W: Write>(mut w: W, report: &PairedReport) -> io::Result<()> {
    writeln!(
        w,
        "checkpoint_pct,accuracy_{},accuracy_{},delta",
        report.method_a, report.method_b
    )?;
    for (i, pct) in report.checkpoints.iter().enumerate() {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6}",
            pct, report.accuracy_a[i], report.accuracy_b[i], report.deltas[i]
        )?;
    }
    Ok(())
}
