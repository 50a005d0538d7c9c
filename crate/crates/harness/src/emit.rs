//! CSV and text-table emission. Column layouts are part of the tool's
//! contract: downstream plotting reads these files, so they only change
//! deliberately.

use std::io::{self, Write};

use crate::eval::RobustnessCurve;
use crate::survey::CardinalitySurvey;
use crate::Error;

pub const CURVE_HEADER: &str =
    "model,dataset,method,checkpoint_pct,accuracy,mean_queries,mean_seconds,n_evaluated,n_errors";

pub const INPUTS_HEADER: &str = "dataset_index,label,clean_class,clean_confidence,clean_correct,\
                                 element_count,occlusion_size,flip_fraction,queries,seconds,error";

/// One curve row per checkpoint. `mean_seconds` is the only wall-clock
/// column; everything else is reproducible byte for byte from the config.
pub fn write_curve_csv<W: Write>(mut w: W, curve: &RobustnessCurve) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for row in &curve.checkpoints {
        writeln!(
            w,
            "{},{},{},{},{:.6},{:.3},{:.6},{},{}",
            curve.model,
            curve.dataset,
            curve.method.name(),
            row.checkpoint_pct,
            row.accuracy,
            row.mean_queries,
            row.mean_seconds,
            row.n_evaluated,
            row.n_errors,
        )?;
    }
    Ok(())
}

/// Per-input records backing the curve; `seconds` is wall clock.
pub fn write_inputs_csv<W: Write>(mut w: W, curve: &RobustnessCurve) -> io::Result<()> {
    writeln!(w, "{}", INPUTS_HEADER.replace(' ', ""))?;
    for p in &curve.per_input {
        let occ = p.occlusion_size.map(|v| v.to_string()).unwrap_or_default();
        let frac = p.flip_fraction.map(|v| format!("{v:.6}")).unwrap_or_default();
        // error text must not break the record structure
        let err = p
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n'], ";");
        writeln!(
            w,
            "{},{},{},{:.6},{},{},{},{},{},{:.6},{}",
            p.dataset_index,
            p.label,
            p.clean_class,
            p.clean_confidence,
            p.clean_correct,
            p.element_count,
            occ,
            frac,
            p.queries,
            p.seconds,
            err,
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub model: String,
    pub dataset: String,
    pub method: String,
    pub checkpoint_pct: u8,
    pub accuracy: f64,
    pub mean_queries: f64,
    pub mean_seconds: f64,
    pub n_evaluated: usize,
    pub n_errors: usize,
}

pub fn parse_curve_csv(text: &str) -> Result<Vec<CurveRecord>, Error> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CURVE_HEADER => {}
        other => {
            return Err(Error::BadConfig(format!(
                "not a curve CSV; header was {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::BadConfig(format!(
                "curve line {}: expected 9 fields, got {}",
                lineno + 2,
                f.len()
            )));
        }
        let parse_err = |what: &str| Error::BadConfig(format!("curve line {}: bad {what}", lineno + 2));
        out.push(CurveRecord {
            model: f[0].to_string(),
            dataset: f[1].to_string(),
            method: f[2].to_string(),
            checkpoint_pct: f[3].parse().map_err(|_| parse_err("checkpoint"))?,
            accuracy: f[4].parse().map_err(|_| parse_err("accuracy"))?,
            mean_queries: f[5].parse().map_err(|_| parse_err("mean_queries"))?,
            mean_seconds: f[6].parse().map_err(|_| parse_err("mean_seconds"))?,
            n_evaluated: f[7].parse().map_err(|_| parse_err("n_evaluated"))?,
            n_errors: f[8].parse().map_err(|_| parse_err("n_errors"))?,
        });
    }
    Ok(out)
}

/// Drops one named column from simple (unquoted) CSV text. Used to compare
/// outputs modulo their wall-clock columns.
pub fn drop_csv_column(text: &str, column: &str) -> String {
    let mut lines = text.lines();
    let header = match lines.next() {
        Some(h) => h,
        None => return String::new(),
    };
    let names: Vec<&str> = header.split(',').collect();
    let drop = names.iter().position(|&n| n == column);
    let keep = |line: &str| -> String {
        let fields: Vec<&str> = line.split(',').collect();
        fields
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != drop)
            .map(|(_, f)| *f)
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = String::new();
    out.push_str(&keep(header));
    out.push('\n');
    for line in lines {
        out.push_str(&keep(line));
        out.push('\n');
    }
    out
}

/// Table layout mirroring the usual robustness-table presentation: one row
/// per curve, one accuracy column per checkpoint.
pub fn curve_table_text(curves: &[RobustnessCurve]) -> Result<String, Error> {
    if curves.is_empty() {
        return Ok(String::new());
    }
    let pcts: Vec<u8> = curves[0].checkpoints.iter().map(|r| r.checkpoint_pct).collect();
    for c in curves {
        let theirs: Vec<u8> = c.checkpoints.iter().map(|r| r.checkpoint_pct).collect();
        if theirs != pcts {
            return Err(Error::NotComparable(
                "curves in one table must share checkpoints".into(),
            ));
        }
    }
    let wm = curves.iter().map(|c| c.model.len()).max().unwrap().max("model".len());
    let wd = curves.iter().map(|c| c.dataset.len()).max().unwrap().max("dataset".len());
    let wa = curves
        .iter()
        .map(|c| c.method.name().len())
        .max()
        .unwrap()
        .max("method".len());
    let mut out = String::new();
    out.push_str(&format!("{:<wm$}  {:<wd$}  {:<wa$}", "model", "dataset", "method"));
    for p in &pcts {
        out.push_str(&format!("  {:>7}", format!("{p}%")));
    }
    out.push('\n');
    for c in curves {
        out.push_str(&format!(
            "{:<wm$}  {:<wd$}  {:<wa$}",
            c.model,
            c.dataset,
            c.method.name()
        ));
        for row in &c.checkpoints {
            out.push_str(&format!("  {:>7.3}", row.accuracy));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Histogram records, one per distinct cardinality, ascending.
pub fn write_histogram_csv<W: Write>(mut w: W, survey: &CardinalitySurvey) -> io::Result<()> {
    writeln!(w, "cardinality,count")?;
    for (card, count) in &survey.counts {
        writeln!(w, "{card},{count}")?;
    }
    Ok(())
}
