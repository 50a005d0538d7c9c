//! Critical-set cardinality survey over a sampled test set.

use std::collections::BTreeMap;

use iso3d_nn::{dataset_inputs, Model};
use iso3d_salience::critical_set_whitebox;
use iso3d_shapes::Dataset;
use rayon::prelude::*;

use crate::eval::sample_indices;
use crate::Error;

#[derive(Debug, Clone)]
pub struct SurveyRecord {
    pub dataset_index: usize,
    pub cardinality: usize,
    pub element_count: usize,
}

#[derive(Debug, Clone)]
pub struct CardinalitySurvey {
    /// cardinality -> number of inputs with that cardinality.
    pub counts: BTreeMap<usize, usize>,
    pub records: Vec<SurveyRecord>,
    pub mean: f64,
    /// Nearest-rank quartiles of the sorted cardinalities.
    pub q1: usize,
    pub median: usize,
    pub q3: usize,
}

pub fn critical_cardinality_survey(
    model: &Model,
    dataset: &Dataset,
    sample_size: usize,
    seed: u64,
) -> Result<CardinalitySurvey, Error> {
    if sample_size == 0 || sample_size > dataset.test.len() {
        return Err(Error::BadConfig(format!(
            "sample size must be in 1..={}, got {sample_size}",
            dataset.test.len()
        )));
    }
    let indices = sample_indices(dataset.test.len(), sample_size, seed);
    let sampled: Vec<_> = indices.iter().map(|&i| dataset.test[i].clone()).collect();
    let inputs = dataset_inputs(model.spec(), &sampled)?;

    let records: Vec<SurveyRecord> = indices
        .par_iter()
        .zip(&inputs)
        .map(|(&dataset_index, (input, _))| -> Result<SurveyRecord, Error> {
            let trace = model.forward(input)?;
            let cs = critical_set_whitebox(&trace, input)?;
            Ok(SurveyRecord {
                dataset_index,
                cardinality: cs.len(),
                element_count: input.element_count(),
            })
        })
        .collect::<Result<_, _>>()?;

    let mut counts = BTreeMap::new();
    for r in &records {
        *counts.entry(r.cardinality).or_insert(0usize) += 1;
    }
    let mut sorted: Vec<usize> = records.iter().map(|r| r.cardinality).collect();
    sorted.sort_unstable();
    let mean = sorted.iter().sum::<usize>() as f64 / sorted.len() as f64;
    Ok(CardinalitySurvey {
        mean,
        q1: nearest_rank(&sorted, 0.25),
        median: nearest_rank(&sorted, 0.5),
        q3: nearest_rank(&sorted, 0.75),
        counts,
        records,
    })
}

/// Nearest-rank percentile of an ascending-sorted, non-empty slice.
fn nearest_rank(sorted: &[usize], p: f64) -> usize {
    let pos = (p * (sorted.len() - 1) as f64).round() as usize;
    sorted[pos]
}
