//! The accuracy-vs-occlusion protocol: attack a seeded sample of the test
//! set, then report surviving accuracy at fixed occlusion checkpoints.
//!
//! Each input contributes a step function: it counts as correctly classified
//! at checkpoint c exactly when it was correctly classified clean and the
//! attack needed to remove more than c percent of its elements (inputs the
//! attack never flipped count as correct everywhere). Inputs whose attack
//! errored are excluded from the denominator but reported, never dropped
//! silently.

use std::time::Duration;

use iso3d_attack::{iso, random_occlusion, AttackMode, Goal};
use iso3d_nn::{dataset_inputs, Model, ModelInput};
use iso3d_shapes::{mix_seed, Dataset};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Method, RunConfig};
use crate::Error;

#[derive(Debug, Clone)]
pub struct RobustnessCurve {
    pub model: String,
    pub dataset: String,
    pub method: Method,
    pub checkpoints: Vec<CheckpointRow>,
    pub per_input: Vec<PerInput>,
}

/// One curve row. `mean_queries` and `mean_seconds` average over the
/// initially-correct, non-errored inputs and so repeat across rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRow {
    pub checkpoint_pct: u8,
    pub accuracy: f64,
    pub mean_queries: f64,
    pub mean_seconds: f64,
    pub n_evaluated: usize,
    pub n_errors: usize,
}

#[derive(Debug, Clone)]
pub struct PerInput {
    /// Index into the dataset's test split; doubles as the attack seed salt.
    pub dataset_index: usize,
    pub label: usize,
    pub clean_class: usize,
    pub clean_confidence: f32,
    pub clean_correct: bool,
    pub element_count: usize,
    /// Elements removed when the attack met its goal.
    pub occlusion_size: Option<usize>,
    /// occlusion_size over element_count; None when the goal was never met.
    pub flip_fraction: Option<f64>,
    pub queries: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

impl PerInput {
    /// The step-function semantics: still correct at `pct` percent occlusion?
    pub fn correct_at(&self, pct: u8) -> bool {
        self.clean_correct
            && self
                .flip_fraction
                .is_none_or(|f| f * 100.0 > f64::from(pct))
    }
}

/// Seeded uniform sample without replacement, reported ascending so that
/// aggregation order never depends on scheduling.
pub fn sample_indices(population: usize, sample_size: usize, seed: u64) -> Vec<usize> {
    let mut all: Vec<usize> = (0..population).collect();
    if sample_size >= population {
        return all;
    }
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(&[seed, 0x5a3d])));
    all.truncate(sample_size);
    all.sort_unstable();
    all
}

pub fn evaluate(model: &Model, dataset: &Dataset, cfg: &RunConfig) -> Result<RobustnessCurve, Error> {
    cfg.validate()?;
    if cfg.sample_size > dataset.test.len() {
        return Err(Error::BadConfig(format!(
            "sample size {} exceeds the test split ({} examples)",
            cfg.sample_size,
            dataset.test.len()
        )));
    }
    if model.classes().len() != dataset.classes.len() {
        return Err(Error::BadConfig(format!(
            "model has {} classes, dataset has {}",
            model.classes().len(),
            dataset.classes.len()
        )));
    }
    if let iso3d_attack::GoalKind::Targeted(t) = cfg.goal {
        if t >= model.classes().len() {
            return Err(Error::BadConfig(format!("target class {t} out of range")));
        }
    }

    let indices = sample_indices(dataset.test.len(), cfg.sample_size, cfg.seed);
    let sampled: Vec<_> = indices.iter().map(|&i| dataset.test[i].clone()).collect();
    let inputs = dataset_inputs(model.spec(), &sampled)?;

    let jobs: Vec<(usize, &ModelInput, usize)> = indices
        .iter()
        .zip(&inputs)
        .map(|(&idx, (input, label))| (idx, input, *label))
        .collect();

    let per_input: Vec<PerInput> = jobs
        .par_iter()
        .map(|&(dataset_index, input, label)| {
            evaluate_one(model, input, label, dataset_index, cfg)
        })
        .collect();

    let checkpoints = aggregate(&cfg.checkpoints, &per_input);
    Ok(RobustnessCurve {
        model: cfg.model_label(),
        dataset: cfg.dataset_label(),
        method: cfg.method,
        checkpoints,
        per_input,
    })
}

fn evaluate_one(
    model: &Model,
    input: &ModelInput,
    label: usize,
    dataset_index: usize,
    cfg: &RunConfig,
) -> PerInput {
    let mut record = PerInput {
        dataset_index,
        label,
        clean_class: 0,
        clean_confidence: 0.0,
        clean_correct: false,
        element_count: input.element_count(),
        occlusion_size: None,
        flip_fraction: None,
        queries: 0,
        seconds: 0.0,
        error: None,
    };
    let clean = match model.predict(input) {
        Ok(p) => p,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    record.clean_class = clean.class;
    record.clean_confidence = clean.confidence;
    record.clean_correct = clean.class == label;

    let seed = mix_seed(&[cfg.seed, dataset_index as u64]);
    let outcome = match cfg.method {
        Method::Random => random_occlusion(model, input, seed),
        Method::Iso | Method::IsoBlackbox => {
            let goal = Goal {
                kind: cfg.goal,
                time_budget: cfg.time_budget_secs.map(Duration::from_secs_f64),
                query_budget: cfg.query_budget,
                exhaustive: false,
            };
            let mode = if cfg.method == Method::Iso {
                AttackMode::WhiteBox
            } else {
                AttackMode::BlackBox
            };
            iso(model, input, &goal, mode, seed)
        }
    };
    match outcome {
        Ok(res) => {
            record.queries = res.queries;
            record.seconds = res.elapsed.as_secs_f64();
            if res.goal_met {
                record.occlusion_size = Some(res.occlusion_size);
                record.flip_fraction =
                    Some(res.occlusion_size as f64 / record.element_count as f64);
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

fn aggregate(checkpoints: &[u8], per_input: &[PerInput]) -> Vec<CheckpointRow> {
    let n_errors = per_input.iter().filter(|p| p.error.is_some()).count();
    let n_evaluated = per_input.len() - n_errors;
    // timing and query means only reflect inputs the model got right clean
    let pool: Vec<&PerInput> = per_input
        .iter()
        .filter(|p| p.error.is_none() && p.clean_correct)
        .collect();
    let (mean_queries, mean_seconds) = if pool.is_empty() {
        (0.0, 0.0)
    } else {
        let q: f64 = pool.iter().map(|p| p.queries as f64).sum();
        let s: f64 = pool.iter().map(|p| p.seconds).sum();
        (q / pool.len() as f64, s / pool.len() as f64)
    };
    checkpoints
        .iter()
        .map(|&pct| {
            let correct = per_input
                .iter()
                .filter(|p| p.error.is_none() && p.correct_at(pct))
                .count();
            let accuracy = if n_evaluated == 0 {
                0.0
            } else {
                correct as f64 / n_evaluated as f64
            };
            CheckpointRow {
                checkpoint_pct: pct,
                accuracy,
                mean_queries,
                mean_seconds,
                n_evaluated,
                n_errors,
            }
        })
        .collect()
}
