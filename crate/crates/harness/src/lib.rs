//! Batch robustness evaluation: run occlusion attacks over a sampled test
//! set, aggregate accuracy against occlusion checkpoints, and emit the
//! resulting curves, paired comparisons, and critical-set surveys as CSV or
//! text tables. The `iso3d` binary drives everything from the command line.

mod compare;
mod config;
mod emit;
mod eval;
mod manifest;
mod survey;

pub use compare::{compare, write_report_csv, PairedInput, PairedReport};
pub use config::{
    default_time_budget_secs, parse_checkpoints, parse_goal, Method, RunConfig,
    DEFAULT_CHECKPOINTS, DEFAULT_SAMPLE_SIZE,
};
pub use emit::{
    curve_table_text, drop_csv_column, parse_curve_csv, write_curve_csv, write_histogram_csv,
    write_inputs_csv, CurveRecord,
};
pub use eval::{evaluate, sample_indices, CheckpointRow, PerInput, RobustnessCurve};
pub use manifest::write_manifest;
pub use survey::{critical_cardinality_survey, CardinalitySurvey, SurveyRecord};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("curves are not comparable: {0}")]
    NotComparable(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Shapes(#[from] iso3d_shapes::Error),
    #[error(transparent)]
    Nn(#[from] iso3d_nn::Error),
    #[error(transparent)]
    Salience(#[from] iso3d_salience::Error),
    #[error(transparent)]
    Attack(#[from] iso3d_attack::Error),
}
