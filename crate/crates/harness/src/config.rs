//! Run configuration shared by the evaluation entry points and the CLI.

use std::path::PathBuf;

use iso3d_attack::GoalKind;

use crate::Error;

pub const DEFAULT_SAMPLE_SIZE: usize = 200;
pub const DEFAULT_CHECKPOINTS: [u8; 5] = [0, 25, 50, 75, 95];

/// Per-input wall-clock default: two seconds for few-class models, five for
/// many-class ones, both overridable from the CLI.
pub fn default_time_budget_secs(classes: usize) -> f64 {
    if classes <= 10 {
        2.0
    } else {
        5.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Iterative salience occlusion, white-box critical sets.
    Iso,
    /// The same attack paying for critical sets with logit queries only.
    IsoBlackbox,
    /// Seeded random removal until the prediction flips.
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Iso => "iso",
            Method::IsoBlackbox => "iso-blackbox",
            Method::Random => "random",
        }
    }

    pub fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "iso" => Ok(Method::Iso),
            "iso-blackbox" => Ok(Method::IsoBlackbox),
            "random" => Ok(Method::Random),
            other => Err(Error::BadConfig(format!(
                "unknown method {other:?}; expected iso, iso-blackbox, or random"
            ))),
        }
    }
}

/// Everything a batch evaluation depends on. Identical configs (seed
/// included) produce identical results except for elapsed-time measurements.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: PathBuf,
    pub dataset: PathBuf,
    pub sample_size: usize,
    pub method: Method,
    pub goal: GoalKind,
    /// Percent occlusion levels the curve is reported at.
    pub checkpoints: Vec<u8>,
    pub time_budget_secs: Option<f64>,
    pub query_budget: Option<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.sample_size == 0 {
            return Err(Error::BadConfig("sample size must be positive".into()));
        }
        if self.checkpoints.is_empty() {
            return Err(Error::BadConfig("need at least one checkpoint".into()));
        }
        if !self.checkpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::BadConfig(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        if *self.checkpoints.last().unwrap() > 100 {
            return Err(Error::BadConfig("checkpoints are percentages, max 100".into()));
        }
        if let Some(t) = self.time_budget_secs {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::BadConfig("time budget must be positive".into()));
            }
        }
        if self.query_budget == Some(0) {
            return Err(Error::BadConfig("query budget must be positive".into()));
        }
        if self.method == Method::Random && self.goal != GoalKind::Untargeted {
            return Err(Error::BadConfig(
                "the random baseline only removes until the prediction flips; \
                 use the untargeted goal with it"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Label used in the `model` CSV column: the model file's stem.
    pub fn model_label(&self) -> String {
        path_label(&self.model)
    }

    /// Label used in the `dataset` CSV column: the dataset directory's name.
    pub fn dataset_label(&self) -> String {
        path_label(&self.dataset)
    }
}

fn path_label(p: &std::path::Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

/// Parses `untargeted`, `targeted:<class>`, or `drop:<k>`.
pub fn parse_goal(s: &str) -> Result<GoalKind, Error> {
    if s == "untargeted" {
        return Ok(GoalKind::Untargeted);
    }
    if let Some(rest) = s.strip_prefix("targeted:") {
        let class = rest
            .parse::<usize>()
            .map_err(|_| Error::BadConfig(format!("bad target class in {s:?}")))?;
        return Ok(GoalKind::Targeted(class));
    }
    if let Some(rest) = s.strip_prefix("drop:") {
        let k = rest
            .parse::<f32>()
            .map_err(|_| Error::BadConfig(format!("bad confidence drop in {s:?}")))?;
        return Ok(GoalKind::ConfidenceDrop(k));
    }
    Err(Error::BadConfig(format!(
        "unknown goal {s:?}; expected untargeted, targeted:<class>, or drop:<k>"
    )))
}

/// Parses a comma-separated checkpoint list such as `0,25,50,75,95`.
pub fn parse_checkpoints(s: &str) -> Result<Vec<u8>, Error> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<u8>()
                .map_err(|_| Error::BadConfig(format!("bad checkpoint {part:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> RunConfig {
        RunConfig {
            model: "m.w3dr".into(),
            dataset: "data".into(),
            sample_size: 10,
            method: Method::Iso,
            goal: GoalKind::Untargeted,
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
            time_budget_secs: Some(2.0),
            query_budget: None,
            seed: 0,
            out_dir: "out".into(),
        }
    }

    #[test]
    fn validation_rules() {
        assert!(config().validate().is_ok());
        let mut c = config();
        c.checkpoints = vec![25, 25, 50];
        assert!(c.validate().is_err(), "duplicates");
        c.checkpoints = vec![50, 25];
        assert!(c.validate().is_err(), "unsorted");
        c.checkpoints = vec![0, 101];
        assert!(c.validate().is_err(), "over 100");
        let mut c = config();
        c.method = Method::Random;
        c.goal = GoalKind::Targeted(2);
        assert!(c.validate().is_err(), "random is untargeted only");
        let mut c = config();
        c.sample_size = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn goal_and_checkpoint_parsing() {
        assert_eq!(parse_goal("untargeted").unwrap(), GoalKind::Untargeted);
        assert_eq!(parse_goal("targeted:3").unwrap(), GoalKind::Targeted(3));
        assert!(matches!(parse_goal("drop:0.25").unwrap(), GoalKind::ConfidenceDrop(k) if k == 0.25));
        assert!(parse_goal("sideways").is_err());
        assert_eq!(parse_checkpoints("0,25,50").unwrap(), vec![0, 25, 50]);
        assert!(parse_checkpoints("0,abc").is_err());
    }

    #[test]
    fn budget_defaults_scale_with_class_count() {
        assert_eq!(default_time_budget_secs(5), 2.0);
        assert_eq!(default_time_budget_secs(10), 2.0);
        assert_eq!(default_time_budget_secs(40), 5.0);
    }
}
