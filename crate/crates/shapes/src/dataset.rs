//! Labeled datasets and their on-disk directory layout.
//!
//! A dataset directory holds:
//!   classes            one class name per line, order defines labels
//!   manifest           lines of "<relative-path>\t<class-name>\t<split>"
//!   <split>/NNNNN.pc3d the point cloud files
//!
//! `source` strings are provenance only: round trips keep clouds, labels
//! and class names identical while sources become relative paths.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::cloud::{load_cloud, save_cloud, PointCloud};
use crate::synth::{synth_shape, ShapeKind};
use crate::{mix_seed, Error};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub cloud: PointCloud,
    pub label: usize,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub classes: Vec<String>,
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
}

impl Dataset {
    pub fn validate(&self) -> Result<(), Error> {
        if self.classes.is_empty() {
            return Err(Error::Invalid("dataset has no classes".into()));
        }
        let mut names = HashSet::new();
        for c in &self.classes {
            if c.split_whitespace().count() != 1 {
                return Err(Error::Invalid(format!("class name {c:?} must be one token")));
            }
            if !names.insert(c.as_str()) {
                return Err(Error::Invalid(format!("duplicate class name {c:?}")));
            }
        }
        let mut sources = HashSet::new();
        for (split, examples) in [("train", &self.train), ("test", &self.test)] {
            for e in examples {
                if e.label >= self.classes.len() {
                    return Err(Error::Invalid(format!(
                        "{split} example {:?} has label {} but only {} classes exist",
                        e.source,
                        e.label,
                        self.classes.len()
                    )));
                }
            }
        }
        for e in &self.train {
            sources.insert(e.source.as_str());
        }
        for e in &self.test {
            if sources.contains(e.source.as_str()) {
                return Err(Error::Invalid(format!(
                    "source {:?} appears in both train and test",
                    e.source
                )));
            }
        }
        Ok(())
    }
}

/// Builds the five-class synthetic dataset. Example seeds are derived from
/// (seed, class, split, index) so any single example is reproducible alone.
pub fn synth_dataset(
    per_class_train: usize,
    per_class_test: usize,
    n_points: usize,
    noise_sd: f32,
    seed: u64,
) -> Result<Dataset, Error> {
    let classes: Vec<String> = ShapeKind::ALL.iter().map(|k| k.name().to_string()).collect();
    let mut train = Vec::with_capacity(per_class_train * classes.len());
    let mut test = Vec::with_capacity(per_class_test * classes.len());
    for kind in ShapeKind::ALL {
        let c = kind.label() as u64;
        for i in 0..per_class_train {
            train.push(synth_shape(kind, n_points, noise_sd, mix_seed(&[seed, c, 0, i as u64]))?);
        }
        for i in 0..per_class_test {
            test.push(synth_shape(kind, n_points, noise_sd, mix_seed(&[seed, c, 1, i as u64]))?);
        }
    }
    let ds = Dataset { classes, train, test };
    ds.validate()?;
    Ok(ds)
}

pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<(), Error> {
    ds.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let classes_path = dir.join("classes");
    fs::write(&classes_path, ds.classes.join("\n") + "\n").map_err(|e| Error::io(&classes_path, e))?;

    let mut manifest = String::new();
    for (split, examples) in [("train", &ds.train), ("test", &ds.test)] {
        let split_dir = dir.join(split);
        fs::create_dir_all(&split_dir).map_err(|e| Error::io(&split_dir, e))?;
        for (i, e) in examples.iter().enumerate() {
            let rel = format!("{split}/{i:05}.pc3d");
            save_cloud(&e.cloud, &dir.join(&rel))?;
            manifest.push_str(&format!("{rel}\t{}\t{split}\n", ds.classes[e.label]));
        }
    }
    let manifest_path = dir.join("manifest");
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, Error> {
    let classes_path = dir.join("classes");
    let classes_text = fs::read_to_string(&classes_path).map_err(|e| Error::io(&classes_path, e))?;
    let classes: Vec<String> = classes_text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();

    let manifest_path = dir.join("manifest");
    let manifest = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (no, line) in manifest.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Format {
                what: "dataset manifest",
                msg: format!("line {}: expected 3 tab-separated fields", no + 1),
            });
        }
        let (rel, class, split) = (fields[0], fields[1], fields[2]);
        let label = classes.iter().position(|c| c == class).ok_or_else(|| Error::Format {
            what: "dataset manifest",
            msg: format!("line {}: unknown class {class:?}", no + 1),
        })?;
        let mut path = dir.to_path_buf();
        for part in rel.split('/') {
            path.push(part);
        }
        let example = LabeledExample {
            cloud: load_cloud(&path)?,
            label,
            source: rel.to_string(),
        };
        match split {
            "train" => train.push(example),
            "test" => test.push(example),
            other => {
                return Err(Error::Format {
                    what: "dataset manifest",
                    msg: format!("line {}: unknown split {other:?}", no + 1),
                })
            }
        }
    }
    let ds = Dataset { classes, train, test };
    ds.validate()?;
    Ok(ds)
}
