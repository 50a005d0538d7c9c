//! Model persistence.
//!
//! Weights go into a little-endian binary file: magic "W3DR", u32 version,
//! u32 tensor count, then per tensor a u16-length UTF-8 name, u8 rank,
//! rank u32 dims, and the row-major f32 payload. Architecture and class
//! names go into a plain-text sidecar at `<path>.spec` so the binary stays
//! self-describing only about shapes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::model::Model;
use crate::spec::{ConvStage, ModelSpec};
use crate::tensor::Tensor;
use crate::weights::Weights;
use crate::Error;

const MAGIC: &[u8; 4] = b"W3DR";
const VERSION: u32 = 1;

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".spec");
    PathBuf::from(s)
}

fn fmt_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::WeightsFormat {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

pub fn save_model(model: &Model, path: &Path) -> Result<(), Error> {
    let io_err = |e| Error::Io { path: path.display().to_string(), source: e };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);

    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    let entries = model.weights().entries();
    w.write_all(&(entries.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (name, tensor) in entries {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u16).to_le_bytes()).map_err(io_err)?;
        w.write_all(bytes).map_err(io_err)?;
        w.write_all(&[tensor.shape().len() as u8]).map_err(io_err)?;
        for &d in tensor.shape() {
            w.write_all(&(d as u32).to_le_bytes()).map_err(io_err)?;
        }
        for v in tensor.data() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;

    let side = sidecar_path(path);
    let side_err = |e| Error::Io { path: side.display().to_string(), source: e };
    let mut text = String::new();
    match model.spec() {
        ModelSpec::PointSet { point_widths, fcn_hidden, .. } => {
            text.push_str("family: point-set\n");
            text.push_str(&format!("point_widths: {}\n", join(point_widths)));
            text.push_str(&format!("fcn_hidden: {}\n", join(fcn_hidden)));
        }
        ModelSpec::Volumetric { resolution, stages, fcn_hidden, .. } => {
            text.push_str("family: volumetric\n");
            text.push_str(&format!("resolution: {resolution}\n"));
            for s in stages {
                text.push_str(&format!("stage: {} {} {}\n", s.filters, s.kernel, s.pool));
            }
            text.push_str(&format!("fcn_hidden: {}\n", join(fcn_hidden)));
        }
    }
    for c in model.classes() {
        text.push_str(&format!("class: {c}\n"));
    }
    std::fs::write(&side, text).map_err(side_err)
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn load_model(path: &Path) -> Result<Model, Error> {
    let (spec, classes) = load_sidecar(&sidecar_path(path))?;
    let weights = load_weights(path)?;
    Model::new(spec, weights, classes)
}

fn load_weights(path: &Path) -> Result<Weights, Error> {
    let io_err = |e| Error::Io { path: path.display().to_string(), source: e };
    let file = File::open(path).map_err(io_err)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(fmt_err(path, format!("magic {magic:02x?} is not W3DR")));
    }
    let version = read_u32(&mut r, path)?;
    if version != VERSION {
        return Err(fmt_err(path, format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r, path)? as usize;
    if count > 10_000 {
        return Err(fmt_err(path, format!("implausible tensor count {count}")));
    }
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut len_buf = [0u8; 2];
        r.read_exact(&mut len_buf).map_err(io_err)?;
        let name_len = u16::from_le_bytes(len_buf) as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf).map_err(io_err)?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| fmt_err(path, "tensor name is not UTF-8"))?;
        let mut rank_buf = [0u8; 1];
        r.read_exact(&mut rank_buf).map_err(io_err)?;
        let mut shape = Vec::with_capacity(rank_buf[0] as usize);
        let mut numel = 1usize;
        for _ in 0..rank_buf[0] {
            let d = read_u32(&mut r, path)? as usize;
            numel = numel.saturating_mul(d);
            shape.push(d);
        }
        if numel > 100_000_000 {
            return Err(fmt_err(path, format!("tensor {name} too large: {shape:?}")));
        }
        let mut data = vec![0.0f32; numel];
        let mut buf = [0u8; 4];
        for v in &mut data {
            r.read_exact(&mut buf).map_err(io_err)?;
            *v = f32::from_le_bytes(buf);
        }
        entries.push((name, Tensor::from_data(&shape, data)));
    }
    Ok(Weights::from_entries(entries))
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32, Error> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    Ok(u32::from_le_bytes(buf))
}

fn load_sidecar(path: &Path) -> Result<(ModelSpec, Vec<String>), Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    let mut family: Option<String> = None;
    let mut resolution: Option<usize> = None;
    let mut stages: Vec<ConvStage> = Vec::new();
    let mut point_widths: Option<Vec<usize>> = None;
    let mut fcn_hidden: Option<Vec<usize>> = None;
    let mut classes: Vec<String> = Vec::new();

    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| fmt_err(path, format!("line {}: expected key: value", no + 1)))?;
        let value = value.trim();
        let ints = |v: &str| -> Result<Vec<usize>, Error> {
            v.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| fmt_err(path, format!("line {}: bad number {t:?}", no + 1))))
                .collect()
        };
        match key.trim() {
            "family" => family = Some(value.to_string()),
            "resolution" => {
                resolution = Some(ints(value)?.first().copied().ok_or_else(|| {
                    fmt_err(path, format!("line {}: resolution needs a value", no + 1))
                })?)
            }
            "stage" => {
                let v = ints(value)?;
                if v.len() != 3 {
                    return Err(fmt_err(path, format!("line {}: stage needs filters kernel pool", no + 1)));
                }
                stages.push(ConvStage { filters: v[0], kernel: v[1], pool: v[2] });
            }
            "point_widths" => point_widths = Some(ints(value)?),
            "fcn_hidden" => fcn_hidden = Some(ints(value)?),
            "class" => classes.push(value.to_string()),
            other => return Err(fmt_err(path, format!("line {}: unknown key {other:?}", no + 1))),
        }
    }

    if classes.is_empty() {
        return Err(fmt_err(path, "no class names"));
    }
    let fcn_hidden = fcn_hidden.unwrap_or_default();
    let spec = match family.as_deref() {
        Some("point-set") => ModelSpec::PointSet {
            point_widths: point_widths.ok_or_else(|| fmt_err(path, "point-set needs point_widths"))?,
            fcn_hidden,
            classes: classes.len(),
        },
        Some("volumetric") => ModelSpec::Volumetric {
            resolution: resolution.ok_or_else(|| fmt_err(path, "volumetric needs resolution"))?,
            stages,
            fcn_hidden,
            classes: classes.len(),
        },
        Some(other) => return Err(fmt_err(path, format!("unknown family {other:?}"))),
        None => return Err(fmt_err(path, "missing family")),
    };
    Ok((spec, classes))
}
