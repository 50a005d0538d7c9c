//! OFF mesh parser.
//!
//! Accepts the common layout variants: the header keyword alone on the
//! first line with counts on the next, or counts trailing the keyword on
//! one line. Comment lines start with '#'. Faces with more than three
//! vertices are fan-triangulated; exactly-degenerate (zero area) triangles
//! are dropped so that area-weighted sampling stays well defined.

use crate::mesh::Mesh;
use crate::Error;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::OffParse {
        line,
        msg: msg.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
        }
    }

    /// Next line that is neither blank nor a comment, with 1-based number.
    fn next_meaningful(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }
}

fn parse_counts(line: usize, tokens: &[&str]) -> Result<(usize, usize), Error> {
    if tokens.len() < 2 {
        return Err(parse_err(line, "expected vertex and face counts"));
    }
    let nv: usize = tokens[0]
        .parse()
        .map_err(|_| parse_err(line, format!("bad vertex count {:?}", tokens[0])))?;
    let nf: usize = tokens[1]
        .parse()
        .map_err(|_| parse_err(line, format!("bad face count {:?}", tokens[1])))?;
    Ok((nv, nf))
}

pub fn parse_off(text: &str) -> Result<Mesh, Error> {
    let mut lines = Lines::new(text);

    let (header_no, header) = lines
        .next_meaningful()
        .ok_or_else(|| parse_err(1, "empty input"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("OFF") {
        return Err(parse_err(header_no, "missing OFF header"));
    }
    let rest: Vec<&str> = tokens.collect();
    let (nv, nf) = if rest.is_empty() {
        let (no, line) = lines
            .next_meaningful()
            .ok_or_else(|| parse_err(header_no, "missing count line"))?;
        parse_counts(no, &line.split_whitespace().collect::<Vec<_>>())?
    } else {
        parse_counts(header_no, &rest)?
    };

    let mut vertices = Vec::with_capacity(nv.min(1 << 20));
    for k in 0..nv {
        let (no, line) = lines
            .next_meaningful()
            .ok_or_else(|| parse_err(header_no, format!("expected {nv} vertices, got {k}")))?;
        let mut coords = [0.0f32; 3];
        let mut fields = line.split_whitespace();
        for c in &mut coords {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err(no, "vertex needs 3 coordinates"))?;
            *c = tok
                .parse()
                .map_err(|_| parse_err(no, format!("bad coordinate {tok:?}")))?;
        }
        // extra fields (colors etc) are ignored
        vertices.push(coords);
    }

    let mut mesh = Mesh {
        vertices,
        triangles: Vec::with_capacity(nf),
    };
    for k in 0..nf {
        let (no, line) = lines
            .next_meaningful()
            .ok_or_else(|| parse_err(header_no, format!("expected {nf} faces, got {k}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let arity: usize = fields[0]
            .parse()
            .map_err(|_| parse_err(no, format!("bad face arity {:?}", fields[0])))?;
        if arity < 3 {
            return Err(parse_err(no, format!("face with {arity} vertices")));
        }
        if fields.len() < 1 + arity {
            return Err(parse_err(
                no,
                format!("face promises {arity} indices, line has {}", fields.len() - 1),
            ));
        }
        let mut idx = Vec::with_capacity(arity);
        for tok in &fields[1..=arity] {
            let i: usize = tok
                .parse()
                .map_err(|_| parse_err(no, format!("bad vertex index {tok:?}")))?;
            if i >= mesh.vertices.len() {
                return Err(parse_err(
                    no,
                    format!("vertex index {i} out of range (have {})", mesh.vertices.len()),
                ));
            }
            idx.push(i);
        }
        for w in 1..arity - 1 {
            let tri = [idx[0], idx[w], idx[w + 1]];
            if mesh.triangle_area(tri) > 0.0 {
                mesh.triangles.push(tri);
            }
        }
    }
    // anything after the promised faces is ignored
    Ok(mesh)
}
