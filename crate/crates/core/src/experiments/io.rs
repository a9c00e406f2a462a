//! Curve files and trajectory streams.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::curve::{KnotCurve, Vec3};
use crate::dynamics::{Frame, Phase, SimParams};

pub const CURVE_FORMAT: &str = "knotcurve/1";
pub const TRAJECTORY_FORMAT: &str = "knottraj/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    format: String,
    #[serde(default)]
    #[allow(dead_code)]
    length_normalized: bool,
    points: Vec<[f64; 3]>,
}

fn malformed(path: &Path, e: &serde_json::Error) -> ExperimentError {
    ExperimentError::Malformed { path: path.to_path_buf(), line: e.line(), column: e.column(), message: e.to_string() }
}

fn push_number(out: &mut String, x: f64) {
    // 17 significant digits; JSON has no exponent-free requirement
    write!(out, "{x:.16e}").unwrap();
}

/// Curve file text: one bead per line, 17 significant digits.
pub fn curve_to_string(c: &KnotCurve) -> String {
    let normalized = (c.total_length() - 1.0).abs() <= 1e-12;
    let mut out = format!("{{\"format\":\"{CURVE_FORMAT}\",\"length_normalized\":{normalized},\"points\":[\n");
    for (k, p) in c.points().iter().enumerate() {
        out.push('[');
        for (i, x) in p.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_number(&mut out, *x);
        }
        out.push(']');
        out.push_str(if k + 1 < c.len() { ",\n" } else { "\n" });
    }
    out.push_str("]}\n");
    out
}

pub fn save_curve(c: &KnotCurve, path: &Path) -> Result<(), ExperimentError> {
    std::fs::write(path, curve_to_string(c)).map_err(|e| ExperimentError::io(path, e))
}

/// Parses curve file text; `path` only labels errors.
pub fn parse_curve(text: &str, path: &Path) -> Result<KnotCurve, ExperimentError> {
    let file: CurveFile = serde_json::from_str(text).map_err(|e| malformed(path, &e))?;
    if file.format != CURVE_FORMAT {
        return Err(ExperimentError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: format!("unsupported format {:?}, expected {CURVE_FORMAT:?}", file.format),
        });
    }
    let pts = file.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
    KnotCurve::new(pts).map_err(|e| ExperimentError::Malformed {
        path: path.to_path_buf(),
        line: 1,
        column: 1,
        message: e.to_string(),
    })
}

pub fn load_curve(path: &Path) -> Result<KnotCurve, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    parse_curve(&text, path)
}

/// First line of a trajectory file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub format: String,
    pub params: SimParams,
    pub schedule: Vec<Phase>,
}

impl TrajectoryHeader {
    pub fn new(params: SimParams, schedule: Vec<Phase>) -> Self {
        Self { format: TRAJECTORY_FORMAT.into(), params, schedule }
    }
}

/// Streams a header and then one frame per line.
pub struct TrajectoryWriter {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl TrajectoryWriter {
    pub fn create(path: &Path, header: &TrajectoryHeader) -> Result<Self, ExperimentError> {
        let file = File::create(path).map_err(|e| ExperimentError::io(path, e))?;
        let mut w = Self { out: BufWriter::new(file), path: path.to_path_buf() };
        w.line(header)?;
        Ok(w)
    }

    fn line<T: Serialize>(&mut self, value: &T) -> Result<(), ExperimentError> {
        serde_json::to_writer(&mut self.out, value).map_err(|e| ExperimentError::io(&self.path, e.into()))?;
        self.out.write_all(b"\n").map_err(|e| ExperimentError::io(&self.path, e))
    }

    pub fn frame(&mut self, f: &Frame) -> Result<(), ExperimentError> {
        self.line(f)
    }

    pub fn finish(mut self) -> Result<(), ExperimentError> {
        self.out.flush().map_err(|e| ExperimentError::io(&self.path, e))
    }
}

/// Reads a whole trajectory file.
pub fn read_trajectory(path: &Path) -> Result<(TrajectoryHeader, Vec<Frame>), ExperimentError> {
    let file = File::open(path).map_err(|e| ExperimentError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let at = |line: usize, e: serde_json::Error| ExperimentError::Malformed {
        path: path.to_path_buf(),
        line,
        column: e.column(),
        message: e.to_string(),
    };
    let first = lines
        .next()
        .ok_or_else(|| ExperimentError::Malformed { path: path.to_path_buf(), line: 1, column: 1, message: "empty file".into() })?
        .map_err(|e| ExperimentError::io(path, e))?;
    let header: TrajectoryHeader = serde_json::from_str(&first).map_err(|e| at(1, e))?;
    if header.format != TRAJECTORY_FORMAT {
        return Err(ExperimentError::Malformed {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: format!("unsupported format {:?}, expected {TRAJECTORY_FORMAT:?}", header.format),
        });
    }
    let mut frames = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| ExperimentError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        frames.push(serde_json::from_str(&line).map_err(|e| at(k + 2, e))?);
    }
    Ok((header, frames))
}

/// Bead positions of a frame as a curve.
pub fn frame_curve(f: &Frame) -> Result<KnotCurve, ExperimentError> {
    Ok(KnotCurve::new(f.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect())?)
}
