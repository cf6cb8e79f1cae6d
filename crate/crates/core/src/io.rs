//! CSV persistence for paths and grid solutions, JSON for summaries.
//!
//! Floating-point columns are rendered with 17 significant digits, which
//! round-trips every f64 exactly; re-importing an exported path reproduces
//! its knots bit for bit.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::bvp::{GridSolution, ParabolicSolution};
use crate::path::{Path, PathKind, PathMeta};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a path as CSV with header `t,edge,x,ell`, one row per knot.
pub fn export_path_csv<W: Write>(path: &Path, mut w: W) -> Result<(), IoError> {
    writeln!(w, "t,edge,x,ell")?;
    for k in 0..path.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt(path.times[k]),
            path.edges[k],
            fmt(path.xs[k]),
            fmt(path.ell[k])
        )?;
    }
    Ok(())
}

/// Reads a path written by [`export_path_csv`].
///
/// Knots are restored exactly; the kind is not part of the format, so the
/// result is tagged nonsticky with empty provenance. Rows must satisfy the
/// path invariants (ascending times, nonnegative positions, nondecreasing
/// local time starting at zero).
pub fn import_path_csv<R: BufRead>(reader: R) -> Result<Path, IoError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or(IoError::Format { line: 1, message: "empty file".into() })?
        .map_err(IoError::Io)?;
    if header.trim_end() != "t,edge,x,ell" {
        return Err(IoError::Format { line: 1, message: format!("bad header '{header}'") });
    }
    let mut times = Vec::new();
    let mut edges = Vec::new();
    let mut xs = Vec::new();
    let mut ell = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(IoError::Io)?;
        let trimmed = line.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(IoError::Format {
                line: line_no,
                message: format!("expected 4 columns, got {}", fields.len()),
            });
        }
        let t: f64 = parse_f64(fields[0], line_no)?;
        let edge: u32 = fields[1].parse().map_err(|_| IoError::Format {
            line: line_no,
            message: format!("bad edge index '{}'", fields[1]),
        })?;
        let x: f64 = parse_f64(fields[2], line_no)?;
        let l: f64 = parse_f64(fields[3], line_no)?;
        if !t.is_finite() || !x.is_finite() || !l.is_finite() {
            return Err(IoError::Format { line: line_no, message: "non-finite value".into() });
        }
        if edge == 0 {
            return Err(IoError::Format { line: line_no, message: "edge index is 1-based".into() });
        }
        if let Some(prev) = times.last() {
            if t <= *prev {
                return Err(IoError::Format {
                    line: line_no,
                    message: "times not strictly ascending".into(),
                });
            }
        }
        if x < 0.0 {
            return Err(IoError::Format { line: line_no, message: "negative position".into() });
        }
        match ell.last() {
            None => {
                if l != 0.0 {
                    return Err(IoError::Format {
                        line: line_no,
                        message: "local time must start at zero".into(),
                    });
                }
            }
            Some(prev) => {
                if l < *prev {
                    return Err(IoError::Format {
                        line: line_no,
                        message: "local time decreases".into(),
                    });
                }
                if l > *prev && x != 0.0 {
                    return Err(IoError::Format {
                        line: line_no,
                        message: "local time grows off the vertex".into(),
                    });
                }
            }
        }
        times.push(t);
        edges.push(edge);
        xs.push(x);
        ell.push(l);
    }
    if times.is_empty() {
        return Err(IoError::Format { line: 2, message: "no knots".into() });
    }
    Ok(Path {
        times,
        edges,
        xs,
        ell,
        kind: PathKind::Nonsticky,
        eta: 0.0,
        base_times: None,
        meta: PathMeta::default(),
    })
}

fn parse_f64(field: &str, line: usize) -> Result<f64, IoError> {
    field
        .parse()
        .map_err(|_| IoError::Format { line, message: format!("bad number '{field}'") })
}

/// Writes an elliptic grid solution as `edge,x,u` rows.
pub fn export_grid_csv<W: Write>(sol: &GridSolution, mut w: W) -> Result<(), IoError> {
    writeln!(w, "edge,x,u")?;
    for (i, edge_values) in sol.values.iter().enumerate() {
        for (k, v) in edge_values.iter().enumerate() {
            writeln!(w, "{},{},{}", i + 1, fmt(sol.mesh[k]), fmt(*v))?;
        }
    }
    Ok(())
}

/// Writes a parabolic solution as `t,edge,x,u` rows.
pub fn export_parabolic_csv<W: Write>(sol: &ParabolicSolution, mut w: W) -> Result<(), IoError> {
    writeln!(w, "t,edge,x,u")?;
    for (lvl, t) in sol.times.iter().enumerate() {
        for (i, edge_values) in sol.values[lvl].iter().enumerate() {
            for (k, v) in edge_values.iter().enumerate() {
                writeln!(w, "{},{},{},{}", fmt(*t), i + 1, fmt(sol.mesh[k]), fmt(*v))?;
            }
        }
    }
    Ok(())
}

/// Serializes a summary as pretty JSON with a trailing newline.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary serializes");
    s.push('\n');
    s
}
