//! The random clock that turns nonsticky paths into sticky ones and back.
//!
//! Along a nonsticky path `Y` with vertex local time `ell`, the clock is
//! `V(s) = s + eta * ell(s)`. Local-time increments sit atomically at the
//! inserted vertex-crossing knots, so the discrete `V` is a slope-one map
//! with a jump of `eta * delta_ell` at each crossing. Its right inverse is
//! continuous and flat exactly over the jump gaps; the time-changed path
//! `X(t) = Y(V^-1(t))` therefore sits at the vertex for a plateau of
//! duration `eta * delta_ell` per crossing, which makes the occupation
//! identity `integral 1{X = v} ds = eta * ell_X(t)` hold exactly, knot for
//! knot, on every generated path.
//!
//! Sticky paths built here carry the nonsticky clock of each knot
//! (`base_times`), so `destickify` undoes `stickify` without any floating
//! point arithmetic: the round trip is bit-exact.

use thiserror::Error;

use crate::path::{Path, PathKind};

#[derive(Debug, Error)]
pub enum TimeChangeError {
    #[error("operation requires a {expected:?} path")]
    Kind { expected: PathKind },
    #[error("time {t} lies beyond the clock horizon {max}")]
    BeyondHorizon { t: f64, max: f64 },
    #[error("stickiness must be finite and nonnegative, got {0}")]
    BadEta(f64),
    #[error("local time jumps off the vertex at knot {knot}")]
    JumpOffVertex { knot: usize },
    #[error("path knots do not form a valid trajectory: {0}")]
    InvalidPath(String),
}

/// The piecewise map `V(s) = s + eta * ell(s)` over a path's knots.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangeMap {
    /// Nonsticky clock at each knot.
    pub knots: Vec<f64>,
    /// `V` at each knot (post-jump at jump knots).
    pub values: Vec<f64>,
    /// Local time at each knot.
    pub ell: Vec<f64>,
    /// Indices of knots at which `ell`, hence `V`, jumps.
    pub jumps: Vec<usize>,
    pub eta: f64,
}

impl TimeChangeMap {
    /// `V(s)`, right-continuous, extended with slope one past the last knot.
    pub fn value_at(&self, s: f64) -> f64 {
        if s <= self.knots[0] {
            return self.values[0] + (s - self.knots[0]);
        }
        let j = self.knots.partition_point(|k| *k <= s) - 1;
        self.values[j] + (s - self.knots[j])
    }

    /// Right inverse `V^-1(t) = inf { s : V(s) > t }`.
    ///
    /// Continuous and nondecreasing; flat across each jump gap.
    pub fn apply_inverse(&self, t: f64) -> Result<f64, TimeChangeError> {
        let max = *self.values.last().expect("nonempty map");
        if t > max {
            return Err(TimeChangeError::BeyondHorizon { t, max });
        }
        if t <= self.values[0] {
            return Ok(self.knots[0]);
        }
        // First knot whose (post-jump) value reaches t.
        let j = self.values.partition_point(|v| *v < t);
        debug_assert!(j > 0 && j < self.values.len());
        let gap_left = self.knots[j] + self.eta * self.ell[j - 1];
        if t >= gap_left {
            Ok(self.knots[j])
        } else {
            Ok(self.knots[j - 1] + (t - self.values[j - 1]))
        }
    }
}

/// Builds `V` from a nonsticky path.
pub fn build_time_change(path: &Path, eta: f64) -> Result<TimeChangeMap, TimeChangeError> {
    if path.kind != PathKind::Nonsticky {
        return Err(TimeChangeError::Kind { expected: PathKind::Nonsticky });
    }
    if !eta.is_finite() || eta < 0.0 {
        return Err(TimeChangeError::BadEta(eta));
    }
    let mut jumps = Vec::new();
    for j in 1..path.len() {
        if path.ell[j] > path.ell[j - 1] {
            if path.xs[j] != 0.0 {
                return Err(TimeChangeError::JumpOffVertex { knot: j });
            }
            jumps.push(j);
        }
    }
    let values = path
        .times
        .iter()
        .zip(path.ell.iter())
        .map(|(t, l)| t + eta * l)
        .collect();
    Ok(TimeChangeMap {
        knots: path.times.clone(),
        values,
        ell: path.ell.clone(),
        jumps,
        eta,
    })
}

/// Time-changes a nonsticky path into the sticky one, `X(t) = Y(V^-1(t))`.
///
/// Every local-time jump becomes a vertex plateau of duration
/// `eta * delta_ell`: the crossing knot is preceded by an inserted knot at
/// the left edge of the jump gap, both at position zero. The local time of
/// the sticky path grows linearly across the plateau, so
/// `t = V^-1(t) + eta * ell_X(t)` holds at every knot.
pub fn stickify(path: &Path, eta: f64) -> Result<Path, TimeChangeError> {
    let map = build_time_change(path, eta)?;
    let n = path.len();
    let extra = map.jumps.len();
    let mut times = Vec::with_capacity(n + extra);
    let mut edges = Vec::with_capacity(n + extra);
    let mut xs = Vec::with_capacity(n + extra);
    let mut ell = Vec::with_capacity(n + extra);
    let mut base = Vec::with_capacity(n + extra);

    for j in 0..n {
        let v_right = map.values[j];
        if j > 0 && path.ell[j] > path.ell[j - 1] {
            let v_left = path.times[j] + eta * path.ell[j - 1];
            if v_right > v_left {
                times.push(v_left);
                edges.push(path.edges[j]);
                xs.push(0.0);
                ell.push(path.ell[j - 1]);
                base.push(path.times[j]);
            }
        }
        times.push(v_right);
        edges.push(path.edges[j]);
        xs.push(path.xs[j]);
        ell.push(path.ell[j]);
        base.push(path.times[j]);
    }

    Ok(Path {
        times,
        edges,
        xs,
        ell,
        kind: PathKind::Sticky,
        eta,
        base_times: Some(base),
        meta: path.meta.clone(),
    })
}

/// Deletes vertex plateaus from a sticky path, recovering the nonsticky
/// path on the clock `R(t) = integral 1{X(s) != v} ds`.
///
/// Paths produced by [`stickify`] are undone exactly: plateau-opening knots
/// are dropped and every surviving knot takes back its recorded nonsticky
/// time. For sticky paths without that record, times are reconstructed as
/// `t - eta * ell(t)`, exact up to rounding.
pub fn destickify(path: &Path) -> Result<Path, TimeChangeError> {
    if path.kind != PathKind::Sticky {
        return Err(TimeChangeError::Kind { expected: PathKind::Sticky });
    }
    let n = path.len();
    let fallback;
    let base: &[f64] = match &path.base_times {
        Some(b) => b,
        None => {
            fallback = path
                .times
                .iter()
                .zip(path.ell.iter())
                .map(|(t, l)| t - path.eta * l)
                .collect::<Vec<f64>>();
            &fallback
        }
    };

    let mut times = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut ell = Vec::with_capacity(n);
    // Range loop: the plateau test needs the j + 1 lookahead.
    #[allow(clippy::needless_range_loop)]
    for j in 0..n {
        let opens_plateau =
            j + 1 < n && path.xs[j] == 0.0 && path.xs[j + 1] == 0.0 && path.ell[j + 1] > path.ell[j];
        if opens_plateau {
            continue;
        }
        times.push(base[j]);
        edges.push(path.edges[j]);
        xs.push(path.xs[j]);
        ell.push(path.ell[j]);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TimeChangeError::InvalidPath(
            "reconstructed nonsticky clock is not strictly ascending".into(),
        ));
    }

    Ok(Path {
        times,
        edges,
        xs,
        ell,
        kind: PathKind::Nonsticky,
        eta: 0.0,
        base_times: None,
        meta: path.meta.clone(),
    })
}
