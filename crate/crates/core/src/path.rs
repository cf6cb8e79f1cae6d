//! Discrete-time simulation of the nonsticky diffusion on the graph:
//! reflected Euler steps, weighted edge selection at the vertex, and the
//! accumulated vertex local time.
//!
//! The scheme proposes `y* = x + b dt + sigma sqrt(dt) g` on the current
//! edge. A negative proposal means the walk passed the vertex inside the
//! step: a knot is inserted at the linear-bridge crossing fraction
//! `theta = x / (x - y*)` with position exactly zero, a new edge is drawn
//! from `Categorical(rho)`, and the walk continues outward at `-y*`. The
//! local-time channel grows by `2 (-y*)` at the crossing knot, which is the
//! increment that keeps the discrete radial identity
//! `x(t) - x(0) = sum sigma sqrt(dt) g + integral b dt + ell(t)`
//! exact pathwise in the unit-coefficient local-time normalization (so the
//! mean of `ell` at the exit from a ball of radius `delta` converges to
//! `delta`, matching the closed-form mean-exit-time oracles).
//!
//! Steps that begin at the vertex draw the edge first and move outward to
//! `|y*|` without accruing local time; the dropped single-step contribution
//! is one order below the scheme's overall weak error, and it keeps every
//! local-time jump attached to an inserted zero-position knot, which the
//! time-change module relies on for exact plateau bookkeeping.

use rand::RngExt;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{GraphPoint, StarGraph};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("time step must be positive and resolve the horizon, got dt = {0}")]
    BadStep(f64),
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("path has no knots")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PathKind {
    Nonsticky,
    Sticky,
}

/// Provenance and optional per-step draws carried alongside a path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathMeta {
    pub dt: f64,
    pub seed: Option<(u64, u64)>,
    pub graph_hash: u64,
    /// Standard-normal draw per grid step, recorded on request.
    pub gaussians: Option<Vec<f64>>,
}

/// A time-stamped trajectory on the graph.
///
/// Knot `k` holds `(times[k], edges[k], xs[k], ell[k])`. Times are strictly
/// ascending and include inserted vertex-crossing instants; `ell` is the
/// nondecreasing local time, growing only into knots with `x = 0` (and, on
/// sticky paths, across vertex plateaus). Sticky paths also carry
/// `base_times`, the nonsticky clock of each knot, which makes
/// `destickify(stickify(p))` reproduce `p` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub edges: Vec<u32>,
    pub xs: Vec<f64>,
    pub ell: Vec<f64>,
    pub kind: PathKind,
    /// Stickiness the sticky clock was built with; zero on nonsticky paths.
    pub eta: f64,
    /// Nonsticky clock per knot; present on sticky paths built by `stickify`.
    pub base_times: Option<Vec<f64>>,
    pub meta: PathMeta,
}

impl Path {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("nonempty path")
    }

    pub fn ell_final(&self) -> f64 {
        *self.ell.last().expect("nonempty path")
    }

    /// Local time at `t`: left-constant between knots on nonsticky paths,
    /// linear across vertex plateaus on sticky ones.
    pub fn ell_at(&self, t: f64) -> f64 {
        if t <= self.times[0] {
            return self.ell[0];
        }
        if t >= self.horizon() {
            return self.ell_final();
        }
        let j = self.times.partition_point(|s| *s <= t) - 1;
        if j + 1 < self.len() && self.is_plateau(j) {
            let (a, b) = (self.times[j], self.times[j + 1]);
            let frac = (t - a) / (b - a);
            return self.ell[j] + frac * (self.ell[j + 1] - self.ell[j]);
        }
        self.ell[j]
    }

    /// Whether the interval from knot `j` to `j + 1` sits at the vertex.
    pub fn is_plateau(&self, j: usize) -> bool {
        self.xs[j] == 0.0 && self.xs[j + 1] == 0.0
    }

    /// Checks the structural invariants; used by tests and debug paths.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.is_empty() {
            return Err("empty path".into());
        }
        if self.ell[0] != 0.0 {
            return Err(format!("ell[0] = {}, want 0", self.ell[0]));
        }
        for k in 1..self.len() {
            if !(self.times[k] > self.times[k - 1]) {
                return Err(format!("times not strictly ascending at knot {k}"));
            }
            if self.ell[k] < self.ell[k - 1] {
                return Err(format!("ell decreases at knot {k}"));
            }
            if !(self.xs[k] >= 0.0) {
                return Err(format!("negative position at knot {k}"));
            }
            if self.ell[k] > self.ell[k - 1] {
                let into_vertex = self.xs[k] == 0.0;
                let across_plateau = self.xs[k] == 0.0 && self.xs[k - 1] == 0.0;
                if !(into_vertex || across_plateau) {
                    return Err(format!("local time grows off the vertex at knot {k}"));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one Euler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub next: GraphPoint,
    pub delta_ell: f64,
    pub crossed: bool,
    /// Fraction of the step at which the vertex was hit, in (0, 1);
    /// zero when no interior crossing happened.
    pub theta: f64,
}

/// Draws an edge index (1-based) from `Categorical(rho)` by inversion.
pub fn draw_edge(rho: &[f64], uniform: f64) -> usize {
    let mut acc = 0.0;
    for (i, r) in rho.iter().enumerate() {
        acc += r;
        if uniform < acc {
            return i + 1;
        }
    }
    rho.len()
}

/// One reflected Euler step from `state`.
///
/// `gaussian` is a standard normal draw; `uniform` is consumed only when an
/// edge has to be drawn (step starts at the vertex, or the proposal crosses
/// it). Total: never fails.
pub fn step(
    g: &StarGraph,
    state: GraphPoint,
    dt: f64,
    gaussian: f64,
    uniform: f64,
) -> StepResult {
    let sqrt_dt = dt.sqrt();
    if state.is_vertex() {
        let edge = draw_edge(g.rho(), uniform);
        let sigma = g.sigma_at(edge, 0.0);
        let drift = g.drift_at(edge, 0.0);
        let proposal = drift * dt + sigma * sqrt_dt * gaussian;
        return StepResult {
            next: GraphPoint::new(edge, proposal.abs()),
            delta_ell: 0.0,
            crossed: false,
            theta: 0.0,
        };
    }
    let (sigma, drift) = g.coefficients(state);
    let proposal = state.x() + drift * dt + sigma * sqrt_dt * gaussian;
    if proposal >= 0.0 {
        StepResult {
            next: GraphPoint::new(state.edge(), proposal),
            delta_ell: 0.0,
            crossed: false,
            theta: 0.0,
        }
    } else {
        let theta = state.x() / (state.x() - proposal);
        let edge = draw_edge(g.rho(), uniform);
        StepResult {
            next: GraphPoint::new(edge, -proposal),
            delta_ell: -2.0 * proposal,
            crossed: true,
            theta,
        }
    }
}

/// Outcome of running the sticky process to the boundary of a vertex ball.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitRecord {
    /// First sticky time at which the radial coordinate reaches `delta`.
    pub exit_time: f64,
    pub exit_edge: usize,
    /// Lebesgue time the sticky process spent at the vertex before exit.
    pub vertex_occupation: f64,
    pub capped: bool,
}

/// Driver tying a graph to a step size, with optional draw recording.
#[derive(Debug, Clone, Copy)]
pub struct Simulator<'g> {
    graph: &'g StarGraph,
    dt: f64,
    record_gaussians: bool,
}

impl<'g> Simulator<'g> {
    pub fn new(graph: &'g StarGraph, dt: f64) -> Self {
        Simulator { graph, dt, record_gaussians: false }
    }

    /// Records the per-step standard-normal draws in `Path::meta`.
    pub fn recording_gaussians(mut self) -> Self {
        self.record_gaussians = true;
        self
    }

    fn plan_steps(&self, horizon: f64) -> Result<usize, PathError> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(PathError::BadHorizon(horizon));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() || horizon / self.dt > 1e9 {
            return Err(PathError::BadStep(self.dt));
        }
        let ratio = horizon / self.dt;
        Ok(((ratio - 1e-9).ceil() as usize).max(1))
    }

    /// Simulates the nonsticky diffusion from `x0` over `[0, horizon]`.
    ///
    /// The returned path has a knot at every grid time `k dt` plus one
    /// inserted knot per vertex crossing, and satisfies all `Path`
    /// invariants by construction.
    pub fn nonsticky_path(
        &self,
        x0: GraphPoint,
        horizon: f64,
        rng: &mut Pcg64,
    ) -> Result<Path, PathError> {
        self.graph.check_point(x0).map_err(|_| PathError::BadHorizon(horizon))?;
        let steps = self.plan_steps(horizon)?;
        let mut times = Vec::with_capacity(steps + 8);
        let mut edges = Vec::with_capacity(steps + 8);
        let mut xs = Vec::with_capacity(steps + 8);
        let mut ell = Vec::with_capacity(steps + 8);
        let mut gaussians = self.record_gaussians.then(|| Vec::with_capacity(steps));

        let mut state = x0;
        let mut ell_acc = 0.0;
        times.push(0.0);
        edges.push(state.edge() as u32);
        xs.push(state.x());
        ell.push(0.0);

        for k in 0..steps {
            let t0 = if k == 0 { 0.0 } else { k as f64 * self.dt };
            let t1 = if k + 1 == steps { horizon } else { (k + 1) as f64 * self.dt };
            let step_dt = t1 - t0;
            let gaussian: f64 = rng.sample(StandardNormal);
            let uniform: f64 = rng.random();
            if let Some(gs) = gaussians.as_mut() {
                gs.push(gaussian);
            }
            let out = step(self.graph, state, step_dt, gaussian, uniform);
            if out.crossed {
                // Crossing instant, clamped strictly inside the step so the
                // knot times stay strictly ascending.
                let mut tc = t0 + out.theta * step_dt;
                if tc <= t0 {
                    tc = t0.next_up();
                }
                if tc >= t1 {
                    tc = t1.next_down();
                }
                if tc > t0 && tc < t1 {
                    ell_acc += out.delta_ell;
                    times.push(tc);
                    edges.push(out.next.edge() as u32);
                    xs.push(0.0);
                    ell.push(ell_acc);
                } else {
                    // Degenerate spacing; fold the increment into the grid
                    // knot only if it lands on the vertex.
                    ell_acc += out.delta_ell;
                }
            }
            state = out.next;
            times.push(t1);
            edges.push(state.edge() as u32);
            xs.push(state.x());
            ell.push(ell_acc);
        }

        Ok(Path {
            times,
            edges,
            xs,
            ell,
            kind: PathKind::Nonsticky,
            eta: 0.0,
            base_times: None,
            meta: PathMeta {
                dt: self.dt,
                seed: None,
                graph_hash: self.graph.hash(),
                gaussians,
            },
        })
    }

    /// Runs the sticky process from the vertex until its radial coordinate
    /// reaches `delta`, streaming (no path is stored).
    ///
    /// The nonsticky walk is advanced to its own exit time `T_Y`; the sticky
    /// exit time is then `T_Y + eta * ell(T_Y)`, and the vertex occupation
    /// equals `eta * ell(T_Y)`.
    pub fn until_exit(&self, delta: f64, t_cap: f64, rng: &mut Pcg64) -> ExitRecord {
        let eta = self.graph.eta();
        let mut state = GraphPoint::vertex();
        let mut ell_acc = 0.0;
        let mut k: u64 = 0;
        loop {
            let t1 = (k + 1) as f64 * self.dt;
            let gaussian: f64 = rng.sample(StandardNormal);
            let uniform: f64 = rng.random();
            let out = step(self.graph, state, self.dt, gaussian, uniform);
            ell_acc += out.delta_ell;
            state = out.next;
            if state.x() >= delta {
                return ExitRecord {
                    exit_time: t1 + eta * ell_acc,
                    exit_edge: state.edge(),
                    vertex_occupation: eta * ell_acc,
                    capped: false,
                };
            }
            if t1 >= t_cap {
                return ExitRecord {
                    exit_time: t1 + eta * ell_acc,
                    exit_edge: state.edge(),
                    vertex_occupation: eta * ell_acc,
                    capped: true,
                };
            }
            k += 1;
        }
    }
}
