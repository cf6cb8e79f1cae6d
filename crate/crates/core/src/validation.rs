//! Monte Carlo estimators of the representation formulas and statistical
//! residual tests, all reproducible bit-exactly from a master seed.
//!
//! Ensembles run one independent random stream per path index; workers are
//! taken from the `STICKYDIFF_WORKERS` environment variable (default 1) and
//! results are reduced in path order, so the outputs do not depend on the
//! worker count.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::func::{EdgeFunction, TimeEdgeFunction};
use crate::graph::{GraphPoint, StarGraph};
use crate::numeric::{log_log_slope, mean_and_se, wilson_half_width};
use crate::path::{Path, PathError, PathKind, Simulator};
use crate::rng::path_stream;
use crate::time_change::{stickify, TimeChangeError};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("test function is discontinuous at the vertex: {0}")]
    Continuity(String),
    #[error("{fraction:.3} of paths hit the time cap (more than 1%)")]
    ExcessiveCapping { fraction: f64 },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    TimeChange(#[from] TimeChangeError),
}

/// A Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Fingerprint of the graph the ensemble ran on.
    pub config_hash: String,
    /// A priori bound on the horizon-truncation bias (elliptic estimator).
    pub truncation_bias: f64,
}

/// Ensemble statistics of the exit experiment from the vertex ball.
#[derive(Debug, Clone, Serialize)]
pub struct ExitStats {
    pub mean_exit_time: f64,
    pub exit_time_se: f64,
    /// Exit-edge frequencies and their Wilson half-widths (one sigma).
    pub edge_frequency: Vec<f64>,
    pub edge_half_width: Vec<f64>,
    pub mean_vertex_occupation: f64,
    pub vertex_occupation_se: f64,
    pub capped_fraction: f64,
    pub n_paths: usize,
    pub delta: f64,
    pub dt: f64,
    pub seed: u64,
    pub config_hash: String,
}

fn worker_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let workers = std::env::var("STICKYDIFF_WORKERS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|w| *w > 0)
            .unwrap_or(1);
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
    })
}

/// Maps path indices to per-path results under independent streams,
/// collecting in index order.
pub fn run_paths<T, F>(n_paths: usize, master_seed: u64, per_path: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut rand_pcg::Pcg64) -> T + Sync,
{
    worker_pool().install(|| {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_stream(master_seed, i);
                per_path(i, &mut rng)
            })
            .collect()
    })
}

/// Exit statistics of the sticky process from the vertex, `n_paths`
/// independent runs. Fails if more than 1% of paths hit `t_cap`.
pub fn mc_exit_stats(
    g: &StarGraph,
    delta: f64,
    n_paths: usize,
    dt: f64,
    master_seed: u64,
    t_cap: f64,
) -> Result<ExitStats, ValidationError> {
    if n_paths < 2 {
        return Err(ValidationError::DegenerateInput("need at least 2 paths".into()));
    }
    let sim = Simulator::new(g, dt);
    let records = run_paths(n_paths, master_seed, |_, rng| sim.until_exit(delta, t_cap, rng));

    let capped = records.iter().filter(|r| r.capped).count();
    let capped_fraction = capped as f64 / n_paths as f64;
    if capped_fraction > 0.01 {
        return Err(ValidationError::ExcessiveCapping { fraction: capped_fraction });
    }

    let exit_times: Vec<f64> = records.iter().map(|r| r.exit_time).collect();
    let occupations: Vec<f64> = records.iter().map(|r| r.vertex_occupation).collect();
    let (mean_exit_time, exit_time_se) = mean_and_se(&exit_times);
    let (mean_vertex_occupation, vertex_occupation_se) = mean_and_se(&occupations);

    let mut counts = vec![0usize; g.n_edges()];
    for r in &records {
        counts[r.exit_edge - 1] += 1;
    }
    let edge_frequency: Vec<f64> = counts.iter().map(|c| *c as f64 / n_paths as f64).collect();
    let edge_half_width: Vec<f64> =
        edge_frequency.iter().map(|p| wilson_half_width(*p, n_paths, 1.0)).collect();

    Ok(ExitStats {
        mean_exit_time,
        exit_time_se,
        edge_frequency,
        edge_half_width,
        mean_vertex_occupation,
        vertex_occupation_se,
        capped_fraction,
        n_paths,
        delta,
        dt,
        seed: master_seed,
        config_hash: format!("{:016x}", g.hash()),
    })
}

/// Options for the elliptic Feynman-Kac estimator.
#[derive(Debug, Clone, Copy, Default)]
pub struct FkEllipticOptions {
    /// Drops the `theta`-weighted vertex term; only useful to demonstrate
    /// that the term is load-bearing (the estimate then biases upward).
    pub omit_vertex_term: bool,
}

/// Estimates `u(x0) = -E[ integral_0^inf e^{-lambda s} (f(X) 1{X != v} +
/// theta 1{X = v}) ds ]` along sticky paths.
///
/// The exponential weight is integrated in closed form over every knot
/// interval with the integrand frozen per interval; vertex plateaus carry
/// the `theta` term with their exact durations. The integral is truncated
/// at `horizon` (sticky clock) and the committed bias bound
/// `e^{-lambda H} sup|integrand| / lambda` is reported.
#[allow(clippy::too_many_arguments)]
pub fn mc_feynman_kac_elliptic(
    g: &StarGraph,
    lambda: f64,
    f: &dyn EdgeFunction,
    theta: f64,
    x0: GraphPoint,
    n_paths: usize,
    dt: f64,
    horizon: f64,
    master_seed: u64,
    options: FkEllipticOptions,
) -> Result<McEstimate, ValidationError> {
    if !(lambda > 0.0) {
        return Err(ValidationError::DegenerateInput(format!("lambda = {lambda}")));
    }
    if n_paths < 2 {
        return Err(ValidationError::DegenerateInput("need at least 2 paths".into()));
    }
    let sim = Simulator::new(g, dt);
    let eta = g.eta();

    let per_path = |_i: u64, rng: &mut rand_pcg::Pcg64| -> Result<(f64, f64), ValidationError> {
        let y = sim.nonsticky_path(x0, horizon, rng)?;
        let x = stickify(&y, eta)?;
        let mut acc = 0.0;
        let mut sup = theta.abs();
        for j in 0..x.len() - 1 {
            let a = x.times[j];
            if a >= horizon {
                break;
            }
            let b = x.times[j + 1].min(horizon);
            if b <= a {
                continue;
            }
            let value = if x.is_plateau(j) {
                if options.omit_vertex_term {
                    continue;
                }
                theta
            } else {
                let v = f.eval(x.edges[j] as usize, x.xs[j]);
                sup = sup.max(v.abs());
                v
            };
            let weight = ((-lambda * a).exp() - (-lambda * b).exp()) / lambda;
            acc += value * weight;
        }
        Ok((-acc, sup))
    };

    let results = run_paths(n_paths, master_seed, per_path);
    let mut samples = Vec::with_capacity(n_paths);
    let mut sup = 0.0_f64;
    for r in results {
        let (v, s) = r?;
        samples.push(v);
        sup = sup.max(s);
    }
    let (value, std_error) = mean_and_se(&samples);
    Ok(McEstimate {
        value,
        std_error,
        n_paths,
        dt,
        seed: master_seed,
        config_hash: format!("{:016x}", g.hash()),
        truncation_bias: (-lambda * horizon).exp() * sup / lambda,
    })
}

/// Estimates `E[ u_T(X(T)) + integral_{t0}^T f(s, X) 1{X != v} +
/// theta(s) 1{X = v} ds | X(t0) = x0 ]` along sticky paths.
#[allow(clippy::too_many_arguments)]
pub fn mc_feynman_kac_parabolic(
    g: &StarGraph,
    t0: f64,
    t_horizon: f64,
    f: &dyn TimeEdgeFunction,
    theta: &(dyn Fn(f64) -> f64 + Sync),
    u_terminal: &dyn EdgeFunction,
    x0: GraphPoint,
    n_paths: usize,
    dt: f64,
    master_seed: u64,
) -> Result<McEstimate, ValidationError> {
    if !(t0 <= t_horizon) {
        return Err(ValidationError::DegenerateInput(format!(
            "t0 = {t0} beyond horizon {t_horizon}"
        )));
    }
    if n_paths < 2 {
        return Err(ValidationError::DegenerateInput("need at least 2 paths".into()));
    }
    let span = t_horizon - t0;
    if span == 0.0 {
        // Degenerate but well defined: the estimate is u_T(x0) exactly.
        let v = u_terminal.eval(x0.edge(), x0.x());
        return Ok(McEstimate {
            value: v,
            std_error: 0.0,
            n_paths,
            dt,
            seed: master_seed,
            config_hash: format!("{:016x}", g.hash()),
            truncation_bias: 0.0,
        });
    }
    let sim = Simulator::new(g, dt);
    let eta = g.eta();

    let per_path = |_i: u64, rng: &mut rand_pcg::Pcg64| -> Result<f64, ValidationError> {
        let y = sim.nonsticky_path(x0, span, rng)?;
        let x = stickify(&y, eta)?;
        let mut acc = 0.0;
        for j in 0..x.len() - 1 {
            let a = x.times[j];
            if a >= span {
                break;
            }
            let b = x.times[j + 1].min(span);
            if b <= a {
                continue;
            }
            // Trapezoid in time with the position frozen per interval;
            // plateaus can be long (of order eta sigma sqrt(dt)), so a
            // left-frozen integrand would leave a first-order bias there.
            let value = if x.is_plateau(j) {
                0.5 * (theta(t0 + a) + theta(t0 + b))
            } else {
                let edge = x.edges[j] as usize;
                0.5 * (f.eval(t0 + a, edge, x.xs[j]) + f.eval(t0 + b, edge, x.xs[j]))
            };
            acc += value * (b - a);
        }
        acc += u_terminal.eval(terminal_edge(&x, span), terminal_position(&x, span));
        Ok(acc)
    };

    let results = run_paths(n_paths, master_seed, per_path);
    let samples: Result<Vec<f64>, ValidationError> = results.into_iter().collect();
    let (value, std_error) = mean_and_se(&samples?);
    Ok(McEstimate {
        value,
        std_error,
        n_paths,
        dt,
        seed: master_seed,
        config_hash: format!("{:016x}", g.hash()),
        truncation_bias: 0.0,
    })
}

fn terminal_bracket(path: &Path, t: f64) -> usize {
    let j = path.times.partition_point(|s| *s <= t);
    j.saturating_sub(1).min(path.len() - 2)
}

fn terminal_edge(path: &Path, t: f64) -> usize {
    if t >= path.horizon() {
        return *path.edges.last().unwrap() as usize;
    }
    let j = terminal_bracket(path, t);
    path.edges[j + 1] as usize
}

/// Position at an off-knot time: the vertex inside a plateau, otherwise
/// linear interpolation within the (single-edge) bracketing interval.
fn terminal_position(path: &Path, t: f64) -> f64 {
    if t >= path.horizon() {
        return *path.xs.last().unwrap();
    }
    let j = terminal_bracket(path, t);
    if path.is_plateau(j) {
        return 0.0;
    }
    let (a, b) = (path.times[j], path.times[j + 1]);
    let frac = (t - a) / (b - a);
    path.xs[j] + frac * (path.xs[j + 1] - path.xs[j])
}

/// A test function on `[0, inf) x Gamma` with its analytic derivatives.
pub struct ItoTestFunction {
    pub f: Box<dyn Fn(f64, usize, f64) -> f64 + Sync + Send>,
    pub df_dt: Box<dyn Fn(f64, usize, f64) -> f64 + Sync + Send>,
    pub df_dx: Box<dyn Fn(f64, usize, f64) -> f64 + Sync + Send>,
    pub d2f_dx2: Box<dyn Fn(f64, usize, f64) -> f64 + Sync + Send>,
}

impl ItoTestFunction {
    pub fn constant(c: f64) -> Self {
        ItoTestFunction {
            f: Box::new(move |_, _, _| c),
            df_dt: Box::new(|_, _, _| 0.0),
            df_dx: Box::new(|_, _, _| 0.0),
            d2f_dx2: Box::new(|_, _, _| 0.0),
        }
    }

    /// `f(t, x) = t` on every edge.
    pub fn time_coordinate() -> Self {
        ItoTestFunction {
            f: Box::new(|t, _, _| t),
            df_dt: Box::new(|_, _, _| 1.0),
            df_dx: Box::new(|_, _, _| 0.0),
            d2f_dx2: Box::new(|_, _, _| 0.0),
        }
    }

    /// `f_i(t, x) = x` on every edge.
    pub fn radial_coordinate() -> Self {
        ItoTestFunction {
            f: Box::new(|_, _, x| x),
            df_dt: Box::new(|_, _, _| 0.0),
            df_dx: Box::new(|_, _, _| 1.0),
            d2f_dx2: Box::new(|_, _, _| 0.0),
        }
    }

    /// `f_i(t, x) = e^{-t} (1 + c_i x)` with per-edge slopes `c_i`.
    pub fn exp_mix(cs: Vec<f64>) -> Self {
        let cs2 = cs.clone();
        let cs3 = cs.clone();
        ItoTestFunction {
            f: Box::new(move |t, e, x| (-t).exp() * (1.0 + cs[e - 1] * x)),
            df_dt: Box::new(move |t, e, x| -(-t).exp() * (1.0 + cs2[e - 1] * x)),
            df_dx: Box::new(move |t, e, _| (-t).exp() * cs3[e - 1]),
            d2f_dx2: Box::new(|_, _, _| 0.0),
        }
    }
}

/// Martingale remainder of the graph change-of-variables formula along one
/// sticky path.
///
/// Returns the series `M(t_k) = f(t_k, X(t_k)) - f(0, X(0)) - I - J` with
/// `I = integral (d_s f + L f) 1{X != v} ds` and
/// `J = integral (eta d_s f(s, v) + sum rho_i d_x f_i(s, 0)) d ell(s)`.
/// The stochastic-integral term is deliberately not computed: `M` is its
/// sample, so it must be mean zero with uncorrelated increments when the
/// path law is right.
pub fn ito_residual(
    g: &StarGraph,
    path: &Path,
    tf: &ItoTestFunction,
) -> Result<Vec<f64>, ValidationError> {
    if path.kind != PathKind::Sticky {
        return Err(ValidationError::DegenerateInput("ito residual runs on sticky paths".into()));
    }
    // The function must be continuous at the vertex.
    for &t in &[0.0, 0.37 * path.horizon(), path.horizon()] {
        let f0 = (tf.f)(t, 1, 0.0);
        for edge in 2..=g.n_edges() {
            let fi = (tf.f)(t, edge, 0.0);
            if (fi - f0).abs() > 1e-9 * f0.abs().max(1.0) {
                return Err(ValidationError::Continuity(format!(
                    "f_1({t}, 0) = {f0}, f_{edge}({t}, 0) = {fi}"
                )));
            }
        }
    }

    let rho = g.rho();
    let vertex_integrand = |s: f64| -> f64 {
        let mut v = g.eta() * (tf.df_dt)(s, 1, 0.0);
        for (i, r) in rho.iter().enumerate() {
            v += r * (tf.df_dx)(s, i + 1, 0.0);
        }
        v
    };

    let n = path.len();
    let mut out = Vec::with_capacity(n);
    let f0 = (tf.f)(path.times[0], path.edges[0] as usize, path.xs[0]);
    out.push(0.0);
    let mut drift_int = 0.0;
    let mut ell_int = 0.0;
    for j in 1..n {
        let a = path.times[j - 1];
        let b = path.times[j];
        let dl = path.ell[j] - path.ell[j - 1];
        if path.is_plateau(j - 1) {
            if dl > 0.0 {
                ell_int += 0.5 * (vertex_integrand(a) + vertex_integrand(b)) * dl;
            }
        } else {
            let edge = path.edges[j - 1] as usize;
            let x = path.xs[j - 1];
            let (sigma, drift) = (g.sigma_at(edge, x), g.drift_at(edge, x));
            let lf =
                0.5 * sigma * sigma * (tf.d2f_dx2)(a, edge, x) + drift * (tf.df_dx)(a, edge, x);
            drift_int += ((tf.df_dt)(a, edge, x) + lf) * (b - a);
            if dl > 0.0 {
                ell_int += vertex_integrand(b) * dl;
            }
        }
        let fv = (tf.f)(b, path.edges[j] as usize, path.xs[j]);
        out.push(fv - f0 - drift_int - ell_int);
    }
    Ok(out)
}

/// Least-squares slope of `log y` against `log x`; at least three positive
/// points with distinct abscissas.
pub fn convergence_slope(xs: &[f64], ys: &[f64]) -> Result<f64, ValidationError> {
    if xs.len() < 3 || xs.len() != ys.len() {
        return Err(ValidationError::DegenerateInput(format!(
            "need >= 3 paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.iter().chain(ys.iter()).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(ValidationError::DegenerateInput("points must be positive".into()));
    }
    if xs.windows(2).all(|w| w[0] == w[1]) {
        return Err(ValidationError::DegenerateInput("abscissas all equal".into()));
    }
    Ok(log_log_slope(xs, ys))
}
