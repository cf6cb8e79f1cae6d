//! Estimators of local time and occupation functionals from discrete paths.
//!
//! Three independent routes to the same quantity: the path's own local-time
//! channel, the scaled near-vertex occupation time, and the count of
//! completed excursions from the vertex to a level `delta`. Their mutual
//! consistency as `delta` shrinks is one of the toolkit's main acceptance
//! surfaces.

use crate::graph::StarGraph;
use crate::path::Path;

/// Lebesgue time spent exactly at the vertex up to `t`.
///
/// Knot intervals whose two endpoints sit at zero are vertex plateaus; all
/// other intervals contribute nothing (vertex visits on nonsticky paths are
/// instants). On sticky paths this equals `eta * ell(t)` to rounding.
pub fn vertex_occupation(path: &Path, t: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..path.len() - 1 {
        let a = path.times[j];
        if a >= t {
            break;
        }
        if path.is_plateau(j) {
            let b = path.times[j + 1].min(t);
            if b > a {
                total += b - a;
            }
        }
    }
    total
}

/// Trapezoid quadrature of `integral f(s) 1{X(s) = v} ds` up to `t`.
///
/// Shares its evaluation rule with [`stieltjes_integral`], so the identity
/// `integral f 1{X=v} ds = eta * integral f d ell` is exact on sticky paths
/// for any integrand.
pub fn weighted_vertex_integral<F: Fn(f64) -> f64>(path: &Path, f: F, t: f64) -> f64 {
    let mut total = 0.0;
    for j in 0..path.len() - 1 {
        let a = path.times[j];
        if a >= t {
            break;
        }
        if path.is_plateau(j) {
            let b = path.times[j + 1].min(t);
            if b > a {
                total += 0.5 * (f(a) + f(b)) * (b - a);
            }
        }
    }
    total
}

/// Scaled occupation estimator of the vertex local time:
/// `(Lambda / delta) * Leb{ s <= t : 0 < x(s) <= delta }`.
///
/// The position is interpolated linearly between knots, so the near-vertex
/// band measure is computed exactly for the piecewise-linear trajectory and
/// vertex plateaus are excluded by construction.
pub fn occupation_estimator(g: &StarGraph, path: &Path, delta: f64, t: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    let lambda = g.lambda_const();
    let mut measure = 0.0;
    for j in 0..path.len() - 1 {
        let a = path.times[j];
        if a >= t {
            break;
        }
        let b = path.times[j + 1].min(t);
        if b <= a {
            continue;
        }
        let frac = (b - a) / (path.times[j + 1] - a);
        let xa = path.xs[j];
        let xb_full = path.xs[j + 1];
        // Clip the segment to [a, b] before measuring the band.
        let xb = xa + frac * (xb_full - xa);
        measure += band_measure(b - a, xa, xb, delta);
    }
    lambda / delta * measure
}

/// Duration within the band `(0, delta]` of a linear segment of length
/// `len` running from `xa` to `xb` (both nonnegative).
fn band_measure(len: f64, xa: f64, xb: f64, delta: f64) -> f64 {
    if xa == 0.0 && xb == 0.0 {
        return 0.0; // plateau: excluded, x = 0 strictly
    }
    let lo = xa.min(xb);
    let hi = xa.max(xb);
    if lo >= delta {
        return 0.0;
    }
    if hi <= delta {
        return len;
    }
    len * (delta - lo) / (hi - lo)
}

/// Upcrossing estimator of the vertex local time:
/// `delta * #{ completed excursions 0 -> delta by time t }`.
///
/// On a discrete path a "hit of zero" is the first knot at exactly `x = 0`
/// (crossing or plateau knots; such knots exist by construction) and the
/// matching "hit of delta" is the first later knot with `x >= delta`.
pub fn upcrossing_estimator(path: &Path, delta: f64, t: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    let mut armed = false;
    let mut count: u64 = 0;
    for j in 0..path.len() {
        if path.times[j] > t {
            break;
        }
        if !armed {
            if path.xs[j] == 0.0 {
                armed = true;
            }
        } else if path.xs[j] >= delta {
            count += 1;
            armed = false;
        }
    }
    delta * count as f64
}

/// Lebesgue-Stieltjes integral `integral_0^t f(s) d ell(s)` along a path.
///
/// Atomic jumps (crossing knots) contribute `f` at the jump instant;
/// vertex plateaus, across which the sticky local time grows linearly,
/// contribute the trapezoid rule on the (possibly clipped) plateau.
pub fn stieltjes_integral<F: Fn(f64) -> f64>(path: &Path, f: F, t: f64) -> f64 {
    let mut total = 0.0;
    for j in 1..path.len() {
        let dl = path.ell[j] - path.ell[j - 1];
        if dl <= 0.0 {
            continue;
        }
        let a = path.times[j - 1];
        let b = path.times[j];
        if path.is_plateau(j - 1) {
            if a >= t {
                break;
            }
            let hi = b.min(t);
            if hi <= a {
                continue;
            }
            let part = dl * (hi - a) / (b - a);
            total += 0.5 * (f(a) + f(hi)) * part;
        } else if b <= t {
            total += f(b) * dl;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::symmetric_graph;
    use crate::graph::GraphPoint;
    use crate::path::{Path, PathKind, PathMeta, Simulator};
    use crate::rng::path_stream;
    use crate::time_change::stickify;

    fn single_jump_nonsticky() -> Path {
        Path {
            times: vec![0.0, 0.3, 0.5, 0.7, 1.0],
            edges: vec![1, 1, 2, 2, 2],
            xs: vec![0.4, 0.1, 0.0, 0.2, 0.5],
            ell: vec![0.0, 0.0, 0.2, 0.2, 0.2],
            kind: PathKind::Nonsticky,
            eta: 0.0,
            base_times: None,
            meta: PathMeta::default(),
        }
    }

    #[test]
    fn nonsticky_paths_have_zero_vertex_occupation() {
        let path = single_jump_nonsticky();
        assert_eq!(vertex_occupation(&path, 1.0), 0.0);
    }

    #[test]
    fn sticky_jump_example_occupation() {
        let sticky = stickify(&single_jump_nonsticky(), 0.5).unwrap();
        assert!((vertex_occupation(&sticky, 1.0) - 0.1).abs() < 1e-15);
        // Mid-plateau the identity still holds: at t = 0.55 half the
        // plateau has elapsed.
        assert!((vertex_occupation(&sticky, 0.55) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn occupation_equals_eta_ell_on_simulated_sticky_paths() {
        let g = symmetric_graph(3, 2.0, 0.0);
        let sim = Simulator::new(&g, 1e-3);
        for seed in 0..10 {
            let mut rng = path_stream(17, seed);
            let path = sim.nonsticky_path(GraphPoint::vertex(), 1.0, &mut rng).unwrap();
            // Vertex visits on the nonsticky path are instants, never
            // intervals.
            assert_eq!(vertex_occupation(&path, path.horizon()), 0.0);
            let sticky = stickify(&path, 0.5).unwrap();
            let t = sticky.horizon();
            let occ = vertex_occupation(&sticky, t);
            let expected = 0.5 * sticky.ell_final();
            assert!((occ - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn occupation_estimator_is_zero_above_band() {
        let g = symmetric_graph(3, 1.0, 0.0);
        let path = Path {
            times: vec![0.0, 0.5, 1.0],
            edges: vec![1, 1, 1],
            xs: vec![1.0, 1.2, 0.9],
            ell: vec![0.0, 0.0, 0.0],
            kind: PathKind::Nonsticky,
            eta: 0.0,
            base_times: None,
            meta: PathMeta::default(),
        };
        assert_eq!(occupation_estimator(&g, &path, 0.5, 1.0), 0.0);
    }

    #[test]
    fn occupation_estimator_scales_by_lambda() {
        // N = 1, rho = 1, sigma = 1: Lambda = 1/2 scales the raw band time.
        let g = symmetric_graph(1, 1.0, 0.0);
        assert!((g.lambda_const() - 0.5).abs() < 1e-15);
        let path = Path {
            times: vec![0.0, 1.0],
            edges: vec![1, 1],
            xs: vec![0.005, 0.005],
            ell: vec![0.0, 0.0],
            kind: PathKind::Nonsticky,
            eta: 0.0,
            base_times: None,
            meta: PathMeta::default(),
        };
        let delta = 0.01;
        let raw_band_time = 1.0;
        let est = occupation_estimator(&g, &path, delta, 1.0);
        assert!((est - 0.5 * raw_band_time / delta).abs() < 1e-14);
    }

    #[test]
    fn upcrossing_counts_completed_excursions() {
        let delta = 0.3;
        let path = Path {
            times: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            edges: vec![1; 7],
            xs: vec![0.0, 0.35, 0.1, 0.0, 0.4, 0.0, 0.1],
            ell: vec![0.0; 7],
            kind: PathKind::Nonsticky,
            eta: 0.0,
            base_times: None,
            meta: PathMeta::default(),
        };
        assert!((upcrossing_estimator(&path, delta, 0.6) - 2.0 * delta).abs() < 1e-15);
        // Only one excursion completed by t = 0.15.
        assert!((upcrossing_estimator(&path, delta, 0.15) - delta).abs() < 1e-15);
    }

    #[test]
    fn upcrossing_zero_when_vertex_never_hit() {
        let path = Path {
            times: vec![0.0, 1.0],
            edges: vec![1, 1],
            xs: vec![0.5, 0.7],
            ell: vec![0.0, 0.0],
            kind: PathKind::Nonsticky,
            eta: 0.0,
            base_times: None,
            meta: PathMeta::default(),
        };
        assert_eq!(upcrossing_estimator(&path, 0.1, 1.0), 0.0);
    }

    #[test]
    fn stieltjes_examples() {
        let path = single_jump_nonsticky();
        // f = 1 recovers ell(t).
        assert!((stieltjes_integral(&path, |_| 1.0, 1.0) - 0.2).abs() < 1e-15);
        // f(s) = s weights the jump at s = 0.5: 0.5 * 0.2 = 0.1.
        assert!((stieltjes_integral(&path, |s| s, 1.0) - 0.1).abs() < 1e-15);
        assert_eq!(stieltjes_integral(&path, |_| 0.0, 1.0), 0.0);
    }

    #[test]
    fn weighted_vertex_integral_matches_eta_stieltjes_for_step_function() {
        let g = symmetric_graph(2, 2.0, 0.0);
        let sim = Simulator::new(&g, 1e-3);
        let mut rng = path_stream(23, 5);
        let path = sim.nonsticky_path(GraphPoint::vertex(), 1.0, &mut rng).unwrap();
        let eta = 0.5;
        let sticky = stickify(&path, eta).unwrap();
        let f = |s: f64| if s < 0.4 { 2.0 } else { -1.0 };
        let t = sticky.horizon();
        let lhs = weighted_vertex_integral(&sticky, f, t);
        let rhs = eta * stieltjes_integral(&sticky, f, t);
        assert!(
            (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0),
            "{lhs} vs {rhs}"
        );
    }
}
