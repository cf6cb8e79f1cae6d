//! Small numerical kernels shared across modules: cumulative quadrature,
//! Gauss-Legendre panels, a tridiagonal solver and a few statistics helpers.

/// 5-point Gauss-Legendre nodes on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_08,
    0.478_628_670_499_366_47,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
];

/// Integrates `f` over `[a, b]` with a single 5-point Gauss-Legendre panel.
///
/// Exact for polynomials up to degree 9; used to extend tabulated cumulative
/// integrals off their grid, where `b - a` is at most one grid cell.
pub fn gauss5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Cumulative integral of samples on a uniform grid, fourth order.
///
/// `values[k] = f(a + k h)`; returns `I` with `I[k] = integral of f from the
/// first node to node k`. Even nodes accumulate composite Simpson pairs; odd
/// nodes add the 3-point half-panel rule `h/12 (5 f0 + 8 f1 - f2)`.
/// Requires an even number of intervals (odd `values.len()`).
pub fn cumulative_integral(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "need an odd number of nodes");
    let mut out = vec![0.0; n];
    for k in (2..n).step_by(2) {
        let pair = h / 3.0 * (values[k - 2] + 4.0 * values[k - 1] + values[k]);
        out[k] = out[k - 2] + pair;
    }
    for k in (1..n).step_by(2) {
        let half = h / 12.0 * (5.0 * values[k - 1] + 8.0 * values[k] - values[k + 1]);
        out[k] = out[k - 1] + half;
    }
    out
}

/// Solves a tridiagonal system in place (Thomas algorithm).
///
/// `sub[k] u[k-1] + diag[k] u[k] + sup[k] u[k+1] = rhs[k]`, with `sub[0]` and
/// `sup[n-1]` ignored. Returns `None` when a pivot collapses.
pub fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < f64::MIN_POSITIVE * 1e4 || !pivot.is_finite() {
        return None;
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for k in 1..n {
        pivot = diag[k] - sub[k] * c[k - 1];
        if pivot.abs() < f64::MIN_POSITIVE * 1e4 || !pivot.is_finite() {
            return None;
        }
        c[k] = sup[k] / pivot;
        d[k] = (rhs[k] - sub[k] * d[k - 1]) / pivot;
    }
    let mut u = d;
    for k in (0..n - 1).rev() {
        u[k] -= c[k] * u[k + 1];
    }
    Some(u)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    assert!(n >= 2, "need at least two samples");
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Wilson score half-width for a binomial proportion at `z` standard units.
pub fn wilson_half_width(p_hat: f64, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    (z / denom) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// 64-bit FNV-1a over raw bytes; used for stable graph/config fingerprints.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x1_0000_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss5_integrates_high_degree_polynomials() {
        let exact = 2.0_f64.powi(8) / 8.0;
        let got = gauss5(|x| x.powi(7), 0.0, 2.0);
        assert!((got - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn cumulative_integral_matches_smooth_antiderivative() {
        let n = 257;
        let h = 1.0 / (n as f64 - 1.0);
        let values: Vec<f64> = (0..n).map(|k| (k as f64 * h).exp()).collect();
        let cum = cumulative_integral(&values, h);
        for (k, got) in cum.iter().enumerate() {
            let exact = (k as f64 * h).exp() - 1.0;
            assert!((got - exact).abs() < 1e-10, "node {k}");
        }
    }

    #[test]
    fn thomas_solves_reference_system() {
        let sub = [0.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0];
        let sup = [1.0, 1.0, 0.0];
        let rhs = [5.0, 6.0, 5.0];
        let u = thomas_solve(&sub, &diag, &sup, &rhs).unwrap();
        for (got, want) in u.iter().zip([1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn thomas_rejects_singular_pivot() {
        assert!(thomas_solve(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn slope_of_quadratic_is_two() {
        let xs = [0.05, 0.1, 0.2];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((log_log_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
