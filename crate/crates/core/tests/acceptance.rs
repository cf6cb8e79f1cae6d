//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.
//! Every tolerance is pinned in code next to the criterion it gates.

use rand::RngExt;

use stickydiff::bvp::{bvp_residual, solve_ball_bvp, solve_parabolic};
use stickydiff::graph::{symmetric_graph, CoefficientSpec, GraphPoint, StarGraph, StarGraphSpec};
use stickydiff::local_time::{occupation_estimator, upcrossing_estimator, vertex_occupation};
use stickydiff::numeric::{mean_and_se, wilson_half_width};
use stickydiff::path::Simulator;
use stickydiff::rng::path_stream;
use stickydiff::time_change::{destickify, stickify};
use stickydiff::validation::{
    convergence_slope, ito_residual, mc_exit_stats, mc_feynman_kac_elliptic,
    mc_feynman_kac_parabolic, run_paths, FkEllipticOptions, ItoTestFunction,
};

fn report(name: &str, pass: bool, detail: &str) {
    println!("[{name}] {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "[{name}] {detail}");
}

/// A1: mean exit time of the sticky process from the vertex ball matches
/// the closed-form oracle within max(3 se, 2%).
#[test]
fn a1_exit_time_matches_ball_oracle() {
    let g = symmetric_graph(3, 2.0, 0.5);
    let delta = 0.1;
    let dt = 1e-5;
    let n_paths = 100_000;

    // Oracle from the closed-form ball solve with unit source; the
    // hand-integrated value for this family is eta*delta + delta^2/2.
    let oracle = solve_ball_bvp(&g, delta, &|_: usize, _: f64| -1.0, 2049)
        .unwrap()
        .vertex_value();
    assert!((oracle - 0.055).abs() < 1e-10);

    let stats = mc_exit_stats(&g, delta, n_paths, dt, 101, 1e3).unwrap();
    let tol = (3.0 * stats.exit_time_se).max(0.02 * oracle);
    let err = (stats.mean_exit_time - oracle).abs();
    report(
        "A1",
        err <= tol,
        &format!(
            "mean_exit_time={:.6} oracle={oracle:.6} err={err:.2e} tol={tol:.2e} (se={:.2e}, n={n_paths}, dt={dt:e})",
            stats.mean_exit_time, stats.exit_time_se
        ),
    );
}

/// A2: exit-edge frequencies match the vertex weights within three Wilson
/// half-widths each.
#[test]
fn a2_exit_edge_frequencies_match_weights() {
    let rho = [0.5, 0.3, 0.2];
    let g = StarGraph::build(StarGraphSpec {
        n_edges: 3,
        rho: rho.to_vec(),
        eta: 0.5,
        sigma: vec![CoefficientSpec::constant(2.0_f64.sqrt()); 3],
        drift: vec![CoefficientSpec::constant(0.0); 3],
        sigma_floor: 0.1,
        validation_extent: 50.0,
    })
    .unwrap();
    let n_paths = 100_000;
    let stats = mc_exit_stats(&g, 0.05, n_paths, 1e-5, 202, 1e3).unwrap();
    let mut pass = true;
    let mut detail = String::new();
    for (j, (freq, weight)) in stats.edge_frequency.iter().zip(&rho).enumerate() {
        let w = wilson_half_width(*freq, n_paths, 1.0);
        let ok = (freq - weight).abs() <= 3.0 * w;
        pass &= ok;
        detail.push_str(&format!("edge{}: {freq:.4} vs {weight:.1} (3w={:.4}) ", j + 1, 3.0 * w));
    }
    report("A2", pass, detail.trim());
}

/// A3: the occupation identity holds exactly (1e-12 relative) on every
/// generated sticky path.
#[test]
fn a3_occupation_identity_exact_pathwise() {
    let g = symmetric_graph(3, 2.0, 0.5);
    let eta = g.eta();
    let sim = Simulator::new(&g, 1e-3);
    let n_paths = 1000;
    let worst = run_paths(n_paths, 303, |_, rng| {
        let y = sim.nonsticky_path(GraphPoint::vertex(), 1.0, rng).unwrap();
        let x = stickify(&y, eta).unwrap();
        let t = x.horizon();
        let occ = vertex_occupation(&x, t);
        let target = eta * x.ell_final();
        (occ - target).abs() / target.max(1e-6)
    })
    .into_iter()
    .fold(0.0_f64, f64::max);
    report(
        "A3",
        worst <= 1e-12,
        &format!("max relative occupation defect over {n_paths} paths = {worst:.2e} (tol 1e-12)"),
    );
}

/// A4: upcrossing and scaled-occupation estimators agree with the sticky
/// local time at t = 1 within 10%, averaged over 100 paths.
///
/// delta and dt are pinned; the diffusion scale is chosen so the pinned
/// pair resolves excursions (sigma sqrt(dt) well below delta).
#[test]
fn a4_local_time_estimators_consistent() {
    let g = symmetric_graph(3, 0.25, 0.5);
    let eta = g.eta();
    let delta = 0.01;
    let dt = 1e-6;
    let sim = Simulator::new(&g, dt);
    let t = 1.0;
    let n_paths = 100;
    let triples = run_paths(n_paths, 404, |_, rng| {
        let y = sim.nonsticky_path(GraphPoint::vertex(), t, rng).unwrap();
        let x = stickify(&y, eta).unwrap();
        (x.ell_at(t), upcrossing_estimator(&x, delta, t), occupation_estimator(&g, &x, delta, t))
    });
    let ell_mean = triples.iter().map(|t| t.0).sum::<f64>() / n_paths as f64;
    let up_mean = triples.iter().map(|t| t.1).sum::<f64>() / n_paths as f64;
    let occ_mean = triples.iter().map(|t| t.2).sum::<f64>() / n_paths as f64;
    let up_rel = (up_mean - ell_mean).abs() / ell_mean;
    let occ_rel = (occ_mean - ell_mean).abs() / ell_mean;
    report(
        "A4",
        up_rel <= 0.10 && occ_rel <= 0.10,
        &format!(
            "ell={ell_mean:.4}; upcrossing={up_mean:.4} ({:+.1}%), occupation={occ_mean:.4} ({:+.1}%), tol 10%",
            100.0 * (up_mean / ell_mean - 1.0),
            100.0 * (occ_mean / ell_mean - 1.0)
        ),
    );
}

/// A5: the elliptic representation reproduces the constant solution, and
/// deliberately dropping the vertex term breaks it beyond three standard
/// errors.
#[test]
fn a5_elliptic_constant_solution_and_vertex_term() {
    let g = symmetric_graph(3, 2.0, 0.5);
    let horizon = 12.0;
    let n_paths = 10_000;
    let with_theta = mc_feynman_kac_elliptic(
        &g,
        1.0,
        &|_: usize, _: f64| -1.0,
        -1.0,
        GraphPoint::vertex(),
        n_paths,
        1e-3,
        horizon,
        505,
        FkEllipticOptions::default(),
    )
    .unwrap();
    // Constant data makes the estimator zero-variance; the only deviation
    // from 1 is the reported horizon-truncation bias (plus accumulation
    // noise of order 1e-9).
    let tol = 3.0 * with_theta.std_error + with_theta.truncation_bias + 1e-9;
    let err = (with_theta.value - 1.0).abs();
    let main_ok = err <= tol;

    let without_theta = mc_feynman_kac_elliptic(
        &g,
        1.0,
        &|_: usize, _: f64| -1.0,
        -1.0,
        GraphPoint::vertex(),
        n_paths,
        1e-3,
        horizon,
        505,
        FkEllipticOptions { omit_vertex_term: true },
    )
    .unwrap();
    // Dropping the theta term removes the vertex-occupation mass: the
    // estimate must fail by more than three standard errors.
    let bias = (without_theta.value - 1.0).abs();
    let discriminates = bias > 3.0 * without_theta.std_error && without_theta.value < 1.0;

    report(
        "A5",
        main_ok && discriminates,
        &format!(
            "with theta: {:.8} (err {err:.2e} <= tol {tol:.2e}); without: {:.5} (|bias| {bias:.3} > 3se {:.3})",
            with_theta.value,
            without_theta.value,
            3.0 * without_theta.std_error
        ),
    );
}

/// A6: parabolic representation vs the finite-difference oracle at the
/// vertex, within 2%.
#[test]
fn a6_parabolic_matches_fd_oracle() {
    let g = symmetric_graph(3, 2.0, 0.5);
    let u_t = |_: usize, x: f64| (-x).exp();
    let fd = solve_parabolic(
        &g,
        1.0,
        &|_t: f64, _e: usize, _x: f64| 0.0,
        &|_t| 0.0,
        &u_t,
        6.0,
        400,
        400,
    )
    .unwrap();
    let reference = fd.vertex_at_start();
    let mc = mc_feynman_kac_parabolic(
        &g,
        0.0,
        1.0,
        &|_t: f64, _e: usize, _x: f64| 0.0,
        &|_t| 0.0,
        &u_t,
        GraphPoint::vertex(),
        10_000,
        1e-4,
        606,
    )
    .unwrap();
    let rel = (mc.value - reference).abs() / reference.abs();
    report(
        "A6",
        rel <= 0.02,
        &format!(
            "mc={:.5} (se {:.1e}) fd={reference:.5} rel_err={:.2}% (tol 2%)",
            mc.value,
            mc.std_error,
            100.0 * rel
        ),
    );
}

/// A7: the change-of-variables remainder is mean zero for the four test
/// functions; the `f = t` case vanishes pathwise to 1e-12.
#[test]
fn a7_ito_residual_mean_zero() {
    let g = StarGraph::build(StarGraphSpec {
        n_edges: 3,
        rho: vec![0.5, 0.3, 0.2],
        eta: 0.5,
        sigma: vec![CoefficientSpec::constant(2.0_f64.sqrt()); 3],
        drift: vec![CoefficientSpec::constant(0.0); 3],
        sigma_floor: 0.1,
        validation_extent: 50.0,
    })
    .unwrap();
    let eta = g.eta();
    let sim = Simulator::new(&g, 1e-3);
    let n_paths = 10_000;
    let horizon = 1.0;

    let mut pass = true;
    let mut detail = String::new();

    // f constant: every term vanishes, M identically zero.
    {
        let tf = ItoTestFunction::constant(1.0);
        let max_abs = run_paths(50, 701, |_, rng| {
            let y = sim.nonsticky_path(GraphPoint::vertex(), horizon, rng).unwrap();
            let x = stickify(&y, eta).unwrap();
            ito_residual(&g, &x, &tf)
                .unwrap()
                .into_iter()
                .fold(0.0_f64, |a, v| a.max(v.abs()))
        })
        .into_iter()
        .fold(0.0_f64, f64::max);
        pass &= max_abs == 0.0;
        detail.push_str(&format!("const: max|M|={max_abs:.1e}; "));
    }

    // f = t: cancellation through the occupation identity, pathwise.
    {
        let tf = ItoTestFunction::time_coordinate();
        let max_abs = run_paths(n_paths, 702, |_, rng| {
            let y = sim.nonsticky_path(GraphPoint::vertex(), horizon, rng).unwrap();
            let x = stickify(&y, eta).unwrap();
            ito_residual(&g, &x, &tf)
                .unwrap()
                .into_iter()
                .fold(0.0_f64, |a, v| a.max(v.abs()))
        })
        .into_iter()
        .fold(0.0_f64, f64::max);
        pass &= max_abs <= 1e-12;
        detail.push_str(&format!("time: max|M|={max_abs:.1e} (tol 1e-12); "));
    }

    // f_i = x and the exponential mixture: mean zero within 3 se. These
    // run off the vertex at dt = 1e-4: a path leaving its deterministic
    // start edge realizes the per-edge slope change of f as a jump at its
    // first crossing knot, a one-off O(sqrt(dt)) weak error that has to sit
    // well below the statistical gate (measured twelve se at dt = 1e-3 and
    // a fifth of an se at 1e-4 for this ensemble size).
    let sim_fine = Simulator::new(&g, 1e-4);
    for (name, tf, seed) in [
        ("radial", ItoTestFunction::radial_coordinate(), 703_u64),
        ("exp-mix", ItoTestFunction::exp_mix(vec![2.0, -1.0, 0.5]), 704),
    ] {
        let finals = run_paths(n_paths, seed, |_, rng| {
            let y = sim_fine.nonsticky_path(GraphPoint::new(1, 0.5), horizon, rng).unwrap();
            let x = stickify(&y, eta).unwrap();
            let m = ito_residual(&g, &x, &tf).unwrap();
            // M at sticky time 1 (last knot at or before it).
            let j = x.times.partition_point(|s| *s <= 1.0) - 1;
            m[j]
        });
        let (mean, se) = mean_and_se(&finals);
        let ok = mean.abs() <= 3.0 * se;
        pass &= ok;
        detail.push_str(&format!("{name}: mean={mean:.2e} (3se={:.2e}); ", 3.0 * se));
    }

    report("A7", pass, detail.trim_end_matches("; "));
}

/// A8: |u_eta(0) - eta delta| from the closed-form ball solve scales as
/// delta^2: log-log slope 2 within 1e-6.
#[test]
fn a8_ball_value_delta_squared_slope() {
    let g = symmetric_graph(3, 2.0, 0.5);
    let eta = g.eta();
    let deltas = [0.05, 0.1, 0.2];
    let mut ys = Vec::new();
    for delta in deltas {
        let sol = solve_ball_bvp(&g, delta, &|_: usize, _: f64| -1.0, 2049).unwrap();
        ys.push((sol.vertex_value() - eta * delta).abs());
    }
    let slope = convergence_slope(&deltas, &ys).unwrap();
    report(
        "A8",
        (slope - 2.0).abs() <= 1e-6,
        &format!("slope={slope:.9} (want 2 within 1e-6); residual values {ys:?}"),
    );
}

/// A9: randomized ball problems solve to small residuals, with the second
/// derivative bounded uniformly in delta by the a priori estimate.
#[test]
fn a9_randomized_ball_problems() {
    let deltas = [0.2, 0.1, 0.05];
    let mut worst_res: f64 = 0.0;
    let mut worst_margin: f64 = 0.0;
    for trial in 0..10u64 {
        let mut rng = path_stream(909, trial);
        let n_edges = 2 + (rng.random::<u64>() % 3) as usize;
        let mut rho: Vec<f64> = (0..n_edges).map(|_| 0.2 + rng.random::<f64>()).collect();
        let total: f64 = rho.iter().sum();
        rho.iter_mut().for_each(|r| *r /= total);
        let sigma: Vec<CoefficientSpec> = (0..n_edges)
            .map(|_| {
                if rng.random::<f64>() < 0.5 {
                    CoefficientSpec::constant(0.8 + rng.random::<f64>())
                } else {
                    CoefficientSpec::Affine {
                        a0: 0.9 + rng.random::<f64>(),
                        a1: 0.6 * rng.random::<f64>() - 0.3,
                    }
                }
            })
            .collect();
        let drift: Vec<CoefficientSpec> = (0..n_edges)
            .map(|_| {
                if rng.random::<f64>() < 0.5 {
                    CoefficientSpec::constant(2.0 * rng.random::<f64>() - 1.0)
                } else {
                    CoefficientSpec::Affine {
                        a0: 2.0 * rng.random::<f64>() - 1.0,
                        a1: 2.0 * rng.random::<f64>() - 1.0,
                    }
                }
            })
            .collect();
        let g = StarGraph::build(StarGraphSpec {
            n_edges,
            rho,
            eta: rng.random::<f64>(),
            sigma,
            drift,
            sigma_floor: 0.3,
            validation_extent: 1.0,
        })
        .unwrap();
        let f0 = 4.0 * rng.random::<f64>() - 2.0;
        let slopes: Vec<f64> = (0..n_edges).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect();
        let f = move |edge: usize, x: f64| f0 + slopes[edge - 1] * x;

        // A priori data over the largest ball.
        let ball = deltas[0];
        let mut f_sup: f64 = 0.0;
        let mut b_sup: f64 = 0.0;
        let mut sigma_min = f64::INFINITY;
        for edge in 1..=n_edges {
            for k in 0..=100 {
                let x = ball * k as f64 / 100.0;
                f_sup = f_sup.max(f(edge, x).abs());
                b_sup = b_sup.max(g.drift_at(edge, x).abs());
                sigma_min = sigma_min.min(g.sigma_at(edge, x));
            }
        }
        let s02 = sigma_min * sigma_min;
        let mut a_sup: f64 = 0.0;

        let mut u2_by_delta = Vec::new();
        for delta in deltas {
            let sol = solve_ball_bvp(&g, delta, &f, 2049).unwrap();
            let res = bvp_residual(&g, &sol, &f, 65);
            worst_res = worst_res
                .max(res.max_ode_residual)
                .max(res.junction_residual)
                .max(res.dirichlet_residual);
            for edge in 1..=n_edges {
                a_sup = a_sup.max(sol.flux_const(edge).abs());
            }
            u2_by_delta.push(res.max_u2);
        }
        // |u''| <= (2|f| + 2|b| |u'|) / sigma0^2 with
        // |u'| <= (|A| + 2 |f| delta / sigma0^2 e2) e2, e2 = e^{2 delta |b| / sigma0^2},
        // evaluated at the largest delta, hence uniform over the sweep.
        let e2 = (2.0 * ball * b_sup / s02).exp();
        let bound =
            (2.0 * f_sup + 2.0 * b_sup * (a_sup + 2.0 * f_sup * ball / s02 * e2) * e2) / s02;
        for u2 in u2_by_delta {
            worst_margin = worst_margin.max(u2 / bound);
        }
    }
    report(
        "A9",
        worst_res <= 1e-8 && worst_margin <= 1.0,
        &format!(
            "max residual {worst_res:.2e} (tol 1e-8); max |u''| at {:.0}% of the a priori bound",
            100.0 * worst_margin
        ),
    );
}

/// A10: destickify undoes stickify knot-for-knot on 1e3 random paths.
#[test]
fn a10_round_trip_exact() {
    let g = symmetric_graph(3, 2.0, 0.0);
    let sim = Simulator::new(&g, 2e-3);
    let n_paths = 1000;
    let mismatches: usize = run_paths(n_paths, 1010, |i, rng| {
        let y = sim.nonsticky_path(GraphPoint::vertex(), 1.0, rng).unwrap();
        let eta = 0.25 + 0.5 * (i % 4) as f64;
        let back = destickify(&stickify(&y, eta).unwrap()).unwrap();
        let same = back.times == y.times
            && back.edges == y.edges
            && back.xs == y.xs
            && back.ell == y.ell;
        usize::from(!same)
    })
    .into_iter()
    .sum();
    report(
        "A10",
        mismatches == 0,
        &format!("{mismatches} mismatched paths out of {n_paths} (exact knot equality)"),
    );
}

/// Supplementary invariant: increments of the remainder martingale are
/// serially uncorrelated (99% confidence).
#[test]
fn ito_increment_autocorrelation_within_ci() {
    let g = symmetric_graph(3, 2.0, 0.5);
    let eta = g.eta();
    let sim = Simulator::new(&g, 1e-3);
    let tf = ItoTestFunction::radial_coordinate();
    let sums = run_paths(200, 808, |_, rng| {
        let y = sim.nonsticky_path(GraphPoint::vertex(), 1.0, rng).unwrap();
        let x = stickify(&y, eta).unwrap();
        let m = ito_residual(&g, &x, &tf).unwrap();
        // Increments over a fixed coarse partition (inserted crossing knots
        // split single steps, so knot-to-knot increments are mechanically
        // dependent; the martingale property concerns disjoint windows).
        let horizon = x.horizon();
        let windows = 20;
        let sampled: Vec<f64> = (0..=windows)
            .map(|k| {
                let t = horizon * k as f64 / windows as f64;
                let j = x.times.partition_point(|s| *s <= t).saturating_sub(1);
                m[j]
            })
            .collect();
        let inc: Vec<f64> = sampled.windows(2).map(|w| w[1] - w[0]).collect();
        let cross: f64 = inc.windows(2).map(|w| w[0] * w[1]).sum();
        let cross2: f64 = inc.windows(2).map(|w| (w[0] * w[1]) * (w[0] * w[1])).sum();
        (cross, cross2)
    });
    let total: f64 = sums.iter().map(|s| s.0).sum();
    let var: f64 = sums.iter().map(|s| s.1).sum();
    let z = total / var.sqrt();
    assert!(
        z.abs() <= 2.576,
        "lag-1 autocorrelation statistic z = {z:.3} outside the 99% interval"
    );
}
