//! Experiment orchestration behind the `stickydiff` binary: load a config,
//! apply overrides, run the requested experiment, persist CSV/JSON results
//! under the output directory, and report one PASS/FAIL line per requested
//! check.
//!
//! Every run first writes `resolved_config.json`, the fully-materialized
//! configuration; re-running that file reproduces the outputs byte for
//! byte.

use std::fs;
use std::io::BufWriter;
use std::path::{Path as FsPath, PathBuf};

use serde::Serialize;
use thiserror::Error;

use stickydiff::bvp;
use stickydiff::config::{
    load_config, ConfigError, ExperimentConfig, ItoFunctionSpec, NumericsError, OracleCheck,
    RunConfig,
};
use stickydiff::func::PerEdgeSpecs;
use stickydiff::graph::GraphPoint;
use stickydiff::io as sdio;
use stickydiff::numeric::mean_and_se;
use stickydiff::path::Simulator;
use stickydiff::time_change::stickify;
use stickydiff::validation::{
    self, FkEllipticOptions, ItoTestFunction, McEstimate, ValidationError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICS: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerics error: {0}")]
    Numerics(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerics(_) | CliError::Runtime(_) => EXIT_NUMERICS,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        CliError::Numerics(e.to_string())
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<bvp::BvpError> for CliError {
    fn from(e: bvp::BvpError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<sdio::IoError> for CliError {
    fn from(e: sdio::IoError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// JSON summary emitted next to experiment outputs.
#[derive(Debug, Serialize)]
struct Summary {
    experiment: String,
    estimate: f64,
    se: f64,
    n: usize,
    dt: f64,
    seed: u64,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pass: Option<bool>,
}

/// One printed check line.
#[derive(Debug)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckLine {
    fn print(&self) {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {}", self.name, self.detail);
    }
}

/// Loads the config, applies CLI overrides, and runs the experiment named
/// by the subcommand. Returns the process exit code.
pub fn run(
    subcommand: &str,
    config_path: &FsPath,
    seed: Option<u64>,
    out: Option<PathBuf>,
    overrides: &[String],
) -> i32 {
    match run_inner(subcommand, config_path, seed, out, overrides) {
        Ok(checks) => {
            let mut all_pass = true;
            for c in &checks {
                c.print();
                all_pass &= c.pass;
            }
            if all_pass {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(
    subcommand: &str,
    config_path: &FsPath,
    seed: Option<u64>,
    out: Option<PathBuf>,
    overrides: &[String],
) -> Result<Vec<CheckLine>, CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let mut all_overrides: Vec<String> = Vec::new();
    if let Some(s) = seed {
        all_overrides.push(format!("seed={s}"));
    }
    if let Some(dir) = &out {
        all_overrides.push(format!("out_dir={}", serde_json::json!(dir.display().to_string())));
    }
    all_overrides.extend_from_slice(overrides);

    let config = load_config(&text, &all_overrides)?;
    if config.experiment.kind_name() != subcommand {
        return Err(CliError::Config(format!(
            "config describes a '{}' experiment but the subcommand is '{subcommand}'",
            config.experiment.kind_name()
        )));
    }
    config.numerics.validate()?;
    execute(&config)
}

/// Runs a validated config and writes its outputs. Exposed so integration
/// tests can drive experiments without spawning the binary.
pub fn execute(config: &RunConfig) -> Result<Vec<CheckLine>, CliError> {
    let graph = config.build_graph()?;
    let out_dir = PathBuf::from(&config.out_dir);
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("resolved_config.json"), config.resolved_json())?;

    let num = &config.numerics;
    let mut checks = Vec::new();
    match &config.experiment {
        ExperimentConfig::Simulate { x0_edge, x0_x, sticky } => {
            let paths_dir = out_dir.join("paths");
            fs::create_dir_all(&paths_dir)?;
            let sim = Simulator::new(&graph, num.dt);
            let x0 = GraphPoint::new(*x0_edge, *x0_x);
            graph
                .check_point(x0)
                .map_err(|e| CliError::Config(format!("bad start point: {e}")))?;
            let results = validation::run_paths(num.n_paths, config.seed, |i, rng| {
                let y = sim.nonsticky_path(x0, num.horizon, rng)?;
                let path = if *sticky { stickify(&y, graph.eta())? } else { y };
                Ok::<_, ValidationError>((i, path))
            });
            for r in results {
                let (i, path) = r?;
                let file = fs::File::create(paths_dir.join(format!("path_{i:05}.csv")))?;
                sdio::export_path_csv(&path, BufWriter::new(file))?;
            }
            let summary = serde_json::json!({
                "experiment": "simulate",
                "n": num.n_paths,
                "dt": num.dt,
                "horizon": num.horizon,
                "sticky": sticky,
                "seed": config.seed,
                "config_hash": format!("{:016x}", graph.hash()),
            });
            fs::write(
                out_dir.join("summary.json"),
                format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()),
            )?;
        }
        ExperimentConfig::ExitStats { delta, check } => {
            let stats = validation::mc_exit_stats(
                &graph,
                *delta,
                num.n_paths,
                num.dt,
                config.seed,
                num.t_cap,
            )?;
            fs::write(out_dir.join("exit_stats.json"), sdio::to_json_string(&stats))?;
            if let Some(oracle) = check {
                let pass = oracle.passes(stats.mean_exit_time, stats.exit_time_se);
                checks.push(CheckLine {
                    name: "exit-stats.mean_exit_time".into(),
                    pass,
                    detail: format!(
                        "estimate={:.6} se={:.2e} oracle={:.6}",
                        stats.mean_exit_time, stats.exit_time_se, oracle.value
                    ),
                });
            }
        }
        ExperimentConfig::FkElliptic {
            lambda,
            f,
            theta,
            x0_edge,
            x0_x,
            omit_vertex_term,
            check,
            fd_rel_tol,
        } => {
            ensure_per_edge(&graph, f, "f")?;
            let f_spec = PerEdgeSpecs(f.clone());
            let x0 = GraphPoint::new(*x0_edge, *x0_x);
            let est = validation::mc_feynman_kac_elliptic(
                &graph,
                *lambda,
                &f_spec,
                *theta,
                x0,
                num.n_paths,
                num.dt,
                num.horizon,
                config.seed,
                FkEllipticOptions { omit_vertex_term: *omit_vertex_term },
            )?;
            if let Some(rel_tol) = fd_rel_tol {
                let fd = bvp::solve_elliptic(
                    &graph,
                    *lambda,
                    &f_spec,
                    *theta,
                    num.truncation_r,
                    num.mesh_m,
                )?;
                let file = fs::File::create(out_dir.join("fd_solution.csv"))?;
                sdio::export_grid_csv(&fd, BufWriter::new(file))?;
                let reference = fd.value_at(x0.edge(), x0.x());
                let ok = (est.value - reference).abs() <= rel_tol * reference.abs();
                checks.push(CheckLine {
                    name: "fk-elliptic.vs_fd".into(),
                    pass: ok,
                    detail: format!(
                        "estimate={:.6} fd={:.6} rel_tol={rel_tol}",
                        est.value, reference
                    ),
                });
            }
            write_estimate(&out_dir, "fk-elliptic", &est, check.as_ref(), &mut checks)?;
        }
        ExperimentConfig::FkParabolic {
            t_horizon,
            t0,
            f,
            theta,
            u_terminal,
            x0_edge,
            x0_x,
            fd_rel_tol,
        } => {
            ensure_per_edge(&graph, f, "f")?;
            ensure_per_edge(&graph, u_terminal, "u_terminal")?;
            let f_spec = PerEdgeSpecs(f.clone());
            let u_spec = PerEdgeSpecs(u_terminal.clone());
            let theta_c = *theta;
            let x0 = GraphPoint::new(*x0_edge, *x0_x);
            let est = validation::mc_feynman_kac_parabolic(
                &graph,
                *t0,
                *t_horizon,
                &|_t: f64, e: usize, x: f64| {
                    stickydiff::func::EdgeFunction::eval(&f_spec, e, x)
                },
                &move |_t| theta_c,
                &u_spec,
                x0,
                num.n_paths,
                num.dt,
                config.seed,
            )?;
            let mut oracle_value = None;
            let mut pass = None;
            if let Some(rel_tol) = fd_rel_tol {
                let fd = bvp::solve_parabolic(
                    &graph,
                    *t_horizon,
                    &|_t: f64, e: usize, x: f64| {
                        stickydiff::func::EdgeFunction::eval(&f_spec, e, x)
                    },
                    &move |_t| theta_c,
                    &u_spec,
                    num.truncation_r,
                    num.mesh_m,
                    num.time_steps,
                )?;
                let file = fs::File::create(out_dir.join("fd_solution.csv"))?;
                sdio::export_parabolic_csv(&fd, BufWriter::new(file))?;
                let reference = fd.value_at(*t0, x0.edge(), x0.x());
                let ok = (est.value - reference).abs() <= rel_tol * reference.abs();
                oracle_value = Some(reference);
                pass = Some(ok);
                checks.push(CheckLine {
                    name: "fk-parabolic.vs_fd".into(),
                    pass: ok,
                    detail: format!(
                        "estimate={:.6} fd={:.6} rel_tol={rel_tol}",
                        est.value, reference
                    ),
                });
            }
            let summary = Summary {
                experiment: "fk-parabolic".into(),
                estimate: est.value,
                se: est.std_error,
                n: est.n_paths,
                dt: est.dt,
                seed: est.seed,
                config_hash: est.config_hash.clone(),
                truncation_bias: None,
                oracle_value,
                pass,
            };
            fs::write(out_dir.join("estimate.json"), sdio::to_json_string(&summary))?;
        }
        ExperimentConfig::Bvp { delta, f, check } => {
            ensure_per_edge(&graph, f, "f")?;
            let f_spec = PerEdgeSpecs(f.clone());
            let sol = bvp::solve_ball_bvp(&graph, *delta, &f_spec, num.quad_nodes)?;
            let residuals = bvp::bvp_residual(&graph, &sol, &f_spec, 65);
            let file = fs::File::create(out_dir.join("bvp_solution.csv"))?;
            let mut w = BufWriter::new(file);
            {
                use std::io::Write;
                writeln!(w, "edge,x,u").map_err(CliError::from)?;
                for edge in 1..=graph.n_edges() {
                    for k in 0..sol.nodes() {
                        let x = sol.grid_x(k);
                        writeln!(w, "{edge},{x:.16e},{:.16e}", sol.u(edge, x))
                            .map_err(CliError::from)?;
                    }
                }
            }
            fs::write(out_dir.join("residuals.json"), sdio::to_json_string(&residuals))?;
            if let Some(oracle) = check {
                let pass = oracle.passes(sol.vertex_value(), 0.0);
                checks.push(CheckLine {
                    name: "bvp.vertex_value".into(),
                    pass,
                    detail: format!(
                        "u(v)={:.8} oracle={:.8}",
                        sol.vertex_value(),
                        oracle.value
                    ),
                });
            }
        }
        ExperimentConfig::ItoTest { function, sigma_tol } => {
            let tf = ito_function(function, &graph)?;
            let sim = Simulator::new(&graph, num.dt);
            let results = validation::run_paths(num.n_paths, config.seed, |_, rng| {
                let y = sim.nonsticky_path(GraphPoint::vertex(), num.horizon, rng)?;
                let x = stickify(&y, graph.eta())?;
                let m = validation::ito_residual(&graph, &x, &tf)?;
                Ok::<_, ValidationError>(*m.last().unwrap())
            });
            let samples: Result<Vec<f64>, ValidationError> = results.into_iter().collect();
            let samples = samples?;
            let (mean, se) = mean_and_se(&samples);
            let tol_sigma = sigma_tol.unwrap_or(3.0);
            let pass = mean.abs() <= tol_sigma * se;
            let summary = Summary {
                experiment: "ito-test".into(),
                estimate: mean,
                se,
                n: num.n_paths,
                dt: num.dt,
                seed: config.seed,
                config_hash: format!("{:016x}", graph.hash()),
                truncation_bias: None,
                oracle_value: Some(0.0),
                pass: Some(pass),
            };
            fs::write(out_dir.join("ito.json"), sdio::to_json_string(&summary))?;
            checks.push(CheckLine {
                name: "ito-test.mean_residual".into(),
                pass,
                detail: format!("mean={mean:.3e} se={se:.3e} tol={tol_sigma} sigma"),
            });
        }
    }
    Ok(checks)
}

fn ensure_per_edge(
    graph: &stickydiff::graph::StarGraph,
    specs: &[stickydiff::graph::CoefficientSpec],
    name: &str,
) -> Result<(), CliError> {
    if specs.len() != graph.n_edges() {
        return Err(CliError::Config(format!(
            "{name} must list one spec per edge ({} expected, {} given)",
            graph.n_edges(),
            specs.len()
        )));
    }
    for s in specs {
        s.validate().map_err(|e| CliError::Config(format!("{name}: {e}")))?;
    }
    Ok(())
}

fn ito_function(
    spec: &ItoFunctionSpec,
    graph: &stickydiff::graph::StarGraph,
) -> Result<ItoTestFunction, CliError> {
    Ok(match spec {
        ItoFunctionSpec::Constant { c } => ItoTestFunction::constant(*c),
        ItoFunctionSpec::Time => ItoTestFunction::time_coordinate(),
        ItoFunctionSpec::Radial => ItoTestFunction::radial_coordinate(),
        ItoFunctionSpec::ExpMix { cs } => {
            if cs.len() != graph.n_edges() {
                return Err(CliError::Config(format!(
                    "exp-mix needs {} slopes, got {}",
                    graph.n_edges(),
                    cs.len()
                )));
            }
            ItoTestFunction::exp_mix(cs.clone())
        }
    })
}

fn write_estimate(
    out_dir: &FsPath,
    experiment: &str,
    est: &McEstimate,
    check: Option<&OracleCheck>,
    checks: &mut Vec<CheckLine>,
) -> Result<(), CliError> {
    let mut oracle_value = None;
    let mut pass = None;
    if let Some(oracle) = check {
        let ok = oracle.passes(est.value, est.std_error);
        oracle_value = Some(oracle.value);
        pass = Some(ok);
        checks.push(CheckLine {
            name: format!("{experiment}.estimate"),
            pass: ok,
            detail: format!(
                "estimate={:.6} se={:.2e} oracle={:.6}",
                est.value, est.std_error, oracle.value
            ),
        });
    }
    let summary = Summary {
        experiment: experiment.into(),
        estimate: est.value,
        se: est.std_error,
        n: est.n_paths,
        dt: est.dt,
        seed: est.seed,
        config_hash: est.config_hash.clone(),
        truncation_bias: Some(est.truncation_bias),
        oracle_value,
        pass,
    };
    fs::write(out_dir.join("estimate.json"), sdio::to_json_string(&summary))?;
    Ok(())
}
