//! Run configuration: strict JSON schema with dotted-path overrides.
//!
//! A run config has four blocks: `graph` (the star-graph description),
//! `experiment` (a tagged `kind` plus kind-specific parameters), `numerics`
//! (step sizes and ensemble sizes, all defaulted), and `seed`/`out_dir`.
//! Unknown keys are rejected everywhere. Overrides are `key.path=value`
//! assignments applied to the raw JSON before validation, so a rerun of the
//! emitted fully-resolved config reproduces a run bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CoefficientSpec, GraphError, StarGraph, StarGraphSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
    #[error("bad override '{0}': expected key.path=value")]
    BadOverride(String),
    #[error("unknown key '{key}' in {context}")]
    UnknownKey { key: String, context: String },
    #[error("{0}")]
    Invalid(String),
}

/// Violations of the numerics block (positive step sizes and the like);
/// reported separately from schema errors so the CLI can exit with a
/// distinct code.
#[derive(Debug, Error)]
#[error("bad numerical parameter: {0}")]
pub struct NumericsError(pub String);

fn default_out_dir() -> String {
    "runs/out".to_string()
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: StarGraphSpec,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub mesh_m: usize,
    pub truncation_r: f64,
    pub quad_nodes: usize,
    pub horizon: f64,
    pub t_cap: f64,
    pub time_steps: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            dt: 1e-4,
            n_paths: 1000,
            mesh_m: 400,
            truncation_r: 12.0,
            quad_nodes: 2049,
            horizon: 1.0,
            t_cap: 100.0,
            time_steps: 400,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<(), NumericsError> {
        let positive = [
            ("dt", self.dt),
            ("truncation_r", self.truncation_r),
            ("horizon", self.horizon),
            ("t_cap", self.t_cap),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(NumericsError(format!("{name} = {v} must be positive and finite")));
            }
        }
        if self.n_paths < 2 {
            return Err(NumericsError("n_paths must be at least 2".into()));
        }
        if self.mesh_m < 3 {
            return Err(NumericsError("mesh_m must be at least 3".into()));
        }
        if self.quad_nodes < 65 {
            return Err(NumericsError("quad_nodes must be at least 65".into()));
        }
        if self.time_steps == 0 {
            return Err(NumericsError("time_steps must be positive".into()));
        }
        if self.horizon / self.dt > 1e9 {
            return Err(NumericsError("horizon/dt exceeds 1e9 steps".into()));
        }
        Ok(())
    }
}

/// Pass/fail oracle attached to an experiment; `rel_tol` is relative to the
/// oracle value, `sigma_tol` counts standard errors, and the check passes
/// if the estimate is within the larger of the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheck {
    pub value: f64,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub sigma_tol: Option<f64>,
}

impl OracleCheck {
    pub fn passes(&self, estimate: f64, se: f64) -> bool {
        let mut tol: f64 = 0.0;
        if let Some(r) = self.rel_tol {
            tol = tol.max(r * self.value.abs());
        }
        if let Some(s) = self.sigma_tol {
            tol = tol.max(s * se);
        }
        (estimate - self.value).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ItoFunctionSpec {
    Constant { c: f64 },
    Time,
    Radial,
    ExpMix { cs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    /// Simulate paths and export them as CSV.
    Simulate {
        #[serde(default = "default_one")]
        x0_edge: usize,
        #[serde(default)]
        x0_x: f64,
        #[serde(default)]
        sticky: bool,
    },
    /// Exit-time statistics from the vertex ball of radius `delta`.
    ExitStats {
        delta: f64,
        #[serde(default)]
        check: Option<OracleCheck>,
    },
    /// Elliptic Feynman-Kac estimate at `x0`. With `fd_rel_tol` set, the
    /// estimate is also checked against the finite-difference solution.
    FkElliptic {
        lambda: f64,
        f: Vec<CoefficientSpec>,
        theta: f64,
        #[serde(default = "default_one")]
        x0_edge: usize,
        #[serde(default)]
        x0_x: f64,
        #[serde(default)]
        omit_vertex_term: bool,
        #[serde(default)]
        check: Option<OracleCheck>,
        #[serde(default)]
        fd_rel_tol: Option<f64>,
    },
    /// Parabolic Feynman-Kac estimate at `(t0, x0)` with terminal data
    /// `u_terminal`; `f` and `theta` are time-constant in config-driven
    /// runs. With `fd_rel_tol` set, the estimate is checked against the
    /// finite-difference solution.
    FkParabolic {
        t_horizon: f64,
        #[serde(default)]
        t0: f64,
        f: Vec<CoefficientSpec>,
        theta: f64,
        u_terminal: Vec<CoefficientSpec>,
        #[serde(default = "default_one")]
        x0_edge: usize,
        #[serde(default)]
        x0_x: f64,
        #[serde(default)]
        fd_rel_tol: Option<f64>,
    },
    /// Closed-form vertex-ball solve; solution exported as CSV.
    Bvp {
        delta: f64,
        f: Vec<CoefficientSpec>,
        #[serde(default)]
        check: Option<OracleCheck>,
    },
    /// Mean change-of-variables residual over an ensemble of sticky paths.
    ItoTest {
        function: ItoFunctionSpec,
        #[serde(default)]
        sigma_tol: Option<f64>,
    },
}

impl ExperimentConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ExperimentConfig::Simulate { .. } => "simulate",
            ExperimentConfig::ExitStats { .. } => "exit-stats",
            ExperimentConfig::FkElliptic { .. } => "fk-elliptic",
            ExperimentConfig::FkParabolic { .. } => "fk-parabolic",
            ExperimentConfig::Bvp { .. } => "bvp",
            ExperimentConfig::ItoTest { .. } => "ito-test",
        }
    }

    fn allowed_keys(kind: &str) -> Option<&'static [&'static str]> {
        Some(match kind {
            "simulate" => &["kind", "x0_edge", "x0_x", "sticky"],
            "exit-stats" => &["kind", "delta", "check"],
            "fk-elliptic" => &[
                "kind",
                "lambda",
                "f",
                "theta",
                "x0_edge",
                "x0_x",
                "omit_vertex_term",
                "check",
                "fd_rel_tol",
            ],
            "fk-parabolic" => &[
                "kind",
                "t_horizon",
                "t0",
                "f",
                "theta",
                "u_terminal",
                "x0_edge",
                "x0_x",
                "fd_rel_tol",
            ],
            "bvp" => &["kind", "delta", "f", "check"],
            "ito-test" => &["kind", "function", "sigma_tol"],
            _ => return None,
        })
    }
}

/// Parses raw JSON text into a config value, without validation.
pub fn parse_config_value(text: &str) -> Result<serde_json::Value, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Applies a `key.path=value` assignment to a raw config value.
///
/// The value side is parsed as JSON when possible and falls back to a
/// string; intermediate path segments must name existing objects, the leaf
/// may be new.
pub fn apply_override(root: &mut serde_json::Value, assignment: &str) -> Result<(), ConfigError> {
    let (path, raw_value) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(assignment.to_string()))?;
    if path.is_empty() {
        return Err(ConfigError::BadOverride(assignment.to_string()));
    }
    let value: serde_json::Value = serde_json::from_str(raw_value)
        .unwrap_or_else(|_| serde_json::Value::String(raw_value.to_string()));

    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for seg in &segments[..segments.len() - 1] {
        cursor = match cursor {
            // Missing intermediate blocks are created; a misspelled block
            // name still fails afterwards when the strict schema sees it.
            serde_json::Value::Object(map) => map
                .entry(seg.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default())),
            serde_json::Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| ConfigError::Invalid(format!("bad array index '{seg}'")))?;
                items
                    .get_mut(idx)
                    .ok_or_else(|| ConfigError::Invalid(format!("index {idx} out of range")))?
            }
            _ => return Err(ConfigError::Invalid(format!("'{seg}' is not a container"))),
        };
    }
    let leaf = segments[segments.len() - 1];
    match cursor {
        serde_json::Value::Object(map) => {
            map.insert(leaf.to_string(), value);
            Ok(())
        }
        serde_json::Value::Array(items) => {
            let idx: usize = leaf
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("bad array index '{leaf}'")))?;
            let slot = items
                .get_mut(idx)
                .ok_or_else(|| ConfigError::Invalid(format!("index {idx} out of range")))?;
            *slot = value;
            Ok(())
        }
        _ => Err(ConfigError::Invalid(format!("cannot assign into '{leaf}'"))),
    }
}

/// Rejects unknown keys inside the experiment block. The tagged-enum
/// deserializer cannot do this on its own, so the raw value is re-checked
/// against the per-kind whitelist.
fn check_experiment_keys(value: &serde_json::Value) -> Result<(), ConfigError> {
    let Some(exp) = value.get("experiment").and_then(|e| e.as_object()) else {
        return Ok(());
    };
    let Some(kind) = exp.get("kind").and_then(|k| k.as_str()) else {
        return Ok(());
    };
    let Some(allowed) = ExperimentConfig::allowed_keys(kind) else {
        return Ok(());
    };
    for key in exp.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: key.clone(),
                context: format!("experiment '{kind}'"),
            });
        }
    }
    Ok(())
}

/// Deserializes and validates a config from a raw value.
pub fn config_from_value(value: serde_json::Value) -> Result<RunConfig, ConfigError> {
    check_experiment_keys(&value)?;
    serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))
}

/// Full pipeline: parse text, apply overrides, deserialize.
pub fn load_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut value = parse_config_value(text)?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    config_from_value(value)
}

impl RunConfig {
    /// Builds and validates the star graph described by the config.
    pub fn build_graph(&self) -> Result<StarGraph, ConfigError> {
        Ok(StarGraph::build(self.graph.clone())?)
    }

    /// The fully-resolved config (defaults materialized) as stable JSON.
    pub fn resolved_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
