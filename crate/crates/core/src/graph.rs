//! Static star-graph model: geometry, metric, coefficients, derived constants.
//!
//! A star graph is `N` copies of the half-line `[0, inf)` glued at one vertex.
//! Points are `(edge, x)` pairs with all `(j, 0)` identified. Each edge
//! carries a diffusion coefficient `sigma_i`, a drift `b_i`, and a positive
//! vertex weight `rho_i`; the weights sum to one. The stickiness parameter
//! `eta >= 0` controls how much Lebesgue time the sticky process spends at
//! the vertex.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::fnv1a64;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge weights must sum to 1 within 1e-12, got {sum}")]
    RhoSum { sum: f64 },
    #[error("edge weight rho[{index}] = {value} is not strictly positive")]
    RhoNonPositive { index: usize, value: f64 },
    #[error("sigma on edge {edge} falls to {value} at x = {x}, below the floor {floor}")]
    Ellipticity { edge: usize, x: f64, value: f64, floor: f64 },
    #[error("tabulated grid must be strictly ascending with at least 2 nodes")]
    BadTable,
    #[error("coefficient values must be finite")]
    NonFinite,
    #[error("graph must have at least one edge")]
    NoEdges,
    #[error("expected {expected} coefficient specs, got {got}")]
    SpecLength { expected: usize, got: usize },
    #[error("stickiness eta = {0} must be finite and nonnegative")]
    BadEta(f64),
    #[error("sigma floor {0} must be finite and strictly positive")]
    BadFloor(f64),
    #[error("point ({edge}, {x}) is not on the graph")]
    BadPoint { edge: usize, x: f64 },
}

/// One scalar coefficient on a single edge, total on `[0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant { c: f64 },
    Affine { a0: f64, a1: f64 },
    /// Linear interpolation on a strictly ascending grid, constant beyond
    /// the outermost nodes.
    Tabulated { xs: Vec<f64>, vs: Vec<f64> },
}

impl CoefficientSpec {
    pub fn constant(c: f64) -> Self {
        CoefficientSpec::Constant { c }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        match self {
            CoefficientSpec::Constant { c } => {
                if !c.is_finite() {
                    return Err(GraphError::NonFinite);
                }
            }
            CoefficientSpec::Affine { a0, a1 } => {
                if !a0.is_finite() || !a1.is_finite() {
                    return Err(GraphError::NonFinite);
                }
            }
            CoefficientSpec::Tabulated { xs, vs } => {
                if xs.len() < 2 || xs.len() != vs.len() {
                    return Err(GraphError::BadTable);
                }
                if xs.iter().any(|x| !x.is_finite()) || vs.iter().any(|v| !v.is_finite()) {
                    return Err(GraphError::NonFinite);
                }
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(GraphError::BadTable);
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CoefficientSpec::Constant { c } => *c,
            CoefficientSpec::Affine { a0, a1 } => a0 + a1 * x,
            CoefficientSpec::Tabulated { xs, vs } => {
                if x <= xs[0] {
                    return vs[0];
                }
                if x >= xs[xs.len() - 1] {
                    return vs[vs.len() - 1];
                }
                let hi = xs.partition_point(|g| *g <= x);
                let (x0, x1) = (xs[hi - 1], xs[hi]);
                let (v0, v1) = (vs[hi - 1], vs[hi]);
                // Convex form: stays within [min(v0,v1), max(v0,v1)] even
                // for extreme table values.
                let w = (x - x0) / (x1 - x0);
                v0 * (1.0 - w) + v1 * w
            }
        }
    }

    /// Points at which the ellipticity floor is enforced.
    fn check_points(&self, extent: f64) -> Vec<f64> {
        match self {
            CoefficientSpec::Constant { .. } => vec![0.0],
            CoefficientSpec::Affine { .. } => vec![0.0, extent],
            CoefficientSpec::Tabulated { xs, .. } => {
                let mut points = vec![0.0];
                for w in xs.windows(2) {
                    points.push(w[0]);
                    points.push(0.5 * (w[0] + w[1]));
                }
                points.push(xs[xs.len() - 1]);
                points.push(extent.max(xs[xs.len() - 1]));
                points
            }
        }
    }
}

/// Raw star-graph description as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarGraphSpec {
    pub n_edges: usize,
    pub rho: Vec<f64>,
    pub eta: f64,
    pub sigma: Vec<CoefficientSpec>,
    pub drift: Vec<CoefficientSpec>,
    pub sigma_floor: f64,
    /// Upper end of the ellipticity validation window; defaults to 50.
    #[serde(default = "default_extent")]
    pub validation_extent: f64,
}

fn default_extent() -> f64 {
    50.0
}

/// A point `(edge, x)`; the vertex is canonically `(1, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphPoint {
    edge: usize,
    x: f64,
}

impl GraphPoint {
    /// Canonicalizes `(j, 0)` to `(1, 0)` so equality is structural.
    pub fn new(edge: usize, x: f64) -> Self {
        if x == 0.0 {
            GraphPoint { edge: 1, x: 0.0 }
        } else {
            GraphPoint { edge, x }
        }
    }

    pub const fn vertex() -> Self {
        GraphPoint { edge: 1, x: 0.0 }
    }

    pub fn edge(&self) -> usize {
        self.edge
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn is_vertex(&self) -> bool {
        self.x == 0.0
    }
}

/// Validated star graph; immutable after construction.
#[derive(Debug, Clone)]
pub struct StarGraph {
    spec: StarGraphSpec,
    hash: u64,
}

impl StarGraph {
    /// Checks every invariant of the raw description and freezes it.
    pub fn build(spec: StarGraphSpec) -> Result<Self, GraphError> {
        if spec.n_edges == 0 {
            return Err(GraphError::NoEdges);
        }
        if spec.rho.len() != spec.n_edges {
            return Err(GraphError::SpecLength { expected: spec.n_edges, got: spec.rho.len() });
        }
        if spec.sigma.len() != spec.n_edges {
            return Err(GraphError::SpecLength { expected: spec.n_edges, got: spec.sigma.len() });
        }
        if spec.drift.len() != spec.n_edges {
            return Err(GraphError::SpecLength { expected: spec.n_edges, got: spec.drift.len() });
        }
        for (i, r) in spec.rho.iter().enumerate() {
            if !r.is_finite() || *r <= 0.0 {
                return Err(GraphError::RhoNonPositive { index: i + 1, value: *r });
            }
        }
        let sum: f64 = spec.rho.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(GraphError::RhoSum { sum });
        }
        if !spec.eta.is_finite() || spec.eta < 0.0 {
            return Err(GraphError::BadEta(spec.eta));
        }
        if !spec.sigma_floor.is_finite() || spec.sigma_floor <= 0.0 {
            return Err(GraphError::BadFloor(spec.sigma_floor));
        }
        if !spec.validation_extent.is_finite() || spec.validation_extent <= 0.0 {
            return Err(GraphError::NonFinite);
        }
        for c in spec.sigma.iter().chain(spec.drift.iter()) {
            c.validate()?;
        }
        for (i, s) in spec.sigma.iter().enumerate() {
            for x in s.check_points(spec.validation_extent) {
                let v = s.eval(x);
                if !(v >= spec.sigma_floor) {
                    return Err(GraphError::Ellipticity {
                        edge: i + 1,
                        x,
                        value: v,
                        floor: spec.sigma_floor,
                    });
                }
            }
        }
        let canonical = serde_json::to_string(&spec).expect("spec serializes");
        let hash = fnv1a64(canonical.as_bytes());
        Ok(StarGraph { spec, hash })
    }

    pub fn n_edges(&self) -> usize {
        self.spec.n_edges
    }

    pub fn rho(&self) -> &[f64] {
        &self.spec.rho
    }

    pub fn eta(&self) -> f64 {
        self.spec.eta
    }

    pub fn sigma_floor(&self) -> f64 {
        self.spec.sigma_floor
    }

    pub fn spec(&self) -> &StarGraphSpec {
        &self.spec
    }

    /// Stable fingerprint of the validated description.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// A copy of this graph with a different stickiness parameter.
    pub fn with_eta(&self, eta: f64) -> Result<Self, GraphError> {
        let mut spec = self.spec.clone();
        spec.eta = eta;
        StarGraph::build(spec)
    }

    pub fn check_point(&self, p: GraphPoint) -> Result<(), GraphError> {
        if p.edge() == 0 || p.edge() > self.spec.n_edges || !(p.x() >= 0.0) {
            return Err(GraphError::BadPoint { edge: p.edge(), x: p.x() });
        }
        Ok(())
    }

    /// Path metric: `|x - y|` on a shared edge, `x + y` across edges.
    pub fn distance(&self, p: GraphPoint, q: GraphPoint) -> f64 {
        if p.edge() == q.edge() {
            (p.x() - q.x()).abs()
        } else {
            p.x() + q.x()
        }
    }

    /// `(sigma, drift)` at a point, per the coefficient spec semantics.
    pub fn coefficients(&self, p: GraphPoint) -> (f64, f64) {
        let i = p.edge() - 1;
        (self.spec.sigma[i].eval(p.x()), self.spec.drift[i].eval(p.x()))
    }

    pub fn sigma_at(&self, edge: usize, x: f64) -> f64 {
        self.spec.sigma[edge - 1].eval(x)
    }

    pub fn drift_at(&self, edge: usize, x: f64) -> f64 {
        self.spec.drift[edge - 1].eval(x)
    }

    /// Normalization `(sum_i 2 rho_i / sigma_i(0)^2)^-1` relating near-vertex
    /// occupation time to vertex local time.
    pub fn lambda_const(&self) -> f64 {
        let sum: f64 = self
            .spec
            .rho
            .iter()
            .zip(self.spec.sigma.iter())
            .map(|(rho, sigma)| {
                let s0 = sigma.eval(0.0);
                2.0 * rho / (s0 * s0)
            })
            .sum();
        1.0 / sum
    }
}

/// Symmetric constant-coefficient graph, the workhorse of the test suites.
pub fn symmetric_graph(n_edges: usize, sigma2: f64, eta: f64) -> StarGraph {
    let rho = vec![1.0 / n_edges as f64; n_edges];
    let sigma = vec![CoefficientSpec::constant(sigma2.sqrt()); n_edges];
    let drift = vec![CoefficientSpec::constant(0.0); n_edges];
    StarGraph::build(StarGraphSpec {
        n_edges,
        rho,
        eta,
        sigma,
        drift,
        sigma_floor: 0.1 * sigma2.sqrt(),
        validation_extent: 50.0,
    })
    .expect("symmetric graph is valid")
}
