//! Function-on-the-graph abstractions shared by the solvers and estimators.

use crate::graph::CoefficientSpec;

/// A scalar function on the graph, `(edge, x) -> value`.
pub trait EdgeFunction: Sync {
    fn eval(&self, edge: usize, x: f64) -> f64;
}

impl<F> EdgeFunction for F
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    fn eval(&self, edge: usize, x: f64) -> f64 {
        self(edge, x)
    }
}

/// Serializable per-edge function backed by coefficient specs.
#[derive(Debug, Clone)]
pub struct PerEdgeSpecs(pub Vec<CoefficientSpec>);

impl EdgeFunction for PerEdgeSpecs {
    fn eval(&self, edge: usize, x: f64) -> f64 {
        self.0[edge - 1].eval(x)
    }
}

/// A time-dependent scalar function on the graph, `(t, edge, x) -> value`.
pub trait TimeEdgeFunction: Sync {
    fn eval(&self, t: f64, edge: usize, x: f64) -> f64;
}

impl<F> TimeEdgeFunction for F
where
    F: Fn(f64, usize, f64) -> f64 + Sync,
{
    fn eval(&self, t: f64, edge: usize, x: f64) -> f64 {
        self(t, edge, x)
    }
}
