//! Cached primitives of smooth integrands on [0, ℓ].
//!
//! Node values are accumulated with a ten-point Gauss rule per panel and
//! evaluated between nodes by quintic Hermite interpolation using the
//! integrand and its derivative as the first two derivatives of the
//! primitive. The node count doubles until the interpolant agrees with the
//! next refinement at the new nodes. Node sets must be nested: the grid for
//! 2n panels contains the grid for n at its even indices.

use crate::quad::gl10;

#[derive(Debug, Clone)]
pub struct PrimitiveTable {
    nodes: Vec<f64>,
    values: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

const START_PANELS: usize = 64;
const MAX_PANELS: usize = 1 << 16;

impl PrimitiveTable {
    /// Table on uniform nodes over [0, ℓ].
    pub fn build<F: Fn(f64) -> (f64, f64)>(ell: f64, offset: f64, tol: f64, integrand: F) -> Self {
        Self::build_on(|n| (0..=n).map(|k| ell * k as f64 / n as f64).collect(), offset, tol, integrand)
    }

    /// `grid(n)` returns n + 1 increasing nodes; `integrand(t)` returns the
    /// integrand and its derivative. The primitive is `offset` at the first
    /// node.
    pub fn build_on<G, F>(grid: G, offset: f64, tol: f64, integrand: F) -> Self
    where
        G: Fn(usize) -> Vec<f64>,
        F: Fn(f64) -> (f64, f64),
    {
        let mut table = Self::on_nodes(grid(START_PANELS), offset, &integrand);
        while table.panels() < MAX_PANELS {
            let finer = Self::on_nodes(grid(2 * table.panels()), offset, &integrand);
            let mut worst: f64 = 0.0;
            for (t, v) in finer.nodes.iter().zip(&finer.values).skip(1).step_by(2) {
                worst = worst.max((table.eval(*t) - v).abs());
            }
            worst = worst.max((table.values.last().unwrap() - finer.values.last().unwrap()).abs());
            table = finer;
            if worst < tol {
                break;
            }
        }
        table
    }

    fn on_nodes<F: Fn(f64) -> (f64, f64)>(nodes: Vec<f64>, offset: f64, integrand: &F) -> Self {
        let mut values = Vec::with_capacity(nodes.len());
        let mut d1 = Vec::with_capacity(nodes.len());
        let mut d2 = Vec::with_capacity(nodes.len());
        let mut acc = offset;
        for (k, &t) in nodes.iter().enumerate() {
            if k > 0 {
                acc += gl10(|x| integrand(x).0, nodes[k - 1], t);
            }
            let (v, dv) = integrand(t);
            values.push(acc);
            d1.push(v);
            d2.push(dv);
        }
        Self { nodes, values, d1, d2 }
    }

    pub fn panels(&self) -> usize {
        self.values.len() - 1
    }

    pub fn total(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.nodes.len() - 1;
        let t = t.clamp(self.nodes[0], self.nodes[n]);
        let k = self.nodes.partition_point(|&x| x <= t).clamp(1, n) - 1;
        let h = self.nodes[k + 1] - self.nodes[k];
        let x = (t - self.nodes[k]) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let x4 = x3 * x;
        let x5 = x4 * x;
        let h0 = 1.0 - 10.0 * x3 + 15.0 * x4 - 6.0 * x5;
        let h1 = x - 6.0 * x3 + 8.0 * x4 - 3.0 * x5;
        let h2 = 0.5 * (x2 - 3.0 * x3 + 3.0 * x4 - x5);
        let h3 = 0.5 * (x3 - 2.0 * x4 + x5);
        let h4 = -4.0 * x3 + 7.0 * x4 - 3.0 * x5;
        let h5 = 10.0 * x3 - 15.0 * x4 + 6.0 * x5;
        self.values[k] * h0
            + h * self.d1[k] * h1
            + h * h * self.d2[k] * h2
            + h * h * self.d2[k + 1] * h3
            + h * self.d1[k + 1] * h4
            + self.values[k + 1] * h5
    }
}
