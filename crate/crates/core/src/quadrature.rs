//! Panel-wise Gauss-Legendre integration.
//!
//! Integrands in this crate are piecewise polynomial with known break points
//! (cell edges of checkerboards, strip edges and graphs of shuffles), so each
//! interval is split at its break points and a fixed Gauss-Legendre rule is
//! applied on every panel.

use gauss_quad::legendre::GaussLegendre;
use std::num::NonZeroUsize;

/// Default number of nodes per panel.
pub const DEFAULT_NODES: usize = 128;

#[derive(Debug, Clone)]
pub struct PanelRule {
    // nodes on [0, 1] with weights summing to 1
    nodes: Vec<(f64, f64)>,
}

impl PanelRule {
    pub fn new(nodes: usize) -> Self {
        let degree = NonZeroUsize::new(nodes.max(1)).expect("nonzero");
        let rule = GaussLegendre::new(degree);
        let nodes = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        PanelRule { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]` on a single panel.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        if h <= 0.0 {
            return 0.0;
        }
        self.nodes.iter().map(|&(x, w)| w * f(a + h * x)).sum::<f64>() * h
    }

    /// Integral of `f` over `[a, b]`, split at every break point inside the interval.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        breaks: &[f64],
        mut f: F,
    ) -> f64 {
        let edges = panel_edges(a, b, breaks);
        edges
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

/// Sorted, deduplicated panel edges of `[a, b]` including the end points.
pub fn panel_edges(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut edges: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    edges.push(a);
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
    edges
}
