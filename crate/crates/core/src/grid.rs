use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform quadrature grid on `[0, 2pi)` used for every momentum integral.
///
/// Nodes are placed at half steps, `k_i = (i + 1/2) * 2pi / K`, so that no
/// node hits a multiple of `pi` where the line band parametrization
/// degenerates. An even node count keeps the grid invariant under the
/// shift `k -> k + pi`, which several cancellation identities rely on.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentumGrid {
    nodes: Vec<f64>,
    step: f64,
    offset: bool,
}

impl MomentumGrid {
    pub const MIN_NODES: usize = 256;

    /// Half-offset grid with `count` nodes (`count` even, at least 256).
    pub fn new(count: usize) -> Result<Self> {
        Self::with_offset(count, true)
    }

    /// Grid with nodes at `i * 2pi / K` instead of the half-step offset.
    /// Only meaningful when the consumer handles `k = 0` and `k = pi`
    /// analytically.
    pub fn with_offset(count: usize, offset: bool) -> Result<Self> {
        if count < Self::MIN_NODES {
            return Err(Error::GridResolution { required: Self::MIN_NODES, actual: count });
        }
        if !count.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("grid size {count} must be even")));
        }
        let step = 2.0 * PI / count as f64;
        let shift = if offset { 0.5 } else { 0.0 };
        let nodes = (0..count).map(|i| (i as f64 + shift) * step).collect();
        Ok(MomentumGrid { nodes, step, offset })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Quadrature weight `2pi / K` of every node.
    pub fn weight(&self) -> f64 {
        self.step
    }

    pub fn is_offset(&self) -> bool {
        self.offset
    }

    /// Riemann sum `sum_i f(k_i) * (2pi/K)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().map(|&k| f(k)).sum::<f64>() * self.step
    }
}

/// Wrap `k` into `(-pi, pi]`.
pub fn wrap_to_pi(k: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = k % two_pi;
    if r > PI {
        r -= two_pi;
    } else if r <= -PI {
        r += two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd() {
        assert!(MomentumGrid::new(128).is_err());
        assert!(MomentumGrid::new(257).is_err());
        assert!(MomentumGrid::new(256).is_ok());
    }

    #[test]
    fn offset_nodes_avoid_multiples_of_pi() {
        let g = MomentumGrid::new(1024).unwrap();
        for &k in g.nodes() {
            assert!((k % PI).abs() > 1e-6, "node {k} too close to a multiple of pi");
        }
    }

    #[test]
    fn shift_by_pi_maps_nodes_to_nodes() {
        let g = MomentumGrid::new(256).unwrap();
        let half = g.len() / 2;
        for i in 0..half {
            assert!((g.node(i) + PI - g.node(i + half)).abs() < 1e-12);
        }
    }

    #[test]
    fn riemann_sum_of_cos_squared() {
        let g = MomentumGrid::new(512).unwrap();
        let val = g.integrate(|k| k.cos().powi(2));
        assert!((val - PI).abs() < 1e-12);
    }

    #[test]
    fn wrapping() {
        assert!((wrap_to_pi(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_to_pi(-3.5 * PI) - 0.5 * PI).abs() < 1e-12);
    }
}
