//! Tensor-product sample grids over a patch.

use serde::Serialize;

use super::field::{BasePoint, Patch};
use crate::error::MetricError;

/// Points per axis along `(x1, y1, x2, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub resolution: [usize; 4],
}

impl Grid {
    pub fn new(resolution: [usize; 4]) -> Self {
        Grid { resolution }
    }

    pub fn uniform(n: usize) -> Self {
        Grid { resolution: [n; 4] }
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every axis at about half the resolution (at least 2).
    pub fn halved(&self) -> Grid {
        Grid {
            resolution: self.resolution.map(|n| n.div_ceil(2).max(2)),
        }
    }

    /// Trapezoidal nodes and weights. Closed axes include both endpoints;
    /// periodic axes use `n` equally weighted nodes per period.
    pub fn trapezoid(&self, patch: &Patch) -> Result<Nodes, MetricError> {
        self.build(|axis, n| {
            let (lo, hi) = patch.range(axis);
            let width = hi - lo;
            if patch.is_periodic(axis) {
                let dx = width / n as f64;
                (0..n).map(|k| (lo + k as f64 * dx, dx)).collect()
            } else if n == 1 {
                vec![(0.5 * (lo + hi), width)]
            } else {
                let dx = width / (n - 1) as f64;
                (0..n)
                    .map(|k| {
                        let w = if k == 0 || k == n - 1 { 0.5 * dx } else { dx };
                        (lo + k as f64 * dx, w)
                    })
                    .collect()
            }
        })
    }

    /// Evenly spaced sample nodes kept `reach[axis]` away from non-periodic
    /// boundaries (less whatever margin the patch allows). Weights are unused
    /// and set to 1.
    pub fn interior(&self, patch: &Patch, reach: [f64; 4]) -> Result<Nodes, MetricError> {
        self.build(|axis, n| {
            let (lo, hi) = patch.range(axis);
            if patch.is_periodic(axis) {
                let dx = (hi - lo) / n as f64;
                return (0..n).map(|k| (lo + k as f64 * dx, 1.0)).collect();
            }
            let inset = (reach[axis] - patch.margin()).max(0.0);
            let (a, b) = (lo + inset, hi - inset);
            if n == 1 || b <= a {
                return vec![(0.5 * (lo + hi), 1.0); n.min(1)];
            }
            let dx = (b - a) / (n - 1) as f64;
            (0..n).map(|k| (a + k as f64 * dx, 1.0)).collect()
        })
    }

    fn build(
        &self,
        axis_nodes: impl Fn(usize, usize) -> Vec<(f64, f64)>,
    ) -> Result<Nodes, MetricError> {
        if self.is_empty() {
            return Err(MetricError::EmptyGrid);
        }
        Ok(Nodes {
            axes: std::array::from_fn(|a| axis_nodes(a, self.resolution[a])),
        })
    }
}

/// Per-axis nodes `(coordinate, weight)`; points enumerate with `x1`
/// varying slowest.
#[derive(Debug, Clone)]
pub struct Nodes {
    axes: [Vec<(f64, f64)>; 4],
}

impl Nodes {
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis(&self, a: usize) -> &[(f64, f64)] {
        &self.axes[a]
    }

    /// Point and product weight of the `k`-th node.
    pub fn get(&self, mut k: usize) -> (BasePoint, f64) {
        let mut idx = [0usize; 4];
        for a in (0..4).rev() {
            let n = self.axes[a].len();
            idx[a] = k % n;
            k /= n;
        }
        let mut p = [0.0; 4];
        let mut w = 1.0;
        for a in 0..4 {
            let (x, wa) = self.axes[a][idx[a]];
            p[a] = x;
            w *= wa;
        }
        (p, w)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasePoint, f64)> + '_ {
        (0..self.len()).map(|k| self.get(k))
    }
}
