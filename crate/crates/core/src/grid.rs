//! Sampling grids on the real line and the quadrature rules attached to them.

use serde::{Deserialize, Serialize};

use crate::hermite::HermiteError;

/// Strictly increasing abscissas with optional non-negative quadrature
/// weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealGrid {
    nodes: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl RealGrid {
    pub fn new(nodes: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self, HermiteError> {
        if nodes.is_empty() {
            return Err(HermiteError::InvalidGrid("grid has no nodes".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(HermiteError::InvalidGrid("non-finite node".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HermiteError::InvalidGrid(
                "nodes must be strictly increasing".into(),
            ));
        }
        if let Some(w) = &weights {
            if w.len() != nodes.len() {
                return Err(HermiteError::InvalidGrid(format!(
                    "{} weights for {} nodes",
                    w.len(),
                    nodes.len()
                )));
            }
            if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(HermiteError::InvalidGrid(
                    "weights must be finite and non-negative".into(),
                ));
            }
        }
        Ok(Self { nodes, weights })
    }

    /// Uniform grid on `[lo, hi]` with `points` nodes and trapezoidal weights.
    ///
    /// For integrands that decay like a Gaussian at both ends the trapezoidal
    /// rule converges faster than any power of the spacing.
    pub fn uniform(lo: f64, hi: f64, points: usize) -> Result<Self, HermiteError> {
        if points < 2 || !(hi > lo) {
            return Err(HermiteError::InvalidGrid(format!(
                "uniform grid needs hi > lo and at least 2 points (got [{lo}, {hi}], {points})"
            )));
        }
        let h = (hi - lo) / (points - 1) as f64;
        let nodes: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
        let mut weights = vec![h; points];
        weights[0] = 0.5 * h;
        weights[points - 1] = 0.5 * h;
        Self::new(nodes, Some(weights))
    }

    /// Symmetric uniform grid on `[-x_max, x_max]` with spacing close to
    /// `spacing`; the node count is odd so `x = 0` is a node.
    pub fn symmetric(x_max: f64, spacing: f64) -> Result<Self, HermiteError> {
        if !(x_max > 0.0) || !(spacing > 0.0) {
            return Err(HermiteError::InvalidGrid(
                "symmetric grid needs positive extent and spacing".into(),
            ));
        }
        let half = (x_max / spacing).ceil() as usize;
        let h = x_max / half as f64;
        let mut nodes: Vec<f64> = (0..=2 * half)
            .map(|i| (i as f64 - half as f64) * h)
            .collect();
        // exact mirror images
        for i in 0..half {
            nodes[2 * half - i] = -nodes[i];
        }
        nodes[half] = 0.0;
        let mut weights = vec![h; 2 * half + 1];
        weights[0] = 0.5 * h;
        weights[2 * half] = 0.5 * h;
        Self::new(nodes, Some(weights))
    }

    /// Grid wide enough that every `u_n`, `n <= max_mode`, has decayed below
    /// double precision at the ends, with spacing that resolves its
    /// oscillations.
    pub fn for_hermite(max_mode: usize) -> Self {
        let turning = 2.0 * (max_mode as f64 + 0.5).sqrt();
        let x_max = turning + 14.0;
        let spacing = (0.05_f64).min(0.5 / (max_mode as f64 + 1.0).sqrt());
        Self::symmetric(x_max, spacing).expect("valid extent and spacing")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// True when the node set is mirror-symmetric about zero.
    pub fn is_symmetric(&self) -> bool {
        let n = self.nodes.len();
        (0..n).all(|i| self.nodes[i] == -self.nodes[n - 1 - i])
    }

    fn require_weights(&self) -> &[f64] {
        self.weights
            .as_deref()
            .expect("quadrature requested on a grid without weights")
    }

    /// Quadrature of sampled values. Panics if the grid carries no weights.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let w = self.require_weights();
        assert_eq!(values.len(), w.len(), "sample count must match the grid");
        w.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let w = self.require_weights();
        assert_eq!(f.len(), w.len());
        assert_eq!(g.len(), w.len());
        w.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| w * a * b).sum()
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// Running integral `F(x_i) = F0 + int_{x_0}^{x_i} f(s) ds` of a function
    /// known in closed form, using five-point Gauss-Legendre on every cell.
    pub fn cumulative_integral<F: Fn(f64) -> f64>(&self, f: F, initial: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut acc = initial;
        out.push(acc);
        for cell in self.nodes.windows(2) {
            acc += gauss_legendre_5(&f, cell[0], cell[1]);
            out.push(acc);
        }
        out
    }
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss_legendre_5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(t, w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_nodes() {
        assert!(RealGrid::new(vec![0.0, 0.0, 1.0], None).is_err());
        assert!(RealGrid::new(vec![0.0, 1.0], Some(vec![1.0])).is_err());
        assert!(RealGrid::new(vec![0.0, 1.0], Some(vec![1.0, -1.0])).is_err());
    }

    #[test]
    fn symmetric_grid_is_mirrored() {
        let g = RealGrid::symmetric(3.0, 0.07).unwrap();
        assert!(g.is_symmetric());
        assert_eq!(g.len() % 2, 1);
        assert_eq!(g.nodes()[g.len() / 2], 0.0);
    }

    #[test]
    fn trapezoid_integrates_gaussian() {
        let g = RealGrid::symmetric(12.0, 0.1).unwrap();
        let v: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        assert!((g.integrate(&v) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cumulative_integral_of_polynomial_is_exact() {
        let g = RealGrid::uniform(0.0, 2.0, 9).unwrap();
        let c = g.cumulative_integral(|s| s.powi(7), 0.0);
        for (x, v) in g.nodes().iter().zip(&c) {
            assert!((v - x.powi(8) / 8.0).abs() < 1e-13);
        }
    }
}
