//! Tridiagonal linear algebra: the Thomas solve and a Sturm-count bisection
//! for symmetric tridiagonal spectra.

/// A general tridiagonal matrix of order `n`.
///
/// `lower[i]` couples row `i + 1` to column `i`, `upper[i]` couples row `i`
/// to column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularPivot {
    pub row: usize,
    pub pivot: f64,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(lower.len() + 1, diag.len());
        assert_eq!(upper.len() + 1, diag.len());
        Self { lower, diag, upper }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        assert_eq!(x.len(), n);
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// `y = M^T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        self.transpose().apply(x)
    }

    pub fn transpose(&self) -> Tridiagonal {
        Tridiagonal::new(self.upper.clone(), self.diag.clone(), self.lower.clone())
    }

    /// `alpha I + beta M`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Tridiagonal {
        Tridiagonal::new(
            self.lower.iter().map(|v| beta * v).collect(),
            self.diag.iter().map(|v| alpha + beta * v).collect(),
            self.upper.iter().map(|v| beta * v).collect(),
        )
    }

    pub fn factor(&self) -> Result<TridiagonalLu, SingularPivot> {
        TridiagonalLu::new(self)
    }
}

/// LU factors of a tridiagonal matrix without pivoting, reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalLu {
    fn new(m: &Tridiagonal) -> Result<Self, SingularPivot> {
        let n = m.order();
        let mut pivots = Vec::with_capacity(n);
        let mut mult = Vec::with_capacity(n.saturating_sub(1));
        let mut p = m.diag[0];
        if p == 0.0 || !p.is_finite() {
            return Err(SingularPivot { row: 0, pivot: p });
        }
        pivots.push(p);
        for i in 1..n {
            let l = m.lower[i - 1] / p;
            p = m.diag[i] - l * m.upper[i - 1];
            if p == 0.0 || !p.is_finite() {
                return Err(SingularPivot { row: i, pivot: p });
            }
            mult.push(l);
            pivots.push(p);
        }
        Ok(Self {
            lower: mult,
            pivots,
            upper: m.upper.clone(),
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivots.len();
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 1..n {
            y[i] -= self.lower[i - 1] * y[i - 1];
        }
        y[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (y[i] - self.upper[i] * y[i + 1]) / self.pivots[i];
        }
        y
    }
}

/// Number of eigenvalues strictly below `lambda` of the symmetric
/// tridiagonal matrix with the given diagonal and off-diagonal.
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    assert_eq!(off.len() + 1, n);
    let mut count = 0;
    let mut q = diag[0] - lambda;
    for i in 0..n {
        if i > 0 {
            let denom = if q == 0.0 { f64::EPSILON * (1.0 + off[i - 1].abs()) } else { q };
            q = diag[i] - lambda - off[i - 1] * off[i - 1] / denom;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues inside `(lo, hi)` of a symmetric tridiagonal matrix, each
/// refined by bisection on the Sturm count to width `tol`.
pub fn symmetric_eigenvalues_in(diag: &[f64], off: &[f64], lo: f64, hi: f64, tol: f64) -> Vec<f64> {
    let below_lo = sturm_count(diag, off, lo);
    let below_hi = sturm_count(diag, off, hi);
    (below_lo..below_hi)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            while b - a > tol {
                let mid = 0.5 * (a + b);
                if sturm_count(diag, off, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}
