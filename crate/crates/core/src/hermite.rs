//! Scaled Hermite functions
//!
//! `u_n(x) = H_n(x / sqrt 2) exp(-x^2 / 4) / sqrt(2^n n! sqrt(2 pi))`
//!
//! are the normalized eigenfunctions of `L = -d^2/dx^2 + (x^2 - 6)/4` with
//! `L u_n = (n - 1) u_n`. They are evaluated through the normalized
//! three-term recurrence
//!
//! `u_{n+1}(x) = x / sqrt(n+1) u_n(x) - sqrt(n / (n+1)) u_{n-1}(x)`
//!
//! carried with a separate logarithmic scale, so neither `H_n` nor `n!` is
//! ever formed and the Gaussian prefactor cannot underflow part way through.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::RealGrid;

/// Largest mode index accepted by default.
pub const DEFAULT_MAX_INDEX: usize = 10_000;

const RESCALE_THRESHOLD: f64 = 1e150;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HermiteError {
    #[error("hermite index {index} exceeds the configured maximum {max}")]
    IndexTooLarge { index: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// Evaluator for `u_n` with a configurable index ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermiteBasis {
    max_index: usize,
}

impl Default for HermiteBasis {
    fn default() -> Self {
        Self {
            max_index: DEFAULT_MAX_INDEX,
        }
    }
}

/// `ln (2 pi)^{-1/4}`
fn log_u0_norm() -> f64 {
    -0.25 * (2.0 * PI).ln()
}

impl HermiteBasis {
    pub fn with_max_index(max_index: usize) -> Self {
        Self { max_index }
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    fn check(&self, n: usize) -> Result<(), HermiteError> {
        if n > self.max_index {
            Err(HermiteError::IndexTooLarge {
                index: n,
                max: self.max_index,
            })
        } else {
            Ok(())
        }
    }

    /// `u_n(x)`.
    pub fn value(&self, n: usize, x: f64) -> Result<f64, HermiteError> {
        self.check(n)?;
        if !x.is_finite() {
            return Err(HermiteError::Domain(format!("abscissa {x} is not finite")));
        }
        let (_, cur, log_scale) = scaled_pair(n, x);
        Ok(cur * log_scale.exp())
    }

    /// `u_n'(x) = (sqrt(n) u_{n-1}(x) - sqrt(n+1) u_{n+1}(x)) / 2`.
    pub fn derivative(&self, n: usize, x: f64) -> Result<f64, HermiteError> {
        self.check(n)?;
        if !x.is_finite() {
            return Err(HermiteError::Domain(format!("abscissa {x} is not finite")));
        }
        // (u_n, u_{n+1}) from one pass so the scale factor is shared.
        let (prev, cur, log_scale) = scaled_pair(n, x);
        let next = x / ((n + 1) as f64).sqrt() * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
        let scaled = if n == 0 {
            -next
        } else {
            (n as f64).sqrt() * prev - ((n + 1) as f64).sqrt() * next
        };
        Ok(0.5 * scaled * log_scale.exp())
    }

    /// `[u_0(x), ..., u_n(x)]`.
    pub fn values_upto(&self, n: usize, x: f64) -> Result<Vec<f64>, HermiteError> {
        self.check(n)?;
        if !x.is_finite() {
            return Err(HermiteError::Domain(format!("abscissa {x} is not finite")));
        }
        Ok(values_upto_unchecked(n, x))
    }
}

/// Returns `(u_{n-1}, u_n)` up to a common factor `exp(log_scale)`.
fn scaled_pair(n: usize, x: f64) -> (f64, f64, f64) {
    let mut log_scale = log_u0_norm() - 0.25 * x * x;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let next = x / ((k + 1) as f64).sqrt() * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            prev /= RESCALE_THRESHOLD;
            cur /= RESCALE_THRESHOLD;
            log_scale += RESCALE_THRESHOLD.ln();
        }
    }
    (prev, cur, log_scale)
}

pub(crate) fn values_upto_unchecked(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut log_scale = log_u0_norm() - 0.25 * x * x;
    let mut prev = 0.0;
    let mut cur = 1.0;
    out.push(cur * log_scale.exp());
    for k in 0..n {
        let next = x / ((k + 1) as f64).sqrt() * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            prev /= RESCALE_THRESHOLD;
            cur /= RESCALE_THRESHOLD;
            log_scale += RESCALE_THRESHOLD.ln();
        }
        out.push(cur * log_scale.exp());
    }
    out
}

/// `sum_n coeffs[n] u_n(x)`, accumulated along the same scaled recurrence
/// used for single values.
pub fn hermite_series(coeffs: &[f64], x: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let mut log_scale = log_u0_norm() - 0.25 * x * x;
    let mut factor = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sum = coeffs[0] * cur * factor;
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        let m = k - 1;
        let next = x / (k as f64).sqrt() * cur - (m as f64 / k as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_THRESHOLD {
            prev /= RESCALE_THRESHOLD;
            cur /= RESCALE_THRESHOLD;
            log_scale += RESCALE_THRESHOLD.ln();
            factor = log_scale.exp();
        }
        if *c != 0.0 {
            sum += c * cur * factor;
        }
    }
    sum
}

/// `u_n(x)` with the default index ceiling.
pub fn hermite_function(n: usize, x: f64) -> Result<f64, HermiteError> {
    HermiteBasis::default().value(n, x)
}

/// `u_n'(x)` with the default index ceiling.
pub fn hermite_derivative(n: usize, x: f64) -> Result<f64, HermiteError> {
    HermiteBasis::default().derivative(n, x)
}

/// The ground state `u_0(x) = (2 pi)^{-1/4} exp(-x^2/4)`.
pub fn ground_state(x: f64) -> f64 {
    (log_u0_norm() - 0.25 * x * x).exp()
}

/// The samples `u_n(x_i)` for every node of `grid`, as rows `n = 0..=n_max`.
pub fn tabulate(n_max: usize, grid: &RealGrid) -> Result<Vec<Vec<f64>>, HermiteError> {
    let basis = HermiteBasis::default();
    basis.check(n_max)?;
    let mut rows = vec![vec![0.0; grid.len()]; n_max + 1];
    for (i, &x) in grid.nodes().iter().enumerate() {
        for (n, v) in values_upto_unchecked(n_max, x).into_iter().enumerate() {
            rows[n][i] = v;
        }
    }
    Ok(rows)
}

/// `f_m = prod_{k=1}^m sqrt(2k - a) / sqrt(2k + b)` for `m = 0..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSequence {
    pub a: f64,
    pub b: f64,
    /// `values[m] = f_m`, with `f_0 = 1`.
    pub values: Vec<f64>,
}

impl ProductSequence {
    pub fn get(&self, m: usize) -> f64 {
        self.values[m]
    }

    /// Predicted power-law exponent `-(a + b)/4`.
    pub fn predicted_exponent(&self) -> f64 {
        -(self.a + self.b) / 4.0
    }
}

/// Accumulates the product in log space so that long products neither
/// underflow nor lose relative accuracy.
pub fn product_sequence(a: f64, b: f64, m_max: usize) -> Result<ProductSequence, HermiteError> {
    if m_max < 1 {
        return Err(HermiteError::Domain("m_max must be at least 1".into()));
    }
    if !(a >= 0.0) || !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(HermiteError::Domain(format!(
            "product parameters must be finite and non-negative (a = {a}, b = {b})"
        )));
    }
    if a >= 2.0 {
        return Err(HermiteError::Domain(format!(
            "a = {a} makes the first factor sqrt(2 - a) non-positive"
        )));
    }
    let mut values = Vec::with_capacity(m_max + 1);
    values.push(1.0);
    let mut log_acc = 0.0;
    for k in 1..=m_max {
        let kk = 2.0 * k as f64;
        log_acc += 0.5 * ((kk - a).ln() - (kk + b).ln());
        values.push(log_acc.exp());
    }
    Ok(ProductSequence { a, b, values })
}

/// `f_n = <d_x^{-1} u_0, u_n>` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSequence {
    pub values: Vec<f64>,
}

impl ProjectionSequence {
    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// `f_0 = sqrt(2 pi)`, `f_1 = 2`, `f_{n+1} = sqrt(n/(n+1)) f_{n-1}`.
pub fn projection_sequence(n_max: usize) -> Result<ProjectionSequence, HermiteError> {
    if n_max < 1 {
        return Err(HermiteError::Domain("n_max must be at least 1".into()));
    }
    let mut values = Vec::with_capacity(n_max + 1);
    values.push((2.0 * PI).sqrt());
    values.push(2.0);
    for n in 1..n_max {
        let next = (n as f64 / (n + 1) as f64).sqrt() * values[n - 1];
        values.push(next);
    }
    Ok(ProjectionSequence { values })
}

/// `F(x) = int_{-inf}^x u_0(s) ds` sampled on `grid` by cumulative
/// Gauss-Legendre quadrature. The grid must start where `u_0` is negligible.
pub fn antiderivative_ground_state(grid: &RealGrid) -> Vec<f64> {
    grid.cumulative_integral(ground_state, 0.0)
}

/// Independent route to `f_n`: quadrature of `<F, u_n>` with `F` the
/// cumulative antiderivative of `u_0`.
pub fn projection_by_quadrature(n_max: usize, grid: &RealGrid) -> Result<Vec<f64>, HermiteError> {
    if grid.weights().is_none() {
        return Err(HermiteError::InvalidGrid("grid has no quadrature weights".into()));
    }
    let anti = antiderivative_ground_state(grid);
    let table = tabulate(n_max, grid)?;
    Ok(table.iter().map(|row| grid.inner(&anti, row)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ground_state_at_origin() {
        let v = hermite_function(0, 0.0).unwrap();
        assert!(close(v, (2.0 * PI).powf(-0.25), 1e-15));
        assert!(close(v, 0.63162, 1e-5));
    }

    #[test]
    fn odd_mode_vanishes_at_origin() {
        assert_eq!(hermite_function(1, 0.0).unwrap(), 0.0);
        assert_eq!(hermite_function(7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn second_mode_matches_explicit_factorial_formula() {
        // H_2(0) = -2, 2^2 2! = 8
        let direct = -2.0 / (8.0 * (2.0 * PI).sqrt()).sqrt();
        let v = hermite_function(2, 0.0).unwrap();
        assert!(close(v, direct, 1e-15));
        assert!(close(v, -0.44663, 1e-5));
    }

    #[test]
    fn low_modes_match_explicit_polynomials() {
        // H_3(s) = 8 s^3 - 12 s, normalisation sqrt(2^3 3! sqrt(2 pi))
        for &x in &[-2.3, -0.4, 0.9, 3.1] {
            let s = x / 2f64.sqrt();
            let h3 = 8.0 * s * s * s - 12.0 * s;
            let direct = h3 * (-x * x / 4.0).exp() / (48.0 * (2.0 * PI).sqrt()).sqrt();
            assert!(close(hermite_function(3, x).unwrap(), direct, 1e-14));
        }
    }

    #[test]
    fn index_above_ceiling_is_rejected() {
        assert!(matches!(
            hermite_function(DEFAULT_MAX_INDEX + 1, 0.3),
            Err(HermiteError::IndexTooLarge { .. })
        ));
        assert!(HermiteBasis::with_max_index(5).value(6, 0.0).is_err());
        assert!(hermite_function(3, f64::NAN).is_err());
    }

    #[test]
    fn derivative_at_ground_state() {
        assert_eq!(hermite_derivative(0, 0.0).unwrap(), 0.0);
        let u1 = hermite_function(1, 1.0).unwrap();
        assert!(close(hermite_derivative(0, 1.0).unwrap(), -0.5 * u1, 1e-15));
    }

    #[test]
    fn derivative_matches_central_difference() {
        let h = 1e-5;
        let fd = (hermite_function(3, 0.7 + h).unwrap() - hermite_function(3, 0.7 - h).unwrap())
            / (2.0 * h);
        assert!(close(hermite_derivative(3, 0.7).unwrap(), fd, 1e-6));
    }

    #[test]
    fn large_index_far_out_does_not_underflow_prematurely() {
        // u_0(60) underflows in double precision, u_5000(60) does not.
        let v = hermite_function(5000, 60.0).unwrap();
        assert!(v != 0.0 && v.is_finite());
        assert!(v.abs() <= 1.0);
    }

    #[test]
    fn product_sequence_examples() {
        let p = product_sequence(1.0, 0.0, 1).unwrap();
        assert!(close(p.get(1), 0.5f64.sqrt(), 1e-15));
        let p = product_sequence(0.0, 0.0, 40).unwrap();
        assert!(p.values.iter().all(|&v| v == 1.0));
        let p = product_sequence(1.0, 2.0, 2).unwrap();
        let direct = (1.0f64 / 4.0).sqrt() * (3.0f64 / 6.0).sqrt();
        assert!(close(p.get(2), direct, 1e-15));
        assert!(close(p.get(2), 0.35355, 1e-5));
    }

    #[test]
    fn product_sequence_domain() {
        assert!(product_sequence(2.0, 0.0, 3).is_err());
        assert!(product_sequence(-0.1, 0.0, 3).is_err());
        assert!(product_sequence(0.5, 0.0, 0).is_err());
    }

    #[test]
    fn projection_sequence_initial_values() {
        let f = projection_sequence(4).unwrap();
        assert!(close(f.get(0), (2.0 * PI).sqrt(), 1e-15));
        assert_eq!(f.get(1), 2.0);
        assert!(close(f.get(2), PI.sqrt(), 1e-15));
        assert!(projection_sequence(0).is_err());
    }

    #[test]
    fn projection_quadrature_gives_sqrt_pi() {
        let grid = RealGrid::for_hermite(4);
        let f = projection_by_quadrature(2, &grid).unwrap();
        assert!(close(f[2], 1.77245, 1e-5));
        assert!(close(f[2], PI.sqrt(), 1e-10));
    }
}
