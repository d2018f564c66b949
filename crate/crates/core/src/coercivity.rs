//! Quadratic forms on Hermite coefficients and the constrained coercivity
//! constant.
//!
//! For `y = sum c_n u_n` the energy is `E(c) = sum (n - 1) c_n^2` and the
//! `L`-compatible norm is `N(c) = sum (n + 1) c_n^2`. On the subspace
//! `c_0 = 0`, `sum f_n c_n = 0` the ratio `E / N` is bounded below by a
//! positive constant. Because both forms are diagonal, the constrained
//! minimum is the smallest root of the secular function
//!
//! `S(mu) = sum_{n >= 1} f_n^2 / ((n - 1) - mu (n + 1))`,
//!
//! which is increasing between consecutive poles. The truncated sum is the
//! exact minimum over the first `n_max + 1` modes; the infinite-dimensional
//! value is obtained by adding the asymptotic tail of `S`, summed with
//! Hurwitz zeta values.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hermite::{projection_sequence, HermiteError, ProjectionSequence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoercivityError {
    #[error("degenerate problem: n_max = {n_max} is below the required {required}")]
    Degenerate { n_max: usize, required: usize },
    #[error("invalid coefficient vector: {0}")]
    InvalidVector(String),
    #[error("no root of the secular equation found: {0}")]
    NoRoot(String),
    #[error(transparent)]
    Hermite(#[from] HermiteError),
}

/// Truncated Hermite coefficients `(c_0, ..., c_N)`, `N >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    coeffs: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self, CoercivityError> {
        if coeffs.len() < 2 {
            return Err(CoercivityError::InvalidVector(format!(
                "need at least 2 coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CoercivityError::InvalidVector("non-finite coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    /// The unit vector `e_n` of length `len`.
    pub fn unit(n: usize, len: usize) -> Result<Self, CoercivityError> {
        if n >= len {
            return Err(CoercivityError::InvalidVector(format!(
                "index {n} outside length {len}"
            )));
        }
        let mut c = vec![0.0; len];
        c[n] = 1.0;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

/// `sum (n - 1) c_n^2`.
pub fn energy_form(c: &CoefficientVector) -> f64 {
    c.coeffs
        .iter()
        .enumerate()
        .map(|(n, v)| (n as f64 - 1.0) * v * v)
        .sum()
}

/// `sum (n + 1) c_n^2`.
pub fn compat_norm_form(c: &CoefficientVector) -> f64 {
    c.coeffs
        .iter()
        .enumerate()
        .map(|(n, v)| (n as f64 + 1.0) * v * v)
        .sum()
}

/// Which of the two orthogonality conditions are imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// `c_0 = 0`
    pub first: bool,
    /// `sum f_n c_n = 0`
    pub second: bool,
}

impl ConstraintSet {
    pub const NONE: Self = Self { first: false, second: false };
    pub const FIRST: Self = Self { first: true, second: false };
    pub const BOTH: Self = Self { first: true, second: true };

    fn first_index(&self) -> usize {
        usize::from(self.first)
    }

    /// Orthogonal projection of `c` onto the constrained subspace. `f` must
    /// have at least `c.len()` entries.
    pub fn project(&self, c: &CoefficientVector, f: &ProjectionSequence) -> CoefficientVector {
        assert!(f.len() >= c.len(), "projection sequence too short");
        let mut v = c.coeffs.clone();
        if self.first {
            v[0] = 0.0;
        }
        if self.second {
            let s = self.first_index();
            let (mut dot, mut ff) = (0.0, 0.0);
            for (n, c) in v.iter().enumerate().skip(s) {
                dot += f.get(n) * c;
                ff += f.get(n) * f.get(n);
            }
            let alpha = dot / ff;
            for (n, c) in v.iter_mut().enumerate().skip(s) {
                *c -= alpha * f.get(n);
            }
        }
        CoefficientVector { coeffs: v }
    }

    /// `(|c_0|, |sum f_n c_n|)`.
    pub fn residuals(&self, c: &CoefficientVector, f: &ProjectionSequence) -> (f64, f64) {
        let dot: f64 = c.coeffs.iter().enumerate().map(|(n, v)| f.get(n) * v).sum();
        (c.coeffs[0].abs(), dot.abs())
    }

    /// True when every enforced constraint holds within `1e-10 ||c||`.
    pub fn is_satisfied(&self, c: &CoefficientVector, f: &ProjectionSequence) -> bool {
        let (r0, r1) = self.residuals(c, f);
        let scale = 1e-10 * c.squared_norm().sqrt();
        (!self.first || r0 == 0.0) && (!self.second || r1 <= scale)
    }
}

/// Minimum of `E / N` over a constrained truncated subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedMinimum {
    pub value: f64,
    /// A minimizer normalized to `N(c) = 1`.
    pub minimizer: CoefficientVector,
}

fn pole(n: usize) -> f64 {
    (n as f64 - 1.0) / (n as f64 + 1.0)
}

fn secular(f2: &[f64], start: usize, mu: f64) -> f64 {
    f2.iter()
        .enumerate()
        .skip(start)
        .map(|(n, v)| v / ((n as f64 - 1.0) - mu * (n as f64 + 1.0)))
        .sum()
}

/// Bisection for the root of an increasing function on `(lo, hi)` with
/// `g -> -inf` at `lo` and `g -> +inf` at `hi`.
fn increasing_root<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64) -> Result<f64, CoercivityError> {
    let width = hi - lo;
    let (mut a, mut b) = (lo + 1e-14 * width, hi - 1e-14 * width);
    if !(g(a) < 0.0 && g(b) > 0.0) {
        return Err(CoercivityError::NoRoot(format!(
            "secular function does not change sign on ({lo}, {hi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn secular_minimizer(f: &ProjectionSequence, start: usize, mu: f64) -> CoefficientVector {
    let mut v = vec![0.0; f.len()];
    for (n, slot) in v.iter_mut().enumerate().skip(start) {
        *slot = f.get(n) / ((n as f64 - 1.0) - mu * (n as f64 + 1.0));
    }
    let mut c = CoefficientVector { coeffs: v };
    let scale = compat_norm_form(&c).sqrt();
    c.coeffs.iter_mut().for_each(|x| *x /= scale);
    c
}

/// Exact minimum of `E / N` over coefficient vectors of length `n_max + 1`
/// satisfying `constraints`.
pub fn constrained_minimum(
    n_max: usize,
    constraints: ConstraintSet,
) -> Result<ConstrainedMinimum, CoercivityError> {
    let start = constraints.first_index();
    if !constraints.second {
        if n_max < start + 1 {
            return Err(CoercivityError::Degenerate { n_max, required: start + 1 });
        }
        return Ok(ConstrainedMinimum {
            value: pole(start),
            minimizer: CoefficientVector::unit(start, n_max + 1)?,
        });
    }
    if n_max < start + 1 {
        return Err(CoercivityError::Degenerate { n_max, required: start + 1 });
    }
    let f = projection_sequence(n_max)?;
    let f2: Vec<f64> = f.values.iter().map(|v| v * v).collect();
    let mu = increasing_root(|m| secular(&f2, start, m), pole(start), pole(start + 1))?;
    Ok(ConstrainedMinimum {
        value: mu,
        minimizer: secular_minimizer(&f, start, mu),
    })
}

/// `f_n^2 ~ 2 sqrt(2 pi) n^{-1/2} sum_i E[i] n^{-i}`.
const F2_SERIES: [f64; 5] = [1.0, -0.25, 1.0 / 32.0, 5.0 / 128.0, -21.0 / 2048.0];

/// `sum_{n > n_max} f_n^2 / ((n - 1) - mu (n + 1))` from the large-`n`
/// expansion of both factors.
fn secular_tail(mu: f64, n_max: usize) -> f64 {
    let kappa = (1.0 + mu) / (1.0 - mu);
    let a = (n_max + 1) as f64;
    let mut total = 0.0;
    for k in 0..F2_SERIES.len() {
        let ck: f64 = (0..=k).map(|i| F2_SERIES[i] * kappa.powi((k - i) as i32)).sum();
        total += ck * hurwitz_zeta(1.5 + k as f64, a);
    }
    2.0 * (2.0 * PI).sqrt() / (1.0 - mu) * total
}

/// Minimum number of modes accepted by [`coercivity_constant`].
pub const MIN_COERCIVITY_MODES: usize = 10;

/// Estimates of the coercivity constant at one truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityEstimate {
    pub n_max: usize,
    /// Exact constrained minimum on the truncated space (an upper bound).
    pub truncated: f64,
    /// Root of the secular equation including the asymptotic tail.
    pub corrected: f64,
}

pub fn coercivity_estimate(n_max: usize) -> Result<CoercivityEstimate, CoercivityError> {
    if n_max < MIN_COERCIVITY_MODES {
        return Err(CoercivityError::Degenerate {
            n_max,
            required: MIN_COERCIVITY_MODES,
        });
    }
    let truncated = constrained_minimum(n_max, ConstraintSet::BOTH)?.value;
    let f = projection_sequence(n_max)?;
    let f2: Vec<f64> = f.values.iter().map(|v| v * v).collect();
    let corrected = increasing_root(
        |m| secular(&f2, 1, m) + secular_tail(m, n_max),
        pole(1),
        pole(2),
    )?;
    Ok(CoercivityEstimate {
        n_max,
        truncated,
        corrected,
    })
}

/// The coercivity constant estimated from `n_max` explicit modes plus the
/// asymptotic tail.
pub fn coercivity_constant(n_max: usize) -> Result<f64, CoercivityError> {
    coercivity_estimate(n_max).map(|e| e.corrected)
}

/// Successive estimates from the doubling policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityConvergence {
    pub history: Vec<CoercivityEstimate>,
    pub value: f64,
    pub converged: bool,
}

/// Doubles `n_max` from `start` until two successive corrected estimates
/// differ by less than `tol` or `max_n_max` is exceeded.
pub fn converge_coercivity(
    start: usize,
    tol: f64,
    max_n_max: usize,
) -> Result<CoercivityConvergence, CoercivityError> {
    let mut history = vec![coercivity_estimate(start)?];
    let mut n = start;
    let mut converged = false;
    while 2 * n <= max_n_max {
        n *= 2;
        let est = coercivity_estimate(n)?;
        let prev = history.last().map(|e| e.corrected).unwrap_or(f64::NAN);
        let delta = (est.corrected - prev).abs();
        history.push(est);
        if delta < tol {
            converged = true;
            break;
        }
    }
    let value = history.last().map(|e| e.corrected).unwrap_or(f64::NAN);
    Ok(CoercivityConvergence {
        history,
        value,
        converged,
    })
}

/// `C_0(n_max) = sum_{n=2}^{n_max} f_n^2 / (n - 1)`.
pub fn c0_constant(n_max: usize) -> Result<f64, CoercivityError> {
    if n_max < 2 {
        return Err(CoercivityError::Degenerate { n_max, required: 2 });
    }
    let f = projection_sequence(n_max)?;
    Ok(c0_partial(&f, n_max))
}

fn c0_partial(f: &ProjectionSequence, n_max: usize) -> f64 {
    (2..=n_max).map(|n| f.get(n) * f.get(n) / (n as f64 - 1.0)).sum()
}

/// The partial sum for `C_0` together with its tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Estimate {
    pub n_max: usize,
    pub partial: f64,
    /// Asymptotic value of `sum_{n > n_max} f_n^2 / (n - 1)`.
    pub tail: f64,
    /// Rigorous-style bound `C sum_{n > n_max} n^{-3/2}` with `C` read off
    /// the last computed term.
    pub tail_bound: f64,
    /// Size of the last retained term of the tail expansion.
    pub tail_uncertainty: f64,
    /// `partial + tail`.
    pub value: f64,
}

pub fn c0_estimate(n_max: usize) -> Result<C0Estimate, CoercivityError> {
    if n_max < 2 {
        return Err(CoercivityError::Degenerate { n_max, required: 2 });
    }
    let f = projection_sequence(n_max)?;
    let partial = c0_partial(&f, n_max);
    let tail = secular_tail(0.0, n_max);
    let n = n_max as f64;
    let c = f.get(n_max) * f.get(n_max) * n.powf(1.5) / (n - 1.0).max(1.0);
    let tail_bound = c * hurwitz_zeta(1.5, n + 1.0);
    let last = F2_SERIES.len() - 1;
    let c_last: f64 = F2_SERIES.iter().sum();
    let tail_uncertainty =
        (2.0 * (2.0 * PI).sqrt() * c_last * hurwitz_zeta(1.5 + last as f64, n + 1.0)).abs();
    Ok(C0Estimate {
        n_max,
        partial,
        tail,
        tail_bound,
        tail_uncertainty,
        value: partial + tail,
    })
}

/// Random coefficient vector of length `n_max + 1` projected onto the
/// subspace selected by `constraints`. Entries are uniform in `[-1, 1]`
/// with a random algebraic envelope so that both flat and decaying
/// profiles are drawn.
pub fn random_constrained_sample<R: Rng + ?Sized>(
    n_max: usize,
    constraints: ConstraintSet,
    f: &ProjectionSequence,
    rng: &mut R,
) -> CoefficientVector {
    let p: f64 = rng.gen_range(0.0..1.5);
    let raw: Vec<f64> = (0..=n_max)
        .map(|n| rng.gen_range(-1.0..1.0) * ((n + 1) as f64).powf(-p))
        .collect();
    constraints.project(&CoefficientVector { coeffs: raw }, f)
}

const BERNOULLI_2J: [f64; 6] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
];

/// Hurwitz zeta `sum_{k >= 0} (a + k)^{-s}` for `s > 1`, `a > 0`, by a short
/// direct sum followed by Euler-Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0);
    const DIRECT: usize = 10;
    let mut sum = 0.0;
    for k in 0..DIRECT {
        sum += (a + k as f64).powf(-s);
    }
    let b = a + DIRECT as f64;
    sum += b.powf(1.0 - s) / (s - 1.0) + 0.5 * b.powf(-s);
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = b.powf(-s - 1.0);
    for (j, bern) in BERNOULLI_2J.iter().enumerate() {
        sum += bern / fact * rising * power;
        let k = 2 * j as u32 + 2;
        rising *= (s + k as f64 - 1.0) * (s + k as f64);
        fact *= (k + 1) as f64 * (k + 2) as f64;
        power /= b * b;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn form_examples() {
        let e0 = CoefficientVector::unit(0, 4).unwrap();
        let e1 = CoefficientVector::unit(1, 4).unwrap();
        let e2 = CoefficientVector::unit(2, 4).unwrap();
        assert_eq!(energy_form(&e1), 0.0);
        assert_eq!(energy_form(&e0), -1.0);
        assert_eq!(energy_form(&e2), 1.0);
        assert_eq!(compat_norm_form(&e0), 1.0);
        assert_eq!(compat_norm_form(&e2), 3.0);
        assert!(CoefficientVector::new(vec![1.0]).is_err());
    }

    #[test]
    fn hurwitz_matches_riemann_and_direct_sums() {
        assert!((hurwitz_zeta(1.5, 1.0) - 2.612_375_348_685_488).abs() < 1e-13);
        assert!((hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
        // high-precision reference values
        assert!((hurwitz_zeta(4.5, 3.0) / 0.010_513_336_937_295_044 - 1.0).abs() < 1e-14);
        assert!((hurwitz_zeta(1.5, 11.0) / 0.617_038_855_339_886_6 - 1.0).abs() < 1e-14);
        assert!((hurwitz_zeta(5.5, 100_001.0) / 7.027_125_576_829_434e-24 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn c0_first_partial_sum_is_pi() {
        assert!((c0_constant(2).unwrap() - PI).abs() < 1e-14);
        assert!(c0_constant(1).is_err());
    }

    #[test]
    fn minimum_with_first_constraint_only_is_zero() {
        let m = constrained_minimum(50, ConstraintSet::FIRST).unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.minimizer.coeffs()[1], 1.0);
        assert_eq!(constrained_minimum(50, ConstraintSet::NONE).unwrap().value, -1.0);
    }

    #[test]
    fn secular_minimizer_attains_the_minimum() {
        let m = constrained_minimum(60, ConstraintSet::BOTH).unwrap();
        let c = &m.minimizer;
        let ratio = energy_form(c) / compat_norm_form(c);
        assert!((ratio - m.value).abs() < 1e-12);
        let f = projection_sequence(60).unwrap();
        assert!(ConstraintSet::BOTH.is_satisfied(c, &f));
    }

    #[test]
    fn constant_is_below_truncated_bound() {
        let e = coercivity_estimate(50).unwrap();
        assert!(e.corrected > 0.0 && e.corrected < e.truncated && e.truncated < 1.0);
        assert!(matches!(
            coercivity_constant(9),
            Err(CoercivityError::Degenerate { .. })
        ));
    }
}
