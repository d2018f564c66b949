//! The Jacobi operator
//!
//! `(J f)_n = sqrt(n (n+1) (n+2)) f_{n+1} + sqrt((n-1) n (n+1)) f_{n-1}`,  `n >= 1`,
//!
//! its null solution, the shooting recursion for `J f = z f` and the
//! discrete Wronskian whose limit locates the eigenvalues.
//!
//! All sequences here are stored with slice index `i` holding the entry
//! with label `n = i + 1` (or `m = i + 1` for the half-sequences `A`, `B`,
//! `V`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{self, FitError};
use crate::hermite::{product_sequence, HermiteError};
use crate::tridiag;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("wronskian tail does not settle to a plateau at n_max = {n_max}")]
    NonConvergentPlateau { n_max: usize },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Hermite(#[from] HermiteError),
}

/// Off-diagonal weights of `J`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobiCoefficients;

impl JacobiCoefficients {
    /// `sqrt(n (n+1) (n+2))`; zero at `n = 0`.
    pub fn off_diag(n: usize) -> f64 {
        let n = n as f64;
        (n * (n + 1.0) * (n + 2.0)).sqrt()
    }
}

fn off(n: usize) -> f64 {
    JacobiCoefficients::off_diag(n)
}

/// `(J f)_n` for `n = 1..=n_max`; entries of `f` beyond `n_max` are ignored.
pub fn apply_jacobi(f: &[f64], n_max: usize) -> Vec<f64> {
    let get = |n: usize| -> f64 {
        if n == 0 || n > n_max {
            0.0
        } else {
            f.get(n - 1).copied().unwrap_or(0.0)
        }
    };
    (1..=n_max)
        .map(|n| off(n) * get(n + 1) + off(n - 1) * get(n - 1))
        .collect()
}

/// `W_n(f, g) = sqrt(n (n+1) (n+2)) (f_n g_{n+1} - f_{n+1} g_n)` for
/// `n = 1..len - 1`.
pub fn discrete_wronskian(f: &[f64], g: &[f64]) -> Vec<f64> {
    let len = f.len().min(g.len());
    (1..len)
        .map(|n| off(n) * (f[n - 1] * g[n] - f[n] * g[n - 1]))
        .collect()
}

/// The decaying solution of `J v = 0` with `v_1 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSolution {
    /// `v_1, ..., v_{2M+1}`.
    pub values: Vec<f64>,
}

impl NullSolution {
    /// `V_m = v_{2m-1}`, `m >= 1`.
    pub fn odd(&self, m: usize) -> f64 {
        self.values[2 * m - 2]
    }

    pub fn m_max(&self) -> usize {
        (self.values.len() - 1) / 2
    }

    /// `|V_1|, ..., |V_{M+1}|`.
    pub fn odd_magnitudes(&self) -> Vec<f64> {
        self.values.iter().step_by(2).map(|v| v.abs()).collect()
    }
}

/// `v_{2m+1} = (-1)^m prod_{k <= m} sqrt(2k - 1) / sqrt(2k + 2)`.
pub fn null_solution(m_max: usize) -> Result<NullSolution, SpectrumError> {
    if m_max < 1 {
        return Err(SpectrumError::InvalidInput("m_max must be at least 1".into()));
    }
    let mags = product_sequence(1.0, 2.0, m_max)?;
    let mut values = vec![0.0; 2 * m_max + 1];
    for m in 0..=m_max {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        values[2 * m] = sign * mags.get(m);
    }
    Ok(NullSolution { values })
}

/// Odd and even entries `A_m = f_{2m-1}`, `B_m = f_{2m}` of a trial
/// solution of `J f = z f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingState {
    pub z: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ShootingState {
    pub fn m_max(&self) -> usize {
        self.a.len()
    }

    /// Interleaved `f_1, f_2, ..., f_{2M}`.
    pub fn interleaved(&self) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .flat_map(|(a, b)| [*a, *b])
            .collect()
    }
}

/// Runs the coupled recursion from `A_1 = 1` up to `A_M`, `B_M`.
pub fn shoot(z: f64, m_max: usize) -> Result<ShootingState, SpectrumError> {
    if m_max < 2 {
        return Err(SpectrumError::InvalidInput("m_max must be at least 2".into()));
    }
    if !z.is_finite() {
        return Err(SpectrumError::InvalidInput(format!("z = {z} is not finite")));
    }
    let mut a = Vec::with_capacity(m_max);
    let mut b = Vec::with_capacity(m_max);
    a.push(1.0);
    let mut b_prev = 0.0;
    for m in 1..=m_max {
        let am = a[m - 1];
        let bm = (z * am - off(2 * m - 2) * b_prev) / off(2 * m - 1);
        b.push(bm);
        if m < m_max {
            a.push((z * bm - off(2 * m - 1) * am) / off(2 * m));
        }
        b_prev = bm;
    }
    Ok(ShootingState { z, a, b })
}

/// How `W_inf` is read off a finite trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlateauEstimator {
    /// Mean of the last 10% of `W_n`.
    TailMean,
    /// Least-squares fit of `W_{2m-1}` to `sum_{j<5} c_j m^{-j/2}` over the
    /// second half of the trace; `c_0` is the estimate.
    #[default]
    AsymptoticFit,
}

const FIT_TERMS: usize = 5;
const PLATEAU_RESIDUAL_LIMIT: f64 = 1e-3;

/// `W_n = W_n(v, f)` for `n = 1..=n_max` and its limiting value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WronskianTrace {
    pub z: f64,
    pub values: Vec<f64>,
    pub w_inf: f64,
    pub estimator: PlateauEstimator,
    /// RMS misfit of the tail model relative to the tail scale; zero for
    /// the tail mean.
    pub plateau_misfit: f64,
}

pub const MIN_TRACE_LENGTH: usize = 10;

/// The limit value for an already computed trace.
fn plateau(values: &[f64], estimator: PlateauEstimator) -> Result<(f64, f64), SpectrumError> {
    match estimator {
        PlateauEstimator::TailMean => {
            let k = (values.len() / 10).max(1);
            let tail = &values[values.len() - k..];
            Ok((tail.iter().sum::<f64>() / k as f64, 0.0))
        }
        PlateauEstimator::AsymptoticFit => {
            // odd entries W_{2m-1} sit at even slice positions
            let odd: Vec<f64> = values.iter().step_by(2).copied().collect();
            let m_len = odd.len();
            let start = m_len / 2;
            let m: Vec<f64> = (start..m_len).map(|i| (i + 1) as f64).collect();
            let fitted = fit::fit_inverse_sqrt_series(&m, &odd[start..], FIT_TERMS)?;
            let scale = odd[start..].iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let misfit = if scale > 0.0 { fitted.residual_rms / scale } else { 0.0 };
            Ok((fitted.limit(), misfit))
        }
    }
}

pub fn wronskian_trace(z: f64, n_max: usize) -> Result<WronskianTrace, SpectrumError> {
    wronskian_trace_with(z, n_max, PlateauEstimator::default())
}

pub fn wronskian_trace_with(
    z: f64,
    n_max: usize,
    estimator: PlateauEstimator,
) -> Result<WronskianTrace, SpectrumError> {
    if n_max < MIN_TRACE_LENGTH {
        return Err(SpectrumError::InvalidInput(format!(
            "n_max = {n_max} is below {MIN_TRACE_LENGTH}"
        )));
    }
    let m_max = n_max / 2 + 1;
    let s = shoot(z, m_max.max(2))?;
    let v = null_solution(m_max)?;
    let mut values = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let w = if n % 2 == 1 {
            let m = n.div_ceil(2);
            off(n) * s.b[m - 1] * v.odd(m)
        } else {
            let m = n / 2;
            -off(n) * s.b[m - 1] * v.odd(m + 1)
        };
        values.push(w);
    }
    let (w_inf, plateau_misfit) = plateau(&values, estimator)?;
    Ok(WronskianTrace {
        z,
        values,
        w_inf,
        estimator,
        plateau_misfit,
    })
}

/// Slope of `log |seq_m|` against `log m` over the final `tail_fraction`
/// of the sequence (indexed from `m = 1`).
pub fn decay_exponent(seq: &[f64], tail_fraction: f64) -> Result<f64, SpectrumError> {
    Ok(fit::log_log_slope(seq, 1, tail_fraction)?)
}

/// Parameters of the eigenvalue search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub z_min: f64,
    pub z_max: f64,
    pub scan_step: f64,
    pub tol: f64,
    pub n_max: usize,
    pub estimator: PlateauEstimator,
    /// Length of the shooting sequences used for the decay fits.
    pub decay_m_max: usize,
    pub decay_tail_fraction: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            z_min: 0.05,
            z_max: 20.0,
            scan_step: 0.05,
            tol: 1e-6,
            n_max: 1000,
            estimator: PlateauEstimator::AsymptoticFit,
            decay_m_max: 10_000,
            decay_tail_fraction: 0.5,
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<(), SpectrumError> {
        let bad = |msg: String| Err(SpectrumError::InvalidInput(msg));
        if !(self.z_min > 0.0 && self.z_max > self.z_min && self.z_max.is_finite()) {
            return bad(format!(
                "scan range must satisfy 0 < z_min < z_max (got {}, {})",
                self.z_min, self.z_max
            ));
        }
        if !(self.scan_step > 0.0) || self.scan_step > self.z_max - self.z_min {
            return bad(format!("scan step {} out of range", self.scan_step));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tol));
        }
        if self.n_max < MIN_TRACE_LENGTH {
            return bad(format!("n_max = {} is below {MIN_TRACE_LENGTH}", self.n_max));
        }
        if self.decay_m_max < 2 * fit::MIN_TAIL_POINTS {
            return bad(format!("decay_m_max = {} too small", self.decay_m_max));
        }
        if !(self.decay_tail_fraction > 0.0 && self.decay_tail_fraction < 1.0) {
            return bad(format!(
                "decay tail fraction {} must lie in (0, 1)",
                self.decay_tail_fraction
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayExponents {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Increasing simple roots `z_k` of `W_inf`.
    pub eigenvalues: Vec<f64>,
    /// `lambda_k = z_k / 2`, the imaginary parts of the eigenvalues of the
    /// linearized generator.
    pub frequencies: Vec<f64>,
    pub decay_exponents: Vec<DecayExponents>,
    /// `|W_inf(z_k)| / max_scan |W_inf|`.
    pub relative_residuals: Vec<f64>,
    /// The scan `(z, W_inf(z))`.
    pub scan: Vec<(f64, f64)>,
    /// Truncation used after any retry.
    pub n_max: usize,
    pub diagnostics: Vec<String>,
}

impl SpectrumResult {
    /// `E_k = 2 z_k`.
    pub fn doubled(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| 2.0 * z).collect()
    }
}

fn w_inf(z: f64, n_max: usize, estimator: PlateauEstimator) -> Result<(f64, f64), SpectrumError> {
    let t = wronskian_trace_with(z, n_max, estimator)?;
    Ok((t.w_inf, t.plateau_misfit))
}

/// Scans `W_inf` in parallel over `[z_min, z_max]`.
pub fn scan_wronskian(
    z_min: f64,
    z_max: f64,
    step: f64,
    n_max: usize,
    estimator: PlateauEstimator,
) -> Result<Vec<(f64, f64, f64)>, SpectrumError> {
    let count = ((z_max - z_min) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let z = z_min + step * i as f64;
            w_inf(z, n_max, estimator).map(|(w, misfit)| (z, w, misfit))
        })
        .collect()
}

fn bisect(
    mut lo: f64,
    mut hi: f64,
    mut w_lo: f64,
    tol: f64,
    n_max: usize,
    estimator: PlateauEstimator,
) -> Result<f64, SpectrumError> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (w_mid, _) = w_inf(mid, n_max, estimator)?;
        if w_mid == 0.0 {
            return Ok(mid);
        }
        if (w_mid > 0.0) == (w_lo > 0.0) {
            lo = mid;
            w_lo = w_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Brackets sign changes of `W_inf` on the scan grid and refines each by
/// bisection. `z = 0` never enters the list: the trivial solution there is
/// not an eigenvector.
pub fn find_eigenvalues(config: &SpectrumConfig) -> Result<SpectrumResult, SpectrumError> {
    config.validate()?;
    let mut diagnostics = Vec::new();
    let mut n_max = config.n_max;
    let mut scan = scan_wronskian(config.z_min, config.z_max, config.scan_step, n_max, config.estimator)?;
    let unsettled = |s: &[(f64, f64, f64)]| s.iter().filter(|p| p.2 > PLATEAU_RESIDUAL_LIMIT).count();
    if unsettled(&scan) > 0 {
        diagnostics.push(format!(
            "{} scan points without a settled plateau at n_max = {n_max}; retrying with {}",
            unsettled(&scan),
            2 * n_max
        ));
        n_max *= 2;
        scan = scan_wronskian(config.z_min, config.z_max, config.scan_step, n_max, config.estimator)?;
        if unsettled(&scan) > 0 {
            return Err(SpectrumError::NonConvergentPlateau { n_max });
        }
    }
    let max_abs = scan.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let mut eigenvalues = Vec::new();
    for pair in scan.windows(2) {
        let (z0, w0, _) = pair[0];
        let (z1, w1, _) = pair[1];
        if w0 == 0.0 {
            eigenvalues.push(z0);
        } else if (w0 > 0.0) != (w1 > 0.0) && w1 != 0.0 {
            eigenvalues.push(bisect(z0, z1, w0, config.tol, n_max, config.estimator)?);
        }
    }
    if let Some(&(z_last, w_last, _)) = scan.last() {
        if w_last == 0.0 {
            eigenvalues.push(z_last);
        }
    }
    eigenvalues.retain(|z| z.abs() > config.tol);
    if eigenvalues.is_empty() {
        diagnostics.push(format!(
            "no sign change of W_inf on [{}, {}]",
            config.z_min, config.z_max
        ));
    }
    let mut decay_exponents = Vec::with_capacity(eigenvalues.len());
    let mut relative_residuals = Vec::with_capacity(eigenvalues.len());
    for &z in &eigenvalues {
        let s = shoot(z, config.decay_m_max)?;
        decay_exponents.push(DecayExponents {
            a: decay_exponent(&s.a, config.decay_tail_fraction)?,
            b: decay_exponent(&s.b, config.decay_tail_fraction)?,
        });
        let (w, _) = w_inf(z, n_max, config.estimator)?;
        relative_residuals.push(if max_abs > 0.0 { w.abs() / max_abs } else { 0.0 });
    }
    Ok(SpectrumResult {
        frequencies: eigenvalues.iter().map(|z| 0.5 * z).collect(),
        eigenvalues,
        decay_exponents,
        relative_residuals,
        scan: scan.into_iter().map(|(z, w, _)| (z, w)).collect(),
        n_max,
        diagnostics,
    })
}

/// Roots found at each of several truncations, for sensitivity reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSensitivity {
    pub n_max: usize,
    pub eigenvalues: Vec<f64>,
}

pub fn truncation_sensitivity(
    config: &SpectrumConfig,
    n_values: &[usize],
) -> Result<Vec<TruncationSensitivity>, SpectrumError> {
    n_values
        .iter()
        .map(|&n| {
            let cfg = SpectrumConfig {
                n_max: n,
                ..config.clone()
            };
            find_eigenvalues(&cfg).map(|r| TruncationSensitivity {
                n_max: n,
                eigenvalues: r.eigenvalues,
            })
        })
        .collect()
}

/// Eigenvalues in `(lo, hi)` of the `order x order` truncation of `J` with
/// a zero boundary row. For odd `order` the cut imposes the same condition
/// at infinity as pairing with the null solution does, and the values drift
/// slowly toward the Wronskian roots as `order` grows.
pub fn truncated_eigenvalues(order: usize, lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>, SpectrumError> {
    if order < 2 {
        return Err(SpectrumError::InvalidInput("truncation order must be at least 2".into()));
    }
    let diag = vec![0.0; order];
    let offs: Vec<f64> = (1..order).map(off).collect();
    Ok(tridiag::symmetric_eigenvalues_in(&diag, &offs, lo, hi, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_of_first_unit_vector() {
        let mut e1 = vec![0.0; 8];
        e1[0] = 1.0;
        let jf = apply_jacobi(&e1, 8);
        assert!((jf[1] - 6f64.sqrt()).abs() < 1e-15);
        for (i, v) in jf.iter().enumerate() {
            if i != 1 {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(apply_jacobi(&[0.0; 5], 5).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn null_solution_examples() {
        let v = null_solution(5).unwrap();
        assert_eq!(v.values[0], 1.0);
        assert_eq!(v.values[1], 0.0);
        assert!((v.values[2] + 0.5).abs() < 1e-15);
        assert!(null_solution(0).is_err());
    }

    #[test]
    fn shooting_examples() {
        let s = shoot(1.0, 4).unwrap();
        assert_eq!(s.a[0], 1.0);
        assert!((s.b[0] - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        let s0 = shoot(0.0, 50).unwrap();
        assert!(s0.b.iter().all(|b| *b == 0.0));
        assert!(shoot(1.0, 1).is_err());
        assert!(shoot(f64::INFINITY, 5).is_err());
    }

    #[test]
    fn wronskian_of_null_solution_with_itself_vanishes() {
        let v = null_solution(20).unwrap();
        assert!(discrete_wronskian(&v.values, &v.values).iter().all(|w| *w == 0.0));
    }

    #[test]
    fn odd_and_even_wronskian_entries_agree() {
        let t = wronskian_trace(1.0, 200).unwrap();
        for pair in t.values.chunks(2) {
            if pair.len() == 2 {
                assert!((pair[0] - pair[1]).abs() <= 1e-12 * pair[0].abs().max(1e-300));
            }
        }
    }

    #[test]
    fn short_traces_are_rejected() {
        assert!(wronskian_trace(1.0, 9).is_err());
        let bad = SpectrumConfig {
            z_min: 0.0,
            ..SpectrumConfig::default()
        };
        assert!(find_eigenvalues(&bad).is_err());
    }
}
