//! Least-squares fits used to read off decay rates and limits of sequences.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("insufficient data: {usable} usable points, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },
    #[error("invalid fit parameter: {0}")]
    InvalidParameter(String),
    #[error("least-squares solve failed: {0}")]
    Solve(String),
}

/// Minimum number of tail points a slope fit accepts.
pub const MIN_TAIL_POINTS: usize = 10;

/// Ordinary least squares slope and intercept of `y` against `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64), FitError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(FitError::InsufficientData {
            usable: x.len().min(y.len()),
            needed: 2,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(FitError::Solve("abscissas are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `log |seq_m|` against `log m` (with `m` starting at
/// `first_index`) over the last `tail_fraction` of the entries. Exact zeros
/// are skipped.
pub fn log_log_slope(seq: &[f64], first_index: usize, tail_fraction: f64) -> Result<f64, FitError> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(FitError::InvalidParameter(format!(
            "tail fraction {tail_fraction} must lie in (0, 1)"
        )));
    }
    let start = ((seq.len() as f64) * (1.0 - tail_fraction)).floor() as usize;
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (i, v) in seq.iter().enumerate().skip(start) {
        if *v != 0.0 && v.is_finite() {
            lx.push(((i + first_index) as f64).ln());
            ly.push(v.abs().ln());
        }
    }
    if lx.len() < MIN_TAIL_POINTS {
        return Err(FitError::InsufficientData {
            usable: lx.len(),
            needed: MIN_TAIL_POINTS,
        });
    }
    linear_regression(&lx, &ly).map(|(s, _)| s)
}

/// Result of fitting `s_m = sum_j c_j m^{-j/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual of the fit.
    pub residual_rms: f64,
}

impl AsymptoticFit {
    /// The extrapolated value at `m -> infinity`.
    pub fn limit(&self) -> f64 {
        self.coefficients[0]
    }
}

/// Fits `values[k] ~ sum_{j < terms} c_j (indices[k])^{-j/2}`.
///
/// The basis is evaluated in the rescaled variable `(m / m_last)^{-1/2}` to
/// keep the design matrix well conditioned; coefficients are reported in the
/// unscaled basis.
pub fn fit_inverse_sqrt_series(
    indices: &[f64],
    values: &[f64],
    terms: usize,
) -> Result<AsymptoticFit, FitError> {
    if terms == 0 {
        return Err(FitError::InvalidParameter("at least one term required".into()));
    }
    if indices.len() != values.len() || indices.len() < terms + 2 {
        return Err(FitError::InsufficientData {
            usable: indices.len().min(values.len()),
            needed: terms + 2,
        });
    }
    let m_ref = indices.iter().cloned().fold(0.0, f64::max);
    let rows = indices.len();
    let design = DMatrix::from_fn(rows, terms, |r, c| (indices[r] / m_ref).powf(-0.5 * c as f64));
    let rhs = DVector::from_column_slice(values);
    let svd = design.clone().svd(true, true);
    let scaled = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| FitError::Solve(e.to_string()))?;
    let residual = &design * &scaled - &rhs;
    let residual_rms = (residual.norm_squared() / rows as f64).sqrt();
    let coefficients = (0..terms)
        .map(|j| scaled[j] * m_ref.powf(0.5 * j as f64))
        .collect();
    Ok(AsymptoticFit {
        coefficients,
        residual_rms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_recovers_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let (s, c) = linear_regression(&x, &y).unwrap();
        assert!((s + 0.5).abs() < 1e-13 && (c - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_slope() {
        let seq: Vec<f64> = (1..=400).map(|m| 2.0 * (m as f64).powf(-0.75)).collect();
        let s = log_log_slope(&seq, 1, 0.5).unwrap();
        assert!((s + 0.75).abs() < 1e-12);
    }

    #[test]
    fn slope_needs_enough_points() {
        let seq = vec![1.0; 15];
        assert!(matches!(
            log_log_slope(&seq, 1, 0.5),
            Err(FitError::InsufficientData { .. })
        ));
        let mut sparse = vec![0.0; 100];
        sparse[99] = 1.0;
        assert!(log_log_slope(&sparse, 1, 0.5).is_err());
        assert!(log_log_slope(&seq, 1, 1.5).is_err());
    }

    #[test]
    fn inverse_sqrt_series_extrapolates() {
        let m: Vec<f64> = (250..=500).map(|v| v as f64).collect();
        let v: Vec<f64> = m
            .iter()
            .map(|&x| 1.5 - 2.0 / x.sqrt() + 0.7 / x - 0.2 * x.powf(-1.5))
            .collect();
        let fit = fit_inverse_sqrt_series(&m, &v, 4).unwrap();
        assert!((fit.limit() - 1.5).abs() < 1e-9);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-6);
    }
}
