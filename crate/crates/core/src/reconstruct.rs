//! Physical-space profiles: Hermite synthesis, assembly of the Jacobi
//! eigenvectors into odd and even parts, and the Gaussian convolution
//! representation of half-line data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coercivity::CoefficientVector;
use crate::fit;
use crate::grid::RealGrid;
use crate::halfline::{HalfLineFlow, HalfLineGrid, HalfLineState, ModulationTrajectory};
use crate::hermite::{ground_state, hermite_series, HermiteError};
use crate::jacobi::ShootingState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructError {
    #[error("z = 0 is not an eigenvalue and cannot be assembled")]
    ExcludedEigenvalue,
    #[error("mismatched input: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Hermite(#[from] HermiteError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSamples {
    pub grid: RealGrid,
    pub values: Vec<f64>,
}

impl ProfileSamples {
    pub fn new(grid: RealGrid, values: Vec<f64>) -> Result<Self, ReconstructError> {
        if grid.len() != values.len() {
            return Err(ReconstructError::Mismatch(format!(
                "{} samples on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn l2_norm(&self) -> f64 {
        self.grid.l2_norm(&self.values)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `sum_n c_n u_n(x_i)`.
pub fn synthesize(c: &CoefficientVector, grid: &RealGrid) -> ProfileSamples {
    let coeffs = c.coeffs();
    let values = grid.nodes().iter().map(|&x| hermite_series(coeffs, x)).collect();
    ProfileSamples {
        grid: grid.clone(),
        values,
    }
}

/// Hermite coefficients of the odd and even parts of an eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorCoefficients {
    /// Coefficients of `u_0, ..., u_{2M+1}` for `y_odd`.
    pub odd: Vec<f64>,
    /// Coefficients of `u_0, ..., u_{2M+1}` for `y_even`.
    pub even: Vec<f64>,
    /// Coefficient of `u_1` in the full eigenvector.
    pub c1: f64,
}

pub fn eigenvector_coefficients(z: f64, shoot: &ShootingState) -> Result<EigenvectorCoefficients, ReconstructError> {
    if z == 0.0 {
        return Err(ReconstructError::ExcludedEigenvalue);
    }
    let m_max = shoot.m_max();
    let mut odd = vec![0.0; 2 * m_max + 2];
    let mut even = vec![0.0; 2 * m_max + 2];
    for m in 1..=m_max {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        odd[2 * m + 1] = sign / ((2 * m) as f64).sqrt() * shoot.b[m - 1];
        even[2 * m] = -sign / ((2 * m - 1) as f64).sqrt() * shoot.a[m - 1];
    }
    Ok(EigenvectorCoefficients {
        odd,
        even,
        c1: std::f64::consts::SQRT_2 * shoot.a[0] / z,
    })
}

/// `l^2` size of the coefficients beyond the truncation, from a power-law
/// fit to the retained tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesTail {
    pub exponent: f64,
    pub estimate: f64,
}

fn series_tail(coeffs: &[f64]) -> SeriesTail {
    let nonzero: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = nonzero
        .iter()
        .skip(nonzero.len() / 2)
        .map(|(i, v)| ((*i as f64).ln(), v.abs().ln()))
        .unzip();
    let Some(&(last_i, last_v)) = nonzero.last() else {
        return SeriesTail { exponent: f64::NAN, estimate: 0.0 };
    };
    match fit::linear_regression(&lx, &ly) {
        Ok((p, _)) if 2.0 * p + 1.0 < 0.0 => {
            // coefficients live on every other index, hence the factor 1/2
            let n = last_i as f64;
            let c2 = last_v * last_v * n.powf(-2.0 * p);
            let tail_sq = 0.5 * c2 * n.powf(2.0 * p + 1.0) / (-(2.0 * p + 1.0));
            SeriesTail { exponent: p, estimate: tail_sq.sqrt() }
        }
        Ok((p, _)) => SeriesTail { exponent: p, estimate: f64::INFINITY },
        Err(_) => SeriesTail { exponent: f64::NAN, estimate: f64::NAN },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorProfiles {
    pub y_odd: ProfileSamples,
    pub y_even: ProfileSamples,
    pub c1: f64,
    pub odd_tail: SeriesTail,
    pub even_tail: SeriesTail,
}

pub fn eigenvector_assemble(
    z: f64,
    shoot: &ShootingState,
    grid: &RealGrid,
) -> Result<EigenvectorProfiles, ReconstructError> {
    let coeffs = eigenvector_coefficients(z, shoot)?;
    let odd = CoefficientVector::new(coeffs.odd.clone()).map_err(|e| ReconstructError::Mismatch(e.to_string()))?;
    let even = CoefficientVector::new(coeffs.even.clone()).map_err(|e| ReconstructError::Mismatch(e.to_string()))?;
    Ok(EigenvectorProfiles {
        y_odd: synthesize(&odd, grid),
        y_even: synthesize(&even, grid),
        c1: coeffs.c1,
        odd_tail: series_tail(&coeffs.odd),
        even_tail: series_tail(&coeffs.even),
    })
}

/// `d/dx L y` with `L = -d^2/dx^2 + (x^2 - 6)/4`, by second-order central
/// differences on a uniform grid. The two outermost nodes on each side are
/// set to zero.
pub fn dx_l_finite_difference(grid: &RealGrid, y: &[f64]) -> Vec<f64> {
    let x = grid.nodes();
    let n = x.len();
    let h = x[1] - x[0];
    let mut ly = vec![0.0; n];
    for i in 1..n - 1 {
        let ypp = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
        ly[i] = -ypp + 0.25 * (x[i] * x[i] - 6.0) * y[i];
    }
    let mut out = vec![0.0; n];
    for i in 2..n - 2 {
        out[i] = (ly[i + 1] - ly[i - 1]) / (2.0 * h);
    }
    out
}

/// Residuals of `z (y_odd + c_1 u_1) = 2 d_x L y_even` and
/// `-z y_even = 2 d_x L y_odd`, paired against
/// `phi_k(x) = x^k exp(-x^2/2)`, `k = 0..=max_power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// Root sum of squares of all pairings.
    pub total: f64,
}

pub fn weak_residual(
    z: f64,
    profiles: &EigenvectorProfiles,
    max_power: usize,
) -> Result<WeakResidual, ReconstructError> {
    let grid = &profiles.y_odd.grid;
    if grid.weights().is_none() || grid.len() < 8 {
        return Err(ReconstructError::Mismatch("residual grid needs weights and 8 nodes".into()));
    }
    let x = grid.nodes();
    let l_even = dx_l_finite_difference(grid, &profiles.y_even.values);
    let l_odd = dx_l_finite_difference(grid, &profiles.y_odd.values);
    let n = x.len();
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    for i in 2..n - 2 {
        let u1 = x[i] * ground_state(x[i]);
        r1[i] = z * (profiles.y_odd.values[i] + profiles.c1 * u1) - 2.0 * l_even[i];
        r2[i] = -z * profiles.y_even.values[i] - 2.0 * l_odd[i];
    }
    let mut first = Vec::with_capacity(max_power + 1);
    let mut second = Vec::with_capacity(max_power + 1);
    for k in 0..=max_power {
        let phi: Vec<f64> = x.iter().map(|&s| s.powi(k as i32) * (-0.5 * s * s).exp()).collect();
        first.push(grid.inner(&phi, &r1));
        second.push(grid.inner(&phi, &r2));
    }
    let total = first.iter().chain(&second).map(|v| v * v).sum::<f64>().sqrt();
    Ok(WeakResidual { first, second, total })
}

/// `a u_0(x) + b u_1(x) + int_{-Z}^0 u_0(x - z) w(z) dz`.
pub fn convolution_synthesize(
    w: &HalfLineState,
    half_grid: &HalfLineGrid,
    a: f64,
    b: f64,
    grid: &RealGrid,
) -> Result<ProfileSamples, ReconstructError> {
    if w.w.len() != half_grid.intervals() {
        return Err(ReconstructError::Mismatch(format!(
            "{} half-line values for {} unknowns",
            w.w.len(),
            half_grid.intervals()
        )));
    }
    let zs = half_grid.unknown_nodes();
    let pw: Vec<f64> = half_grid.weights().iter().zip(&w.w).map(|(p, v)| p * v).collect();
    let values = grid
        .nodes()
        .iter()
        .map(|&x| {
            let conv: f64 = zs.iter().zip(&pw).map(|(z, v)| ground_state(x - z) * v).sum();
            a * ground_state(x) + b * x * ground_state(x) + conv
        })
        .collect();
    ProfileSamples::new(grid.clone(), values)
}

/// `||u(t) - b(t) u_1||` in `L^2` and `L^inf` at each sampled state of a
/// half-line flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRecord {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub b: f64,
}

pub fn scattering_distance(
    flow: &HalfLineFlow,
    modulation: &ModulationTrajectory,
    half_grid: &HalfLineGrid,
    grid: &RealGrid,
) -> Result<Vec<ScatteringRecord>, ReconstructError> {
    let mut out = Vec::with_capacity(flow.samples.len());
    for s in &flow.samples {
        let k = modulation
            .t
            .iter()
            .position(|t| (t - s.t).abs() <= 1e-9 * (1.0 + s.t.abs()))
            .ok_or_else(|| ReconstructError::Mismatch(format!("no modulation value at t = {}", s.t)))?;
        let u = convolution_synthesize(s, half_grid, modulation.a[k], 0.0, grid)?;
        out.push(ScatteringRecord {
            t: s.t,
            l2: u.l2_norm(),
            linf: u.linf_norm(),
            b: modulation.b[k],
        });
    }
    Ok(out)
}
