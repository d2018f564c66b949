//! Skew-symmetric lattice flow on the weighted coefficients
//! `a_n = sqrt(n) c_{n+1}`, `n = 1..N`:
//!
//! `da_n/dt = (sqrt(n(n+1)(n+2)) a_{n+1} - sqrt((n-1)n(n+1)) a_{n-1}) / 2`,
//!
//! truncated by `a_{N+1} = 0`. The translational coefficient obeys
//! `dc_1/dt = a_1 / sqrt 2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coercivity::CoefficientVector;
use crate::grid::RealGrid;
use crate::hermite::{projection_sequence, tabulate, HermiteError, ProjectionSequence};
use crate::tridiag::{Tridiagonal, TridiagonalLu};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("time step {dt} exceeds the explicit stability limit {limit} for N = {n}")]
    StepTooLarge { dt: f64, limit: f64, n: usize },
    #[error("linear solve failed at row {row} (pivot {pivot})")]
    SolveFailed { row: usize, pivot: f64 },
    #[error(transparent)]
    Hermite(#[from] HermiteError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    /// `a_1, ..., a_N`.
    pub a: Vec<f64>,
    pub t: f64,
}

impl LatticeState {
    pub fn new(a: Vec<f64>, t: f64) -> Result<Self, LatticeError> {
        if a.is_empty() {
            return Err(LatticeError::InvalidInput("empty lattice state".into()));
        }
        if a.iter().any(|v| !v.is_finite()) || !t.is_finite() {
            return Err(LatticeError::InvalidInput("non-finite lattice state".into()));
        }
        Ok(Self { a, t })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `sqrt(n(n+1)(n+2)) / 2`
fn coupling(n: usize) -> f64 {
    let n = n as f64;
    0.5 * (n * (n + 1.0) * (n + 2.0)).sqrt()
}

/// The truncated `N x N` generator `M`, with `M_{n,n+1} = coupling(n)`
/// and `M_{n+1,n} = -coupling(n)`.
pub fn generator(n: usize) -> Tridiagonal {
    let upper: Vec<f64> = (1..n).map(coupling).collect();
    let lower: Vec<f64> = upper.iter().map(|v| -v).collect();
    Tridiagonal::new(lower, vec![0.0; n], upper)
}

pub fn skew_rhs(state: &LatticeState) -> Vec<f64> {
    let a = &state.a;
    let n = a.len();
    (0..n)
        .map(|i| {
            let label = i + 1;
            let up = if i + 1 < n { coupling(label) * a[i + 1] } else { 0.0 };
            let down = if i > 0 { coupling(label - 1) * a[i - 1] } else { 0.0 };
            up - down
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    ImplicitMidpoint,
    Rk4,
}

/// `0.5 N^{-3/2}`.
pub fn rk4_step_limit(n: usize) -> f64 {
    0.5 * (n as f64).powf(-1.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSample {
    pub t: f64,
    pub state: LatticeState,
    pub norm: f64,
    /// Step index at which the sample was taken.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeTrajectory {
    pub samples: Vec<LatticeSample>,
    /// Signed step actually used.
    pub dt: f64,
    pub integrator: Integrator,
    /// `a_1` after every step, starting with the initial value.
    pub first_history: Vec<f64>,
    /// `a_N` after every step, starting with the initial value.
    pub last_history: Vec<f64>,
    /// Largest relative change of `||a||^2` over a single step.
    pub max_step_norm_change: f64,
}

impl LatticeTrajectory {
    pub fn initial(&self) -> &LatticeSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &LatticeSample {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn steps(&self) -> usize {
        self.first_history.len() - 1
    }

    pub fn time_of_step(&self, k: usize) -> f64 {
        self.initial().t + self.dt * k as f64
    }
}

fn midpoint_stepper(n: usize, dt: f64) -> Result<(Tridiagonal, TridiagonalLu), LatticeError> {
    let m = generator(n);
    let explicit = m.shifted(1.0, 0.5 * dt);
    let lu = m
        .shifted(1.0, -0.5 * dt)
        .factor()
        .map_err(|e| LatticeError::SolveFailed { row: e.row, pivot: e.pivot })?;
    Ok((explicit, lu))
}

fn rk4_step(m: &Tridiagonal, a: &[f64], dt: f64) -> Vec<f64> {
    let k1 = m.apply(a);
    let y: Vec<f64> = a.iter().zip(&k1).map(|(x, k)| x + 0.5 * dt * k).collect();
    let k2 = m.apply(&y);
    let y: Vec<f64> = a.iter().zip(&k2).map(|(x, k)| x + 0.5 * dt * k).collect();
    let k3 = m.apply(&y);
    let y: Vec<f64> = a.iter().zip(&k3).map(|(x, k)| x + dt * k).collect();
    let k4 = m.apply(&y);
    (0..a.len())
        .map(|i| a[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates from `a0.t` to `a0.t + t_span` (which may be negative) with
/// steps of size close to `dt`, sampling every `sample_every` steps and at
/// the final time.
pub fn evolve(
    a0: &LatticeState,
    t_span: f64,
    dt: f64,
    sample_every: usize,
    integrator: Integrator,
) -> Result<LatticeTrajectory, LatticeError> {
    if !(dt > 0.0) || !dt.is_finite() || !t_span.is_finite() {
        return Err(LatticeError::InvalidInput(format!(
            "need finite T and dt > 0 (got T = {t_span}, dt = {dt})"
        )));
    }
    if sample_every == 0 {
        return Err(LatticeError::InvalidInput("sample_every must be positive".into()));
    }
    let n = a0.len();
    let steps = (t_span.abs() / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { 0.0 } else { t_span / steps as f64 };
    if integrator == Integrator::Rk4 && h.abs() > rk4_step_limit(n) {
        return Err(LatticeError::StepTooLarge {
            dt: h.abs(),
            limit: rk4_step_limit(n),
            n,
        });
    }
    let norm0 = a0.norm();
    let mut samples = vec![LatticeSample {
        t: a0.t,
        state: a0.clone(),
        norm: norm0,
        step: 0,
    }];
    let mut first_history = Vec::with_capacity(steps + 1);
    let mut last_history = Vec::with_capacity(steps + 1);
    first_history.push(a0.a[0]);
    last_history.push(a0.a[n - 1]);
    let mut max_step_norm_change = 0.0f64;
    let mut a = a0.a.clone();
    let mut sq = norm0 * norm0;
    let rk_matrix = generator(n);
    let midpoint = if integrator == Integrator::ImplicitMidpoint && steps > 0 {
        Some(midpoint_stepper(n, h)?)
    } else {
        None
    };
    for k in 1..=steps {
        a = match &midpoint {
            Some((explicit, lu)) => lu.solve(&explicit.apply(&a)),
            None => rk4_step(&rk_matrix, &a, h),
        };
        let new_sq: f64 = a.iter().map(|v| v * v).sum();
        if sq > 0.0 {
            max_step_norm_change = max_step_norm_change.max((new_sq - sq).abs() / sq);
        }
        sq = new_sq;
        first_history.push(a[0]);
        last_history.push(a[n - 1]);
        if k % sample_every == 0 || k == steps {
            let t = a0.t + h * k as f64;
            samples.push(LatticeSample {
                t,
                state: LatticeState { a: a.clone(), t },
                norm: sq.sqrt(),
                step: k,
            });
        }
    }
    Ok(LatticeTrajectory {
        samples,
        dt: h,
        integrator,
        first_history,
        last_history,
        max_step_norm_change,
    })
}

/// `c_1(t)` along a trajectory and the pairing
/// `Q = 2 c_1 + sum_{n >= 1} c_{n+1} f_{n+1}`, which the untruncated flow
/// conserves. On the lattice cut at `N`, `Q` changes only through the
/// boundary flux `dQ/dt = sqrt(N(N+1)) f_N a_N / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Track {
    pub times: Vec<f64>,
    pub c1: Vec<f64>,
    /// `Q` at the sample times.
    pub functional: Vec<f64>,
    pub sample_times: Vec<f64>,
    pub sample_c1: Vec<f64>,
    /// `(Q(t) - Q(0)) / max(|Q(0)|, ||a(0)||)` at the sample times.
    pub drift: Vec<f64>,
    /// Time integral of the boundary flux, at the sample times.
    pub boundary_flux: Vec<f64>,
}

impl C1Track {
    pub fn sup_abs_c1(&self) -> f64 {
        self.c1.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_drift(&self) -> f64 {
        self.drift.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `sum_{n=1}^N a_n f_{n+1} / sqrt(n)`.
pub fn projection_pairing(a: &[f64], f: &ProjectionSequence) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, v)| v * f.get(i + 2) / ((i + 1) as f64).sqrt())
        .sum()
}

pub fn c1_track(c1_0: f64, trajectory: &LatticeTrajectory) -> Result<C1Track, LatticeError> {
    if trajectory.samples.is_empty() {
        return Err(LatticeError::InvalidInput("empty trajectory".into()));
    }
    let n = trajectory.initial().state.len();
    let f = projection_sequence(n + 1)?;
    let h = trajectory.dt;
    let steps = trajectory.steps();
    let flux_coeff = 0.5 * ((n * (n + 1)) as f64).sqrt() * f.get(n);
    let mut times = Vec::with_capacity(steps + 1);
    let mut c1 = Vec::with_capacity(steps + 1);
    let mut flux = Vec::with_capacity(steps + 1);
    let (mut c, mut q_flux) = (c1_0, 0.0);
    times.push(trajectory.time_of_step(0));
    c1.push(c);
    flux.push(0.0);
    for k in 1..=steps {
        let a_first = 0.5 * (trajectory.first_history[k - 1] + trajectory.first_history[k]);
        let a_last = 0.5 * (trajectory.last_history[k - 1] + trajectory.last_history[k]);
        c += h * a_first / std::f64::consts::SQRT_2;
        q_flux += h * flux_coeff * a_last;
        times.push(trajectory.time_of_step(k));
        c1.push(c);
        flux.push(q_flux);
    }
    let q0 = 2.0 * c1_0 + projection_pairing(&trajectory.initial().state.a, &f);
    let scale = q0.abs().max(trajectory.initial().norm).max(f64::MIN_POSITIVE);
    let mut functional = Vec::new();
    let mut sample_times = Vec::new();
    let mut sample_c1 = Vec::new();
    let mut drift = Vec::new();
    let mut boundary_flux = Vec::new();
    for s in &trajectory.samples {
        let q = 2.0 * c1[s.step] + projection_pairing(&s.state.a, &f);
        functional.push(q);
        sample_times.push(s.t);
        sample_c1.push(c1[s.step]);
        drift.push((q - q0) / scale);
        boundary_flux.push(flux[s.step]);
    }
    Ok(C1Track {
        times,
        c1,
        functional,
        sample_times,
        sample_c1,
        drift,
        boundary_flux,
    })
}

/// `a_n = sqrt(n) c_{n+1}` for `n = 1..=N`, dropping `c_0` and `c_1`.
pub fn lattice_from_coefficients(c: &CoefficientVector) -> Vec<f64> {
    c.coeffs()
        .iter()
        .enumerate()
        .skip(2)
        .map(|(k, v)| ((k - 1) as f64).sqrt() * v)
        .collect()
}

/// The intermediate sequence `b_n = a_n / sqrt(n)` (equal to `c_{n+1}`).
pub fn b_from_lattice(a: &[f64]) -> Vec<f64> {
    a.iter()
        .enumerate()
        .map(|(i, v)| v / ((i + 1) as f64).sqrt())
        .collect()
}

/// `c = (0, c_1, b_1, ..., b_N)` for a lattice state `a`.
pub fn coefficients_from_lattice(a: &[f64], c1: f64) -> Result<CoefficientVector, LatticeError> {
    let mut c = Vec::with_capacity(a.len() + 2);
    c.push(0.0);
    c.push(c1);
    c.extend(b_from_lattice(a));
    CoefficientVector::new(c).map_err(|e| LatticeError::InvalidInput(e.to_string()))
}

/// Initial data built from `g(x) = exp(-(x - x0)^2 / (2 sigma^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianData {
    pub coefficients: CoefficientVector,
    pub state: LatticeState,
    pub c1: f64,
}

/// Hermite coefficients of a Gaussian bump by quadrature, mapped to the
/// lattice. With `normalize` the lattice vector (and `c_1` with it) is
/// scaled to unit norm.
pub fn gaussian_preset(n: usize, x0: f64, sigma: f64, normalize: bool) -> Result<GaussianData, LatticeError> {
    if n < 2 {
        return Err(LatticeError::InvalidInput("lattice size must be at least 2".into()));
    }
    if !(sigma > 0.0) || !x0.is_finite() {
        return Err(LatticeError::InvalidInput(format!(
            "invalid Gaussian parameters x0 = {x0}, sigma = {sigma}"
        )));
    }
    let grid = RealGrid::for_hermite(n + 1);
    let g: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|x| (-(x - x0) * (x - x0) / (2.0 * sigma * sigma)).exp())
        .collect();
    let table = tabulate(n + 1, &grid)?;
    let mut c: Vec<f64> = table.iter().map(|row| grid.inner(&g, row)).collect();
    let mut a: Vec<f64> = (1..=n).map(|k| (k as f64).sqrt() * c[k + 1]).collect();
    if normalize {
        let s = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if s > 0.0 {
            a.iter_mut().for_each(|v| *v /= s);
            c.iter_mut().for_each(|v| *v /= s);
        }
    }
    let c1 = c[1];
    Ok(GaussianData {
        coefficients: CoefficientVector::new(c).map_err(|e| LatticeError::InvalidInput(e.to_string()))?,
        state: LatticeState::new(a, 0.0)?,
        c1,
    })
}

/// Unit-norm lattice vector with entries uniform in `[-1, 1]`.
pub fn random_preset(n: usize, seed: u64) -> Result<LatticeState, LatticeError> {
    if n < 2 {
        return Err(LatticeError::InvalidInput("lattice size must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    a.iter_mut().for_each(|v| *v /= s);
    LatticeState::new(a, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let z = LatticeState::new(vec![0.0; 5], 0.0).unwrap();
        assert!(skew_rhs(&z).iter().all(|v| *v == 0.0));
        let e1 = LatticeState::new(vec![1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let r = skew_rhs(&e1);
        assert_eq!(r[0], 0.0);
        assert!((r[1] + 6f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn generator_is_skew() {
        let m = generator(30);
        for i in 0..29 {
            assert_eq!(m.upper[i], -m.lower[i]);
        }
        assert!(m.diag.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn zero_span_is_identity() {
        let a0 = random_preset(20, 7).unwrap();
        let tr = evolve(&a0, 0.0, 1e-3, 1, Integrator::ImplicitMidpoint).unwrap();
        assert_eq!(tr.samples.len(), 1);
        assert_eq!(tr.last().state, a0);
    }

    #[test]
    fn rk4_step_limit_is_enforced() {
        let a0 = random_preset(100, 1).unwrap();
        assert!(matches!(
            evolve(&a0, 1.0, 1e-2, 1, Integrator::Rk4),
            Err(LatticeError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn coefficient_round_trip() {
        let a = vec![0.3, -1.2, 2.5, 0.0, 4.0];
        let c = coefficients_from_lattice(&a, 0.7).unwrap();
        let back = lattice_from_coefficients(&c);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-15 * x.abs().max(1.0));
        }
    }

    #[test]
    fn zero_state_keeps_c1_constant() {
        let a0 = LatticeState::new(vec![0.0; 10], 0.0).unwrap();
        let tr = evolve(&a0, 1.0, 0.01, 10, Integrator::ImplicitMidpoint).unwrap();
        let track = c1_track(0.4, &tr).unwrap();
        assert!(track.c1.iter().all(|c| *c == 0.4));
    }
}
