//! The dissipative half-line flow `w_t = H w` on `z < 0`,
//!
//! `H w = -z w_zz - 3 w_z + (z^2 w)_z / 4`,
//!
//! and the modulation equations `a' = 2 w(t, 0)`, `b' = a / 2`.
//!
//! The grid is `z_j = -Z + j h`, `j = 0..J`, with `w_0 = 0` and unknowns
//! `w_1, ..., w_J`. The operator is written as
//! `H = -(z w_z)_z - 2 w_z + (Q z^2 + z^2 Q) w / 8 + z w / 4`
//! with the diffusion in flux form and `Q` a first-derivative matrix that is
//! a summation-by-parts operator for the weights `P = diag(h, ..., h, h/2)`.
//! In that inner product the discrete form `<H w, w>` reproduces the
//! continuous energy identity term by term, so the scheme is dissipative
//! without any condition at `z = 0`, where the diffusion degenerates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit;
use crate::tridiag::{Tridiagonal, TridiagonalLu};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HalfLineError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("linear solve failed at row {row} (pivot {pivot})")]
    SolveFailed { row: usize, pivot: f64 },
}

pub const MIN_INTERVALS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGrid {
    extent: f64,
    h: f64,
    intervals: usize,
}

impl HalfLineGrid {
    pub fn new(extent: f64, h: f64) -> Result<Self, HalfLineError> {
        if !(extent > 0.0 && h > 0.0) || !extent.is_finite() {
            return Err(HalfLineError::Configuration(format!(
                "extent and spacing must be positive (Z = {extent}, h = {h})"
            )));
        }
        let ratio = extent / h;
        let intervals = ratio.round() as usize;
        if (ratio - intervals as f64).abs() > 1e-8 * ratio.max(1.0) {
            return Err(HalfLineError::Configuration(format!(
                "Z / h = {ratio} is not an integer"
            )));
        }
        if intervals < MIN_INTERVALS {
            return Err(HalfLineError::Configuration(format!(
                "grid too coarse: J = {intervals} < {MIN_INTERVALS}"
            )));
        }
        Ok(Self { extent, h: extent / intervals as f64, intervals })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// `J`, also the number of unknowns.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// `z_j` for `j = 0..=J`.
    pub fn node(&self, j: usize) -> f64 {
        if j == self.intervals {
            0.0
        } else {
            -self.extent + j as f64 * self.h
        }
    }

    /// `z_1, ..., z_J`.
    pub fn unknown_nodes(&self) -> Vec<f64> {
        (1..=self.intervals).map(|j| self.node(j)).collect()
    }

    /// Quadrature weights for the unknowns: `h` inside, `h / 2` at `z = 0`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.intervals];
        w[self.intervals - 1] = 0.5 * self.h;
        w
    }

    /// Samples a function at the unknown nodes.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.unknown_nodes().into_iter().map(f).collect()
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights().iter().zip(u.iter().zip(v)).map(|(p, (a, b))| p * a * b).sum()
    }

    pub fn l2_norm(&self, w: &[f64]) -> f64 {
        self.inner(w, w).sqrt()
    }

    /// `sqrt(sum_j (w_{j+1} - w_j)^2 / h)` including the jump from `w_0 = 0`.
    pub fn h1_seminorm(&self, w: &[f64]) -> f64 {
        let mut s = w[0] * w[0];
        for pair in w.windows(2) {
            s += (pair[1] - pair[0]) * (pair[1] - pair[0]);
        }
        (s / self.h).sqrt()
    }
}

pub fn linf_norm(w: &[f64]) -> f64 {
    w.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Discrete `H` together with the adjoint weights of the constraint.
#[derive(Debug, Clone)]
pub struct HalfLineOperator {
    pub grid: HalfLineGrid,
    pub matrix: Tridiagonal,
    /// `psi` with `H^T psi = -2 e_J`, so that `d/dt (psi . w) = -2 w_J`
    /// holds exactly for the semi-discrete flow.
    pub constraint_weights: Vec<f64>,
}

impl HalfLineOperator {
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        self.matrix.apply(w)
    }

    /// `<H w, w>_P / <w, w>_P`.
    pub fn form_ratio(&self, w: &[f64]) -> f64 {
        self.grid.inner(&self.apply(w), w) / self.grid.inner(w, w)
    }
}

pub fn assemble_h(grid: &HalfLineGrid) -> Result<HalfLineOperator, HalfLineError> {
    let jn = grid.intervals();
    let h = grid.spacing();
    let z = |j: usize| grid.node(j);
    let mut lower = vec![0.0; jn - 1];
    let mut diag = vec![0.0; jn];
    let mut upper = vec![0.0; jn - 1];
    // row r holds node j = r + 1
    for r in 0..jn {
        let j = r + 1;
        let zj = z(j);
        if j < jn {
            let zp = zj + 0.5 * h;
            let zm = zj - 0.5 * h;
            // -(z w_z)_z
            diag[r] += (zp + zm) / (h * h);
            if r + 1 < jn {
                upper[r] += -zp / (h * h);
            }
            if r > 0 {
                lower[r - 1] += -zm / (h * h);
            }
            // -2 Q + (Q z^2 + z^2 Q) / 8, centred rows
            let zr = z(j + 1);
            let zl = z(j - 1);
            let c_right = (-2.0 + (zr * zr + zj * zj) / 8.0) / (2.0 * h);
            let c_left = (-2.0 + (zl * zl + zj * zj) / 8.0) / (2.0 * h);
            if r + 1 < jn {
                upper[r] += c_right;
            }
            if r > 0 {
                lower[r - 1] -= c_left;
            }
        } else {
            // half cell at z = 0 with zero flux through the right face
            let zm = zj - 0.5 * h;
            diag[r] += 2.0 * zm / (h * h);
            lower[r - 1] += -2.0 * zm / (h * h);
            // one-sided Q, z_J = 0
            let zl = z(j - 1);
            diag[r] += -2.0 / h;
            lower[r - 1] += 2.0 / h - (zl * zl) / (8.0 * h);
        }
        diag[r] += 0.25 * zj;
    }
    let matrix = Tridiagonal::new(lower, diag, upper);
    let mut rhs = vec![0.0; jn];
    rhs[jn - 1] = -2.0;
    let lu = matrix
        .transpose()
        .factor()
        .map_err(|e| HalfLineError::SolveFailed { row: e.row, pivot: e.pivot })?;
    let constraint_weights = lu.solve(&rhs);
    Ok(HalfLineOperator {
        grid: *grid,
        matrix,
        constraint_weights,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfLineState {
    /// `w_1, ..., w_J`.
    pub w: Vec<f64>,
    pub t: f64,
}

impl HalfLineState {
    pub fn new(w: Vec<f64>, t: f64) -> Result<Self, HalfLineError> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(HalfLineError::Configuration("non-finite grid function".into()));
        }
        Ok(Self { w, t })
    }

    /// `w(t, 0)`.
    pub fn boundary_value(&self) -> f64 {
        *self.w.last().expect("state has at least one node")
    }
}

/// `exp(-(z - center)^2 / width^2)` on the unknown nodes.
pub fn gaussian_bump(grid: &HalfLineGrid, center: f64, width: f64) -> Result<HalfLineState, HalfLineError> {
    if !(width > 0.0) || !center.is_finite() {
        return Err(HalfLineError::Configuration(format!(
            "invalid bump center {center} or width {width}"
        )));
    }
    HalfLineState::new(grid.sample(|z| (-(z - center) * (z - center) / (width * width)).exp()), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeScheme {
    #[default]
    CrankNicolson,
    BackwardEuler,
}

/// Quantities recorded after every step (and for the initial state).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub l2_sq: f64,
    pub h1_seminorm: f64,
    pub linf_norm: f64,
    /// `w(t, 0)`.
    pub boundary: f64,
    /// `psi . w`.
    pub adjoint_moment: f64,
    /// Trapezoidal `int exp(-z^2/8) w dz`.
    pub trapezoid_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfLineFlow {
    pub records: Vec<StepRecord>,
    /// States every `sample_every` steps and at the end.
    pub samples: Vec<HalfLineState>,
    pub dt: f64,
    pub scheme: TimeScheme,
}

impl HalfLineFlow {
    pub fn last_state(&self) -> &HalfLineState {
        self.samples.last().expect("flow has at least the initial state")
    }
}

fn record(op: &HalfLineOperator, w: &[f64], t: f64, gauss: &[f64]) -> StepRecord {
    let g = &op.grid;
    StepRecord {
        t,
        l2_sq: g.inner(w, w),
        h1_seminorm: g.h1_seminorm(w),
        linf_norm: linf_norm(w),
        boundary: *w.last().unwrap(),
        adjoint_moment: op.constraint_weights.iter().zip(w).map(|(p, v)| p * v).sum(),
        trapezoid_moment: g.inner(gauss, w),
    }
}

fn gaussian_weight(grid: &HalfLineGrid) -> Vec<f64> {
    grid.sample(|z| (-z * z / 8.0).exp())
}

struct Stepper {
    explicit: Option<Tridiagonal>,
    lu: TridiagonalLu,
}

impl Stepper {
    fn new(op: &HalfLineOperator, dt: f64, scheme: TimeScheme) -> Result<Self, HalfLineError> {
        let (explicit, implicit) = match scheme {
            TimeScheme::CrankNicolson => (
                Some(op.matrix.shifted(1.0, 0.5 * dt)),
                op.matrix.shifted(1.0, -0.5 * dt),
            ),
            TimeScheme::BackwardEuler => (None, op.matrix.shifted(1.0, -dt)),
        };
        let lu = implicit
            .factor()
            .map_err(|e| HalfLineError::SolveFailed { row: e.row, pivot: e.pivot })?;
        Ok(Self { explicit, lu })
    }

    fn step(&self, w: &[f64]) -> Vec<f64> {
        match &self.explicit {
            Some(m) => self.lu.solve(&m.apply(w)),
            None => self.lu.solve(w),
        }
    }
}

pub fn evolve_dissipative(
    op: &HalfLineOperator,
    w0: &HalfLineState,
    t_final: f64,
    dt: f64,
    scheme: TimeScheme,
    sample_every: usize,
) -> Result<HalfLineFlow, HalfLineError> {
    if !(t_final > 0.0 && dt > 0.0) || !t_final.is_finite() {
        return Err(HalfLineError::Configuration(format!(
            "need T > 0 and dt > 0 (got T = {t_final}, dt = {dt})"
        )));
    }
    if sample_every == 0 {
        return Err(HalfLineError::Configuration("sample_every must be positive".into()));
    }
    if w0.w.len() != op.grid.intervals() {
        return Err(HalfLineError::Configuration(format!(
            "state has {} values for {} unknowns",
            w0.w.len(),
            op.grid.intervals()
        )));
    }
    let steps = (t_final / dt - 1e-9).ceil() as usize;
    let h = t_final / steps as f64;
    let stepper = Stepper::new(op, h, scheme)?;
    let gauss = gaussian_weight(&op.grid);
    let mut records = Vec::with_capacity(steps + 1);
    let mut samples = vec![w0.clone()];
    let mut w = w0.w.clone();
    records.push(record(op, &w, w0.t, &gauss));
    for k in 1..=steps {
        w = stepper.step(&w);
        let t = w0.t + h * k as f64;
        records.push(record(op, &w, t, &gauss));
        if k % sample_every == 0 || k == steps {
            samples.push(HalfLineState { w: w.clone(), t });
        }
    }
    Ok(HalfLineFlow {
        records,
        samples,
        dt: h,
        scheme,
    })
}

/// `A = a + int exp(-z^2/8) w dz` evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintValue {
    /// With the adjoint weights; conserved to rounding by the scheme.
    pub adjoint: f64,
    /// With the trapezoidal rule; conserved to `O(h^2)`.
    pub trapezoid: f64,
}

pub fn constraint_functional(op: &HalfLineOperator, w: &HalfLineState, a: f64) -> ConstraintValue {
    let gauss = gaussian_weight(&op.grid);
    ConstraintValue {
        adjoint: a + op.constraint_weights.iter().zip(&w.w).map(|(p, v)| p * v).sum::<f64>(),
        trapezoid: a + op.grid.inner(&gauss, &w.w),
    }
}

/// `a` that makes the adjoint constraint value vanish for `w`.
pub fn balancing_amplitude(op: &HalfLineOperator, w: &HalfLineState) -> f64 {
    -constraint_functional(op, w, 0.0).adjoint
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationTrajectory {
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Adjoint constraint value.
    pub constraint: Vec<f64>,
    /// Trapezoidal constraint value.
    pub constraint_trapezoid: Vec<f64>,
    /// Extrapolated `lim b(t)`.
    pub b_inf: f64,
    /// Fitted exponential rate of `|a(t)|` over the second half of the run.
    pub a_decay_rate: f64,
}

impl ModulationTrajectory {
    pub fn max_constraint_drift(&self) -> f64 {
        let a0 = self.constraint[0];
        self.constraint.iter().fold(0.0f64, |m, v| m.max((v - a0).abs()))
    }
}

/// Integrates `a' = 2 w(t, 0)`, `b' = a / 2` along a computed flow with the
/// quadrature matched to the time scheme of the flow.
pub fn modulation_integrate(flow: &HalfLineFlow, a0: f64, b0: f64) -> ModulationTrajectory {
    let n = flow.records.len();
    let dt = flow.dt;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut constraint = Vec::with_capacity(n);
    let mut constraint_trapezoid = Vec::with_capacity(n);
    a.push(a0);
    b.push(b0);
    for k in 1..n {
        let (r0, r1) = (&flow.records[k - 1], &flow.records[k]);
        let da = match flow.scheme {
            TimeScheme::CrankNicolson => dt * (r0.boundary + r1.boundary),
            TimeScheme::BackwardEuler => 2.0 * dt * r1.boundary,
        };
        let ak = a[k - 1] + da;
        b.push(b[k - 1] + 0.25 * dt * (a[k - 1] + ak));
        a.push(ak);
    }
    for (r, ak) in flow.records.iter().zip(&a) {
        constraint.push(ak + r.adjoint_moment);
        constraint_trapezoid.push(ak + r.trapezoid_moment);
    }
    let t: Vec<f64> = flow.records.iter().map(|r| r.t).collect();
    let (b_inf, a_decay_rate) = extrapolate_b(&t, &a, &b);
    ModulationTrajectory {
        t,
        a,
        b,
        constraint,
        constraint_trapezoid,
        b_inf,
        a_decay_rate,
    }
}

/// `b(T) + a(T) / (2 r)` with `r` the fitted decay rate of `|a|`.
fn extrapolate_b(t: &[f64], a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = t.len();
    let last_b = *b.last().unwrap_or(&0.0);
    let start = n / 2;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for k in start..n {
        if a[k] != 0.0 {
            x.push(t[k]);
            y.push(a[k].abs().ln());
        }
    }
    match fit::linear_regression(&x, &y) {
        Ok((slope, _)) if slope < 0.0 => {
            let rate = -slope;
            (last_b + a[n - 1] / (2.0 * rate), rate)
        }
        _ => (last_b, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(HalfLineGrid::new(1.0, 0.1).is_err());
        assert!(HalfLineGrid::new(10.0, 0.3).is_err());
        let g = HalfLineGrid::new(40.0, 0.02).unwrap();
        assert_eq!(g.intervals(), 2000);
        assert_eq!(g.node(2000), 0.0);
    }

    #[test]
    fn exponential_is_mapped_to_symbolic_value() {
        let g = HalfLineGrid::new(20.0, 0.01).unwrap();
        let op = assemble_h(&g).unwrap();
        let w = g.sample(f64::exp);
        let hw = op.apply(&w);
        let j = g.unknown_nodes().iter().position(|z| (z + 2.0).abs() < 1e-9).unwrap();
        assert!((hw[j] + (-2.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = HalfLineGrid::new(10.0, 0.05).unwrap();
        let op = assemble_h(&g).unwrap();
        let w0 = HalfLineState::new(vec![0.0; g.intervals()], 0.0).unwrap();
        let flow = evolve_dissipative(&op, &w0, 0.5, 0.01, TimeScheme::CrankNicolson, 10).unwrap();
        assert!(flow.last_state().w.iter().all(|v| *v == 0.0));
        let m = modulation_integrate(&flow, 0.3, 1.0);
        assert!(m.a.iter().all(|a| *a == 0.3));
        let end = *m.t.last().unwrap();
        assert!((m.b.last().unwrap() - (1.0 + 0.15 * end)).abs() < 1e-12);
    }

    #[test]
    fn constraint_of_zero_state_is_amplitude() {
        let g = HalfLineGrid::new(10.0, 0.05).unwrap();
        let op = assemble_h(&g).unwrap();
        let w = HalfLineState::new(vec![0.0; g.intervals()], 0.0).unwrap();
        let c = constraint_functional(&op, &w, 0.8);
        assert_eq!(c.adjoint, 0.8);
        assert_eq!(c.trapezoid, 0.8);
    }
}
