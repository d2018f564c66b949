use std::f64::consts::{PI, SQRT_2};

use logkdv_core::coercivity::{
    c0_estimate, coercivity_estimate, compat_norm_form, energy_form, random_constrained_sample,
    ConstraintSet,
};
use logkdv_core::grid::RealGrid;
use logkdv_core::halfline::{
    assemble_h, balancing_amplitude, evolve_dissipative, gaussian_bump, modulation_integrate,
    HalfLineGrid,
};
use logkdv_core::hermite::{projection_by_quadrature, projection_sequence};
use logkdv_core::jacobi::{find_eigenvalues, shoot, wronskian_trace_with, SpectrumConfig as CoreSpectrum};
use logkdv_core::lattice::{c1_track, evolve, gaussian_preset, random_preset, Integrator};
use logkdv_core::reconstruct::{eigenvector_assemble, weak_residual, SeriesTail};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{
    CoercivityConfig, DissipateConfig, EvolveConfig, PresetChoice, ProjectionsConfig,
    ReconstructConfig, SpectrumConfig,
};
use crate::output::{Check, OutDir};
use crate::CliError;

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Serialize)]
struct SpectrumResults {
    eigenvalues: Vec<f64>,
    doubled: Vec<f64>,
    frequencies: Vec<f64>,
    decay_exponents: Vec<(f64, f64)>,
    relative_residuals: Vec<f64>,
    n_max_used: usize,
    trace_w_inf: f64,
    trace_plateau_misfit: f64,
    diagnostics: Vec<String>,
}

pub fn spectrum(cfg: &SpectrumConfig, seed: u64, mut out: OutDir) -> Result<std::path::PathBuf, CliError> {
    let core = CoreSpectrum {
        z_min: cfg.z_min,
        z_max: cfg.z_max,
        scan_step: cfg.scan_step,
        tol: cfg.tol,
        n_max: cfg.n_max,
        estimator: cfg.estimator.into(),
        decay_m_max: cfg.decay_m_max,
        decay_tail_fraction: cfg.decay_tail_fraction,
    };
    let r = find_eigenvalues(&core)?;
    let trace = wronskian_trace_with(cfg.trace_z, cfg.trace_n_max, cfg.estimator.into())?;
    out.csv("wronskian_trace.csv", &["n", "W_n"], trace.values.iter().enumerate().map(|(i, w)| (i + 1, *w)))?;
    out.csv("wronskian_scan.csv", &["z", "W_inf"], r.scan.iter().copied())?;

    let mut checks = vec![Check::flag("roots_found", !r.eigenvalues.is_empty())];
    checks.push(Check::at_most("max_relative_residual", max_abs(r.relative_residuals.iter().copied()), 1e-2));
    for (k, d) in r.decay_exponents.iter().enumerate() {
        checks.push(Check::at_most(&format!("decay_a_{}", k + 1), (d.a + 0.75).abs(), 0.05));
        checks.push(Check::at_most(&format!("decay_b_{}", k + 1), (d.b + 1.25).abs(), 0.1));
    }
    let results = SpectrumResults {
        doubled: r.doubled(),
        eigenvalues: r.eigenvalues,
        frequencies: r.frequencies,
        decay_exponents: r.decay_exponents.iter().map(|d| (d.a, d.b)).collect(),
        relative_residuals: r.relative_residuals,
        n_max_used: r.n_max,
        trace_w_inf: trace.w_inf,
        trace_plateau_misfit: trace.plateau_misfit,
        diagnostics: r.diagnostics,
    };
    out.summary("spectrum", seed, cfg, results, checks)
}

#[derive(Serialize)]
struct EvolveResults {
    initial_norm: f64,
    final_norm: f64,
    max_relative_norm_deviation: f64,
    max_step_norm_change: f64,
    c1_initial: f64,
    c1_final: f64,
    sup_abs_c1: f64,
    c1_bound: f64,
    c0: f64,
    max_abs_drift: f64,
    steps: usize,
    dt: f64,
}

pub fn evolve_lattice(cfg: &EvolveConfig, seed: u64, mut out: OutDir) -> Result<std::path::PathBuf, CliError> {
    let (state, c1_0) = match cfg.preset {
        PresetChoice::Gaussian => {
            let d = gaussian_preset(cfg.n, cfg.x0, cfg.sigma, cfg.normalize)?;
            (d.state, d.c1)
        }
        PresetChoice::Random => (random_preset(cfg.n, seed)?, 0.0),
    };
    let integrator: Integrator = cfg.integrator.into();
    let traj = evolve(&state, cfg.t_final, cfg.dt, cfg.sample_every, integrator)?;
    let track = c1_track(c1_0, &traj)?;
    let c0 = c0_estimate(cfg.c0_n_max)?.value;

    let n0 = traj.initial().norm;
    let deviation = max_abs(traj.samples.iter().map(|s| s.norm / n0 - 1.0));
    let bound = 0.5 * (track.functional[0].abs() + (c0 * n0 * n0).sqrt());
    let rows = traj
        .samples
        .iter()
        .zip(track.sample_c1.iter().zip(&track.drift))
        .map(|(s, (c1, d))| (s.t, s.norm, *c1, *d));
    out.csv("evolve.csv", &["t", "norm", "c1", "drift"], rows)?;
    let state_rows = |a: &[f64]| a.iter().enumerate().map(|(i, v)| (i + 1, *v)).collect::<Vec<_>>();
    out.csv("initial_state.csv", &["n", "a_n"], state_rows(&traj.initial().state.a))?;
    out.csv("final_state.csv", &["n", "a_n"], state_rows(&traj.last().state.a))?;

    let limit = match integrator {
        Integrator::ImplicitMidpoint => 1e-8,
        Integrator::Rk4 => 1e-6,
    };
    let sup = track.sup_abs_c1();
    let checks = vec![
        Check::at_most("norm_conservation", deviation, limit),
        Check::at_most("c1_bound", sup, bound),
    ];
    let results = EvolveResults {
        initial_norm: n0,
        final_norm: traj.last().norm,
        max_relative_norm_deviation: deviation,
        max_step_norm_change: traj.max_step_norm_change,
        c1_initial: c1_0,
        c1_final: *track.c1.last().unwrap_or(&c1_0),
        sup_abs_c1: sup,
        c1_bound: bound,
        c0,
        max_abs_drift: track.max_abs_drift(),
        steps: traj.steps(),
        dt: traj.dt,
    };
    out.summary("evolve", seed, cfg, results, checks)
}

#[derive(Serialize)]
struct DissipateResults {
    a0: f64,
    constraint: f64,
    max_constraint_drift: f64,
    max_trapezoid_constraint_drift: f64,
    max_norm_ratio: f64,
    monotone: bool,
    max_a_ratio: f64,
    a_decay_rate: f64,
    b_final: f64,
    b_inf: f64,
    steps: usize,
}

pub fn dissipate(cfg: &DissipateConfig, seed: u64, mut out: OutDir) -> Result<std::path::PathBuf, CliError> {
    let grid = HalfLineGrid::new(cfg.extent, cfg.h)?;
    let op = assemble_h(&grid)?;
    let w0 = gaussian_bump(&grid, cfg.center, cfg.width)?;
    let flow = evolve_dissipative(&op, &w0, cfg.t_final, cfg.dt, cfg.scheme.into(), cfg.sample_every)?;
    let a0 = if cfg.balance { balancing_amplitude(&op, &w0) } else { cfg.a0 };
    let m = modulation_integrate(&flow, a0, cfg.b0);

    let last = flow.records.len() - 1;
    let rows = flow
        .records
        .iter()
        .enumerate()
        .filter(|(k, _)| k % cfg.sample_every == 0 || *k == last)
        .map(|(k, r)| (r.t, r.l2_sq.sqrt(), r.h1_seminorm, r.linf_norm, m.a[k], m.b[k], m.constraint[k]));
    out.csv("dissipate.csv", &["t", "l2_norm", "h1_seminorm", "linf_norm", "a", "b", "A"], rows)?;

    let l0 = flow.records[0].l2_sq;
    let ratio = flow.records.iter().fold(0.0f64, |acc, r| acc.max(r.l2_sq / l0 / (-r.t).exp()));
    let monotone = flow.records.windows(2).all(|p| p[1].l2_sq <= p[0].l2_sq);
    let drift = m.max_constraint_drift() / (1.0 + m.constraint[0].abs());
    let c0t = m.constraint_trapezoid[0];
    let trap_drift = max_abs(m.constraint_trapezoid.iter().map(|c| c - c0t));
    let a_ratio = m
        .a
        .iter()
        .zip(&flow.records)
        .fold(0.0f64, |acc, (a, r)| acc.max(a * a / (PI.sqrt() * l0 * (-r.t).exp())));
    let mut checks = vec![
        Check::at_most("norm_decay_bound", ratio, 1.05),
        Check::flag("norm_monotone", monotone),
        Check::at_most("constraint_conservation", drift, 1e-6),
    ];
    if cfg.balance {
        checks.push(Check::at_most("amplitude_decay_bound", a_ratio, 1.1));
    }
    let results = DissipateResults {
        a0,
        constraint: m.constraint[0],
        max_constraint_drift: drift,
        max_trapezoid_constraint_drift: trap_drift,
        max_norm_ratio: ratio,
        monotone,
        max_a_ratio: a_ratio,
        a_decay_rate: m.a_decay_rate,
        b_final: m.b[last],
        b_inf: m.b_inf,
        steps: last,
    };
    out.summary("dissipate", seed, cfg, results, checks)
}

#[derive(Serialize)]
struct CoercivityResults {
    constant: f64,
    truncated: f64,
    compare_constant: f64,
    c0: f64,
    c0_partial: f64,
    c0_tail: f64,
    c0_tail_uncertainty: f64,
    samples: usize,
    energy_violations: usize,
    projection_violations: usize,
}

pub fn coercivity(cfg: &CoercivityConfig, seed: u64, mut out: OutDir) -> Result<std::path::PathBuf, CliError> {
    let mut sizes: Vec<usize> = std::iter::successors(Some(10usize), |n| Some(2 * n))
        .take_while(|n| *n < cfg.n_max.max(cfg.compare_n_max))
        .collect();
    sizes.extend([cfg.compare_n_max, cfg.n_max]);
    sizes.sort_unstable();
    sizes.dedup();
    let estimates = sizes.iter().map(|&n| coercivity_estimate(n)).collect::<Result<Vec<_>, _>>()?;
    out.csv(
        "coercivity.csv",
        &["n_max", "truncated", "corrected"],
        estimates.iter().map(|e| (e.n_max, e.truncated, e.corrected)),
    )?;
    let find = |n: usize| estimates.iter().find(|e| e.n_max == n).expect("estimate computed");
    let main = find(cfg.n_max);
    let compare = find(cfg.compare_n_max);
    let c0 = c0_estimate(cfg.c0_n_max)?;

    let f = projection_sequence(cfg.n_max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut energy_violations, mut projection_violations) = (0, 0);
    for _ in 0..cfg.samples {
        let c = random_constrained_sample(cfg.n_max, ConstraintSet::BOTH, &f, &mut rng);
        let e = energy_form(&c);
        let c1 = c.coeffs()[1];
        if e < main.corrected * compat_norm_form(&c) * (1.0 - 1e-12) {
            energy_violations += 1;
        }
        if 4.0 * c1 * c1 > c0.value * e * (1.0 + 1e-12) {
            projection_violations += 1;
        }
    }
    let checks = vec![
        Check::flag("constant_in_unit_interval", main.corrected > 0.0 && main.corrected < 1.0),
        Check::at_most("truncation_stability", (main.corrected - compare.corrected).abs(), 5e-4),
        Check::at_most("energy_violations", energy_violations as f64, 0.0),
        Check::at_most("projection_violations", projection_violations as f64, 0.0),
        Check::at_most("c0_tail_uncertainty", c0.tail_uncertainty, 1e-3),
    ];
    let results = CoercivityResults {
        constant: main.corrected,
        truncated: main.truncated,
        compare_constant: compare.corrected,
        c0: c0.value,
        c0_partial: c0.partial,
        c0_tail: c0.tail,
        c0_tail_uncertainty: c0.tail_uncertainty,
        samples: cfg.samples,
        energy_violations,
        projection_violations,
    };
    out.summary("coercivity", seed, cfg, results, checks)
}

#[derive(Serialize)]
struct ProjectionResults {
    f0: f64,
    f1: f64,
    max_quadrature_gap: Option<f64>,
}

pub const QUADRATURE_LIMIT: usize = 200;

pub fn projections(cfg: &ProjectionsConfig, seed: u64, mut out: OutDir) -> Result<std::path::PathBuf, CliError> {
    let f = projection_sequence(cfg.n_max)?;
    out.csv("projections.csv", &["n", "f_n"], f.values.iter().enumerate().map(|(n, v)| (n, *v)))?;
    let mut checks = vec![
        Check::at_most("f0_closed_form", (f.get(0) - (2.0 * PI).sqrt()).abs(), 1e-12),
        Check::at_most("f1_closed_form", (f.get(1) - 2.0).abs(), 1e-12),
    ];
    let gap = if cfg.quadrature && cfg.n_max <= QUADRATURE_LIMIT {
        let q = projection_by_quadrature(cfg.n_max, &RealGrid::for_hermite(cfg.n_max))?;
        let g = max_abs(q.iter().zip(&f.values).map(|(a, b)| a - b));
        checks.push(Check::at_most("quadrature_agreement", g, 1e-8));
        Some(g)
    } else {
        None
    };
    let results = ProjectionResults { f0: f.get(0), f1: f.get(1), max_quadrature_gap: gap };
    out.summary("projections", seed, cfg, results, checks)
}

#[derive(Serialize)]
struct ReconstructResults {
    z: f64,
    c1: f64,
    odd_tail: SeriesTail,
    even_tail: SeriesTail,
    weak_residual: f64,
    weak_residual_first: Vec<f64>,
    weak_residual_second: Vec<f64>,
}

pub fn reconstruct(cfg: &ReconstructConfig, seed: u64, mut out: OutDir) -> Result<std::path::PathBuf, CliError> {
    let z = match cfg.z {
        Some(z) => z,
        None => {
            let search = CoreSpectrum {
                z_max: 4.0 * cfg.root as f64 + 4.0,
                ..CoreSpectrum::default()
            };
            let roots = find_eigenvalues(&search)?.eigenvalues;
            *roots.get(cfg.root - 1).ok_or_else(|| {
                CliError::Numerical(format!("only {} roots found below z = {}", roots.len(), search.z_max))
            })?
        }
    };
    let grid = RealGrid::symmetric(cfg.x_max, cfg.spacing)?;
    let p = eigenvector_assemble(z, &shoot(z, cfg.m_max)?, &grid)?;
    let rows = grid
        .nodes()
        .iter()
        .zip(p.y_odd.values.iter().zip(&p.y_even.values))
        .map(|(x, (o, e))| (*x, *o, *e));
    out.csv("reconstruct.csv", &["x", "y_odd", "y_even"], rows)?;

    let n = grid.len();
    let parity = (0..n).all(|i| {
        let j = n - 1 - i;
        p.y_odd.values[i] == -p.y_odd.values[j] && p.y_even.values[i] == p.y_even.values[j]
    });
    let fine = RealGrid::symmetric(cfg.residual_window, cfg.residual_spacing)?;
    let fp = eigenvector_assemble(z, &shoot(z, cfg.residual_m_max)?, &fine)?;
    let r = weak_residual(z, &fp, cfg.max_power)?;
    let checks = vec![
        Check::flag("exact_parity", parity),
        Check::at_most("c1_relation", (p.c1 - SQRT_2 / z).abs(), 1e-12),
        Check::at_most("weak_residual", r.total, 1e-3),
    ];
    let results = ReconstructResults {
        z,
        c1: p.c1,
        odd_tail: p.odd_tail,
        even_tail: p.even_tail,
        weak_residual: r.total,
        weak_residual_first: r.first,
        weak_residual_second: r.second,
    };
    out.summary("reconstruct", seed, cfg, results, checks)
}
