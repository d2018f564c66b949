use std::f64::consts::PI;

use logkdv_core::halfline::{
    assemble_h, balancing_amplitude, constraint_functional, evolve_dissipative, gaussian_bump,
    modulation_integrate, HalfLineError, HalfLineFlow, HalfLineGrid, HalfLineOperator,
    HalfLineState, TimeScheme,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn operator(extent: f64, h: f64) -> HalfLineOperator {
    assemble_h(&HalfLineGrid::new(extent, h).unwrap()).unwrap()
}

fn run(op: &HalfLineOperator, t: f64, dt: f64, scheme: TimeScheme) -> HalfLineFlow {
    let w0 = gaussian_bump(&op.grid, -2.0, 1.0).unwrap();
    evolve_dissipative(op, &w0, t, dt, scheme, 100).unwrap()
}

/// Largest eigenvalue of the symmetric part of `H` in the `P` inner product.
fn max_symmetric_eigenvalue(op: &HalfLineOperator) -> f64 {
    let n = op.grid.intervals();
    let p = op.grid.weights();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for (i, v) in op.apply(&e).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    let s = DMatrix::from_fn(n, n, |i, j| {
        0.5 * (p[i] * m[(i, j)] + p[j] * m[(j, i)]) / (p[i] * p[j]).sqrt()
    });
    SymmetricEigen::new(s).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn form_is_bounded_by_minus_half_at_two_resolutions() {
    let mut prev = f64::NEG_INFINITY;
    for h in [0.05, 0.025] {
        let op = operator(10.0, h);
        let top = max_symmetric_eigenvalue(&op);
        assert!(top <= -0.5, "h = {h}: {top}");
        // the discrete bound relaxes toward the continuous one as h shrinks
        assert!(top > prev);
        prev = top;
        for (c, w) in [(-1.0, 0.5), (-2.0, 1.0), (-0.3, 0.3), (-4.0, 2.0)] {
            let bump = gaussian_bump(&op.grid, c, w).unwrap();
            assert!(op.form_ratio(&bump.w) <= -0.5);
        }
    }
}

#[test]
fn operator_is_consistent_on_an_exponential() {
    // H e^z = (z^2/4 - z/2 - 3) e^z
    let err = |h: f64| {
        let op = operator(20.0, h);
        let nodes = op.grid.unknown_nodes();
        let hw = op.apply(&op.grid.sample(f64::exp));
        let exact = |z: f64| z.exp() * (z * z / 4.0 - z / 2.0 - 3.0);
        let n = nodes.len();
        let interior = (0..n - 1)
            .filter(|&j| nodes[j] > -10.0)
            .fold(0.0f64, |m, j| m.max((hw[j] - exact(nodes[j])).abs()));
        (interior, (hw[n - 1] - exact(0.0)).abs())
    };
    let (i1, b1) = err(0.05);
    let (i2, b2) = err(0.025);
    assert!((i1 / i2 - 4.0).abs() < 0.3, "interior ratio {}", i1 / i2);
    assert!((b1 / b2 - 2.0).abs() < 0.2, "boundary ratio {}", b1 / b2);
}

#[test]
fn adjoint_weights_approximate_the_gaussian_density() {
    let err = |h: f64| {
        let op = operator(20.0, h);
        let (nodes, p) = (op.grid.unknown_nodes(), op.grid.weights());
        (0..nodes.len())
            .filter(|&j| nodes[j] > -4.0)
            .map(|j| (op.constraint_weights[j] / (p[j] * (-nodes[j] * nodes[j] / 8.0).exp()) - 1.0).abs())
            .fold(0.0f64, f64::max)
    };
    let (e1, e2) = (err(0.05), err(0.025));
    assert!(e1 < 1e-3);
    assert!((e1 / e2 - 4.0).abs() < 0.3);
}

#[test]
fn backward_euler_norms_decrease_every_step() {
    let op = operator(20.0, 0.04);
    let flow = run(&op, 3.0, 1e-2, TimeScheme::BackwardEuler);
    assert!(flow.records.windows(2).all(|p| p[1].l2_sq < p[0].l2_sq));
}

#[test]
fn crank_nicolson_norms_decrease_and_respect_the_rate() {
    let op = operator(20.0, 0.04);
    let flow = run(&op, 5.0, 1e-3, TimeScheme::CrankNicolson);
    let l0 = flow.records[0].l2_sq;
    for p in flow.records.windows(2) {
        assert!(p[1].l2_sq <= p[0].l2_sq);
    }
    for r in &flow.records {
        assert!(r.l2_sq <= l0 * (-r.t).exp() * (1.0 + 1e-9));
    }
}

#[test]
fn h1_seminorm_decays_exponentially() {
    let op = operator(20.0, 0.04);
    let flow = run(&op, 6.0, 1e-3, TimeScheme::CrankNicolson);
    let tail = &flow.records[flow.records.len() / 2..];
    let (t, y): (Vec<f64>, Vec<f64>) = tail.iter().map(|r| (r.t, r.h1_seminorm.ln())).unzip();
    let (slope, _) = logkdv_core::fit::linear_regression(&t, &y).unwrap();
    assert!(slope < -0.1, "rate {slope}");
}

#[test]
fn adjoint_constraint_is_conserved_by_both_schemes() {
    let op = operator(20.0, 0.04);
    for scheme in [TimeScheme::CrankNicolson, TimeScheme::BackwardEuler] {
        let flow = run(&op, 3.0, 1e-3, scheme);
        let m = modulation_integrate(&flow, 0.3, 0.0);
        assert!(m.max_constraint_drift() < 1e-12 * (1.0 + m.constraint[0].abs()), "{scheme:?}");
    }
}

#[test]
fn trapezoid_moment_tracks_the_boundary_flux() {
    let op = operator(20.0, 0.02);
    let flow = run(&op, 3.0, 1e-3, TimeScheme::CrankNicolson);
    let scale = flow.records.iter().fold(0.0f64, |m, r| m.max(r.boundary.abs()));
    for p in flow.records.windows(2) {
        let lhs = (p[1].trapezoid_moment - p[0].trapezoid_moment) / flow.dt;
        let rhs = -(p[0].boundary + p[1].boundary);
        assert!((lhs - rhs).abs() < 1e-2 * scale);
    }
}

#[test]
fn trapezoid_constraint_drift_shrinks_with_the_grid() {
    let drift = |h: f64| {
        let op = operator(20.0, h);
        let m = modulation_integrate(&run(&op, 3.0, 1e-3, TimeScheme::CrankNicolson), 0.3, 0.0);
        let c0 = m.constraint_trapezoid[0];
        m.constraint_trapezoid.iter().fold(0.0f64, |acc, c| acc.max((c - c0).abs()))
    };
    let (d1, d2) = (drift(0.04), drift(0.02));
    assert!(d2 < 0.5 * d1, "{d1} vs {d2}");
}

#[test]
fn spatial_error_is_second_order() {
    let w_at = |h: f64| {
        let op = operator(20.0, h);
        run(&op, 1.0, 1e-3, TimeScheme::CrankNicolson).last_state().w.clone()
    };
    let (c, m, f) = (w_at(0.08), w_at(0.04), w_at(0.02));
    // unknown r on a grid matches unknown 2r + 1 on the grid of half spacing
    let gap = |coarse: &[f64], fine: &[f64]| {
        coarse.iter().enumerate().fold(0.0f64, |acc, (r, v)| acc.max((v - fine[2 * r + 1]).abs()))
    };
    let ratio = gap(&c, &m) / gap(&m, &f);
    assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn truncation_effect_shrinks_as_the_domain_grows() {
    let h = 0.04;
    let final_state = |extent: f64| {
        let op = operator(extent, h);
        run(&op, 5.0, 1e-3, TimeScheme::CrankNicolson).last_state().w.clone()
    };
    let (w20, w40, w80) = (final_state(20.0), final_state(40.0), final_state(80.0));
    // compare on the common window z in [-20, 0]
    let gap = |small: &[f64], large: &[f64]| {
        let offset = large.len() - small.len();
        small.iter().enumerate().fold(0.0f64, |acc, (r, v)| acc.max((v - large[r + offset]).abs()))
    };
    let (d1, d2) = (gap(&w20, &w40), gap(&w40, &w80));
    assert!(d2 < 0.5 * d1, "{d1} vs {d2}");
}

#[test]
fn balanced_amplitude_decays_with_the_norm() {
    let op = operator(40.0, 0.02);
    let w0 = gaussian_bump(&op.grid, -2.0, 1.0).unwrap();
    let flow = evolve_dissipative(&op, &w0, 5.0, 1e-3, TimeScheme::CrankNicolson, 100).unwrap();
    let a0 = balancing_amplitude(&op, &w0);
    assert!(constraint_functional(&op, &w0, a0).adjoint.abs() < 1e-14);
    let m = modulation_integrate(&flow, a0, 0.0);
    let l0 = flow.records[0].l2_sq;
    for (a, r) in m.a.iter().zip(&flow.records) {
        assert!(a * a <= 1.1 * PI.sqrt() * l0 * (-r.t).exp());
    }
    assert!(m.a_decay_rate > 0.0);
}

#[test]
fn phase_settles_to_its_limit() {
    let op = operator(20.0, 0.04);
    let flow = run(&op, 8.0, 1e-3, TimeScheme::CrankNicolson);
    // a(t) tends to the conserved constraint value, so b settles only when it vanishes
    let a0 = balancing_amplitude(&op, &flow.samples[0]);
    let m = modulation_integrate(&flow, a0, 0.1);
    let per_unit = (1.0 / flow.dt).round() as usize;
    let inc: Vec<f64> = m.b.chunks_exact(per_unit).map(|c| (c[c.len() - 1] - c[0]).abs()).collect();
    assert!(inc.windows(2).skip(1).all(|p| p[1] < p[0]), "{inc:?}");
    let last = *m.b.last().unwrap();
    assert!(m.b_inf.is_finite());
    assert!((m.b_inf - last).abs() < 2.0 * inc[inc.len() - 1].max(1e-12));
    let unbalanced = modulation_integrate(&flow, a0 + 0.4, 0.1);
    let tail = unbalanced.a.last().unwrap();
    assert!((tail - 0.4).abs() < 1e-2);
}

#[test]
fn invalid_configurations_are_rejected() {
    assert!(matches!(HalfLineGrid::new(10.0, 0.3), Err(HalfLineError::Configuration(_))));
    assert!(matches!(HalfLineGrid::new(-1.0, 0.1), Err(HalfLineError::Configuration(_))));
    let op = operator(10.0, 0.1);
    let w0 = gaussian_bump(&op.grid, -2.0, 1.0).unwrap();
    assert!(evolve_dissipative(&op, &w0, 0.0, 1e-3, TimeScheme::CrankNicolson, 1).is_err());
    let short = HalfLineState::new(vec![0.0; 3], 0.0).unwrap();
    assert!(evolve_dissipative(&op, &short, 1.0, 1e-3, TimeScheme::CrankNicolson, 1).is_err());
    assert!(gaussian_bump(&op.grid, -1.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn form_ratio_is_below_minus_half(w in prop::collection::vec(-1.0f64..1.0, 200)) {
        let op = operator(10.0, 0.05);
        prop_assume!(op.grid.l2_norm(&w) > 1e-8);
        prop_assert!(op.form_ratio(&w) <= -0.5);
    }

    #[test]
    fn one_step_never_increases_the_norm(w in prop::collection::vec(-1.0f64..1.0, 200), dt in 1e-4f64..1e-1) {
        let op = operator(10.0, 0.05);
        let s = HalfLineState::new(w, 0.0).unwrap();
        for scheme in [TimeScheme::CrankNicolson, TimeScheme::BackwardEuler] {
            let flow = evolve_dissipative(&op, &s, dt, dt, scheme, 1).unwrap();
            prop_assert!(flow.records[1].l2_sq <= flow.records[0].l2_sq * (1.0 + 1e-12));
        }
    }
}
