use std::f64::consts::PI;

use logkdv_core::coercivity::CoefficientVector;
use logkdv_core::grid::RealGrid;
use logkdv_core::halfline::{
    assemble_h, balancing_amplitude, evolve_dissipative, gaussian_bump, modulation_integrate,
    HalfLineGrid, HalfLineState, TimeScheme,
};
use logkdv_core::hermite::ground_state;
use logkdv_core::jacobi::shoot;
use logkdv_core::reconstruct::{
    convolution_synthesize, eigenvector_assemble, eigenvector_coefficients, scattering_distance,
    synthesize, weak_residual, ReconstructError,
};
use proptest::prelude::*;

const Z1: f64 = 2.705_496;

#[test]
fn unit_coefficient_scaled_gives_the_solitary_profile() {
    let grid = RealGrid::symmetric(10.0, 0.05).unwrap();
    let scale = 0.5f64.exp() * (2.0 * PI).powf(0.25);
    let c = CoefficientVector::new(vec![scale, 0.0, 0.0]).unwrap();
    let v = synthesize(&c, &grid);
    for (x, s) in grid.nodes().iter().zip(&v.values) {
        assert!((s - (0.5 - x * x / 4.0).exp()).abs() < 1e-12);
    }
}

#[test]
fn first_coefficient_follows_from_the_leading_amplitude() {
    let s = shoot(Z1, 50).unwrap();
    assert_eq!(s.a[0], 1.0);
    let c = eigenvector_coefficients(Z1, &s).unwrap();
    assert!((c.c1 - 2f64.sqrt() / Z1).abs() < 1e-15);
    assert!((c.c1 - 0.52274).abs() < 5e-5);
}

#[test]
fn assembled_parts_have_exact_parity() {
    let grid = RealGrid::symmetric(9.0, 0.1).unwrap();
    let s = shoot(Z1, 200).unwrap();
    let p = eigenvector_assemble(Z1, &s, &grid).unwrap();
    let n = grid.len();
    for i in 0..n {
        let j = n - 1 - i;
        assert_eq!(p.y_odd.values[i], -p.y_odd.values[j]);
        assert_eq!(p.y_even.values[i], p.y_even.values[j]);
    }
}

#[test]
fn zero_parameter_is_excluded() {
    let s = shoot(0.0, 10).unwrap();
    assert_eq!(eigenvector_coefficients(0.0, &s).unwrap_err(), ReconstructError::ExcludedEigenvalue);
}

#[test]
fn weak_residual_drops_under_series_refinement() {
    let grid = RealGrid::symmetric(8.0, 0.005).unwrap();
    let total = |m: usize| {
        let p = eigenvector_assemble(Z1, &shoot(Z1, m).unwrap(), &grid).unwrap();
        weak_residual(Z1, &p, 6).unwrap().total
    };
    let r: Vec<f64> = [2, 4, 8, 16].iter().map(|&m| total(m)).collect();
    assert!(r.windows(2).all(|p| p[1] < p[0]), "{r:?}");
    assert!(r[3] < 1e-3);
}

#[test]
fn weak_residual_floor_is_the_difference_error() {
    let floor = |h: f64| {
        let grid = RealGrid::symmetric(8.0, h).unwrap();
        let p = eigenvector_assemble(Z1, &shoot(Z1, 64).unwrap(), &grid).unwrap();
        weak_residual(Z1, &p, 6).unwrap().total
    };
    let ratio = floor(0.01) / floor(0.005);
    assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn eigenvector_parts_decay_slower_than_the_gaussian() {
    let grid = RealGrid::symmetric(12.0, 0.05).unwrap();
    let p = eigenvector_assemble(Z1, &shoot(Z1, 500).unwrap(), &grid).unwrap();
    // running envelope of |y / u_0| over unit windows [k, k + 1)
    let envelope = |v: &[f64]| -> Vec<f64> {
        (2..12)
            .map(|k| {
                grid.nodes()
                    .iter()
                    .zip(v)
                    .filter(|(x, _)| **x >= k as f64 && **x < k as f64 + 1.0)
                    .fold(0.0f64, |m, (x, y)| m.max((y / ground_state(*x)).abs()))
            })
            .collect()
    };
    for env in [envelope(&p.y_odd.values), envelope(&p.y_even.values)] {
        assert!(env.windows(2).all(|w| w[1] > w[0]), "{env:?}");
    }
    assert!(p.odd_tail.estimate.is_finite() && p.even_tail.estimate.is_finite());
    assert!((p.odd_tail.exponent + 1.75).abs() < 0.01);
    assert!((p.even_tail.exponent + 1.25).abs() < 0.01);
}

#[test]
fn pairing_with_the_ground_state_gives_the_constraint() {
    let hg = HalfLineGrid::new(20.0, 0.02).unwrap();
    let w = gaussian_bump(&hg, -2.0, 1.0).unwrap();
    let grid = RealGrid::symmetric(40.0, 0.02).unwrap();
    let u = convolution_synthesize(&w, &hg, 0.3, -0.2, &grid).unwrap();
    let u0 = grid.nodes().iter().map(|&x| ground_state(x)).collect::<Vec<_>>();
    let lhs = grid.inner(&u0, &u.values);
    let gauss = hg.sample(|z| (-z * z / 8.0).exp());
    let rhs = 0.3 + hg.inner(&gauss, &w.w);
    assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
}

#[test]
fn balanced_flow_scatters_onto_the_phase_mode() {
    let hg = HalfLineGrid::new(20.0, 0.04).unwrap();
    let op = assemble_h(&hg).unwrap();
    let w0 = gaussian_bump(&hg, -2.0, 1.0).unwrap();
    let flow = evolve_dissipative(&op, &w0, 6.0, 1e-3, TimeScheme::CrankNicolson, 500).unwrap();
    let m = modulation_integrate(&flow, balancing_amplitude(&op, &w0), 0.0);
    let grid = RealGrid::symmetric(30.0, 0.05).unwrap();
    let rec = scattering_distance(&flow, &m, &hg, &grid).unwrap();
    let (first, last) = (&rec[0], &rec[rec.len() - 1]);
    assert!(last.l2 < 0.1 * first.l2 && last.linf < 0.1 * first.linf);
    assert!(rec.windows(2).all(|p| p[1].l2 < p[0].l2));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let hg = HalfLineGrid::new(4.0, 0.1).unwrap();
    let w = HalfLineState::new(vec![0.0; 5], 0.0).unwrap();
    let grid = RealGrid::symmetric(2.0, 0.5).unwrap();
    assert!(matches!(
        convolution_synthesize(&w, &hg, 0.0, 0.0, &grid),
        Err(ReconstructError::Mismatch(_))
    ));
}

fn coefficients() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=50).prop_flat_map(|n| prop::collection::vec(-2.0f64..2.0, n))
}

proptest! {
    #[test]
    fn synthesis_obeys_parseval(c in coefficients()) {
        let grid = RealGrid::for_hermite(c.len());
        let sq: f64 = c.iter().map(|v| v * v).sum();
        let p = synthesize(&CoefficientVector::new(c).unwrap(), &grid);
        prop_assert!((p.l2_norm().powi(2) - sq).abs() < 1e-8 * (1.0 + sq));
    }

    #[test]
    fn synthesis_is_linear(c in coefficients(), s in -3.0f64..3.0) {
        let grid = RealGrid::symmetric(8.0, 0.25).unwrap();
        let d: Vec<f64> = c.iter().enumerate().map(|(i, v)| v * (i as f64 + 1.0).sin()).collect();
        let comb: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + s * b).collect();
        let pc = synthesize(&CoefficientVector::new(c).unwrap(), &grid);
        let pd = synthesize(&CoefficientVector::new(d).unwrap(), &grid);
        let pm = synthesize(&CoefficientVector::new(comb).unwrap(), &grid);
        for i in 0..grid.len() {
            let expect = pc.values[i] + s * pd.values[i];
            prop_assert!((pm.values[i] - expect).abs() < 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn convolution_is_linear(amp in -2.0f64..2.0, center in -4.0f64..-0.5, a in -1.0f64..1.0) {
        let hg = HalfLineGrid::new(8.0, 0.1).unwrap();
        let grid = RealGrid::symmetric(6.0, 0.5).unwrap();
        let w = gaussian_bump(&hg, center, 0.7).unwrap();
        let scaled = HalfLineState::new(w.w.iter().map(|v| amp * v).collect(), 0.0).unwrap();
        let one = convolution_synthesize(&w, &hg, a, 0.0, &grid).unwrap();
        let many = convolution_synthesize(&scaled, &hg, amp * a, 0.0, &grid).unwrap();
        for (x, y) in one.values.iter().zip(&many.values) {
            prop_assert!((amp * x - y).abs() < 1e-13);
        }
    }
}
