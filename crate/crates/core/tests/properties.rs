//! Randomized invariants of the building blocks.

mod common;

use std::f64::consts::PI;

use common::*;
use lqhorizon::dichotomy::stable_plane_autonomous;
use lqhorizon::dynamics::{self, PropagationConfig};
use lqhorizon::hamiltonian::{self, HamiltonianFamily};
use lqhorizon::linalg;
use lqhorizon::lq_solver::{admissibility, minimum_value, simpson};
use lqhorizon::rotation::{rotation_number, RotationConfig};
use lqhorizon::{CoefficientFn, DichotomyConfig, LagrangeFrame};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn random_periodic(seed: u64, rows: usize, cols: usize, period: f64) -> CoefficientFn {
    let mut r = rng(seed);
    let terms = (0..3)
        .map(|j| (j, uniform(&mut r, rows, cols, 1.0), uniform(&mut r, rows, cols, 1.0)))
        .collect();
    CoefficientFn::periodic(period, rows, cols, terms).unwrap()
}

/// `-w(t) J` plus a small Hamiltonian perturbation, `n = 2`.
fn rotating_family(seed: u64) -> CoefficientFn {
    let mut r = rng(seed);
    let n = 2;
    let a = uniform(&mut r, n, n, 0.2);
    let s1 = uniform(&mut r, n, n, 0.2);
    let s2 = uniform(&mut r, n, n, 0.2);
    let mut base = DMatrix::zeros(2 * n, 2 * n);
    base.view_mut((0, 0), (n, n)).copy_from(&a);
    base.view_mut((0, n), (n, n)).copy_from(&linalg::symmetric_part(&s1));
    base.view_mut((n, 0), (n, n)).copy_from(&linalg::symmetric_part(&s2));
    base.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    let j = linalg::symplectic_j(n);
    let zero = DMatrix::zeros(2 * n, 2 * n);
    CoefficientFn::periodic(
        2.0 * PI,
        2 * n,
        2 * n,
        vec![(0, base - &j, zero.clone()), (1, &j * -0.3, zero)],
    )
    .unwrap()
}

fn orthogonal(seed: u64, n: usize) -> DMatrix<f64> {
    let mut r = rng(seed);
    linalg::qr_positive(&uniform(&mut r, n, n, 1.0)).0
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn periodic_coefficients_repeat_and_respect_bound(seed in any::<u64>(), t in -20.0f64..20.0, period in 0.5f64..8.0) {
        let c = random_periodic(seed, 3, 2, period);
        let now = c.evaluate(t);
        prop_assert!((c.evaluate(t + period) - &now).norm() <= 1e-12 * (1.0 + now.norm()));
        prop_assert!(linalg::spectral_norm(&now) <= c.bound() * (1.0 + 1e-12));
        let shifted = c.translated(1.3);
        prop_assert!((shifted.evaluate(t) - c.evaluate(t + 1.3)).norm() <= 1e-12 * (1.0 + now.norm()));
    }

    #[test]
    fn assembled_hamiltonian_is_infinitesimally_symplectic(seed in any::<u64>(), n in 1usize..4, m in 1usize..3, t in -5.0f64..5.0) {
        let p = random_problem(&mut rng(seed), n, m, 1.0);
        let h = HamiltonianFamily::from_problem(&p);
        let size = h.eval(t).unwrap().norm();
        prop_assert!(h.symplectic_defect(t).unwrap() <= 1e-13 * (1.0 + size));
    }

    #[test]
    fn supply_rate_is_quadratic(seed in any::<u64>(), lambda in -3.0f64..3.0) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, 3, 2, 1.0);
        let x = unit_vector(&mut r, 3);
        let u = unit_vector(&mut r, 2);
        let q = hamiltonian::supply_rate(&p, 0.0, &x, &u);
        let scaled = hamiltonian::supply_rate(&p, 0.0, &(&x * lambda), &(&u * lambda));
        prop_assert!((scaled - lambda * lambda * q).abs() <= 1e-13 * (1.0 + q.abs()) * (1.0 + lambda * lambda));
    }

    #[test]
    fn jacobi_svd_reconstructs(seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7) {
        let a = uniform(&mut rng(seed), rows, cols, 1.0);
        let (u, s, v) = linalg::svd(&a);
        let k = rows.min(cols);
        prop_assert_eq!(s.len(), k);
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let recon = &u * DMatrix::from_diagonal(&DVector::from_vec(s)) * v.transpose();
        prop_assert!((recon - &a).norm() <= 1e-13 * (1.0 + a.norm()));
        prop_assert!((v.transpose() * &v - DMatrix::identity(k, k)).norm() <= 1e-13);
    }

    #[test]
    fn simpson_is_exact_for_quadratics(seed in any::<u64>(), pieces in 2usize..12) {
        let mut r = rng(seed);
        let steps = uniform(&mut r, pieces, 1, 0.4).map(|s| s.abs() + 0.1);
        let mut times = vec![0.0];
        for s in steps.iter() {
            times.push(times.last().unwrap() + s);
        }
        let coef = uniform(&mut r, 3, 1, 2.0);
        let f = |t: f64| coef[0] + coef[1] * t + coef[2] * t * t;
        let exact = |t: f64| coef[0] * t + coef[1] * t * t / 2.0 + coef[2] * t * t * t / 3.0;
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let got = simpson(&times, &values).unwrap();
        let end = *times.last().unwrap();
        prop_assert!((got - exact(end)).abs() <= 1e-12 * (1.0 + exact(end).abs()));
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn transition_is_a_symplectic_cocycle(seed in any::<u64>(), t1 in 0.1f64..1.5, t2 in 1.6f64..3.0) {
        let h = HamiltonianFamily::from_matrix_fn(random_periodic(seed, 4, 4, 3.0)).unwrap();
        let cfg = PropagationConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..PropagationConfig::default() };
        let u20 = dynamics::transition(&h, 0.0, t2, &cfg).unwrap();
        let u21 = dynamics::transition(&h, t1, t2, &cfg).unwrap();
        let u10 = dynamics::transition(&h, 0.0, t1, &cfg).unwrap();
        prop_assert!((&u21 * &u10 - &u20).norm() <= 1e-8 * u20.norm());
    }

    #[test]
    fn problem_flow_preserves_symplectic_form(seed in any::<u64>(), t in 0.2f64..2.0) {
        let p = random_problem(&mut rng(seed), 2, 2, 0.7);
        let h = HamiltonianFamily::from_problem(&p);
        let cfg = PropagationConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..PropagationConfig::default() };
        let u = dynamics::transition(&h, 0.0, t, &cfg).unwrap();
        let j = linalg::symplectic_j(2);
        prop_assert!((u.transpose() * &j * &u - &j).norm() <= 1e-8 * (1.0 + u.norm_squared()));
    }

    #[test]
    fn adaptive_and_fixed_step_flows_agree(seed in any::<u64>()) {
        let h = HamiltonianFamily::from_matrix_fn(random_periodic(seed, 4, 4, 2.0)).unwrap();
        let tight = PropagationConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..PropagationConfig::default() };
        let a = dynamics::transition(&h, 0.0, 1.0, &tight).unwrap();
        let b = dynamics::transition(&h, 0.0, 1.0, &PropagationConfig::fixed_step(1e-3)).unwrap();
        prop_assert!((&a - &b).norm() <= 1e-8 * a.norm());
    }

    #[test]
    fn stable_plane_is_flow_invariant(seed in any::<u64>(), t in 0.5f64..2.0) {
        let p = random_problem(&mut rng(seed), 2, 1, 0.5);
        let hm = hamiltonian::assemble(&p, 0.0).unwrap();
        let report = stable_plane_autonomous(&hm, &DichotomyConfig::default()).unwrap();
        prop_assume!(report.has_dichotomy());
        let l = report.l_plus.unwrap();
        let cfg = PropagationConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..PropagationConfig::default() };
        let u = dynamics::transition(&HamiltonianFamily::from_problem(&p), 0.0, t, &cfg).unwrap();
        prop_assert!(l.angle_to(&(u * l.matrix())) <= 1e-8);
        prop_assert!(l.lagrange_residual() <= 1e-12);
    }

    #[test]
    fn minimum_value_ignores_choice_of_basis(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_problem(&mut r, 2, 1, 0.5);
        let report = stable_plane_autonomous(&hamiltonian::assemble(&p, 0.0).unwrap(), &DichotomyConfig::default()).unwrap();
        prop_assume!(report.has_dichotomy());
        let l = report.l_plus.unwrap();
        let change = DMatrix::identity(2, 2) + uniform(&mut r, 2, 2, 0.3);
        let other = LagrangeFrame::new(l.matrix() * change).unwrap();
        let x0 = unit_vector(&mut r, 2);
        let a = admissibility(&l, &x0, 1e-7).unwrap();
        let b = admissibility(&other, &x0, 1e-7).unwrap();
        prop_assume!(a.admissible && b.admissible);
        let (va, vb) = (minimum_value(&l, &a.c), minimum_value(&other, &b.c));
        prop_assert!((va - vb).abs() <= 1e-10 * (1.0 + va.abs()));
        prop_assert!((&a.y0 - &b.y0).norm() <= 1e-10 * (1.0 + a.y0.norm()));
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn rotation_number_is_conjugation_invariant(seed in any::<u64>()) {
        let h = HamiltonianFamily::from_matrix_fn(rotating_family(seed)).unwrap();
        let conj = h.conjugated(&orthogonal(seed ^ 99, 2)).unwrap();
        let cfg = RotationConfig::default();
        let a = rotation_number(&h, 0.0, 60.0, &cfg).unwrap();
        let b = rotation_number(&conj, 0.0, 60.0, &cfg).unwrap();
        prop_assert!((a.alpha - b.alpha).abs() <= 1e-8, "{} vs {}", a.alpha, b.alpha);
        prop_assert!(a.alpha.abs() > 0.1);
    }
}

#[test]
fn periodic_flow_has_unit_determinant() {
    let h = HamiltonianFamily::from_problem(&cosine_shear());
    let cfg = PropagationConfig::default();
    for t in [1.0, PI, 2.0 * PI, 10.0] {
        let u = dynamics::transition(&h, 0.0, t, &cfg).unwrap();
        let det = u.determinant();
        assert!((det - 1.0).abs() <= 1e-8 * t, "det U({t}) = {det}");
    }
}
