#![allow(dead_code)]

use std::f64::consts::PI;

use lqhorizon::{CoefficientFn, ProblemData};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn m(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

pub fn v(data: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(data)
}

pub fn shear() -> ProblemData {
    ProblemData::constant(
        m(2, 2, &[1.0, 1.0, 0.0, 1.0]),
        m(2, 1, &[1.0, 0.0]),
        m(2, 2, &[2.0, 1.0, 1.0, 1.0]),
        m(2, 1, &[1.0, 1.0]),
        m(1, 1, &[1.0]),
        1.0,
    )
    .unwrap()
}

pub fn h_shear() -> DMatrix<f64> {
    m(4, 4, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0])
}

pub fn l_plus_shear() -> DMatrix<f64> {
    m(4, 2, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0])
}

pub fn l_minus_shear() -> DMatrix<f64> {
    m(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0])
}

/// Closed-form fundamental matrix of the example with `H = h_shear()`.
pub fn u_shear(t: f64) -> DMatrix<f64> {
    let (c, s) = (t.cosh(), t.sinh());
    m(4, 4, &[c, 0.0, s, 0.0, 0.0, t.exp(), 0.0, 0.0, s, 0.0, c, 0.0, 0.0, 0.0, 0.0, (-t).exp()])
}

/// `A = [[1, h], [0, 1]]`, `B = e1`, `G = [[f + 1, h], [h, h^2]]`,
/// `g = [1, h]^T`, `R = 1` with `f = 1` and `h(t) = cos t`.
pub fn cosine_shear() -> ProblemData {
    let z = |r, c| DMatrix::zeros(r, c);
    let period = 2.0 * PI;
    let a = CoefficientFn::periodic(
        period,
        2,
        2,
        vec![(0, DMatrix::identity(2, 2), z(2, 2)), (1, m(2, 2, &[0.0, 1.0, 0.0, 0.0]), z(2, 2))],
    )
    .unwrap();
    let g_big = CoefficientFn::periodic(
        period,
        2,
        2,
        vec![
            (0, m(2, 2, &[2.0, 0.0, 0.0, 0.5]), z(2, 2)),
            (1, m(2, 2, &[0.0, 1.0, 1.0, 0.0]), z(2, 2)),
            (2, m(2, 2, &[0.0, 0.0, 0.0, 0.5]), z(2, 2)),
        ],
    )
    .unwrap();
    let g_small = CoefficientFn::periodic(
        period,
        2,
        1,
        vec![(0, m(2, 1, &[1.0, 0.0]), z(2, 1)), (1, m(2, 1, &[0.0, 1.0]), z(2, 1))],
    )
    .unwrap();
    ProblemData::new(
        a,
        CoefficientFn::constant(m(2, 1, &[1.0, 0.0])),
        g_big,
        g_small,
        CoefficientFn::constant(m(1, 1, &[1.0])),
        1.0,
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.random_range(-1.0..1.0))
}

/// `W^T W + shift I` with `W` uniform in `[-scale, scale]`.
pub fn spd(rng: &mut ChaCha8Rng, n: usize, scale: f64, shift: f64) -> DMatrix<f64> {
    let w = uniform(rng, n, n, scale);
    w.transpose() * w + DMatrix::identity(n, n) * shift
}

/// Random constant data with entries of size `scale` and `R >= I`.
pub fn random_problem(rng: &mut ChaCha8Rng, n: usize, m: usize, scale: f64) -> ProblemData {
    let g = uniform(rng, n, n, scale);
    ProblemData::constant(
        uniform(rng, n, n, scale),
        uniform(rng, n, m, scale),
        (&g + g.transpose()) * 0.5,
        uniform(rng, n, m, scale),
        spd(rng, m, scale, 1.0),
        1.0,
    )
    .unwrap()
}

pub fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    &v / v.norm()
}
