//! The linear Hamiltonian system attached to a minimization problem.
//!
//! For data `(A, B, G, g, R)` the Hamiltonian matrix is
//!
//! ```text
//! H = [ A - B R^{-1} g^T      B R^{-1} B^T         ]
//!     [ G - g R^{-1} g^T     -A^T + g R^{-1} B^T   ]
//! ```
//!
//! and a solution `(x, y)` of `z' = H z` yields a state/control pair through
//! the feedback rule `u = R^{-1} B^T y - R^{-1} g^T x`.

use nalgebra::{DMatrix, DVector};

use crate::coefficients::{CoefficientFn, Periodicity, ProblemData};
use crate::error::{LqError, Result};
use crate::linalg;

/// `R(t)^{-1} B(t)^T` and `R(t)^{-1} g(t)^T`, via Cholesky of `R(t)`.
fn weighted_transposes(p: &ProblemData, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let r = p.control_weight.evaluate(t);
    let b = p.b.evaluate(t);
    let g = p.cross_weight.evaluate(t);
    let mut rhs = DMatrix::zeros(p.m(), 2 * p.n());
    rhs.columns_mut(0, p.n()).copy_from(&b.transpose());
    rhs.columns_mut(p.n(), p.n()).copy_from(&g.transpose());
    let sol = linalg::spd_solve(&r, &rhs, t)?;
    Ok((sol.columns(0, p.n()).into_owned(), sol.columns(p.n(), p.n()).into_owned()))
}

/// The Hamiltonian matrix `H(t)` of the problem.
pub fn assemble(p: &ProblemData, t: f64) -> Result<DMatrix<f64>> {
    let n = p.n();
    let (rinv_bt, rinv_gt) = weighted_transposes(p, t)?;
    let a = p.a.evaluate(t);
    let b = p.b.evaluate(t);
    let g = p.cross_weight.evaluate(t);
    let big_g = p.state_weight.evaluate(t);

    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&(&a - &b * &rinv_gt));
    h.view_mut((0, n), (n, n))
        .copy_from(&linalg::symmetric_part(&(&b * &rinv_bt)));
    h.view_mut((n, 0), (n, n))
        .copy_from(&linalg::symmetric_part(&(&big_g - &g * &rinv_gt)));
    h.view_mut((n, n), (n, n))
        .copy_from(&(-a.transpose() + &g * &rinv_bt));
    Ok(h)
}

/// `Q(t, x, u) = (x^T G x + 2 x^T g u + u^T R u) / 2`.
pub fn supply_rate(p: &ProblemData, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
    let g = p.state_weight.evaluate(t);
    let cross = p.cross_weight.evaluate(t);
    let r = p.control_weight.evaluate(t);
    0.5 * (x.dot(&(&g * x)) + 2.0 * x.dot(&(&cross * u)) + u.dot(&(&r * u)))
}

/// `u = R^{-1}(B^T y - g^T x)`.
pub fn feedback(p: &ProblemData, t: f64, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (rinv_bt, rinv_gt) = weighted_transposes(p, t)?;
    Ok(rinv_bt * y - rinv_gt * x)
}

/// Maximum over interior samples of `|dV/dt - 2Q|` with `V = y^T x`, the
/// derivative taken by centered differences and `u` from the feedback rule.
///
/// The identity holds exactly along every solution of the Hamiltonian
/// system, so the residual measures differencing plus integration error.
pub fn energy_identity_residual(p: &ProblemData, samples: &[(f64, DVector<f64>, DVector<f64>)]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(LqError::TooFewSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let v: Vec<f64> = samples.iter().map(|(_, x, y)| y.dot(x)).collect();
    let mut worst = 0.0f64;
    for i in 1..samples.len() - 1 {
        let (t, x, y) = &samples[i];
        let dv = (v[i + 1] - v[i - 1]) / (samples[i + 1].0 - samples[i - 1].0);
        let u = feedback(p, *t, x, y)?;
        worst = worst.max((dv - 2.0 * supply_rate(p, *t, x, &u)).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Problem(ProblemData),
    Matrix(CoefficientFn),
}

/// The matrix function `t -> H(t)`, either assembled from problem data or
/// given directly.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianFamily {
    source: Source,
    n: usize,
}

impl HamiltonianFamily {
    pub fn from_problem(p: &ProblemData) -> Self {
        Self {
            n: p.n(),
            source: Source::Problem(p.clone()),
        }
    }

    /// A Hamiltonian given directly as a `2n x 2n` matrix function.
    pub fn from_matrix_fn(h: CoefficientFn) -> Result<Self> {
        let (r, c) = h.shape();
        if r != c || r % 2 != 0 || r == 0 {
            return Err(LqError::Shape {
                field: "hamiltonian".into(),
                expected: "2n x 2n".into(),
                got: format!("{r}x{c}"),
            });
        }
        Ok(Self {
            n: r / 2,
            source: Source::Matrix(h),
        })
    }

    pub fn constant(h: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix_fn(CoefficientFn::constant(h))
    }

    /// Half the phase-space dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn problem(&self) -> Option<&ProblemData> {
        match &self.source {
            Source::Problem(p) => Some(p),
            Source::Matrix(_) => None,
        }
    }

    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.source {
            Source::Problem(p) => assemble(p, t),
            Source::Matrix(h) => Ok(h.evaluate(t)),
        }
    }

    pub fn periodicity(&self) -> Periodicity {
        match &self.source {
            Source::Problem(p) => p.periodicity(),
            Source::Matrix(h) => crate::coefficients::common_periodicity([h]),
        }
    }

    pub fn translated(&self, s: f64) -> Self {
        let source = match &self.source {
            Source::Problem(p) => Source::Problem(p.translate(s)),
            Source::Matrix(h) => Source::Matrix(h.translated(s)),
        };
        Self { source, n: self.n }
    }

    /// Conjugates by `diag(P, P)` for orthogonal `P` (a symplectic change of
    /// variables). Only available for directly given matrix functions.
    pub fn conjugated(&self, p: &DMatrix<f64>) -> Result<Self> {
        let pp = linalg::block_diag(p, p);
        match &self.source {
            Source::Matrix(h) => Self::from_matrix_fn(h.left_mul(&pp).right_mul(&pp.transpose())),
            Source::Problem(_) => Err(LqError::InvalidArgument(
                "conjugation is only defined for matrix-valued families".into(),
            )),
        }
    }

    /// `||H(t)^T J + J H(t)||_F`.
    pub fn symplectic_defect(&self, t: f64) -> Result<f64> {
        let h = self.eval(t)?;
        let j = linalg::symplectic_j(self.n);
        Ok((h.transpose() * &j + &j * &h).norm())
    }
}
