//! Square regularization of the control: the problem is rotated so that the
//! top block of `B(t0)` is nonsingular, the control is padded with
//! `eps`-weighted directions, and the Weyl matrices of the padded problems
//! are followed as `eps` decreases.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::ProblemData;
use crate::dichotomy::{self, DichotomyConfig, TAU_RANK};
use crate::error::{LqError, Result};
use crate::hamiltonian::HamiltonianFamily;
use crate::linalg;

/// Orthogonal change of state variables `x -> P x` after which the top
/// `m x m` block of `P B(t0)` is nonsingular.
///
/// `P` is the transposed orthogonal factor of `[B(t0) | I]`, so `P B(t0)` is
/// upper triangular with a nonzero diagonal.
pub fn orthogonal_reduction(p: &ProblemData, t0: f64) -> Result<(DMatrix<f64>, ProblemData)> {
    let (n, m) = (p.n(), p.m());
    let b0 = p.b.evaluate(t0);
    let sv = linalg::singular_values(&b0);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.get(m - 1).copied().unwrap_or(0.0);
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    if m > n || ratio < TAU_RANK {
        return Err(LqError::RankDeficientControl { t0, ratio });
    }
    let mut aug = DMatrix::zeros(n, m + n);
    aug.columns_mut(0, m).copy_from(&b0);
    aug.columns_mut(m, n).fill_with_identity();
    let q = aug.qr().q();
    let pm = q.transpose();
    let pt = q;
    let reduced = ProblemData::new(
        p.a.left_mul(&pm).right_mul(&pt),
        p.b.left_mul(&pm),
        p.state_weight.left_mul(&pm).right_mul(&pt),
        p.cross_weight.left_mul(&pm),
        p.control_weight.clone(),
        p.rho,
    )?;
    Ok((pm, reduced))
}

/// A reduced problem with its control padded to dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonProblem {
    pub epsilon: f64,
    /// Data `(A, B_eps, G, g_eps, R_eps)` with `B_eps = [B | (0; eps I)]`,
    /// `R_eps = diag(R, eps I)` and `g_eps = [g | 0]`.
    pub problem: ProblemData,
}

impl EpsilonProblem {
    pub fn hamiltonian(&self) -> HamiltonianFamily {
        HamiltonianFamily::from_problem(&self.problem)
    }
}

pub fn make_epsilon_problem(p_tilde: &ProblemData, eps: f64) -> Result<EpsilonProblem> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(LqError::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let (n, m) = (p_tilde.n(), p_tilde.m());
    if m >= n {
        return Ok(EpsilonProblem {
            epsilon: eps,
            problem: p_tilde.clone(),
        });
    }
    let k = n - m;
    let mut pad = DMatrix::zeros(n, k);
    pad.view_mut((m, 0), (k, k)).fill_with_identity();
    let problem = ProblemData::new(
        p_tilde.a.clone(),
        p_tilde.b.hstack_constant(&(pad * eps)),
        p_tilde.state_weight.clone(),
        p_tilde.cross_weight.hstack_constant(&DMatrix::zeros(n, k)),
        p_tilde
            .control_weight
            .block_diag_constant(&(DMatrix::identity(k, k) * eps)),
        p_tilde.rho.min(eps),
    )?;
    Ok(EpsilonProblem { epsilon: eps, problem })
}

/// Default grid `10^{-1}, 10^{-1.5}, ..., 10^{-4}`.
pub fn default_eps_grid() -> Vec<f64> {
    (0..7).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonPoint {
    pub epsilon: f64,
    /// `M_eps^+` in the original coordinates.
    pub weyl: DMatrix<f64>,
    /// `x0^T M_eps^+ x0`.
    pub quadratic: f64,
    /// `-(1/2) x0^T M_eps^+ x0`.
    pub value: f64,
}

/// Weyl matrices `M_eps^+` of the padded problems along a strictly
/// decreasing grid, with the ordering `M_{eps2} <= M_{eps1}` for
/// `eps2 < eps1` checked to `tau_mono_rel * ||M||`.
///
/// `pm` is the reduction from [`orthogonal_reduction`]; the Weyl matrices are
/// returned as `P^T M P`.
pub fn epsilon_path(
    p_tilde: &ProblemData,
    pm: &DMatrix<f64>,
    x0: &DVector<f64>,
    eps_grid: &[f64],
    t0: f64,
    cfg: &DichotomyConfig,
    tau_mono_rel: f64,
) -> Result<Vec<EpsilonPoint>> {
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(LqError::InvalidArgument("eps grid must be nonempty and positive".into()));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LqError::InvalidArgument("eps grid must be strictly decreasing".into()));
    }
    if x0.len() != p_tilde.n() {
        return Err(LqError::Shape {
            field: "x0".into(),
            expected: format!("length {}", p_tilde.n()),
            got: format!("length {}", x0.len()),
        });
    }
    let points: Vec<EpsilonPoint> = eps_grid
        .par_iter()
        .map(|&eps| {
            let ep = make_epsilon_problem(p_tilde, eps)?;
            let report = dichotomy::compute_dichotomy(&ep.hamiltonian(), t0, cfg)?;
            if !report.has_dichotomy() {
                return Err(LqError::WeylExtraction {
                    epsilon: eps,
                    reason: format!("dichotomy verdict {:?}", report.verdict),
                });
            }
            let m = report.m_plus.ok_or_else(|| LqError::WeylExtraction {
                epsilon: eps,
                reason: "top block of the stable frame is singular".into(),
            })?;
            let weyl = linalg::symmetric_part(&(pm.transpose() * m * pm));
            let quadratic = x0.dot(&(&weyl * x0));
            Ok(EpsilonPoint {
                epsilon: eps,
                weyl,
                quadratic,
                value: -0.5 * quadratic,
            })
        })
        .collect::<Result<_>>()?;
    for w in points.windows(2) {
        let diff = &w[0].weyl - &w[1].weyl;
        let min_eig = linalg::min_sym_eigenvalue(&diff);
        let scale = linalg::spectral_norm(&w[0].weyl).max(linalg::spectral_norm(&w[1].weyl));
        if min_eig < -tau_mono_rel * scale {
            return Err(LqError::Monotonicity {
                larger: w[0].epsilon,
                smaller: w[1].epsilon,
                min_eig,
            });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum KratzCase {
    /// Limit of `x0^T M_eps^+ x0`, estimated by its last grid value.
    FiniteLimit { value: f64 },
    MinusInfinity,
    Undetermined { reason: String },
}

/// Growth of `|q|` across the grid beyond which a non-contracting path is
/// declared divergent.
const DIVERGENCE_FACTOR: f64 = 10.0;

/// Classifies the limit of `q(eps) = x0^T M_eps^+ x0` from the last three
/// grid points: contracting successive differences (ratio `<= r_max`) mean a
/// finite limit, non-contracting differences with large overall decrease mean
/// divergence to minus infinity.
pub fn kratz_classify(path: &[EpsilonPoint], r_max: f64) -> KratzCase {
    let q: Vec<f64> = path.iter().map(|p| p.quadratic).collect();
    if q.len() < 3 {
        return KratzCase::Undetermined {
            reason: "at least three grid points are needed; extend the eps grid".into(),
        };
    }
    let k = q.len();
    let scale = q.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let d1 = q[k - 3] - q[k - 2];
    let d2 = q[k - 2] - q[k - 1];
    let flat = 1e-12 * scale;
    if d1.abs() <= flat && d2.abs() <= flat {
        return KratzCase::FiniteLimit { value: q[k - 1] };
    }
    let ratio = d2 / d1;
    if d1 > flat && ratio.abs() <= r_max {
        return KratzCase::FiniteLimit { value: q[k - 1] };
    }
    let drop = q[0] - q[k - 1];
    if d1 > 0.0 && ratio >= 1.0 && drop >= DIVERGENCE_FACTOR * q[0].abs().max(1.0) {
        return KratzCase::MinusInfinity;
    }
    KratzCase::Undetermined {
        reason: format!("difference ratio {ratio:.3e} is inconclusive; extend the eps grid"),
    }
}
