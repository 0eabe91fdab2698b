//! Membership of `x0` in the top projection of the stable plane, and the
//! minimum value read off the plane.

use nalgebra::{DMatrix, DVector};

use crate::dichotomy::LagrangeFrame;
use crate::error::{LqError, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Minimum-norm least-squares solution of `L1 c = x0`.
    pub c: DVector<f64>,
    /// `L2 c`.
    pub y0: DVector<f64>,
    pub residual: f64,
    /// Numerical rank of `L1`.
    pub rank: usize,
}

/// Least-squares classification of `x0` against `L1`.
///
/// Singular values of `L1` below `tau_adm * sigma_max` are treated as zero,
/// so an exactly singular `L1` yields the minimum-norm preimage. `x0` is
/// admissible when `||L1 c - x0|| <= tau_adm * max(||x0||, 1)`.
pub fn admissibility(l_plus: &LagrangeFrame, x0: &DVector<f64>, tau_adm: f64) -> Result<Admissibility> {
    let n = l_plus.n();
    if x0.len() != n {
        return Err(LqError::Shape {
            field: "x0".into(),
            expected: format!("length {n}"),
            got: format!("length {}", x0.len()),
        });
    }
    let l1 = l_plus.top();
    let l2 = l_plus.bottom();
    let (u, sv, v) = linalg::svd(&l1);
    let cutoff = tau_adm * sv.first().copied().unwrap_or(0.0);
    let mut c = DVector::zeros(n);
    let mut rank = 0;
    for (k, &s) in sv.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            rank += 1;
            let coef = u.column(k).dot(x0) / s;
            c += v.column(k) * coef;
        }
    }
    let residual = (&l1 * &c - x0).norm();
    let admissible = residual <= tau_adm * x0.norm().max(1.0);
    let y0 = &l2 * &c;
    Ok(Admissibility {
        admissible,
        c,
        y0,
        residual,
        rank,
    })
}

/// `-(1/2) c^T L2^T L1 c` with the form symmetrized first.
pub fn minimum_value(l_plus: &LagrangeFrame, c: &DVector<f64>) -> f64 {
    let form: DMatrix<f64> = l_plus.bottom().transpose() * l_plus.top();
    let form = linalg::symmetric_part(&form);
    -0.5 * c.dot(&(form * c))
}
