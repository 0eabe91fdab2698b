//! Null-controllability Gramian of `x' = A(t) x + B(t) u`.

use nalgebra::DMatrix;

use crate::coefficients::ProblemData;
use crate::dynamics::{self, PropagationConfig};
use crate::error::{LqError, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct GramianReport {
    pub horizon: f64,
    pub gramian: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
}

/// `W(T) = int_{t0}^{t0+T} Phi B B^T Phi^T dt` with `Phi = U_A^{-1}`,
/// obtained from the augmented system `Phi' = -Phi A`, `W' = Phi B B^T Phi^T`.
/// Positive definite means smallest eigenvalue `>= tau_gram`.
pub fn controllability_gramian(
    p: &ProblemData,
    t0: f64,
    horizon: f64,
    tau_gram: f64,
    cfg: &PropagationConfig,
) -> Result<GramianReport> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(LqError::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let n = p.n();
    let rhs = |t: f64, z: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let phi = z.columns(0, n);
        let pb = phi * p.b.evaluate(t);
        let mut out = DMatrix::zeros(n, 2 * n);
        out.columns_mut(0, n).copy_from(&(-(phi * p.a.evaluate(t))));
        out.columns_mut(n, n).copy_from(&(&pb * pb.transpose()));
        Ok(out)
    };
    let mut z0 = DMatrix::zeros(n, 2 * n);
    z0.columns_mut(0, n).fill_with_identity();
    let mut hint = 0.0;
    let z = dynamics::integrate(&rhs, t0, &z0, t0 + horizon, cfg, &mut hint)?;
    let gramian = linalg::symmetric_part(&z.columns(n, n).into_owned());
    let min_eigenvalue = linalg::min_sym_eigenvalue(&gramian);
    Ok(GramianReport {
        horizon,
        gramian,
        min_eigenvalue,
        positive_definite: min_eigenvalue >= tau_gram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(a: DMatrix<f64>, b: DMatrix<f64>) -> ProblemData {
        let (n, m) = b.shape();
        ProblemData::constant(a, b, DMatrix::identity(n, n), DMatrix::zeros(n, m), DMatrix::identity(m, m), 1.0)
            .unwrap()
    }

    #[test]
    fn free_control_gives_scaled_identity() {
        let p = problem(DMatrix::zeros(2, 2), DMatrix::identity(2, 2));
        let r = controllability_gramian(&p, 0.0, 3.0, 1e-10, &PropagationConfig::default()).unwrap();
        assert!((r.gramian - DMatrix::<f64>::identity(2, 2) * 3.0).norm() < 1e-10);
        assert!(r.positive_definite);
    }

    #[test]
    fn no_control_gives_zero() {
        let p = problem(DMatrix::zeros(2, 2), DMatrix::zeros(2, 1));
        let r = controllability_gramian(&p, 0.0, 2.0, 1e-10, &PropagationConfig::default()).unwrap();
        assert_eq!(r.gramian.norm(), 0.0);
        assert!(!r.positive_definite);
    }

    #[test]
    fn double_integrator() {
        // A = [[0,1],[0,0]], B = e2: Phi B = (-t, 1), W = [[T^3/3, -T^2/2], [-T^2/2, T]]
        let p = problem(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        );
        let r = controllability_gramian(&p, 0.0, 2.0, 1e-10, &PropagationConfig::default()).unwrap();
        let exact = DMatrix::from_row_slice(2, 2, &[8.0 / 3.0, -2.0, -2.0, 2.0]);
        assert!((r.gramian - exact).norm() < 1e-9);
        assert!(r.positive_definite);
    }

    #[test]
    fn shear_pair_is_not_controllable() {
        // x2' = x2 ignores the control, so W = diag((1 - e^{-2T}) / 2, 0)
        let p = problem(
            DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        );
        let r = controllability_gramian(&p, 0.0, 2.0, 1e-10, &PropagationConfig::default()).unwrap();
        let exact = DMatrix::from_row_slice(2, 2, &[(1.0 - (-4.0f64).exp()) / 2.0, 0.0, 0.0, 0.0]);
        assert!((r.gramian - exact).norm() < 1e-9);
        assert!(!r.positive_definite);
    }
}
