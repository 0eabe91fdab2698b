//! Small dense linear-algebra helpers shared by the numerical modules.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{LqError, Result};

/// Condition number above which a symmetric positive-definite weight is
/// treated as numerically singular.
pub const SPD_COND_MAX: f64 = 1e12;

/// The canonical symplectic matrix `J = [[0, -I], [I, 0]]`.
pub fn symplectic_j(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Frobenius norm of `m - m^T`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = symmetric_part(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    svd(m).1
}

/// Thin SVD `m = U diag(s) V^T` by one-sided (Hestenes) Jacobi rotations,
/// singular values descending.
///
/// nalgebra's bidiagonal SVD stops early on some well-conditioned 4x4
/// inputs (reconstruction error near 1e-5), which is far too coarse for
/// rank decisions and projector bases. Jacobi is slow but our matrices are
/// tiny and it is accurate to working precision.
pub fn svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    if rows < cols {
        let (u, s, v) = svd(&m.transpose());
        return (v, s, u);
    }
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _sweep in 0..80 {
        let mut off = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 {
                    continue;
                }
                let cosine = gamma.abs() / (alpha * beta).sqrt();
                if !(cosine > 1e-15) {
                    continue;
                }
                off = off.max(cosine);
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if off <= 1e-15 {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut idx: Vec<usize> = (0..cols).collect();
    idx.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = DMatrix::zeros(rows, cols);
    let mut vs = DMatrix::zeros(cols, cols);
    for (k, &i) in idx.iter().enumerate() {
        if norms[i] > 0.0 {
            u.set_column(k, &(a.column(i) / norms[i]));
        }
        vs.set_column(k, &v.column(i));
    }
    (u, idx.iter().map(|&i| norms[i]).collect(), vs)
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (mp, mq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * mp - s * mq;
        m[(i, q)] = s * mp + c * mq;
    }
}

pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Ratio of largest to smallest singular value (`inf` when singular).
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Solves `R X = rhs` for symmetric positive-definite `R` via Cholesky.
pub fn spd_solve(r: &DMatrix<f64>, rhs: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let ev = sym_eigenvalues(r);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if lo <= 0.0 || hi / lo > SPD_COND_MAX {
        let cond = if lo <= 0.0 { f64::INFINITY } else { hi / lo };
        return Err(LqError::SingularWeight { t, cond });
    }
    let chol = symmetric_part(r)
        .cholesky()
        .ok_or(LqError::SingularWeight { t, cond: f64::INFINITY })?;
    Ok(chol.solve(rhs))
}

/// Thin QR with the diagonal of `R` made nonnegative, so the factorization of
/// a full-rank frame is unique.
pub fn qr_positive(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    (q, r)
}

/// Orthonormal basis of the dominant `k`-dimensional column space of `m`,
/// together with all singular values (descending).
pub fn dominant_range(m: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>) {
    let (u, sv, _) = svd(m);
    let cols: Vec<DVector<f64>> = (0..k.min(u.ncols())).map(|i| u.column(i).into_owned()).collect();
    (DMatrix::from_columns(&cols), sv)
}

/// Orthonormalizes the columns of a full-rank frame.
pub fn orthonormal_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    qr_positive(m).0
}

/// Largest principal angle (radians) between the column spans of two frames
/// of equal rank. Computed from `||(I - Qa Qa^T) Qb||_2`, which stays accurate
/// for tiny angles.
pub fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = orthonormal_basis(a);
    let qb = orthonormal_basis(b);
    let residual = &qb - &qa * (qa.transpose() * &qb);
    spectral_norm(&residual).clamp(0.0, 1.0).asin()
}

fn log_abs_det(m: &DMatrix<f64>) -> f64 {
    let lu = m.clone().lu();
    lu.u().diagonal().iter().map(|d| d.abs().ln()).sum()
}

/// Matrix sign function by the scaled Newton iteration
/// `X <- (c X + (c X)^{-1}) / 2` with determinant scaling.
///
/// Requires that `m` has no eigenvalues on the imaginary axis.
pub fn matrix_sign(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    const MAX_ITER: usize = 100;
    let d = m.nrows();
    let mut x = m.clone();
    let mut scaling = true;
    for _ in 0..MAX_ITER {
        let c = if scaling {
            let ld = log_abs_det(&x);
            if ld.is_finite() {
                (-ld / d as f64).exp()
            } else {
                1.0
            }
        } else {
            1.0
        };
        let cx = &x * c;
        let inv = cx
            .clone()
            .try_inverse()
            .ok_or(LqError::SignIteration { iterations: 0 })?;
        let next = (cx + inv) * 0.5;
        let change = (&next - &x).norm();
        let size = next.norm();
        x = next;
        if !x.iter().all(|v| v.is_finite()) {
            break;
        }
        if change <= 1e-3 * size {
            scaling = false;
        }
        if change <= 1e-14 * size {
            return Ok(x);
        }
    }
    Err(LqError::SignIteration {
        iterations: MAX_ITER,
    })
}

/// Determinant of a small complex matrix through its LU factorization.
pub fn complex_det(m: &DMatrix<Complex<f64>>) -> Complex<f64> {
    m.clone().lu().determinant()
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_of_diagonalizable_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[-3.0, 1.0, 0.0, 2.0]);
        let s = matrix_sign(&m).unwrap();
        // sign(M)^2 = I and commutes with M
        assert!((&s * &s - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((&s * &m - &m * &s).norm() < 1e-12);
        assert!((s.trace() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn principal_angle_of_rotated_line() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let th: f64 = 1e-9;
        let b = DMatrix::from_column_slice(2, 1, &[th.cos(), th.sin()]);
        assert!((principal_angle(&a, &b) - th).abs() < 1e-15);
        assert!(principal_angle(&a, &(a.clone() * -3.0)) < 1e-15);
    }

    #[test]
    fn spd_solve_rejects_singular() {
        let r = DMatrix::zeros(1, 1);
        assert!(matches!(
            spd_solve(&r, &DMatrix::identity(1, 1), 0.0),
            Err(LqError::SingularWeight { .. })
        ));
    }

    #[test]
    fn jacobi_svd_reconstructs() {
        let m = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, 0.0, -1.0, 0.5, -0.3, 4.0, 2.0, 1.5, 1.7, 4.0, 1.0]);
        let (u, s, v) = svd(&m);
        let recon = &u * DMatrix::from_diagonal(&DVector::from_vec(s.clone())) * v.transpose();
        assert!((recon - &m).norm() < 1e-14 * m.norm());
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        assert!((u.transpose() * &u - DMatrix::identity(3, 3)).norm() < 1e-14);
        // rank one projector: second singular value is exactly tiny
        let x = DVector::from_vec(vec![0.6, 0.8]);
        let p = &x * x.transpose();
        let s = singular_values(&p);
        assert!((s[0] - 1.0).abs() < 1e-15 && s[1] < 1e-15);
    }

    #[test]
    fn qr_positive_has_nonnegative_diagonal() {
        let m = DMatrix::from_row_slice(3, 2, &[-1.0, 2.0, 0.5, -3.0, 2.0, 1.0]);
        let (q, r) = qr_positive(&m);
        assert!((&q * &r - &m).norm() < 1e-12);
        assert!(r[(0, 0)] >= 0.0 && r[(1, 1)] >= 0.0);
    }
}
