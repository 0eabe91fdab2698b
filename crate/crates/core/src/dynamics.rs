//! Propagation of solutions of `z' = H(t) z`.
//!
//! The default integrator is the embedded Dormand–Prince 5(4) pair with
//! per-entry mixed error control. Solutions are reported on caller-supplied
//! grids by integrating exactly to each grid point.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LqError, Result};
use crate::hamiltonian::HamiltonianFamily;
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    /// Adaptive embedded Runge–Kutta 5(4).
    DormandPrince45,
    /// Classical fourth-order Runge–Kutta with a fixed step.
    ClassicalRk4 { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub method: Method,
    /// Interval between QR re-orthonormalizations on long horizons.
    pub reorth_interval: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.5,
            method: Method::DormandPrince45,
            reorth_interval: 1.0,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.max_step > 0.0
            && self.reorth_interval > 0.0
            && match self.method {
                Method::ClassicalRk4 { step } => step > 0.0,
                Method::DormandPrince45 => true,
            };
        if ok {
            Ok(())
        } else {
            Err(LqError::InvalidArgument(
                "propagation tolerances and steps must be positive".into(),
            ))
        }
    }

    pub fn fixed_step(step: f64) -> Self {
        Self {
            method: Method::ClassicalRk4 { step },
            ..Self::default()
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates the matrix ODE `Z' = rhs(t, Z)` from `(t0, z0)` to `t1`.
///
/// `step_hint` carries the last accepted step size between calls so that
/// integrating along a fine grid does not restart step selection each time.
pub fn integrate<F>(
    rhs: &F,
    t0: f64,
    z0: &DMatrix<f64>,
    t1: f64,
    cfg: &PropagationConfig,
    step_hint: &mut f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(f64, &DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    if t1 == t0 {
        return Ok(z0.clone());
    }
    match cfg.method {
        Method::ClassicalRk4 { step } => rk4(rhs, t0, z0, t1, step),
        Method::DormandPrince45 => dopri(rhs, t0, z0, t1, cfg, step_hint),
    }
}

fn rk4<F>(rhs: &F, t0: f64, z0: &DMatrix<f64>, t1: f64, step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(f64, &DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let steps = ((t1 - t0).abs() / step).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    let mut z = z0.clone();
    for i in 0..steps {
        let t = t0 + h * i as f64;
        let k1 = rhs(t, &z)?;
        let k2 = rhs(t + 0.5 * h, &(&z + &k1 * (0.5 * h)))?;
        let k3 = rhs(t + 0.5 * h, &(&z + &k2 * (0.5 * h)))?;
        let k4 = rhs(t + h, &(&z + &k3 * h))?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(z)
}

fn dopri<F>(
    rhs: &F,
    t0: f64,
    z0: &DMatrix<f64>,
    t1: f64,
    cfg: &PropagationConfig,
    step_hint: &mut f64,
) -> Result<DMatrix<f64>>
where
    F: Fn(f64, &DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut z = z0.clone();
    let mut h = if *step_hint > 0.0 {
        step_hint.min(cfg.max_step)
    } else {
        1e-2f64.min(cfg.max_step)
    };
    let mut k1 = rhs(t, &z)?;
    loop {
        let remaining = (t1 - t).abs();
        if remaining <= 1e-15 * t1.abs().max(1.0) {
            break;
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;

        let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..7 {
            let mut zs = z.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    zs += kj * (hs * A[s][j]);
                }
            }
            k.push(rhs(t + C[s] * hs, &zs)?);
        }
        let mut z_new = z.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            if A[6][j] != 0.0 {
                z_new += kj * (hs * A[6][j]);
            }
        }
        let mut err = DMatrix::zeros(z.nrows(), z.ncols());
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err += kj * (hs * E[j]);
            }
        }
        let mut err_norm = 0.0f64;
        for ((e, a), b) in err.iter().zip(z.iter()).zip(z_new.iter()) {
            let scale = cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs());
            err_norm = err_norm.max(e.abs() / scale);
        }
        if !err_norm.is_finite() {
            err_norm = 1e10;
        }

        if err_norm <= 1.0 {
            t = if last { t1 } else { t + hs };
            z = z_new;
            k1 = k.pop().expect("seven stages");
            if !last {
                *step_hint = h;
            }
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h = (h * factor).min(cfg.max_step);
        if err_norm > 1.0 && !last {
            *step_hint = h;
        }
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(LqError::StepSizeUnderflow { t, h });
        }
    }
    Ok(z)
}

fn linear_rhs(h: &HamiltonianFamily) -> impl Fn(f64, &DMatrix<f64>) -> Result<DMatrix<f64>> + '_ {
    move |t, z| Ok(h.eval(t)? * z)
}

/// Solution of `Z' = H(t) Z`, `Z(times[0]) = frame0`, sampled at `times`
/// (monotone in either direction).
pub fn propagate_frame(
    h: &HamiltonianFamily,
    frame0: &DMatrix<f64>,
    times: &[f64],
    cfg: &PropagationConfig,
) -> Result<Vec<DMatrix<f64>>> {
    cfg.validate()?;
    if frame0.nrows() != 2 * h.n() || frame0.ncols() == 0 || frame0.ncols() > 2 * h.n() {
        return Err(LqError::Shape {
            field: "frame0".into(),
            expected: format!("{}xk with 1 <= k <= {}", 2 * h.n(), 2 * h.n()),
            got: format!("{}x{}", frame0.nrows(), frame0.ncols()),
        });
    }
    let Some(&first) = times.first() else {
        return Ok(Vec::new());
    };
    let rhs = linear_rhs(h);
    let mut hint = 0.0;
    let mut out = Vec::with_capacity(times.len());
    let mut z = frame0.clone();
    let mut t = first;
    out.push(z.clone());
    for &next in &times[1..] {
        z = integrate(&rhs, t, &z, next, cfg, &mut hint)?;
        t = next;
        out.push(z.clone());
    }
    Ok(out)
}

/// Transition matrix `U(t1, t0)` of the Hamiltonian system.
pub fn transition(h: &HamiltonianFamily, t0: f64, t1: f64, cfg: &PropagationConfig) -> Result<DMatrix<f64>> {
    let id = DMatrix::identity(2 * h.n(), 2 * h.n());
    Ok(propagate_frame(h, &id, &[t0, t1], cfg)?.pop().expect("two samples"))
}

/// Propagates a frame from `t0` to `t1`, re-orthonormalizing it every
/// `cfg.reorth_interval`. Returns the final orthonormal frame (spanning the
/// propagated subspace) and the accumulated `log R_ii` growth per column.
pub fn propagate_orthonormal(
    h: &HamiltonianFamily,
    frame0: &DMatrix<f64>,
    t0: f64,
    t1: f64,
    cfg: &PropagationConfig,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    cfg.validate()?;
    let rhs = linear_rhs(h);
    let (mut q, r0) = linalg::qr_positive(frame0);
    let mut growth: Vec<f64> = r0.diagonal().iter().map(|d| d.ln()).collect();
    let segments = ((t1 - t0).abs() / cfg.reorth_interval).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / segments as f64;
    let mut hint = 0.0;
    for i in 0..segments {
        let ta = t0 + dt * i as f64;
        let tb = if i + 1 == segments { t1 } else { ta + dt };
        let z = integrate(&rhs, ta, &q, tb, cfg, &mut hint)?;
        let (qn, r) = linalg::qr_positive(&z);
        for (g, d) in growth.iter_mut().zip(r.diagonal().iter()) {
            *g += d.ln();
        }
        q = qn;
    }
    Ok((q, growth))
}

/// Sampled fundamental matrix `U(t, t0)` with `U(t0, t0) = I`.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub n: usize,
    pub times: Vec<f64>,
    pub matrices: Vec<DMatrix<f64>>,
}

impl FundamentalSolution {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Blocks `[U1, U2, U3, U4]` of `U = [[U1, U3], [U2, U4]]` at sample `i`.
    pub fn blocks(&self, i: usize) -> [DMatrix<f64>; 4] {
        let u = &self.matrices[i];
        let n = self.n;
        [
            u.view((0, 0), (n, n)).into_owned(),
            u.view((n, 0), (n, n)).into_owned(),
            u.view((0, n), (n, n)).into_owned(),
            u.view((n, n), (n, n)).into_owned(),
        ]
    }

    /// `||U^T J U - J||_F` at sample `i`.
    pub fn symplectic_drift(&self, i: usize) -> f64 {
        let j = linalg::symplectic_j(self.n);
        let u = &self.matrices[i];
        (u.transpose() * &j * u - j).norm()
    }

    /// Drift relative to the scale of the invariant, `||U^T J U - J||_F / ||U||_F^2`.
    pub fn relative_symplectic_drift(&self, i: usize) -> f64 {
        self.symplectic_drift(i) / self.matrices[i].norm_squared()
    }

    pub fn max_symplectic_drift(&self) -> f64 {
        (0..self.len()).map(|i| self.symplectic_drift(i)).fold(0.0, f64::max)
    }
}

/// Fundamental matrix on a grid starting at `times[0]`.
pub fn fundamental(h: &HamiltonianFamily, times: &[f64], cfg: &PropagationConfig) -> Result<FundamentalSolution> {
    let id = DMatrix::identity(2 * h.n(), 2 * h.n());
    let matrices = propagate_frame(h, &id, times, cfg)?;
    Ok(FundamentalSolution {
        n: h.n(),
        times: times.to_vec(),
        matrices,
    })
}

/// `n` evenly spaced points `t0, t0 + dt, ...` covering `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, intervals: usize) -> Vec<f64> {
    let dt = (t1 - t0) / intervals as f64;
    (0..=intervals)
        .map(|i| if i == intervals { t1 } else { t0 + dt * i as f64 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_decay() -> impl Fn(f64, &DMatrix<f64>) -> Result<DMatrix<f64>> {
        |t, z| Ok(z * (-1.0 + t.cos()))
    }

    #[test]
    fn adaptive_matches_closed_form() {
        // z' = (-1 + cos t) z  =>  z = exp(-t + sin t)
        let cfg = PropagationConfig::default();
        let mut hint = 0.0;
        let z = integrate(&scalar_decay(), 0.0, &DMatrix::from_element(1, 1, 1.0), 3.0, &cfg, &mut hint).unwrap();
        let exact = (-3.0f64 + 3.0f64.sin()).exp();
        assert!((z[(0, 0)] - exact).abs() < 1e-11);
    }

    #[test]
    fn backward_integration() {
        let cfg = PropagationConfig::default();
        let mut hint = 0.0;
        let z = integrate(&scalar_decay(), 2.0, &DMatrix::from_element(1, 1, 1.0), -1.0, &cfg, &mut hint).unwrap();
        let f = |t: f64| -t + t.sin();
        let exact = (f(-1.0) - f(2.0)).exp();
        assert!((z[(0, 0)] - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&s| {
                let z = integrate(&scalar_decay(), 0.0, &DMatrix::from_element(1, 1, 1.0), 2.0, &PropagationConfig::fixed_step(s), &mut 0.0).unwrap();
                (z[(0, 0)] - (-2.0f64 + 2.0f64.sin()).exp()).abs()
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn zero_frame_stays_zero() {
        let h = HamiltonianFamily::constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        let out = propagate_frame(&h, &DMatrix::zeros(2, 1), &[0.0, 1.0, 5.0], &PropagationConfig::default()).unwrap();
        assert!(out.iter().all(|z| z.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn frame_shape_is_checked() {
        let h = HamiltonianFamily::constant(DMatrix::zeros(2, 2)).unwrap();
        assert!(propagate_frame(&h, &DMatrix::zeros(3, 1), &[0.0, 1.0], &PropagationConfig::default()).is_err());
        assert!(propagate_frame(&h, &DMatrix::zeros(2, 3), &[0.0, 1.0], &PropagationConfig::default()).is_err());
    }

    #[test]
    fn orthonormal_growth_rates() {
        // decoupled saddle: growth rates +2 and -2
        let h = HamiltonianFamily::constant(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -2.0])).unwrap();
        let (q, g) = propagate_orthonormal(&h, &DMatrix::identity(2, 2), 0.0, 10.0, &PropagationConfig::default()).unwrap();
        assert!((&q.transpose() * &q - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((g[0] / 10.0 - 2.0).abs() < 1e-8);
        assert!((g[1] / 10.0 + 2.0).abs() < 1e-8);
    }
}
