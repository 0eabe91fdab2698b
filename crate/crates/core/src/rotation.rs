//! Rotation number `lim (1/t) arg det(U1(t) - i U2(t))` by continuous
//! argument tracking along the Lagrange plane `U(t) [I; 0]`.
//!
//! The frame is re-orthonormalized (`F = QR`, `diag R > 0`) at every sample.
//! Since `det R > 0`, the argument of `det(F1 - i F2)` equals that of
//! `det(Q1 - i Q2)`, and for an orthonormal Lagrange frame `Q1 - i Q2` is
//! unitary, so the determinant never vanishes and never overflows.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, PropagationConfig};
use crate::error::{LqError, Result};
use crate::hamiltonian::HamiltonianFamily;
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RotationConfig {
    pub horizon: f64,
    /// Largest horizon reached by adaptive doubling.
    pub horizon_cap: f64,
    pub tau_conv: f64,
    /// Threshold below which a converged estimate counts as zero.
    pub zero_tol: f64,
    /// Initial sampling step; chosen from `||H||` when absent.
    pub sample_step: Option<f64>,
    pub propagation: PropagationConfig,
}

impl Default for RotationConfig {
    fn default() -> Self {
        Self {
            horizon: 200.0,
            horizon_cap: 3200.0,
            tau_conv: 1e-3,
            zero_tol: 1e-3,
            sample_step: None,
            propagation: PropagationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Slope of the unwrapped argument over `[T/2, T]` (radians per unit time).
    pub alpha: f64,
    /// `arg(T) / T`, the defining quotient at the final time.
    pub alpha_raw: f64,
    pub horizon: f64,
    /// `(t - t0, unwrapped argument)`.
    pub samples: Vec<(f64, f64)>,
    /// `|slope over [T/2, T] - slope over [T/4, T/2]|`.
    pub convergence_indicator: f64,
    pub converged: bool,
}

/// Incremental argument tracker along `[t0, t0 + t]`.
struct Tracker<'a> {
    h: &'a HamiltonianFamily,
    t0: f64,
    t: f64,
    frame: DMatrix<f64>,
    wrapped: f64,
    unwrapped: f64,
    step: f64,
    samples: Vec<(f64, f64)>,
    cfg: &'a RotationConfig,
}

fn arg_of_frame(q: &DMatrix<f64>, n: usize, t: f64) -> Result<f64> {
    let c = DMatrix::from_fn(n, n, |i, j| Complex::new(q[(i, j)], -q[(n + i, j)]));
    let det = linalg::complex_det(&c);
    if det.norm() < 1e-12 {
        return Err(LqError::SingularDeterminant { t });
    }
    Ok(det.arg())
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

impl<'a> Tracker<'a> {
    fn new(h: &'a HamiltonianFamily, t0: f64, cfg: &'a RotationConfig) -> Result<Self> {
        let n = h.n();
        let step = match cfg.sample_step {
            Some(s) => s,
            None => {
                let mut norm = 0.0f64;
                for k in 0..16 {
                    norm = norm.max(linalg::spectral_norm(&h.eval(t0 + cfg.horizon * k as f64 / 16.0)?));
                }
                (PI / 8.0 / (n as f64 * norm.max(1e-3))).min(0.1)
            }
        };
        let mut frame = DMatrix::zeros(2 * n, n);
        frame.rows_mut(0, n).fill_with_identity();
        Ok(Self {
            h,
            t0,
            t: 0.0,
            frame,
            wrapped: 0.0,
            unwrapped: 0.0,
            step,
            samples: vec![(0.0, 0.0)],
            cfg,
        })
    }

    fn advance_to(&mut self, horizon: f64) -> Result<()> {
        let n = self.h.n();
        let mut hint = 0.0;
        let rhs = |t: f64, z: &DMatrix<f64>| Ok(self.h.eval(t)? * z);
        while self.t < horizon {
            let mut halvings = 0;
            loop {
                let dt = self.step.min(horizon - self.t);
                let ta = self.t0 + self.t;
                let f = dynamics::integrate(&rhs, ta, &self.frame, ta + dt, &self.cfg.propagation, &mut hint)?;
                let (q, _) = linalg::qr_positive(&f);
                let a = arg_of_frame(&q, n, ta + dt)?;
                let inc = wrap(a - self.wrapped);
                if inc.abs() >= PI / 2.0 {
                    halvings += 1;
                    if halvings > 40 {
                        return Err(LqError::SingularDeterminant { t: ta });
                    }
                    self.step *= 0.5;
                    continue;
                }
                self.t = if dt == horizon - self.t { horizon } else { self.t + dt };
                self.frame = q;
                self.wrapped = a;
                self.unwrapped += inc;
                self.samples.push((self.t, self.unwrapped));
                break;
            }
        }
        Ok(())
    }

    /// Unwrapped argument at `t`, linearly interpolated between samples.
    fn arg_at(&self, t: f64) -> f64 {
        let i = self.samples.partition_point(|s| s.0 < t);
        if i == 0 {
            return self.samples[0].1;
        }
        if i >= self.samples.len() {
            return self.samples.last().expect("nonempty").1;
        }
        let (ta, aa) = self.samples[i - 1];
        let (tb, ab) = self.samples[i];
        if tb == ta {
            return ab;
        }
        aa + (ab - aa) * (t - ta) / (tb - ta)
    }

    fn estimate(&self, horizon: f64) -> RotationEstimate {
        let end = self.arg_at(horizon);
        let half = self.arg_at(0.5 * horizon);
        let quarter = self.arg_at(0.25 * horizon);
        let alpha = (end - half) / (0.5 * horizon);
        let previous = (half - quarter) / (0.25 * horizon);
        let indicator = (alpha - previous).abs();
        RotationEstimate {
            alpha,
            alpha_raw: end / horizon,
            horizon,
            samples: self.samples.iter().copied().take_while(|s| s.0 <= horizon).collect(),
            convergence_indicator: indicator,
            converged: indicator <= self.cfg.tau_conv,
        }
    }
}

/// Rotation number estimate at a fixed horizon.
pub fn rotation_number(h: &HamiltonianFamily, t0: f64, horizon: f64, cfg: &RotationConfig) -> Result<RotationEstimate> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(LqError::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    let mut tracker = Tracker::new(h, t0, cfg)?;
    tracker.advance_to(horizon)?;
    Ok(tracker.estimate(horizon))
}

/// Doubles the horizon from `cfg.horizon` until the estimates at `T` and `2T`
/// agree within `2 tau_conv` and the `2T` estimate is converged, or until the
/// cap is reached. Returns the estimate at the last horizon reached.
pub fn rotation_number_adaptive(h: &HamiltonianFamily, t0: f64, cfg: &RotationConfig) -> Result<RotationEstimate> {
    let mut tracker = Tracker::new(h, t0, cfg)?;
    let mut horizon = cfg.horizon;
    tracker.advance_to(horizon)?;
    let mut current = tracker.estimate(horizon);
    while 2.0 * horizon <= cfg.horizon_cap {
        tracker.advance_to(2.0 * horizon)?;
        let next = tracker.estimate(2.0 * horizon);
        let settled = (next.alpha - current.alpha).abs() <= 2.0 * cfg.tau_conv && next.converged;
        horizon *= 2.0;
        current = next;
        if settled {
            break;
        }
    }
    Ok(current)
}

/// `|alpha| <= tol` for a converged estimate.
///
/// Under exponential dichotomy the rotation number takes values in a
/// discrete set, so a small converged estimate identifies zero.
pub fn is_rotation_zero(est: &RotationEstimate, tol: f64) -> Result<bool> {
    if !est.converged {
        return Err(LqError::Unconverged {
            indicator: est.convergence_indicator,
        });
    }
    Ok(est.alpha.abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h_shear() -> HamiltonianFamily {
        HamiltonianFamily::constant(DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0],
        ))
        .unwrap()
    }

    #[test]
    fn pure_rotation_winds_backwards() {
        let h = HamiltonianFamily::constant(linalg::symplectic_j(1)).unwrap();
        let est = rotation_number(&h, 0.0, 50.0, &RotationConfig::default()).unwrap();
        assert!((est.alpha + 1.0).abs() < 1e-8, "{}", est.alpha);
        assert!((est.alpha_raw + 1.0).abs() < 1e-8);
        assert!(est.converged);
        assert!(!is_rotation_zero(&est, 1e-3).unwrap());
    }

    #[test]
    fn shear_argument_matches_closed_form() {
        // arg det(U1 - i U2) = arctan((1 - e^{2t}) / (1 + e^{2t}))
        let est = rotation_number(&h_shear(), 0.0, 50.0, &RotationConfig::default()).unwrap();
        for &(t, a) in est.samples.iter().step_by(37) {
            let exact = ((1.0 - (2.0 * t).exp()) / (1.0 + (2.0 * t).exp())).atan();
            assert!((a - exact).abs() < 1e-8, "t = {t}: {a} vs {exact}");
        }
        assert!(is_rotation_zero(&est, 1e-3).unwrap());
    }

    #[test]
    fn short_horizon_is_flagged() {
        let est = rotation_number(&h_shear(), 0.0, 1.0, &RotationConfig::default()).unwrap();
        assert!(!est.converged);
        assert!(matches!(is_rotation_zero(&est, 1e-3), Err(LqError::Unconverged { .. })));
    }

    #[test]
    fn samples_are_continuous() {
        let h = HamiltonianFamily::constant(linalg::symplectic_j(2) * 3.0).unwrap();
        let est = rotation_number(&h, 0.0, 10.0, &RotationConfig::default()).unwrap();
        assert!(est.samples.windows(2).all(|w| (w[1].1 - w[0].1).abs() < PI));
        assert!((est.alpha + 6.0).abs() < 1e-7);
    }

    #[test]
    fn wrap_into_half_open_interval() {
        assert!((wrap(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap(-0.5) + 0.5).abs() < 1e-15);
    }
}
