//! Sampled state/control pairs and their truncated cost.

use nalgebra::{DMatrix, DVector};

use crate::coefficients::{Periodicity, ProblemData};
use crate::dichotomy::{self, DichotomyConfig, DichotomyReport};
use crate::dynamics::{self, PropagationConfig};
use crate::error::{LqError, Result};
use crate::hamiltonian::{self, HamiltonianFamily};

/// A pair `(x, u)` sampled on a time grid, with the costate `y` when the
/// pair comes from the Hamiltonian system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub y: Option<Vec<DVector<f64>>>,
    pub u: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the sample at time `t`, if present up to `1e-12`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }
}

/// Projector onto `l+(t)` along `l-(t)`, used to strip the unstable
/// component that roundoff feeds into a forward-integrated stable solution.
#[derive(Debug, Clone)]
pub struct PlaneSplitting {
    h: HamiltonianFamily,
    t0: f64,
    plus: DMatrix<f64>,
    minus: DMatrix<f64>,
    mode: SplitMode,
    cfg: PropagationConfig,
}

#[derive(Debug, Clone)]
enum SplitMode {
    Constant,
    Periodic(f64),
    General(DichotomyConfig),
}

fn projector(plus: &DMatrix<f64>, minus: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = plus.ncols();
    let mut s = DMatrix::zeros(plus.nrows(), k + minus.ncols());
    s.columns_mut(0, k).copy_from(plus);
    s.columns_mut(k, minus.ncols()).copy_from(minus);
    let inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| LqError::InvalidArgument("l+ and l- are not complementary".into()))?;
    Ok(plus * inv.rows(0, k))
}

impl PlaneSplitting {
    /// Uses the frames of a dichotomy report computed at `report.t0`.
    pub fn new(h: &HamiltonianFamily, report: &DichotomyReport, dcfg: &DichotomyConfig) -> Result<Self> {
        let (Some(plus), Some(minus)) = (&report.l_plus, &report.l_minus) else {
            return Err(LqError::InvalidArgument("dichotomy report carries no frames".into()));
        };
        let mode = match h.periodicity() {
            Periodicity::Constant => SplitMode::Constant,
            Periodicity::Periodic(period) => SplitMode::Periodic(period),
            Periodicity::Aperiodic => SplitMode::General(dcfg.clone()),
        };
        Ok(Self {
            h: h.clone(),
            t0: report.t0,
            plus: plus.orthonormalized().matrix().clone(),
            minus: minus.orthonormalized().matrix().clone(),
            mode,
            cfg: dcfg.propagation,
        })
    }

    /// The projector at time `t`.
    pub fn projector(&self, t: f64) -> Result<DMatrix<f64>> {
        match &self.mode {
            SplitMode::Constant => projector(&self.plus, &self.minus),
            SplitMode::Periodic(period) => {
                let s = (t - self.t0).rem_euclid(*period);
                if s == 0.0 {
                    return projector(&self.plus, &self.minus);
                }
                let end = self.t0 + s;
                let (plus, _) = dynamics::propagate_orthonormal(&self.h, &self.plus, self.t0, end, &self.cfg)?;
                let (minus, _) = dynamics::propagate_orthonormal(&self.h, &self.minus, self.t0, end, &self.cfg)?;
                projector(&plus, &minus)
            }
            SplitMode::General(cfg) => {
                let r = dichotomy::stable_plane_general(&self.h, t, cfg)?;
                match (&r.l_plus, &r.l_minus) {
                    (Some(p), Some(m)) => projector(p.matrix(), m.matrix()),
                    _ => Err(LqError::InvalidArgument(format!("no stable plane at t = {t}"))),
                }
            }
        }
    }
}

/// Integrates `z' = H z` from `(x0, y0)` at `times[0]` and applies the
/// feedback rule at every sample.
///
/// With a splitting, the state is projected onto `l+` whenever at least
/// `reproject_interval` time has passed since the last projection.
/// Fails with [`LqError::TrajectoryGrowth`] when `|z|` at the final time
/// exceeds `|z|` at the initial time.
pub fn minimizing_pair(
    p: &ProblemData,
    x0: &DVector<f64>,
    y0: &DVector<f64>,
    times: &[f64],
    splitting: Option<&PlaneSplitting>,
    reproject_interval: f64,
    cfg: &PropagationConfig,
) -> Result<Trajectory> {
    let n = p.n();
    if x0.len() != n || y0.len() != n {
        return Err(LqError::Shape {
            field: "(x0, y0)".into(),
            expected: format!("lengths ({n}, {n})"),
            got: format!("lengths ({}, {})", x0.len(), y0.len()),
        });
    }
    if times.len() < 2 {
        return Err(LqError::TooFewSamples {
            needed: 2,
            got: times.len(),
        });
    }
    cfg.validate()?;
    let h = HamiltonianFamily::from_problem(p);
    let rhs = |t: f64, z: &DMatrix<f64>| -> Result<DMatrix<f64>> { Ok(h.eval(t)? * z) };
    let z0 = DMatrix::from_iterator(2 * n, 1, x0.iter().chain(y0.iter()).copied());
    let mut zs = Vec::with_capacity(times.len());
    zs.push(z0.clone());
    let mut z = z0.clone();
    let mut hint = 0.0;
    let mut last_projection = times[0];
    for w in times.windows(2) {
        z = dynamics::integrate(&rhs, w[0], &z, w[1], cfg, &mut hint)?;
        if let Some(split) = splitting {
            if (w[1] - last_projection).abs() >= reproject_interval * (1.0 - 1e-9) {
                z = split.projector(w[1])? * &z;
                last_projection = w[1];
            }
        }
        zs.push(z.clone());
    }
    let initial = z0.norm();
    let final_norm = z.norm();
    if final_norm > initial {
        return Err(LqError::TrajectoryGrowth { initial, final_norm });
    }
    let mut out = Trajectory {
        times: times.to_vec(),
        x: Vec::with_capacity(times.len()),
        y: Some(Vec::with_capacity(times.len())),
        u: Vec::with_capacity(times.len()),
    };
    for (&t, z) in times.iter().zip(&zs) {
        let x = DVector::from_iterator(n, z.rows(0, n).iter().copied());
        let y = DVector::from_iterator(n, z.rows(n, n).iter().copied());
        out.u.push(hamiltonian::feedback(p, t, &x, &y)?);
        out.x.push(x);
        out.y.as_mut().expect("costate present").push(y);
    }
    Ok(out)
}

/// State response of `x' = A x + B u(t)`, `x(times[0]) = x0`, to an open-loop
/// control.
pub fn simulate_control<F>(
    p: &ProblemData,
    x0: &DVector<f64>,
    control: F,
    times: &[f64],
    cfg: &PropagationConfig,
) -> Result<Trajectory>
where
    F: Fn(f64) -> DVector<f64>,
{
    cfg.validate()?;
    let n = p.n();
    if x0.len() != n {
        return Err(LqError::Shape {
            field: "x0".into(),
            expected: format!("length {n}"),
            got: format!("length {}", x0.len()),
        });
    }
    let rhs = |t: f64, x: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let bu = p.b.evaluate(t) * control(t);
        Ok(p.a.evaluate(t) * x + DMatrix::from_column_slice(bu.len(), 1, bu.as_slice()))
    };
    let mut out = Trajectory {
        times: times.to_vec(),
        x: Vec::with_capacity(times.len()),
        y: None,
        u: Vec::with_capacity(times.len()),
    };
    let mut hint = 0.0;
    let mut x = DMatrix::from_column_slice(n, 1, x0.as_slice());
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            x = dynamics::integrate(&rhs, times[i - 1], &x, t, cfg, &mut hint)?;
        }
        out.x.push(DVector::from_column_slice(x.as_slice()));
        out.u.push(control(t));
    }
    Ok(out)
}

/// Composite Simpson rule on a possibly nonuniform grid. Pairs of intervals
/// are integrated by the interpolating parabola; a trailing odd interval uses
/// the parabola through the last three points.
pub fn simpson(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(LqError::Shape {
            field: "values".into(),
            expected: format!("length {}", times.len()),
            got: format!("length {}", values.len()),
        });
    }
    match times.len() {
        0 | 1 => return Ok(0.0),
        2 => return Ok(0.5 * (times[1] - times[0]) * (values[0] + values[1])),
        _ => {}
    }
    let pair = |i: usize| {
        let h0 = times[i + 1] - times[i];
        let h1 = times[i + 2] - times[i + 1];
        let (f0, f1, f2) = (values[i], values[i + 1], values[i + 2]);
        (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * f0 + (h0 + h1).powi(2) / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2)
    };
    let intervals = times.len() - 1;
    let mut total = 0.0;
    let mut i = 0;
    while i + 2 <= intervals {
        total += pair(i);
        i += 2;
    }
    if i < intervals {
        // last interval [t_{k-1}, t_k] of the parabola through t_{k-2}, t_{k-1}, t_k
        let k = intervals;
        let h0 = times[k - 1] - times[k - 2];
        let h1 = times[k] - times[k - 1];
        let (f0, f1, f2) = (values[k - 2], values[k - 1], values[k]);
        total += h1 / 6.0
            * (-(h1 * h1) / (h0 * (h0 + h1)) * f0
                + (3.0 + h1 / h0) * f1
                + (3.0 * h0 + 2.0 * h1) / (h0 + h1) * f2);
    }
    Ok(total)
}

/// `int_{t_0}^{t_0 + horizon} Q(t, x, u) dt` over the samples of `pair`.
pub fn functional_truncation(p: &ProblemData, pair: &Trajectory, horizon: f64) -> Result<f64> {
    let Some(&start) = pair.times.first() else {
        return Ok(0.0);
    };
    let end = start + horizon;
    let k = pair
        .times
        .iter()
        .position(|&t| t > end + 1e-9 * end.abs().max(1.0))
        .unwrap_or(pair.times.len());
    if k < pair.times.len() && pair.index_of(end).is_none() {
        return Err(LqError::InvalidArgument(format!(
            "truncation time {end} is not a sample time"
        )));
    }
    let values: Vec<f64> = (0..k)
        .map(|i| hamiltonian::supply_rate(p, pair.times[i], &pair.x[i], &pair.u[i]))
        .collect();
    simpson(&pair.times[..k], &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_cubics() {
        let times = [0.0, 0.1, 0.35, 0.5, 0.9, 1.0];
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t;
        let vals: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        // 1 - 1 + 1 on [0, 1]
        assert!((simpson(&times, &vals).unwrap() - 1.0).abs() < 1e-14);
        let even = [0.0, 0.25, 0.5, 0.75, 1.0];
        let cube: Vec<f64> = even.iter().map(|t| t * t * t).collect();
        assert!((simpson(&even, &cube).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn simpson_small_grids() {
        assert_eq!(simpson(&[1.0], &[5.0]).unwrap(), 0.0);
        assert_eq!(simpson(&[0.0, 2.0], &[1.0, 3.0]).unwrap(), 4.0);
        assert!(simpson(&[0.0, 1.0], &[1.0]).is_err());
    }
}
